//! `lsvp`: volume products of log-concave functions under Laplace-transform
//! duality — experiment runner and fixture tooling.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lsvp_cli::config::{self, ExperimentConfig, GridCfg};
use lsvp_cli::runner;
use lsvp_cli::zoo;

#[derive(Parser)]
#[command(name = "lsvp", version, about = "volume products, flows and inequality checks on grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment from a configuration file (flags override it).
    Run {
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        fixture: Option<String>,
        /// Exponent override; replaces the configured p_list.
        #[arg(long)]
        p: Option<f64>,
        /// Single time override; replaces the configured times.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        grid_lo: Option<f64>,
        #[arg(long)]
        grid_hi: Option<f64>,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        curve_out: Option<String>,
    },
    /// Fixture zoo commands.
    Zoo {
        #[command(subcommand)]
        cmd: ZooCmd,
    },
    /// Fixture import/export.
    Fixture {
        #[command(subcommand)]
        cmd: FixtureCmd,
    },
}

#[derive(Subcommand)]
enum ZooCmd {
    /// List the built-in fixtures.
    List,
}

#[derive(Subcommand)]
enum FixtureCmd {
    /// Write a zoo fixture in the `gridfn v1` text format.
    Export { name: String, path: String },
}

fn init_threads() {
    let threads = std::env::var("LSVP_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0);
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn parse_experiment(s: &str) -> Result<config::Experiment> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .with_context(|| format!("unknown experiment `{s}`"))
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // numerical failures exit 1 inside dispatch; everything else is I/O or config
            2
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Run {
            config,
            experiment,
            fixture,
            p,
            t,
            grid_lo,
            grid_hi,
            grid_n,
            out,
            curve_out,
        } => {
            let mut cfg: ExperimentConfig = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading configuration {path}"))?;
                    config::parse_config(&text)?
                }
                None => {
                    let exp = experiment
                        .as_deref()
                        .context("--experiment is required without --config")?;
                    let fix = fixture
                        .as_deref()
                        .context("--fixture is required without --config")?;
                    config::parse_config(&format!(
                        "{{\"experiment\":\"{exp}\",\"fixture\":\"{fix}\"}}"
                    ))?
                }
            };
            if let Some(exp) = &experiment {
                cfg.experiment = parse_experiment(exp)?;
            }
            if let Some(fix) = fixture {
                cfg.fixture = fix;
            }
            if let Some(p) = p {
                cfg.p_list = vec![p];
            }
            if let Some(t) = t {
                cfg.times = Some(vec![t]);
            }
            if grid_lo.is_some() || grid_hi.is_some() || grid_n.is_some() {
                let base = cfg.effective_grid();
                cfg.grid = Some(GridCfg {
                    lo: grid_lo.unwrap_or(base.lo),
                    hi: grid_hi.unwrap_or(base.hi),
                    n: grid_n.unwrap_or(base.n),
                });
            }
            if out.is_some() {
                cfg.out = out;
            }
            if curve_out.is_some() {
                cfg.curve_out = curve_out;
            }
            config::validate(&cfg)?;
            runner::run_and_emit(&cfg)
        }
        Cmd::Zoo { cmd: ZooCmd::List } => {
            for name in zoo::NAMES {
                println!("{name}");
            }
            Ok(0)
        }
        Cmd::Fixture { cmd: FixtureCmd::Export { name, path } } => {
            runner::export_fixture(&name, &path)?;
            println!("wrote {path}");
            Ok(0)
        }
    }
}
