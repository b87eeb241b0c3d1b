//! Experiment configuration: strict JSON ingestion with CLI flag overrides.

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    MpProduct,
    VolumeProduct,
    Monotonicity,
    PLimit,
    Hjb,
    Hypercontract,
    SantaloCurve,
    LaplaceBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for GridCfg {
    fn default() -> Self {
        GridCfg { lo: -10.0, hi: 10.0, n: 2001 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Gaussian-extremality slack on ratio_log.
    pub ratio: f64,
    /// Per-step slack for monotone curves.
    pub step_slack: f64,
    /// Margin slack for the Laplace-norm bound.
    pub margin: f64,
    /// Margin slack for hypercontractivity.
    pub hyper_margin: f64,
    /// Budget cap for the differential-inequality residuals.
    pub hjb_budget: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ratio: 2e-4,
            step_slack: 1e-5,
            margin: 2e-4,
            hyper_margin: 1e-5,
            hjb_budget: 1e-4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Zoo name or path to a serialized grid function.
    pub fixture: String,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<GridCfg>,
    #[serde(default)]
    pub dual_grid: Option<GridCfg>,
    #[serde(default)]
    pub flow: Option<String>,
    #[serde(default)]
    pub ode_step: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub curve_out: Option<String>,
}

fn default_p_list() -> Vec<f64> {
    vec![0.5]
}

impl ExperimentConfig {
    /// The grid in effect (the documented default when none was given).
    pub fn effective_grid(&self) -> GridCfg {
        self.grid.unwrap_or_default()
    }
}

/// Parse and validate a configuration document. Unknown keys are rejected;
/// every validation failure carries the offending value.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        anyhow!("malformed configuration at line {}, column {}: {}", e.line(), e.column(), e)
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    for &p in &cfg.p_list {
        if !(0.0..1.0).contains(&p) {
            bail!("p must lie in [0, 1), got {p}");
        }
    }
    if cfg.p_list.is_empty() {
        bail!("p_list must not be empty");
    }
    if let Some(times) = &cfg.times {
        if times.is_empty() {
            bail!("times must not be empty");
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                bail!("times must be strictly increasing, got {} after {}", w[1], w[0]);
            }
        }
        if times[0] < 0.0 {
            bail!("times must start at t >= 0, got {}", times[0]);
        }
    }
    if let Some(g) = &cfg.grid {
        if !(g.hi > g.lo) || g.n < 2 {
            bail!("grid must have hi > lo and n >= 2, got [{}, {}] x {}", g.lo, g.hi, g.n);
        }
    }
    if let Some(flow) = &cfg.flow {
        if !matches!(flow.as_str(), "Heat" | "FokkerPlanck" | "OrnsteinUhlenbeck") {
            bail!("unknown flow `{flow}` (expected Heat, FokkerPlanck or OrnsteinUhlenbeck)");
        }
    }
    if let Some(h) = cfg.ode_step {
        if !(h > 0.0) {
            bail!("ode_step must be positive, got {h}");
        }
    }
    if !crate::zoo::is_zoo_name(&cfg.fixture) && !std::path::Path::new(&cfg.fixture).exists() {
        bail!("unknown fixture `{}` (not a zoo name, not a readable path)", cfg.fixture);
    }
    Ok(())
}
