//! Experiment orchestration: build the fixture, run the requested checks,
//! print one verdict line per check, emit the report and any curves.

use anyhow::{anyhow, Context, Result};
use lsvp::gridfn::{ExponentPair, GridFunction, GridSpec};
use lsvp::products::{self, ProductOptions, ProductReport, ReportKind};
use lsvp::santalo::OutcomeKind;
use lsvp::semigroups::SemigroupKind;

use crate::config::{Experiment, ExperimentConfig, GridCfg};
use crate::report::{curve_csv, records_json, Curve, LogVal, Record};
use crate::zoo;

pub struct RunOutput {
    pub records: Vec<Record>,
    pub curves: Vec<(String, Curve)>,
    pub failed: bool,
}

const DEFAULT_TIMES: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];

fn grid_from_cfg(g: &GridCfg) -> Result<GridSpec> {
    Ok(GridSpec::line(g.lo, g.hi, g.n)?)
}

fn product_options(f: &GridFunction, cfg: &ExperimentConfig) -> Result<ProductOptions> {
    let mut opts = ProductOptions::for_dim(f.dim())?;
    if let Some(d) = &cfg.dual_grid {
        if f.dim() == 1 {
            opts.dual_window = grid_from_cfg(d)?;
        } else {
            opts.dual_window = GridSpec::square(d.lo, d.hi, d.n)?;
        }
    }
    Ok(opts)
}

fn flow_kind(cfg: &ExperimentConfig, default: SemigroupKind) -> SemigroupKind {
    match cfg.flow.as_deref() {
        Some("Heat") => SemigroupKind::Heat,
        Some("FokkerPlanck") => SemigroupKind::FokkerPlanck,
        Some("OrnsteinUhlenbeck") => SemigroupKind::OrnsteinUhlenbeck,
        _ => default,
    }
}

fn kind_str(kind: ReportKind) -> String {
    match kind {
        ReportKind::Attained => "Attained",
        ReportKind::InfimumZero => "InfimumZero",
        ReportKind::ZeroFunction => "ZeroFunction",
        ReportKind::NonIntegrable => "NonIntegrable",
    }
    .to_string()
}

fn record_from_report(cfg: &ExperimentConfig, rep: &ProductReport, t: Option<f64>, verdict: &str) -> Record {
    let (s_point, log_inf) = match &rep.santalo {
        Some(s) if s.kind == OutcomeKind::Attained => {
            (Some(s.point.clone()), Some(LogVal(s.log_inf)))
        }
        Some(s) => (None, Some(LogVal(s.log_inf))),
        None => (None, None),
    };
    Record {
        experiment: cfg.experiment,
        fixture: cfg.fixture.clone(),
        p: rep.p,
        t,
        kind: kind_str(rep.kind),
        s_point,
        log_inf,
        log_mp: Some(LogVal(rep.log_mp)),
        log_bound: Some(LogVal(rep.log_gaussian_bound)),
        ratio_log: Some(LogVal(rep.ratio_log)),
        margins: Vec::new(),
        flags: rep.tail_flags.clone(),
        verdict: verdict.to_string(),
    }
}

fn verdict_line(verdict: &str, cfg: &ExperimentConfig, detail: &str) {
    println!("{verdict} {:?} {} {detail}", cfg.experiment, cfg.fixture);
}

/// Execute one experiment; prints verdict lines, returns records and curves.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let f = zoo::resolve(&cfg.fixture, cfg.grid.map(|g| grid_from_cfg(&g)).transpose()?)?;
    let opts = product_options(&f, cfg)?;
    let tol = cfg.tolerances;
    let mut out = RunOutput { records: Vec::new(), curves: Vec::new(), failed: false };

    match cfg.experiment {
        Experiment::MpProduct | Experiment::VolumeProduct => {
            let ps: Vec<f64> = if cfg.experiment == Experiment::VolumeProduct {
                vec![0.0]
            } else {
                cfg.p_list.clone()
            };
            for &p in &ps {
                let pq = ExponentPair::new(p)?;
                let rep = products::product(&f, pq, &opts)?;
                let pass = rep.ratio_log <= tol.ratio || rep.log_mp == f64::NEG_INFINITY;
                let flagged = !rep.tail_flags.is_empty();
                let verdict = if !pass {
                    out.failed = true;
                    "FAIL"
                } else if flagged {
                    "FLAGGED"
                } else {
                    "PASS"
                };
                verdict_line(verdict, cfg, &format!("p={p} ratio_log={:+.3e}", rep.ratio_log));
                out.records.push(record_from_report(cfg, &rep, None, verdict));
            }
        }

        Experiment::Monotonicity => {
            let kind = flow_kind(cfg, SemigroupKind::Heat);
            let times = cfg.times.clone().unwrap_or_else(|| DEFAULT_TIMES.to_vec());
            for &p in &cfg.p_list {
                let pq = ExponentPair::new(p)?;
                let curve = products::monotonicity_sweep(&f, pq, kind, &times, &opts);
                if let Some(err) = &curve.error {
                    out.failed = true;
                    verdict_line("FAIL", cfg, &format!("p={p} stage error: {err}"));
                }
                let mut ok = true;
                for w in curve.mp_log.windows(2) {
                    if !(w[1] >= w[0] - tol.step_slack) {
                        ok = false;
                    }
                }
                let bound = if pq.is_polar() {
                    products::polar_bound(f.dim())
                } else {
                    products::gaussian_constants(p, f.dim())?.1
                };
                if !curve.mp_log.iter().all(|&v| v <= bound + tol.ratio) {
                    ok = false;
                }
                let verdict = if ok { "PASS" } else { "FAIL" };
                if !ok {
                    out.failed = true;
                }
                verdict_line(
                    verdict,
                    cfg,
                    &format!("p={p} {:?} curve over {} times", kind, curve.times.len()),
                );
                for (i, &t) in curve.times.iter().enumerate() {
                    let mut rec = Record {
                        experiment: cfg.experiment,
                        fixture: cfg.fixture.clone(),
                        p,
                        t: Some(t),
                        kind: kind_str(curve.kinds[i]),
                        s_point: Some(curve.santalo_points[i].clone()),
                        log_inf: Some(LogVal(curve.alpha_log[i])),
                        log_mp: Some(LogVal(curve.mp_log[i])),
                        log_bound: Some(LogVal(bound)),
                        ratio_log: Some(LogVal(curve.mp_log[i] - bound)),
                        margins: Vec::new(),
                        flags: Vec::new(),
                        verdict: verdict.to_string(),
                    };
                    rec.margins.push(("step_slack".into(), LogVal(tol.step_slack)));
                    out.records.push(rec);
                }
                let name = curve_name(cfg, p, &ps_suffix(&cfg.p_list, p));
                out.curves.push((
                    name,
                    Curve {
                        times: curve.times.clone(),
                        alpha_log: curve.alpha_log.clone(),
                        mp_log: curve.mp_log.clone(),
                        points: curve.santalo_points.clone(),
                    },
                ));
            }
        }

        Experiment::PLimit => {
            let rows = products::p_limit_sweep(&f, &cfg.p_list, &opts)?;
            let sup_ok = rows.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap);
            let mp_ok = rows.windows(2).all(|w| w[1].mp_gap < w[0].mp_gap);
            let verdict = if sup_ok && mp_ok { "PASS" } else { "FAIL" };
            if !(sup_ok && mp_ok) {
                out.failed = true;
            }
            verdict_line(
                verdict,
                cfg,
                &format!("sup-gap monotone: {sup_ok}, product-gap monotone: {mp_ok}"),
            );
            for r in &rows {
                out.records.push(Record {
                    experiment: cfg.experiment,
                    fixture: cfg.fixture.clone(),
                    p: r.p,
                    t: None,
                    kind: "Sweep".to_string(),
                    s_point: None,
                    log_inf: None,
                    log_mp: None,
                    log_bound: None,
                    ratio_log: None,
                    margins: vec![
                        ("sup_gap".into(), LogVal(r.sup_gap)),
                        ("mp_gap".into(), LogVal(r.mp_gap)),
                    ],
                    flags: Vec::new(),
                    verdict: verdict.to_string(),
                });
            }
        }

        Experiment::Hjb => {
            let times = cfg.times.clone().unwrap_or_else(|| vec![0.5]);
            let zs: Vec<Vec<f64>> = match f.dim() {
                1 => vec![vec![-0.5], vec![0.0], vec![0.5]],
                _ => vec![vec![0.0, 0.0], vec![0.5, -0.5], vec![-0.5, 0.5]],
            };
            for &p in &cfg.p_list {
                let pq = ExponentPair::new(p)?;
                for &t in &times {
                    let dt = 1e-3 * t.max(1.0);
                    let rep = products::hjb_residual(&f, pq, t, &zs, dt, 1e-3, &opts)?;
                    let ok = rep.eps_fd <= tol.hjb_budget
                        && rep.residuals.iter().all(|&r| r >= -rep.eps_fd);
                    let verdict = if ok { "PASS" } else { "FAIL" };
                    if !ok {
                        out.failed = true;
                    }
                    verdict_line(
                        verdict,
                        cfg,
                        &format!(
                            "p={p} t={t} min residual {:+.3e} budget {:.3e}",
                            rep.residuals.iter().cloned().fold(f64::INFINITY, f64::min),
                            rep.eps_fd
                        ),
                    );
                    for (z, r) in zs.iter().zip(&rep.residuals) {
                        out.records.push(Record {
                            experiment: cfg.experiment,
                            fixture: cfg.fixture.clone(),
                            p,
                            t: Some(t),
                            kind: "Residual".to_string(),
                            s_point: Some(z.clone()),
                            log_inf: None,
                            log_mp: None,
                            log_bound: None,
                            ratio_log: None,
                            margins: vec![
                                ("residual".into(), LogVal(*r)),
                                ("eps_fd".into(), LogVal(rep.eps_fd)),
                            ],
                            flags: Vec::new(),
                            verdict: verdict.to_string(),
                        });
                    }
                }
            }
        }

        Experiment::Hypercontract => {
            for &p in &cfg.p_list {
                let pq = ExponentPair::new(p)?;
                let q = pq.q;
                for (p1, p2) in [(p, q), (0.5 * p, 0.5 * q)] {
                    match products::hypercontract_check(&f, p, p1, p2) {
                        Ok(chk) => {
                            let ok = chk.margin >= -tol.hyper_margin;
                            let verdict = if ok { "PASS" } else { "FAIL" };
                            if !ok {
                                out.failed = true;
                            }
                            verdict_line(
                                verdict,
                                cfg,
                                &format!("p={p} (p1,p2)=({p1},{p2}) margin={:+.3e}", chk.margin),
                            );
                            out.records.push(Record {
                                experiment: cfg.experiment,
                                fixture: cfg.fixture.clone(),
                                p,
                                t: None,
                                kind: "Margin".to_string(),
                                s_point: None,
                                log_inf: None,
                                log_mp: None,
                                log_bound: None,
                                ratio_log: None,
                                margins: vec![
                                    ("lhs".into(), LogVal(chk.lhs_log)),
                                    ("rhs".into(), LogVal(chk.rhs_log)),
                                    ("margin".into(), LogVal(chk.margin)),
                                ],
                                flags: Vec::new(),
                                verdict: verdict.to_string(),
                            });
                        }
                        Err(e) => {
                            out.failed = true;
                            verdict_line("FAIL", cfg, &format!("precondition: {e}"));
                        }
                    }
                }
            }
        }

        Experiment::SantaloCurve => {
            let kind = flow_kind(cfg, SemigroupKind::FokkerPlanck);
            let times = cfg.times.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 4.0]);
            let step = cfg.ode_step.unwrap_or(0.05);
            for &p in &cfg.p_list {
                let pq = ExponentPair::new(p)?;
                match products::santalo_curve(&f, pq, kind, &times, step, &opts) {
                    Ok(curve) => {
                        // monotonicity of the objective is reported, not asserted
                        let mono = curve
                            .objective_log
                            .windows(2)
                            .all(|w| w[1] >= w[0] - 1e-6);
                        verdict_line(
                            "PASS",
                            cfg,
                            &format!(
                                "p={p} {:?} curve; objective monotone: {mono}; final |s| = {:.3e}",
                                kind,
                                lsvp::num::norm(curve.points.last().unwrap())
                            ),
                        );
                        let n = f.dim() as f64;
                        let log_if = f.integrate_log();
                        let mp: Vec<f64> = curve
                            .objective_log
                            .iter()
                            .map(|&a| -(n * p / pq.q) * p.ln() + log_if - (p / pq.q) * a)
                            .collect();
                        for (i, &t) in curve.times.iter().enumerate() {
                            out.records.push(Record {
                                experiment: cfg.experiment,
                                fixture: cfg.fixture.clone(),
                                p,
                                t: Some(t),
                                kind: "CurvePoint".to_string(),
                                s_point: Some(curve.points[i].clone()),
                                log_inf: Some(LogVal(curve.objective_log[i])),
                                log_mp: Some(LogVal(mp[i])),
                                log_bound: None,
                                ratio_log: None,
                                margins: Vec::new(),
                                flags: Vec::new(),
                                verdict: "PASS".to_string(),
                            });
                        }
                        let name = curve_name(cfg, p, &ps_suffix(&cfg.p_list, p));
                        out.curves.push((
                            name,
                            Curve {
                                times: curve.times.clone(),
                                alpha_log: curve.objective_log.clone(),
                                mp_log: mp,
                                points: curve.points.clone(),
                            },
                        ));
                    }
                    Err(lsvp::Error::CurvePreconditionFailed) => {
                        out.failed = true;
                        verdict_line(
                            "FAIL",
                            cfg,
                            &format!(
                                "p={p} precondition: the infimum is not attained at t = 0 \
                                 (support dichotomy: origin not interior); no start point"
                            ),
                        );
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }

        Experiment::LaplaceBound => {
            for &p in &cfg.p_list {
                let pq = ExponentPair::new(p)?;
                let chk = products::laplace_lp_bound_check(&f, pq, &opts)?;
                let ok = chk.margin >= -tol.margin;
                let verdict = if ok { "PASS" } else { "FAIL" };
                if !ok {
                    out.failed = true;
                }
                verdict_line(verdict, cfg, &format!("p={p} margin={:+.3e}", chk.margin));
                out.records.push(Record {
                    experiment: cfg.experiment,
                    fixture: cfg.fixture.clone(),
                    p,
                    t: None,
                    kind: "Margin".to_string(),
                    s_point: None,
                    log_inf: None,
                    log_mp: None,
                    log_bound: None,
                    ratio_log: None,
                    margins: vec![
                        ("lhs".into(), LogVal(chk.lhs_log)),
                        ("rhs".into(), LogVal(chk.rhs_log)),
                        ("margin".into(), LogVal(chk.margin)),
                    ],
                    flags: Vec::new(),
                    verdict: verdict.to_string(),
                });
            }
        }
    }

    Ok(out)
}

fn ps_suffix(p_list: &[f64], p: f64) -> String {
    if p_list.len() > 1 {
        format!("-p{p}")
    } else {
        String::new()
    }
}

fn curve_name(cfg: &ExperimentConfig, _p: f64, suffix: &str) -> String {
    match &cfg.curve_out {
        Some(path) if suffix.is_empty() => path.clone(),
        Some(path) => match path.rsplit_once('.') {
            Some((stem, ext)) => format!("{stem}{suffix}.{ext}"),
            None => format!("{path}{suffix}"),
        },
        None => String::new(),
    }
}

/// Run and emit files; returns the process exit code.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<i32> {
    let out = run(cfg)?;
    if let Some(path) = &cfg.out {
        std::fs::write(path, records_json(&out.records))
            .with_context(|| format!("writing report to {path}"))?;
        // timestamps live in a sidecar so the report itself is reproducible
        let meta = format!(
            "{{\"written_unix_ms\":{}}}\n",
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0)
        );
        std::fs::write(format!("{path}.meta.json"), meta)
            .with_context(|| format!("writing sidecar for {path}"))?;
    }
    for (name, curve) in &out.curves {
        if !name.is_empty() {
            std::fs::write(name, curve_csv(curve)).with_context(|| format!("writing curve {name}"))?;
        }
    }
    Ok(if out.failed { 1 } else { 0 })
}

/// Resolve a fixture and serialize it to the text format.
pub fn export_fixture(name: &str, path: &str) -> Result<()> {
    let f = zoo::build(name, None).map_err(|e| anyhow!("{e}"))?;
    std::fs::write(path, f.to_text()).with_context(|| format!("writing fixture to {path}"))?;
    Ok(())
}
