use std::time::Instant;

use leo_sg::distributions::{case_probs_for, DistanceKind, DistanceLaw};
use leo_sg::montecarlo::{
    estimate_case_probs, estimate_outage_multi, estimate_throughput, sample_nearest_distances, TrialConfig,
};
use leo_sg::optimizer::{optimize_exhaustive, optimize_iterative, throughput};
use leo_sg::outage::{
    outage, outage_approx, outage_approx_alpha2, outage_approx_truncated, outage_asymptotic, outage_exact,
    outage_exact_closed_form, ClosedFormLimits, OutageResult,
};
use leo_sg::units::{parse_quantity, Quantity};
use leo_sg::{Error, OptConstraints, OptResult, Result, SeriesControl, SystemConfig};
use rayon::prelude::*;

use crate::args::*;
use crate::output::{Cell, Table};

/// A table to print, plus an error to report after printing it.
pub struct Report {
    pub table: Table,
    pub config: Vec<(String, String)>,
    pub deferred: Option<Error>,
}

impl Report {
    pub fn new(table: Table, cfg: &SystemConfig) -> Self {
        Report { table, config: cfg.to_pairs(), deferred: None }
    }
}

fn km(x: f64) -> f64 {
    x / 1e3
}

pub fn geometry(c: &Common) -> Result<Report> {
    let cfg = c.scenario()?;
    let d = cfg.derived()?;
    let mut t = Table::new(&[
        "d_max_km",
        "psi_max_deg",
        "psi_th_deg",
        "d_th_km",
        "area_total_km2",
        "area_vis_km2",
        "area_ml_km2",
        "area_sl_km2",
        "q_vis",
        "q_ml",
    ]);
    t.push(vec![
        km(d.d_max).into(),
        d.psi_max.to_degrees().into(),
        d.psi_th.to_degrees().into(),
        km(d.d_th).into(),
        (d.area_total / 1e6).into(),
        (d.area_vis / 1e6).into(),
        (d.area_ml / 1e6).into(),
        (d.area_sl / 1e6).into(),
        d.q_vis().into(),
        d.q_ml().into(),
    ]);
    Ok(Report::new(t, &cfg))
}

pub fn case_probs(c: &Common) -> Result<Report> {
    let cfg = c.scenario()?;
    let p = case_probs_for(cfg.s, &cfg.derived()?, cfg.model)?;
    let mut t = Table::new(&["model", "p_ml", "p_sl", "p_inv", "p_vis"]);
    t.push(vec![cfg.model.to_string().into(), p.p_ml.into(), p.p_sl.into(), p.p_inv.into(), p.p_vis().into()]);
    Ok(Report::new(t, &cfg))
}

fn core_kind(k: DistKind) -> DistanceKind {
    match k {
        DistKind::Nearest => DistanceKind::Nearest,
        DistKind::ServingMl => DistanceKind::ServingMl,
        DistKind::ServingSl => DistanceKind::ServingSl,
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Validation { key: "points".into(), message: "must be >= 2".into() });
    }
    Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 }).collect())
}

pub fn dist(a: &DistArgs) -> Result<Report> {
    let cfg = a.common.scenario()?;
    let gd = cfg.derived()?;
    let law = DistanceLaw::new(core_kind(a.kind), cfg.model, &gd);
    let mut t = Table::new(&["x_km", "cdf", "pdf_per_km"]);
    for x in grid(law.lo, law.hi, a.points)? {
        let (f, p) = law.eval(x, cfg.s, &gd)?;
        t.push(vec![km(x).into(), f.into(), (p * 1e3).into()]);
    }
    Ok(Report::new(t, &cfg))
}

fn ctl_with(n_max: usize) -> SeriesControl {
    SeriesControl { n_max, ..SeriesControl::default() }
}

pub fn outage_cmd(a: &OutageArgs) -> Result<Report> {
    let cfg = a.common.scenario()?;
    let ctl = ctl_with(a.n_max);
    let r = match a.path {
        OutagePath::Auto => outage(&cfg, a.rate, &ctl)?,
        OutagePath::Quadrature => outage_exact(&cfg, a.rate, &ctl)?,
        OutagePath::ClosedForm => outage_exact_closed_form(&cfg, a.rate, &ctl, &ClosedFormLimits::default())?,
        OutagePath::Approx => outage_approx(&cfg, a.rate, &ctl)?,
        OutagePath::Alpha2 => outage_approx_alpha2(&cfg, a.rate, &ctl)?,
        OutagePath::Asymptotic => {
            let p = outage_asymptotic(&cfg, a.rate, &ctl)?;
            let mut t = Table::new(OUTAGE_COLUMNS);
            t.push(vec![p.into(), p.into(), 0.0.into(), 0u64.into()]);
            return Ok(Report::new(t, &cfg));
        }
    };
    let mut t = Table::new(OUTAGE_COLUMNS);
    t.push(outage_row(&r));
    Ok(Report::new(t, &cfg))
}

const OUTAGE_COLUMNS: &[&str] = &["p_out", "p_out_ml", "p_out_sl", "n_used"];

fn outage_row(r: &OutageResult) -> Vec<Cell> {
    vec![r.p_out.into(), r.p_out_ml.into(), r.p_out_sl.into(), r.n_used.into()]
}

pub fn throughput_cmd(a: &RateArgs) -> Result<Report> {
    let cfg = a.common.scenario()?;
    let ctl = SeriesControl::default();
    let p_vis = case_probs_for(cfg.s, &cfg.derived()?, cfg.model)?.p_vis();
    let p_out = outage(&cfg, a.rate, &ctl)?.p_out;
    let tput = throughput(a.rate, cfg.theta_min, &cfg, &ctl, cfg.model)?;
    let mut t = Table::new(&["R", "theta_min_deg", "p_vis", "p_out", "T"]);
    t.push(vec![a.rate.into(), cfg.theta_min.to_degrees().into(), p_vis.into(), p_out.into(), tput.into()]);
    Ok(Report::new(t, &cfg))
}

pub fn constraints(s: &SearchArgs) -> Result<OptConstraints> {
    let c = OptConstraints {
        delta_r: s.delta_r,
        delta_theta: parse_quantity("delta-theta", &s.delta_theta, Quantity::Angle)?,
        r_hat: s.r_hat,
        max_iters: s.max_iters,
        ..OptConstraints::new(s.eta, s.eps)
    };
    c.validate()?;
    Ok(c)
}

pub const OPTIMIZE_COLUMNS: &[&str] = &["method", "R_star", "theta_star_deg", "T", "iterations", "wall_ms"];

/// Outcome of one optimizer run.
pub struct OptRun {
    pub method: &'static str,
    pub result: Result<OptResult>,
    pub wall_ms: f64,
}

impl OptRun {
    /// Best point found, which an iteration-cap failure still carries.
    pub fn best(&self) -> Option<&OptResult> {
        match &self.result {
            Ok(r) => Some(r),
            Err(Error::IterationCapReached { best }) => Some(best),
            Err(_) => None,
        }
    }
}

pub fn run_optimizers(cfg: &SystemConfig, cons: &OptConstraints, method: OptMethod) -> Vec<OptRun> {
    let ctl = SeriesControl::default();
    let mut runs = Vec::new();
    let timed = |method: &'static str, f: &dyn Fn() -> Result<OptResult>| {
        let t0 = Instant::now();
        let result = f();
        OptRun { method, result, wall_ms: t0.elapsed().as_secs_f64() * 1e3 }
    };
    if matches!(method, OptMethod::Iterative | OptMethod::Both) {
        runs.push(timed("iterative", &|| optimize_iterative(cfg, cons, &ctl, cfg.model)));
    }
    if matches!(method, OptMethod::Exhaustive | OptMethod::Both) {
        runs.push(timed("exhaustive", &|| optimize_exhaustive(cfg, cons, &ctl, cfg.model)));
    }
    runs
}

/// Rows for the methods that produced a point; the first failure is deferred.
pub fn optimize(a: &OptimizeArgs) -> Result<Report> {
    let cfg = a.common.scenario()?;
    let cons = constraints(&a.search)?;
    let mut t = Table::new(OPTIMIZE_COLUMNS);
    let mut deferred = None;
    for run in run_optimizers(&cfg, &cons, a.method) {
        if let Some(r) = run.best() {
            t.push(vec![
                run.method.into(),
                r.r_star.into(),
                r.theta_star.to_degrees().into(),
                r.throughput.into(),
                r.iterations.into(),
                run.wall_ms.into(),
            ]);
        }
        if let Err(e) = run.result {
            deferred = deferred.or(Some(e));
        }
    }
    Ok(Report { deferred, ..Report::new(t, &cfg) })
}

fn need_rate(r: Option<f64>) -> Result<f64> {
    r.ok_or_else(|| Error::Validation { key: "R".into(), message: "required for this target".into() })
}

pub fn simulate(a: &SimulateArgs) -> Result<Report> {
    let cfg = a.common.scenario()?;
    let tc = TrialConfig::new(a.mc.trials, a.mc.seed()?);
    let gd = cfg.derived()?;
    let t = match a.target {
        SimTarget::Geometry => {
            // one satellite: its hit frequencies are the cap fractions
            let [ml, sl, _] = estimate_case_probs(1, &gd, &tc)?;
            let vis = ml.mean + sl.mean;
            let vis_err = (vis * (1.0 - vis) / tc.trials as f64).sqrt();
            let mut t = Table::new(&["q_vis", "q_vis_stderr", "q_ml", "q_ml_stderr", "trials"]);
            t.push(vec![vis.into(), vis_err.into(), ml.mean.into(), ml.stderr.into(), tc.trials.into()]);
            t
        }
        SimTarget::CaseProbs => {
            let [ml, sl, inv] = estimate_case_probs(cfg.s, &gd, &tc)?;
            let mut t = Table::new(&["p_ml", "p_ml_stderr", "p_sl", "p_sl_stderr", "p_inv", "p_inv_stderr", "trials"]);
            t.push(vec![
                ml.mean.into(),
                ml.stderr.into(),
                sl.mean.into(),
                sl.stderr.into(),
                inv.mean.into(),
                inv.stderr.into(),
                tc.trials.into(),
            ]);
            t
        }
        SimTarget::Dist => {
            // empirical CDF of the nearest distance over the analytic grid
            let law = DistanceLaw::new(DistanceKind::Nearest, cfg.model, &gd);
            let mut d = sample_nearest_distances(cfg.s, &gd.geo, tc.trials, tc.seed);
            d.sort_by(f64::total_cmp);
            let n = d.len() as f64;
            let mut t = Table::new(&["x_km", "cdf", "cdf_stderr"]);
            for x in grid(law.lo, law.hi, a.points)? {
                let f = d.partition_point(|&v| v <= x) as f64 / n;
                t.push(vec![km(x).into(), f.into(), (f * (1.0 - f) / n).sqrt().into()]);
            }
            t
        }
        SimTarget::Outage => {
            let e = estimate_outage_multi(&cfg, &[need_rate(a.rate)?], &tc)?[0];
            let mut t = Table::new(&["p_out", "stderr", "trials_used", "trials_discarded"]);
            t.push(vec![e.mean.into(), e.stderr.into(), e.trials_used.into(), e.trials_discarded.into()]);
            t
        }
        SimTarget::Throughput => {
            let r = need_rate(a.rate)?;
            let e = estimate_throughput(&cfg, r, cfg.theta_min, &tc)?;
            let mut t = Table::new(&["R", "theta_min_deg", "T", "stderr", "trials"]);
            t.push(vec![r.into(), cfg.theta_min.to_degrees().into(), e.mean.into(), e.stderr.into(), tc.trials.into()]);
            t
        }
    };
    Ok(Report::new(t, &cfg))
}

const SWEEP_OUTPUTS: &[&str] = &["p_vis", "p_ml", "p_sl", "p_inv", "p_out", "p_out_ml", "p_out_sl", "n_used", "T"];

fn sweep_values(a: &SweepArgs) -> Result<Vec<f64>> {
    let kind = match a.var {
        SweepVar::ThetaMin => Quantity::Angle,
        SweepVar::A => Quantity::Length,
        SweepVar::R | SweepVar::S | SweepVar::N => Quantity::Real,
    };
    let lo = parse_quantity("lo", &a.lo, kind)?;
    let hi = parse_quantity("hi", &a.hi, kind)?;
    if !(lo < hi) {
        return Err(Error::Validation { key: "lo".into(), message: "must be below hi".into() });
    }
    let vals = match (&a.step, a.count) {
        (Some(step), _) => {
            let step = parse_quantity("step", step, kind)?;
            if !(step > 0.0) {
                return Err(Error::Validation { key: "step".into(), message: "must be positive".into() });
            }
            let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize;
            (0..=n).map(|i| lo + step * i as f64).collect()
        }
        (None, Some(count)) => grid(lo, hi, count)?,
        (None, None) => return Err(Error::Validation { key: "step".into(), message: "give --step or --count".into() }),
    };
    if matches!(a.var, SweepVar::S | SweepVar::N) {
        let mut ints: Vec<f64> = vals.iter().map(|v| v.round()).collect();
        ints.dedup();
        if (matches!(a.var, SweepVar::S) && ints[0] < 1.0) || ints[0] < 0.0 {
            return Err(Error::Validation { key: "lo".into(), message: "out of range for this variable".into() });
        }
        return Ok(ints);
    }
    Ok(vals)
}

pub fn sweep(a: &SweepArgs) -> Result<Report> {
    let base = a.common.scenario()?;
    let outputs: Vec<&'static str> = a
        .outputs
        .split(',')
        .map(|s| {
            let s = s.trim();
            SWEEP_OUTPUTS
                .iter()
                .copied()
                .find(|&o| o == s)
                .ok_or_else(|| Error::Validation { key: "outputs".into(), message: format!("unknown quantity `{s}`") })
        })
        .collect::<Result<_>>()?;
    let var_col = match a.var {
        SweepVar::R => "R",
        SweepVar::ThetaMin => "theta_min_deg",
        SweepVar::S => "S",
        SweepVar::A => "a_km",
        SweepVar::N => "N",
    };
    let values = sweep_values(a)?;
    let ctl = SeriesControl::default();
    let rows: Vec<Vec<Cell>> = values
        .par_iter()
        .map(|&v| -> Result<Vec<Cell>> {
            let mut cfg = base.clone();
            let mut rate = a.rate;
            let mut n_last = None;
            let label: Cell = match a.var {
                SweepVar::R => {
                    rate = v;
                    v.into()
                }
                SweepVar::ThetaMin => {
                    cfg.theta_min = v;
                    v.to_degrees().into()
                }
                SweepVar::S => {
                    cfg.s = v as u64;
                    (v as u64).into()
                }
                SweepVar::A => {
                    cfg.a = v;
                    km(v).into()
                }
                SweepVar::N => {
                    n_last = Some(v as usize);
                    (v as u64).into()
                }
            };
            cfg.validate()?;
            let cases = case_probs_for(cfg.s, &cfg.derived()?, cfg.model)?;
            let needs_outage = outputs.iter().any(|o| o.starts_with("p_out") || *o == "n_used" || *o == "T");
            let out = if needs_outage {
                Some(match n_last {
                    Some(n) => outage_approx_truncated(&cfg, rate, n)?,
                    None => outage(&cfg, rate, &ctl)?,
                })
            } else {
                None
            };
            let mut row = vec![label];
            for o in &outputs {
                let r = out.as_ref();
                row.push(match *o {
                    "p_vis" => cases.p_vis().into(),
                    "p_ml" => cases.p_ml.into(),
                    "p_sl" => cases.p_sl.into(),
                    "p_inv" => cases.p_inv.into(),
                    "p_out" => r.expect("computed").p_out.into(),
                    "p_out_ml" => r.expect("computed").p_out_ml.into(),
                    "p_out_sl" => r.expect("computed").p_out_sl.into(),
                    "n_used" => r.expect("computed").n_used.into(),
                    _ => (cases.p_vis() * (1.0 - r.expect("computed").p_out) * rate).into(),
                });
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![var_col];
    cols.extend(outputs);
    let mut t = Table::new(&cols);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Report::new(t, &base))
}

