use leo_sg::channel::ShadowedRicianParams;
use leo_sg::distributions::{case_probs_for, nearest_dist};
use leo_sg::montecarlo::{estimate_case_probs, estimate_outage_multi, estimate_visibility, seed_from_env, Conditioning, TrialConfig};
use leo_sg::outage::{outage, outage_approx_truncated, outage_asymptotic};
use leo_sg::{Error, Model, Result, SeriesControl, SystemConfig};
use rayon::prelude::*;

use crate::args::{FigureArgs, FigureName, OptMethod};
use crate::commands::{constraints, run_optimizers, Report};
use crate::output::{Cell, Table};

const FADINGS: [&str; 3] = ["fhs-canonical", "as", "ils"];

fn ctl() -> SeriesControl {
    SeriesControl::default()
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn with_fading(cfg: &SystemConfig, name: &str) -> Result<SystemConfig> {
    Ok(SystemConfig { fading: ShadowedRicianParams::preset(name)?, fading_name: Some(name.into()), ..cfg.clone() })
}

fn with_a_km(cfg: &SystemConfig, a_km: f64) -> SystemConfig {
    SystemConfig { a: a_km * 1e3, ..cfg.clone() }
}

/// The terminals compared in the outage and throughput figures.
fn terminals() -> Vec<(&'static str, f64, SystemConfig)> {
    vec![
        ("vsat", 0.0, SystemConfig::vsat_table1()),
        ("vsat", -3.0, SystemConfig { rain_g: db(-3.0), ..SystemConfig::vsat_table1() }),
        ("handheld", 0.0, SystemConfig::handheld_table1()),
    ]
}

fn values(args: &FigureArgs, default: Vec<f64>) -> Result<Vec<f64>> {
    let Some(text) = &args.values else { return Ok(default) };
    let v: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation { key: "values".into(), message: format!("`{s}` is not a number") })
        })
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Validation { key: "values".into(), message: "empty list".into() });
    }
    Ok(v)
}

fn counts(v: &[f64], min: u64) -> Result<Vec<u64>> {
    v.iter()
        .map(|&x| {
            if x.fract() != 0.0 || x < min as f64 {
                Err(Error::Validation { key: "values".into(), message: format!("expected integers >= {min}, got {x}") })
            } else {
                Ok(x as u64)
            }
        })
        .collect()
}

fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn par_rows<T: Sync, F>(items: &[T], f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(&T) -> Result<Vec<Vec<Cell>>> + Sync + Send,
{
    let parts: Vec<Vec<Vec<Cell>>> = items.par_iter().map(f).collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn figure(args: &FigureArgs) -> Result<Report> {
    let seed = match args.seed {
        Some(s) => s,
        None => seed_from_env()?,
    };
    let tc = TrialConfig::new(args.trials, seed);
    tc.validate()?;
    let base = SystemConfig::default();
    let (table, cfg) = match args.name {
        FigureName::Fig2 => (fig2(args, &tc)?, with_a_km(&base, 1200.0)),
        FigureName::Fig3 => (fig3(args)?, base),
        FigureName::Fig5 => (fig5(args, &tc)?, base),
        FigureName::Fig6 => (fig6(args, &tc, false)?, base),
        FigureName::Fig7 => (fig6(args, &tc, true)?, base),
        FigureName::Fig8 => (fig8(args)?, with_fading(&base, "ils")?),
        FigureName::Fig9 => (fig9(args)?, base),
        FigureName::Fig10 => (fig10(args)?, with_fading(&base, "fhs-canonical")?),
        FigureName::Fig11 => (fig11(args)?, base.with_model(Model::Approx)),
    };
    Ok(Report::new(table, &cfg))
}

/// Serving-case probabilities versus S at 1200 km.
fn fig2(args: &FigureArgs, tc: &TrialConfig) -> Result<Table> {
    let cfg = with_a_km(&SystemConfig::default(), 1200.0);
    let gd = cfg.derived()?;
    let s = counts(&values(args, vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0])?, 1)?;
    let mut t = Table::new(&[
        "S",
        "p_ml_exact",
        "p_sl_exact",
        "p_inv_exact",
        "p_ml_approx",
        "p_sl_approx",
        "p_inv_approx",
        "p_ml_mc",
        "p_sl_mc",
        "p_inv_mc",
        "mc_stderr",
    ]);
    for &s in &s {
        let e = case_probs_for(s, &gd, Model::Exact)?;
        let a = case_probs_for(s, &gd, Model::Approx)?;
        let mc = estimate_case_probs(s, &gd, tc)?;
        let err = mc.iter().map(|m| m.stderr).fold(0.0, f64::max);
        t.push(vec![
            s.into(),
            e.p_ml.into(),
            e.p_sl.into(),
            e.p_inv.into(),
            a.p_ml.into(),
            a.p_sl.into(),
            a.p_inv.into(),
            mc[0].mean.into(),
            mc[1].mean.into(),
            mc[2].mean.into(),
            err.into(),
        ]);
    }
    Ok(t)
}

/// Nearest-satellite distance CDF and PDF for S in {1, 10, 100} at 600 km.
fn fig3(args: &FigureArgs) -> Result<Table> {
    let geo = SystemConfig::default().geometry();
    let xs = values(args, range(600.0, 5000.0, 20.0))?;
    let mut t = Table::new(&["S", "x_km", "cdf_exact", "cdf_approx", "pdf_exact_per_km", "pdf_approx_per_km"]);
    for s in [1u64, 10, 100] {
        for &x in &xs {
            let (fe, pe) = nearest_dist(x * 1e3, s, &geo, Model::Exact)?;
            let (fa, pa) = nearest_dist(x * 1e3, s, &geo, Model::Approx)?;
            t.push(vec![s.into(), x.into(), fe.into(), fa.into(), (pe * 1e3).into(), (pa * 1e3).into()]);
        }
    }
    Ok(t)
}

/// Visibility probability versus the elevation threshold, S = 100.
fn fig5(args: &FigureArgs, tc: &TrialConfig) -> Result<Table> {
    let thetas = values(args, range(0.0, 90.0, 1.0))?;
    let mut t = Table::new(&["theta_min_deg", "a_km", "p_vis_exact", "p_vis_approx", "p_vis_mc", "mc_stderr"]);
    for a_km in [300.0, 600.0, 1200.0] {
        for &th in &thetas {
            let cfg = with_a_km(&SystemConfig::default(), a_km).with_theta(th.to_radians());
            let gd = cfg.derived()?;
            let e = case_probs_for(cfg.s, &gd, Model::Exact)?.p_vis();
            let a = case_probs_for(cfg.s, &gd, Model::Approx)?.p_vis();
            let mc = estimate_visibility(&cfg, tc)?;
            t.push(vec![th.into(), a_km.into(), e.into(), a.into(), mc.mean.into(), mc.stderr.into()]);
        }
    }
    Ok(t)
}

/// Outage (or throughput) versus rate for each terminal and fading preset.
fn fig6(args: &FigureArgs, tc: &TrialConfig, throughput: bool) -> Result<Table> {
    let rates = values(args, range(0.2, 6.0, 0.2))?;
    let cols: &[&str] = if throughput {
        &["terminal", "rain_g_db", "fading", "R", "T_exact", "T_approx", "T_mc", "mc_stderr"]
    } else {
        &["terminal", "rain_g_db", "fading", "R", "p_out_exact", "p_out_approx", "p_out_mc", "mc_stderr"]
    };
    let mut cases = Vec::new();
    for (name, g_db, cfg) in terminals() {
        for f in FADINGS {
            cases.push((name, g_db, f, with_fading(&cfg, f)?));
        }
    }
    let rows = par_rows(&cases, |(name, g_db, f, cfg)| {
        let gd = cfg.derived()?;
        let vis_e = case_probs_for(cfg.s, &gd, Model::Exact)?.p_vis();
        let vis_a = case_probs_for(cfg.s, &gd, Model::Approx)?.p_vis();
        let mc_tc = if throughput { TrialConfig { conditioning: Conditioning::Unconditional, ..*tc } } else { *tc };
        let mc = estimate_outage_multi(cfg, &rates, &mc_tc)?;
        let mut rows = Vec::new();
        for (&r, m) in rates.iter().zip(&mc) {
            let pe = outage(&cfg.with_model(Model::Exact), r, &ctl())?.p_out;
            let pa = outage(&cfg.with_model(Model::Approx), r, &ctl())?.p_out;
            let (ye, ya, ym, err) = if throughput {
                (vis_e * (1.0 - pe) * r, vis_a * (1.0 - pa) * r, (1.0 - m.mean) * r, m.stderr * r)
            } else {
                (pe, pa, m.mean, m.stderr)
            };
            rows.push(vec![(*name).into(), (*g_db).into(), (*f).into(), r.into(), ye.into(), ya.into(), ym.into(), err.into()]);
        }
        Ok(rows)
    })?;
    let mut t = Table::new(cols);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Outage versus S for ILS at R = 1, with the large-S limit.
fn fig8(args: &FigureArgs) -> Result<Table> {
    // log-spaced 1..1000, ten points per decade
    let default: Vec<f64> = {
        let mut v: Vec<f64> = (0..=30).map(|i| 10f64.powf(i as f64 / 10.0).round()).collect();
        v.dedup();
        v
    };
    let s = counts(&values(args, default)?, 1)?;
    let mut cases = Vec::new();
    for (name, _, cfg) in terminals().into_iter().filter(|(_, g, _)| *g == 0.0) {
        for &s in &s {
            cases.push((name, with_fading(&cfg, "ils")?.with_s(s)));
        }
    }
    let rows = par_rows(&cases, |(name, cfg)| {
        let e = outage(&cfg.with_model(Model::Exact), 1.0, &ctl())?.p_out;
        let a = outage(&cfg.with_model(Model::Approx), 1.0, &ctl())?.p_out;
        let lim = outage_asymptotic(cfg, 1.0, &ctl())?;
        Ok(vec![vec![(*name).into(), cfg.s.into(), e.into(), a.into(), lim.into()]])
    })?;
    let mut t = Table::new(&["terminal", "S", "p_out_exact", "p_out_approx", "p_out_asymptotic"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Truncated approximate outage versus the number of series terms, VSAT, S = 100.
fn fig9(args: &FigureArgs) -> Result<Table> {
    let ns = counts(&values(args, range(0.0, 100.0, 1.0))?, 0)?;
    let mut cases = Vec::new();
    for f in FADINGS {
        for r in [0.5, 1.0, 2.0] {
            cases.push((f, r, with_fading(&SystemConfig::vsat_table1(), f)?));
        }
    }
    let rows = par_rows(&cases, |(f, r, cfg)| {
        let full = outage(&cfg.with_model(Model::Approx), *r, &ctl())?.p_out;
        ns.iter()
            .map(|&n| {
                let p = outage_approx_truncated(cfg, *r, n as usize)?.p_out;
                Ok(vec![(*f).into(), (*r).into(), n.into(), p.into(), full.into()])
            })
            .collect()
    })?;
    let mut t = Table::new(&["fading", "R", "N", "p_out_truncated", "p_out_converged"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Outage versus the elevation threshold, FHS, R = 0.5, VSAT at g = -3 dB and handheld.
fn fig10(args: &FigureArgs) -> Result<Table> {
    let thetas = values(args, range(0.0, 80.0, 2.0))?;
    let mut cases = Vec::new();
    for (name, g_db, cfg) in terminals() {
        if name == "vsat" && g_db != -3.0 {
            continue;
        }
        for a_km in [300.0, 600.0, 1200.0] {
            for &th in &thetas {
                cases.push((name, a_km, th, with_a_km(&with_fading(&cfg, "fhs-canonical")?, a_km).with_theta(th.to_radians())));
            }
        }
    }
    let rows = par_rows(&cases, |(name, a_km, th, cfg)| {
        let e = outage(&cfg.with_model(Model::Exact), 0.5, &ctl())?.p_out;
        let a = outage(&cfg.with_model(Model::Approx), 0.5, &ctl())?.p_out;
        Ok(vec![vec![(*name).into(), (*a_km).into(), (*th).into(), e.into(), a.into()]])
    })?;
    let mut t = Table::new(&["terminal", "a_km", "theta_min_deg", "p_out_exact", "p_out_approx"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Maximum throughput versus S for VSAT, both optimizers, approximate model.
fn fig11(args: &FigureArgs) -> Result<Table> {
    let s = counts(&values(args, vec![100.0, 200.0, 300.0, 400.0, 500.0])?, 1)?;
    let cons = constraints(&args.search)?;
    let mut t = Table::new(&["S", "rain_g_db", "omega_e_deg", "method", "R_star", "theta_star_deg", "T", "status"]);
    for &s in &s {
        for g_db in [0.0, -3.0] {
            for omega_e in [0.0, 1.0] {
                let cfg = SystemConfig { rain_g: db(g_db), omega_e, ..SystemConfig::vsat_table1() }
                    .with_s(s)
                    .with_model(Model::Approx);
                for run in run_optimizers(&cfg, &cons, OptMethod::Both) {
                    let (r_star, theta, tput) = match run.best() {
                        Some(r) => (r.r_star, r.theta_star.to_degrees(), r.throughput),
                        None => (f64::NAN, f64::NAN, 0.0),
                    };
                    let status = match &run.result {
                        Ok(_) => "ok",
                        Err(e) => e.name(),
                    };
                    t.push(vec![
                        s.into(),
                        g_db.into(),
                        omega_e.into(),
                        run.method.into(),
                        r_star.into(),
                        theta.into(),
                        tput.into(),
                        status.into(),
                    ]);
                }
            }
        }
    }
    Ok(t)
}
