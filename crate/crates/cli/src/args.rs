use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leo_sg::montecarlo::seed_from_env;
use leo_sg::{Error, Result, SystemConfig};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "leo-sg", version, about = "Outage probability and throughput of downlink LEO constellations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Visibility and main-lobe regions of the constellation sphere.
    Geometry(Common),
    /// Probabilities that the serving satellite is main-lobe, side-lobe or absent.
    CaseProbs(Common),
    /// CDF and PDF of the nearest or serving-satellite distance.
    Dist(DistArgs),
    /// Outage probability at one rate.
    Outage(OutageArgs),
    /// System throughput at one rate.
    Throughput(RateArgs),
    /// Rate and elevation threshold maximizing throughput.
    Optimize(OptimizeArgs),
    /// Monte-Carlo counterpart of an analytic subcommand.
    Simulate(SimulateArgs),
    /// Evaluates quantities over a range of one variable.
    Sweep(SweepArgs),
    /// Curve data for one of the reference figures.
    Figure(FigureArgs),
}

/// Scenario selection and output options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in parameter set: vsat-table1 or handheld-table1.
    #[arg(long)]
    pub preset: Option<String>,
    /// Configuration file (flat `key = value` or JSON output of this tool).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fading preset: fhs-paper, fhs-canonical, as, ils.
    #[arg(long)]
    pub fading: Option<String>,
    /// Analytic model: exact or approx.
    #[arg(long)]
    pub model: Option<String>,
    /// Number of satellites.
    #[arg(long = "S", value_name = "COUNT")]
    pub s: Option<String>,
    /// Altitude with unit, e.g. 600km.
    #[arg(long, value_name = "LENGTH")]
    pub a: Option<String>,
    /// Minimum elevation angle with unit, e.g. 10deg.
    #[arg(long = "theta-min", value_name = "ANGLE")]
    pub theta_min: Option<String>,
    /// Rain attenuation, linear or in dB (e.g. -3dB).
    #[arg(long = "rain-g", value_name = "GAIN", allow_hyphen_values = true)]
    pub rain_g: Option<String>,
    /// Receive beam-pointing error with unit, e.g. 1deg.
    #[arg(long = "omega-e", value_name = "ANGLE")]
    pub omega_e: Option<String>,
    /// Any configuration key, e.g. --set band.alpha=2.5 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    pub set: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    /// Preset, then config file, then individual flags.
    pub fn scenario(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.preset {
            Some(p) => SystemConfig::preset(p)?,
            None => SystemConfig::default(),
        };
        if let Some(path) = &self.config {
            cfg = leo_sg::config::load_config_over(path, cfg)?;
        }
        let flags = [
            ("fading", &self.fading),
            ("model", &self.model),
            ("constellation.S", &self.s),
            ("constellation.a", &self.a),
            ("theta_min", &self.theta_min),
            ("link.rain_g", &self.rain_g),
            ("antennas.omega_e", &self.omega_e),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Validation { key: "set".into(), message: format!("expected KEY=VALUE, got `{kv}`") })?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Nearest,
    ServingMl,
    ServingSl,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long, value_enum, default_value_t = DistKind::Nearest)]
    pub kind: DistKind,
    /// Number of evenly spaced distances.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutagePath {
    /// Exact or approximate according to the configured model.
    Auto,
    /// Exact model by numerical integration.
    Quadrature,
    /// Exact model by the finite-sum closed form.
    ClosedForm,
    /// Approximate model, generic path loss exponent.
    Approx,
    /// Approximate model, closed form for alpha = 2.
    Alpha2,
    /// Limit as the number of satellites grows.
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct OutageArgs {
    /// Target spectral efficiency (bps/Hz).
    #[arg(long = "R", value_name = "RATE")]
    pub rate: f64,
    #[arg(long, value_enum, default_value_t = OutagePath::Auto)]
    pub path: OutagePath,
    /// Maximum number of fading-series terms.
    #[arg(long = "n-max", default_value_t = 2000)]
    pub n_max: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Target spectral efficiency (bps/Hz).
    #[arg(long = "R", value_name = "RATE")]
    pub rate: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptMethod {
    Iterative,
    Exhaustive,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Visibility floor.
    #[arg(long, default_value_t = 0.9)]
    pub eta: f64,
    /// Outage ceiling.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Rate grid step (bps/Hz).
    #[arg(long = "delta-r", default_value_t = 0.01)]
    pub delta_r: f64,
    /// Elevation grid step with unit.
    #[arg(long = "delta-theta", default_value = "0.1deg")]
    pub delta_theta: String,
    /// Largest rate searched exhaustively (bps/Hz).
    #[arg(long = "r-hat", default_value_t = 10.0)]
    pub r_hat: f64,
    /// Iteration cap of the alternating search.
    #[arg(long = "max-iters", default_value_t = 200)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value_t = OptMethod::Both)]
    pub method: OptMethod,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Number of sampled constellations.
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Random seed; overrides LEO_MC_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl McArgs {
    pub fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => seed_from_env(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimTarget {
    Geometry,
    CaseProbs,
    Dist,
    Outage,
    Throughput,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub target: SimTarget,
    /// Target spectral efficiency, for outage and throughput.
    #[arg(long = "R", value_name = "RATE")]
    pub rate: Option<f64>,
    /// Number of evenly spaced distances, for dist.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    #[value(name = "R")]
    R,
    #[value(name = "theta_min", alias = "theta-min")]
    ThetaMin,
    #[value(name = "S")]
    S,
    #[value(name = "a")]
    A,
    #[value(name = "N")]
    N,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept variable.
    #[arg(long = "var", value_enum)]
    pub var: SweepVar,
    /// First value (angles and lengths need units).
    #[arg(long, allow_hyphen_values = true)]
    pub lo: String,
    /// Last value.
    #[arg(long, allow_hyphen_values = true)]
    pub hi: String,
    /// Spacing between values; exclusive with --count.
    #[arg(long, conflicts_with = "count")]
    pub step: Option<String>,
    /// Number of evenly spaced values including both ends.
    #[arg(long)]
    pub count: Option<usize>,
    /// Comma-separated quantities: p_vis, p_ml, p_sl, p_inv, p_out, p_out_ml, p_out_sl, n_used, T.
    #[arg(long, default_value = "p_out")]
    pub outputs: String,
    /// Rate used when R is not the swept variable (bps/Hz).
    #[arg(long = "R", value_name = "RATE", default_value_t = 1.0)]
    pub rate: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub name: FigureName,
    /// Comma-separated values replacing the default sweep of the figure's x axis.
    #[arg(long)]
    pub values: Option<String>,
    /// Sampled constellations per Monte-Carlo point.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Random seed; overrides LEO_MC_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
