//! Outage probability and throughput of a downlink LEO constellation whose
//! satellites form a binomial point process on a sphere, under
//! shadowed-Rician fading.
//!
//! Analytic results come in an exact (binomial) and an approximate (Poisson)
//! flavour; [`montecarlo`] provides an independent simulation oracle.

pub mod channel;
pub mod config;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod optimizer;
pub mod outage;
pub mod quadrature;
pub mod special;
pub mod units;

pub use channel::{LinkBudget, SeriesControl, ShadowedRicianParams};
pub use config::{load_config, SystemConfig, Terminal};
pub use distributions::{CaseProbabilities, Model};
pub use error::{Error, Result};
pub use geometry::{EarthGeometry, GeometryDerived};
pub use montecarlo::{McEstimate, TrialConfig};
pub use optimizer::{OptConstraints, OptResult};
pub use outage::{OutageMethod, OutageResult};
