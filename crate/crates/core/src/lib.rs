//! Forecast scores, skill scores and simultaneous bootstrap confidence bands.
//!
//! The crate covers the whole path from forecasts to uncertainty statements
//! about vectors of skill scores:
//!
//! * [`scoring`]: squared error, quantile score, ensemble CRPS and energy score;
//! * [`panel`]: score panels, average scores and the skill-score map;
//! * [`bands`]: moving block bootstrap and pointwise, Bonferroni and sup-t bands;
//! * [`asymptotics`]: large-sample widths and coverages under equicorrelation;
//! * [`simulation`]: VAR(1) score processes and coverage experiments;
//! * [`io`]: tidy CSV panel and forecast files and result tables.

pub mod asymptotics;
pub mod bands;
mod error;
pub mod io;
pub mod normal;
pub mod panel;
pub mod rng;
pub mod scoring;
pub mod simulation;

pub use bands::{band_report, bootstrap_bands, BandConfig, BandResult, BandType};
pub use error::{Error, Result};
pub use normal::{normal_cdf, normal_quantile};
pub use panel::{ComparisonSelector, DimensionSpec, ScorePanel, Target};
