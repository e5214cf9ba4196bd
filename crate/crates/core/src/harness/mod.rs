//! Experiment driver: conditional risk under known posteriors, sweeps over
//! the training size, log-log rate fits, the exact decomposition check and
//! the command-line front end.

pub mod cli;
pub mod config;
pub mod decomposition;
pub mod risk;
pub mod schedule;
pub mod seeds;
pub mod slope;
pub mod sweep;
pub mod verify;

pub use config::{Augmentation, ClassifierKind, DeltaSetting, Experiment, ExperimentConfig};
pub use decomposition::{verify_decomposition, DecompositionReport, FiniteRule};
pub use risk::{conditional_risk, BayesClassifier, ConstantClassifier, RiskEstimate};
pub use schedule::{snap_ceil, snap_floor, Schedule};
pub use seeds::{derive_seed, Stream};
pub use slope::{fit_log_slope, fit_log_slope_points, SlopeFit};
pub use sweep::{rate_sweep, rate_sweep_config, thread_count, GridPoint, RiskReport, Summary, TrialRow};
