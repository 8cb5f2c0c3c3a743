//! Batch experiment runner for the NFDM simulator: configuration, power
//! sweeps with Monte Carlo error counting, semianalytic bounds, the
//! causality demonstration and a self-test.

pub mod bounds;
pub mod causality;
pub mod config;
pub mod report;
pub mod selftest;
pub mod sweep;

pub use bounds::{run_bounds, BoundsRow};
pub use causality::{causality_pair, demo_causality, CausalityDemo};
pub use config::{ChannelKind, ConfigError, DetectorKind, ExperimentConfig};
pub use report::ResultRow;
pub use selftest::{run_selftest, Fault, SuiteResult};
pub use sweep::{run_sweep, OperatingPoint};
