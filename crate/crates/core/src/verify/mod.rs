//! Grid checks of the pedal identities and the report they produce.

pub mod checks;
pub mod config;
pub mod metrics;
pub mod report;

pub use checks::{CheckKind, CheckRecord, RunContext, Status};
pub use config::{ConfigError, GridSpec, RunConfig, SeedSpec, Tolerances};
pub use metrics::PedalMetrics;
pub use report::{run_all, VerificationReport};
