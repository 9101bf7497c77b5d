//! Configuration loading, seeded parallel experiments, CSV/JSON/SVG output
//! and batched verification suites for the `hdgame` library.

pub mod config;
pub mod error;
pub mod experiment;
mod svg;
pub mod verify;

pub use config::{config_for, parse_config, resolve_value, ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use experiment::{
    run_experiment, simulate, summarize, write_csv, ExperimentOutput, Summary, Verdict,
};
pub use verify::{run_verifications, Scope, VerificationReport, VerifyOptions};
