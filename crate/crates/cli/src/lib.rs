//! Configuration, family caching, pipelines and the verification suite behind
//! the `compdiv` command.

pub mod config;
pub mod families;
pub mod run;
pub mod verify;

pub use config::ExperimentConfig;
pub use families::FamilyStore;
pub use run::{run, RunReport};
pub use verify::{verify_suite, CheckStatus, VerifyReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] compdiv_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Json(_) => 2,
            Self::Io(_) => 3,
            Self::Core(_) => 4,
        }
    }
}

/// Extended real as JSON: a number, or `{"inf": true}` for +∞.
pub fn ext_json(x: f64) -> serde_json::Value {
    if x.is_infinite() {
        serde_json::json!({ "inf": x > 0.0 })
    } else {
        serde_json::json!(x)
    }
}
