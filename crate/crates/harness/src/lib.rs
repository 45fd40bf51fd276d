//! Experiment harness: config files, run orchestration, metrics and cost
//! reporting, file outputs, and the command-line interface.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod problem;
pub mod stability_cmd;
pub mod toy;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Config-file problem: carries the offending key and line when known.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] optlab_core::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
