// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] arrtime_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for diagnostic outcomes, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(arrtime_core::Error::InconclusiveClassification { .. })
            | CliError::Core(arrtime_core::Error::NegativeMomentumLeak(_)) => 2,
            _ => 1,
        }
    }
}
