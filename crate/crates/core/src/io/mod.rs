// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Setup documents, the fixture library, detection logs and Bell tests.

mod chsh;
pub mod fixtures;
mod log;
mod setup;

use thiserror::Error;

use crate::engine::EngineError;

pub use chsh::{chsh_exact, chsh_sampled, ChshEstimate, ChshPorts, LOCAL_BOUND, TSIRELSON_BOUND};
pub use log::{detection_csv, DetectionLog, DetectionRow};
pub use setup::{
    parse_setup, serialize_setup, Goal, GoalResult, SetupDocument, SETUP_FORMAT_VERSION,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("setup parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported setup version {0}")]
    Version(u32),
    #[error("invalid setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}
