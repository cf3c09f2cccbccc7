//! Hyperparameter search and ranking of finished runs.

pub mod acquisition;
pub mod encoding;
mod ranking;
mod search;
pub mod surrogate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use acquisition::expected_improvement;
pub use encoding::{decode_point, encode_config, EncodedPoint, ENCODED_DIM};
pub use ranking::{rank_runs, RankedRun, Scope};
pub use search::{
    grid_configs, propose_next, run_search, search, Evaluator, Observation, RunOutcome, SearchOutcome,
    TrainingEvaluator, CANDIDATE_COUNT, COLD_START, GRID_EPOCHS,
};
pub use surrogate::GaussianProcess;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("surrogate failure: {0}")]
    SurrogateFailure(String),
    #[error("every candidate configuration has already been evaluated")]
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// GP surrogate with expected improvement after a random cold start.
    Bayesian,
    Random,
    /// Fixed lattice over the categorical dimensions.
    Grid,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Bayesian, Strategy::Random, Strategy::Grid];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bayesian => "bayesian",
            Strategy::Random => "random",
            Strategy::Grid => "grid",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            SearchError::Validation(format!("unknown strategy {s:?}, expected bayesian, random or grid"))
        })
    }
}
