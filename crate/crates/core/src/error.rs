use serde::Serialize;
use thiserror::Error;

use crate::mra::{MraSolution, PairSolution};

/// Per-rank outcome of a failed minimum-rank synthesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankAttempt {
    pub q: usize,
    pub best_residual: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("no configuration satisfies the constraints: {0}")]
    NoSolution(String),

    /// The search budget ran out before optimality could be certified. The
    /// carried solution has `complete == false` and holds the best configurations
    /// known when the search stopped.
    #[error(
        "search budget exhausted after {} nodes (best known aperture {}, no aperture above {})",
        .0.stats.nodes, .0.aperture, .0.aperture_upper_bound
    )]
    PartialResult(Box<MraSolution>),

    #[error(
        "search budget exhausted after {} nodes (best contiguous co-array so far {})",
        .0.stats.nodes, .0.h
    )]
    PartialPairResult(Box<PairSolution>),

    #[error("synthesis failed: no rank up to {max_q} reached tolerance {tol:e}")]
    SynthesisFailure {
        tol: f64,
        max_q: usize,
        attempts: Vec<RankAttempt>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
