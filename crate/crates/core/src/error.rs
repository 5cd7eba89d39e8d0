//! Error type shared by every module of the crate.

use std::fmt;
use thiserror::Error;

/// Which generalized-kinetic condition a candidate field failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticFlag {
    Gap,
    Sign,
    Bound,
    Monotone,
    Jump,
}

impl fmt::Display for KineticFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KineticFlag::Gap => "gap",
            KineticFlag::Sign => "sign",
            KineticFlag::Bound => "bound",
            KineticFlag::Monotone => "monotonicity",
            KineticFlag::Jump => "jump",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state {value} at cell {cell} lies outside [-{bound}, {bound}]")]
    StateOutOfRange { value: f64, bound: f64, cell: usize },

    #[error("not a kinetic function: {flag} condition violated")]
    NotAKineticFunction { flag: KineticFlag },

    #[error("resolution insufficient: {0}")]
    ResolutionInsufficient(String),

    #[error("time step underflow at t = {t} after {halvings} halvings")]
    StepSizeUnderflow { t: f64, halvings: u32 },

    #[error("domain too small: support within {cells} cells of the {side} boundary at t = {t}")]
    DomainTooSmall { t: f64, side: &'static str, cells: usize },

    #[error("defect measure undefined for a trajectory with zero viscosity")]
    DefectUndefined,

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("scheme monotonicity violated: value {min} at t = {t}")]
    SchemeMonotonicityViolation { min: f64, t: f64 },

    #[error("path {path} (seed {seed}) failed: {source}")]
    PathFailed {
        path: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
