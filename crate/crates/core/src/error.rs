use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Variant;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list is empty")]
    EmptyGraph,

    #[error("{variant} index {index} is not part of the graph")]
    UnknownElement { variant: Variant, index: usize },

    #[error("unknown vertex or edge `{0}`")]
    UnknownToken(String),

    #[error("expected a {expected} element or weighting, got {found}")]
    VariantMismatch { expected: Variant, found: Variant },

    #[error("invalid weight range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("weight {value} outside [{lo}, {hi}]")]
    WeightOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("non-finite weight {value}")]
    NonFiniteWeight { value: f64 },

    #[error("neighbor {index} has no training weight")]
    MissingWeight { index: usize },

    #[error("prediction for `{element}` has no ground truth")]
    MissingTruth { element: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training set is empty")]
    EmptyTraining,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("requested {requested} items but only {available} are available")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("metric inputs are empty")]
    EmptyInput,

    #[error("predictions and truths differ in length ({predictions} vs {truths})")]
    LengthMismatch { predictions: usize, truths: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("invalid snapshot: {0}")]
    Snapshot(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Input,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::VariantMismatch { .. } => ErrorClass::Usage,
            Error::Numeric(_) | Error::NonFiniteWeight { .. } => ErrorClass::Numeric,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Input,
        }
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
