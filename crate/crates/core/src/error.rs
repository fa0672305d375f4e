use num_complex::Complex64;
use thiserror::Error;

use crate::problem::ValidationReport;

/// Errors raised by the numerical routines and file front ends.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid problem:\n{0}")]
    InvalidProblem(ValidationReport),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size underflow at x = {x} (lambda = {lambda})")]
    StepUnderflow { x: f64, lambda: Complex64 },

    #[error("too many integration steps at x = {x} (lambda = {lambda})")]
    TooManySteps { x: f64, lambda: Complex64 },

    #[error("near-singular resolvent at lambda = {lambda}: {detail}")]
    NearSingular { lambda: Complex64, detail: String },

    #[error("contour passes through a zero of the characteristic determinant after {attempts} perturbations")]
    ContourThroughZero { attempts: usize },

    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("pathological clustering: subdivision depth exceeded {0}")]
    PathologicalClustering(usize),

    #[error("inconsistent multiplicity: {0}")]
    Inconsistency(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("closed form not applicable: {0}")]
    OracleRoute(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
