//! Proximal-gradient solvers for sparse logistic regression.
//!
//! The crate covers the full pipeline: loading data ([`dataset`]), the smooth
//! logistic loss and its Lipschitz constant ([`logistic`]), convex and
//! nonconvex regularizers with their proximal maps ([`penalty`]), the
//! ISTA/FISTA solver family ([`solver`]), and regularization paths with
//! cross-validation ([`path`]). The [`cli`] module backs the `proxlogit`
//! binary.
//!
//! Samples are stored as the *columns* of a `d × n` feature matrix and labels
//! are canonicalized to `{0, 1}`.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod logistic;
pub mod path;
pub mod penalty;
pub mod solver;

pub use dataset::{Dataset, SyntheticSpec};
pub use error::{Error, Result};
pub use logistic::LipschitzEstimate;
pub use path::{CvCell, CvReport, PathPoint, PathSpec};
pub use penalty::{Penalty, PenaltyKind};
pub use solver::{FitResult, InitialStep, SolverOptions, StartPoint, Trace, TraceRecord, Variant};

/// Threshold below which a coefficient is counted as zero.
pub const NONZERO_THRESHOLD: f64 = 1e-10;

pub(crate) fn count_nonzero(beta: &ndarray::Array1<f64>) -> usize {
    beta.iter().filter(|b| b.abs() > NONZERO_THRESHOLD).count()
}
