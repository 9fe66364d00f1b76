//! Numerical study of equivalent norms on R^d built to make nearest point
//! maps onto compact convex sets badly behaved.
//!
//! The pipeline has four stages:
//!
//! 1. [`geometry`]: points, functionals, the base Euclidean norm, and the
//!    quadratic convexity functional used to certify strict convexity.
//! 2. [`blueprint`]: a single "blueprint" gauge. Its unit ball is the
//!    Euclidean ball with two symmetric caps sliced off and two carefully
//!    placed vertex pairs glued back on, which produces a flat face of the
//!    sphere inside each slice.
//! 3. [`renorming`]: a truncated scheme of blueprint gauges on disjoint
//!    coordinate slices, each blended quadratically with the Euclidean norm
//!    (so every term is strictly convex), then combined by a max into one
//!    composite norm.
//! 4. [`projection`] and [`experiment`]: nearest point maps onto segments and
//!    polytopes under any of these norms, plus the separation experiments
//!    that measure how far apart the projections of two nearby witness
//!    points land.
//!
//! Every solver in the crate is deterministic: samplers pre-generate their
//! streams from explicit seeds and the line searches are derivative-free
//! with fixed budgets, so equal inputs give byte-identical reports.

pub mod blueprint;
pub mod experiment;
pub mod geometry;
mod linalg;
pub mod projection;
pub mod renorming;
pub mod sampling;
pub mod solver;

pub use blueprint::{lemma_sweep, AlphaTuple, BlueprintNorm, DerivedPoints, HyperplanePair};
pub use experiment::{
    theorem22_check, theorem31_run, ExperimentRun, LadderRow, Theorem22Report, TheoremOptions,
};
pub use geometry::{EuclideanGauge, Functional, Gauge, Point, ToleranceConfig};
pub use projection::{
    modulus_scan, nearest_point, CompactConvexSet, ModulusReport, ProjectionOptions,
    ProjectionResult,
};
pub use renorming::{CompositeNorm, LurNorm, SchemeConfig, TermId};

/// Crate-wide error type. Constraint violations carry the name of the failed
/// invariant so callers (and the CLI) can report exactly what was rejected.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right} ({context})")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },
    #[error("non-finite entry at index {index} ({context})")]
    NonFinite { index: usize, context: &'static str },
    #[error("constraint violated: {name} ({detail})")]
    Constraint { name: &'static str, detail: String },
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn constraint(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Constraint {
            name,
            detail: detail.into(),
        }
    }
}
