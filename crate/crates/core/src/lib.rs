//! Largest subharmonic minorants for plurisubharmonic-type subequations on
//! lattice domains in `ℂⁿ` (`n ≤ 2`), with the exhaustion-based strict
//! approximation pipeline, strictification and hulls built on top of them.
//!
//! Everything numerical is generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix `f64`.

pub mod approx;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod hull;
pub mod jet;
pub mod linalg;
pub mod pointwise;
pub mod scalar;

pub use error::{Error, Result};
pub use pointwise::Pointwise;
pub use scalar::Scalar;

pub type Jet = jet::Jet2<f64>;
pub type Spec = jet::SubequationSpec<f64>;
pub type Matrix = linalg::Mat<f64>;
pub type Lattice = grid::Grid<f64>;
pub type Field = grid::GridField<f64>;
pub type Problem = envelope::EnvelopeProblem<f64>;
pub type Params = envelope::SolverParams<f64>;
pub type Solution = envelope::EnvelopeSolution<f64>;
pub type Run = approx::ApproximationRun<f64>;
