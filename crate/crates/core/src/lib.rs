//! Sparse recovery and second-order pruning built around the iterative
//! optimal brain surgeon (I-OBS) family.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! benchmark harness and the command line tool use.

// Input checks are written as `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod numerics;
pub mod objectives;
pub mod pruner;
pub mod scalar;
pub mod solvers;
pub mod sparsity;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense row-major `f64` matrix.
pub type Matrix = numerics::DenseMatrix<f64>;
/// Dense `f64` vector.
pub type Vector = numerics::DenseVector<f64>;
/// Cholesky factor of a damped `f64` SPD matrix.
pub type Factor = numerics::SpdFactor<f64>;
/// Least-squares objective over `f64`.
pub type LeastSquares = objectives::LeastSquaresObjective<f64>;
/// Quadratic objective over `f64`.
pub type Quadratic = objectives::QuadraticObjective<f64>;
/// Solver configuration over `f64`.
pub type Config = solvers::SolverConfig<f64>;
/// Solver state over `f64`.
pub type State = solvers::SolverState<f64>;
/// Layerwise pruning problem over `f64`.
pub type Layer = pruner::LayerProblem<f64>;
/// Small feedforward network over `f64`.
pub type Mlp = pruner::TinyMlp<f64>;
