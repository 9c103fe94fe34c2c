//! Joint sparse recovery of a transform-sparse signal and observation-sparse
//! impulsive noise by iterative thresholding.
//!
//! The observation model is `Y = 𝒟⁻¹(X) + N`, where `𝒟` is the orthonormal
//! 2-D DCT, `X` has few nonzero coefficients and `N` has few nonzero
//! entries. One-dimensional signals are `m×1` matrices.
//!
//! The core is generic over [`Scalar`] (implemented for `f32` and `f64`);
//! the aliases below fix the scalar to `f64` (and `f32` where useful).

// `!(a < b)` rejects NaN along with the out-of-order case; that is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod metrics;
pub mod noise;
pub mod params;
pub mod scalar;
pub mod solver;
pub mod transforms;

pub use error::{IdtError, Result};
pub use noise::{CorruptedInstance, NoiseKind, NoiseSpec, SyntheticPair};
pub use params::{estimate_params, AlphaRule, ParamEstimate};
pub use scalar::Scalar;
pub use solver::{idt, modified_idt, IterationRecord, RecoveryResult, SolverConfig, SparsePair};
pub use transforms::{DctPlan, SignalMatrix};

pub type Matrix = SignalMatrix<f64>;
pub type Matrix32 = SignalMatrix<f32>;
pub type Plan = DctPlan<f64>;
pub type Plan32 = DctPlan<f32>;
pub type Config = SolverConfig<f64>;
pub type Config32 = SolverConfig<f32>;
pub type Recovery = RecoveryResult<f64>;
pub type Recovery32 = RecoveryResult<f32>;
pub type Pair = SparsePair<f64>;
