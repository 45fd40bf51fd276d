//! Desk-scale numerical optimization laboratory.
//!
//! The crate bundles everything needed to study sharpness-aware second-order
//! optimizers on small, fully reproducible problems:
//!
//! - [`numkit`]: dense symmetric linear algebra, seeded randomness, and
//!   eigen-routines (Jacobi sweeps, power iteration).
//! - [`autodiff`]: a scalar tape with reverse-mode gradients and exact
//!   Hessian-vector products via forward-over-reverse dual numbers.
//! - [`objectives`]: the problem suite (quadratics, a two-basin Gaussian
//!   mixture landscape, logistic regression, one-hidden-layer MLPs) with
//!   batching, CSV ingestion, and label-noise injection.
//! - [`estimators`]: Hutchinson-type estimators for the Hessian diagonal
//!   and trace.
//! - [`optimizers`]: the update rules (`sassha`, `msassha`, SAM over
//!   SGD/AdamW, AdaHessian, Sophia-H, AdamW, SGD-momentum) with learning
//!   rate / perturbation radius schedules and exact gradient/HVP accounting.
//! - [`sharpness`]: the sharpness metric suite and the local Hessian
//!   sensitivity probe.
//! - [`stability`]: moment matrices, the linear-stability matrix and its
//!   necessary conditions, plus Monte-Carlo simulation of the linearized
//!   dynamics on stochastic quadratic ensembles.
//!
//! All numerical code is generic over the scalar type through [`Real`];
//! concrete `f64` aliases are exported at the crate root (`Vec64`,
//! `SymMat64`, ...). Every random quantity flows through
//! [`numkit::RngStream`], so equal seeds give bit-identical runs.

pub mod autodiff;
pub mod error;
pub mod estimators;
pub mod numkit;
pub mod objectives;
pub mod optimizers;
pub mod scalar;
pub mod sharpness;
pub mod stability;
pub mod testkit;

pub use error::{Error, Result};
pub use scalar::Real;

/// Flat dense parameter/gradient vector over `f64`.
pub type Vec64 = numkit::Vector<f64>;
/// Dense symmetric matrix over `f64`.
pub type SymMat64 = numkit::SymMat<f64>;
/// Scalar autodiff tape over `f64`.
pub type Tape64 = autodiff::Tape<f64>;
/// Single-precision counterparts for callers that trade accuracy for memory.
pub type Vec32 = numkit::Vector<f32>;
pub type SymMat32 = numkit::SymMat<f32>;
