//! Scalar abstraction: the numerical code is generic over `f32`/`f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
///
/// `of` converts literal constants; tolerances written as `f64` literals are
/// mapped into the working precision at the call site.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    /// Symmetry/convergence thresholds that are meaningful in `f64` get
    /// clamped to a few ulps when the working precision is coarser.
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::of(8.0);
        Self::of(x).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}
