//! Deterministic quadratic `f(x) = x^T H x / 2 + b^T x` with analytic
//! derivatives; the workhorse for convergence and stability checks.

use crate::error::{Error, Result};
use crate::numkit::{SymMat, Vector};
use crate::scalar::Real;

use super::{check_dim, Batch, Objective};

#[derive(Clone, Debug)]
pub struct QuadraticObjective<R> {
    h: SymMat<R>,
    b: Vector<R>,
}

impl<R: Real> QuadraticObjective<R> {
    pub fn new(h: SymMat<R>, b: Vector<R>) -> Result<Self> {
        if b.len() != h.dim() {
            return Err(Error::DimMismatch {
                context: "quadratic objective",
                expected: h.dim(),
                got: b.len(),
            });
        }
        Ok(QuadraticObjective { h, b })
    }

    pub fn hessian(&self) -> &SymMat<R> {
        &self.h
    }
}

impl<R: Real> Objective<R> for QuadraticObjective<R> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn n_examples(&self) -> usize {
        1
    }

    fn batch_value(&self, x: &Vector<R>, _batch: &Batch) -> Result<R> {
        check_dim(x, self.dim(), "quadratic value")?;
        let v = x.dot(&self.h.matvec(x)) * R::of(0.5) + self.b.dot(x);
        if !v.is_finite() {
            return Err(Error::non_finite("quadratic value"));
        }
        Ok(v)
    }

    fn batch_grad(&self, x: &Vector<R>, _batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, self.dim(), "quadratic grad")?;
        let g = self.h.matvec(x).add(&self.b);
        if !g.all_finite() {
            return Err(Error::non_finite("quadratic gradient"));
        }
        Ok(g)
    }

    fn batch_hvp(&self, x: &Vector<R>, v: &Vector<R>, _batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, self.dim(), "quadratic hvp")?;
        check_dim(v, self.dim(), "quadratic hvp direction")?;
        let hv = self.h.matvec(v);
        if !hv.all_finite() {
            return Err(Error::non_finite("quadratic hvp"));
        }
        Ok(hv)
    }
}
