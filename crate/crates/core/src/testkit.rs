//! Independent oracles for the test suites: central finite differences of
//! objective values and gradients. Nothing here is used by any production
//! code path, so agreement between these oracles and the analytic/tape
//! derivatives is a genuine cross-check.

use crate::error::Result;
use crate::numkit::Vector;
use crate::objectives::Objective;
use crate::scalar::Real;

/// Central-difference gradient of the full-batch value,
/// `(f(x + h e_k) - f(x - h e_k)) / 2h` per coordinate.
pub fn fd_grad<R: Real>(obj: &dyn Objective<R>, x: &Vector<R>, h: R) -> Result<Vector<R>> {
    let mut g = Vector::zeros(x.len());
    let mut xp = x.clone();
    let mut xm = x.clone();
    for k in 0..x.len() {
        let orig = x[k];
        xp[k] = orig + h;
        xm[k] = orig - h;
        g[k] = (obj.value(&xp)? - obj.value(&xm)?) / (R::of(2.0) * h);
        xp[k] = orig;
        xm[k] = orig;
    }
    Ok(g)
}

/// Central-difference Hessian-vector product,
/// `(grad(x + h v) - grad(x - h v)) / 2h`.
pub fn fd_hvp<R: Real>(
    obj: &dyn Objective<R>,
    x: &Vector<R>,
    v: &Vector<R>,
    h: R,
) -> Result<Vector<R>> {
    let mut xp = x.clone();
    xp.axpy(h, v);
    let mut xm = x.clone();
    xm.axpy(-h, v);
    let gp = obj.grad(&xp)?;
    let gm = obj.grad(&xm)?;
    Ok(gp.sub(&gm).scaled(R::one() / (R::of(2.0) * h)))
}
