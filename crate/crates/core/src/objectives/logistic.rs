//! Binary logistic regression with an L2 ridge; gradient and
//! Hessian-vector products are analytic (the diagonal-sigmoid Gauss-Newton
//! form *is* the exact Hessian for this loss).

use crate::error::{Error, Result};
use crate::numkit::Vector;
use crate::scalar::Real;

use super::{check_batch, check_dim, Batch, Dataset, Objective};

pub struct LogisticRegression<R> {
    ds: Dataset<R>,
    l2: R,
}

impl<R: Real> LogisticRegression<R> {
    pub fn new(ds: Dataset<R>, l2: R) -> Result<Self> {
        if ds.n_classes() != 2 {
            return Err(Error::invalid(format!(
                "logistic regression requires binary labels, got {} classes",
                ds.n_classes()
            )));
        }
        if l2 < R::zero() {
            return Err(Error::invalid("l2 coefficient must be >= 0"));
        }
        Ok(LogisticRegression { ds, l2 })
    }

    pub fn dataset(&self) -> &Dataset<R> {
        &self.ds
    }

    fn margin(&self, x: &Vector<R>, i: usize) -> R {
        self.ds
            .feature_row(i)
            .iter()
            .zip(x.as_slice())
            .fold(R::zero(), |acc, (&f, &w)| acc + f * w)
    }

    /// Label as +-1.
    fn sign(&self, i: usize) -> R {
        if self.ds.label(i) == 1 {
            R::one()
        } else {
            -R::one()
        }
    }
}

/// Numerically stable ln(1 + e^t).
fn softplus<R: Real>(t: R) -> R {
    if t > R::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid.
fn sigmoid<R: Real>(t: R) -> R {
    if t >= R::zero() {
        R::one() / (R::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (R::one() + e)
    }
}

impl<R: Real> Objective<R> for LogisticRegression<R> {
    fn dim(&self) -> usize {
        self.ds.p()
    }

    fn n_examples(&self) -> usize {
        self.ds.n()
    }

    fn batch_value(&self, x: &Vector<R>, batch: &Batch) -> Result<R> {
        check_dim(x, self.dim(), "logistic value")?;
        check_batch(batch, self.ds.n())?;
        let mut acc = R::zero();
        for &i in batch.indices() {
            acc += softplus(-self.sign(i) * self.margin(x, i));
        }
        let scale = R::of(batch.len() as f64);
        let v = acc / scale + self.l2 * R::of(0.5) * x.dot(x);
        if !v.is_finite() {
            return Err(Error::non_finite("logistic value"));
        }
        Ok(v)
    }

    fn batch_grad(&self, x: &Vector<R>, batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, self.dim(), "logistic grad")?;
        check_batch(batch, self.ds.n())?;
        let mut g = vec![R::zero(); self.dim()];
        let scale = R::one() / R::of(batch.len() as f64);
        for &i in batch.indices() {
            let y = self.sign(i);
            let coeff = -y * sigmoid(-y * self.margin(x, i)) * scale;
            for (gk, &fk) in g.iter_mut().zip(self.ds.feature_row(i)) {
                *gk += coeff * fk;
            }
        }
        let mut g = Vector::from_vec(g);
        g.axpy(self.l2, x);
        if !g.all_finite() {
            return Err(Error::non_finite("logistic gradient"));
        }
        Ok(g)
    }

    fn batch_hvp(&self, x: &Vector<R>, v: &Vector<R>, batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, self.dim(), "logistic hvp")?;
        check_dim(v, self.dim(), "logistic hvp direction")?;
        check_batch(batch, self.ds.n())?;
        let mut hv = vec![R::zero(); self.dim()];
        let scale = R::one() / R::of(batch.len() as f64);
        for &i in batch.indices() {
            let s = sigmoid(self.margin(x, i));
            let curvature = s * (R::one() - s);
            let f_dot_v = self
                .ds
                .feature_row(i)
                .iter()
                .zip(v.as_slice())
                .fold(R::zero(), |acc, (&f, &w)| acc + f * w);
            let coeff = curvature * f_dot_v * scale;
            for (hk, &fk) in hv.iter_mut().zip(self.ds.feature_row(i)) {
                *hk += coeff * fk;
            }
        }
        let mut hv = Vector::from_vec(hv);
        hv.axpy(self.l2, v);
        if !hv.all_finite() {
            return Err(Error::non_finite("logistic hvp"));
        }
        Ok(hv)
    }

    fn accuracy(&self, x: &Vector<R>) -> Option<R> {
        let mut correct = 0usize;
        for i in 0..self.ds.n() {
            let predicted = if self.margin(x, i) > R::zero() { 1 } else { 0 };
            if predicted == self.ds.label(i) {
                correct += 1;
            }
        }
        Some(R::of(correct as f64 / self.ds.n() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngStream;
    use crate::objectives::gaussian_blobs;

    fn four_points() -> Dataset<f64> {
        Dataset::parse_csv("1.0,0.5,1\n-1.0,-0.2,0\n2.0,1.0,1\n-2.0,0.3,0").unwrap()
    }

    #[test]
    fn zero_weights_give_ln_two() {
        let obj = LogisticRegression::new(four_points(), 0.0).unwrap();
        let loss = obj.value(&Vector::zeros(2)).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn ridge_gives_strong_convexity_floor() {
        let l2 = 0.3;
        let obj = LogisticRegression::new(four_points(), l2).unwrap();
        let mut rng = RngStream::new(8);
        for _ in 0..10 {
            let x = Vector::from_fn(2, |_| rng.next_gaussian());
            let v = Vector::from_fn(2, |_| rng.next_gaussian());
            let quad_form = v.dot(&obj.hvp(&x, &v).unwrap());
            assert!(quad_form >= l2 * v.dot(&v) - 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_at_origin() {
        let obj = LogisticRegression::new(four_points(), 0.1).unwrap();
        let x = Vector::zeros(2);
        let g = obj.grad(&x).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * h);
            assert!((g[k] - fd).abs() <= 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn non_binary_labels_rejected() {
        let ds: Dataset<f64> = gaussian_blobs(30, 2, 3, 2.0, &mut RngStream::new(1));
        assert!(LogisticRegression::new(ds, 0.0).is_err());
    }
}
