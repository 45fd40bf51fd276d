//! Dense symmetric matrix (full row-major storage, intended d <= ~200).

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::vector::Vector;

/// Symmetric matrix. The constructor verifies symmetry to a relative
/// tolerance of 1e-12 (in units of the Frobenius norm) and then mirrors the
/// strict upper triangle into the lower one, so the stored entries satisfy
/// `a[i][j] == a[j][i]` exactly. Products of powers of the same matrix then
/// stay symmetric to the last bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat<R> {
    d: usize,
    data: Vec<R>,
}

impl<R: Real> SymMat<R> {
    /// Build from row-major entries, rejecting asymmetry beyond tolerance.
    pub fn new(d: usize, data: Vec<R>) -> Result<Self> {
        assert!(d > 0, "matrices have positive dimension");
        if data.len() != d * d {
            return Err(Error::DimMismatch {
                context: "SymMat::new",
                expected: d * d,
                got: data.len(),
            });
        }
        let scale = frobenius(&data).max(R::of(1.0e-300));
        let tol = R::tol(1e-12) * scale;
        let mut max_dev = R::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                let dev = (data[i * d + j] - data[j * d + i]).abs();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > tol {
            return Err(Error::NotSymmetric {
                detail: format!(
                    "max |a_ij - a_ji| = {max_dev} exceeds {tol} (relative 1e-12)"
                ),
            });
        }
        let mut m = SymMat { d, data };
        m.mirror_upper();
        Ok(m)
    }

    /// Symmetrize `(A + A^T)/2` without a tolerance check; used internally
    /// for products that are symmetric up to rounding.
    fn symmetrized(d: usize, mut data: Vec<R>) -> Self {
        let half = R::of(0.5);
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = (data[i * d + j] + data[j * d + i]) * half;
                data[i * d + j] = avg;
                data[j * d + i] = avg;
            }
        }
        SymMat { d, data }
    }

    fn mirror_upper(&mut self) {
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                self.data[j * self.d + i] = self.data[i * self.d + j];
            }
        }
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d > 0);
        SymMat {
            d,
            data: vec![R::zero(); d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = R::one();
        }
        m
    }

    pub fn from_diag(diag: &[R]) -> Self {
        let d = diag.len();
        let mut m = Self::zeros(d);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * d + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.d + j]
    }

    /// Set `a[i][j]` and `a[j][i]` together.
    pub fn set_sym(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.d + j] = v;
        self.data[j * self.d + i] = v;
    }

    pub fn diag(&self) -> Vector<R> {
        Vector::from_fn(self.d, |i| self.get(i, i))
    }

    pub fn trace(&self) -> R {
        (0..self.d).fold(R::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn frobenius_norm(&self) -> R {
        frobenius(&self.data)
    }

    pub fn matvec(&self, v: &Vector<R>) -> Vector<R> {
        assert_eq!(v.len(), self.d, "matvec: dimension mismatch");
        Vector::from_fn(self.d, |i| {
            let row = &self.data[i * self.d..(i + 1) * self.d];
            row.iter()
                .zip(v.as_slice())
                .fold(R::zero(), |acc, (&a, &x)| acc + a * x)
        })
    }

    /// Product of two symmetric matrices, symmetrized. Only meaningful when
    /// the factors commute (powers of a shared matrix, commuting ensembles);
    /// the result is then symmetric up to rounding.
    pub fn mul_commuting(&self, other: &SymMat<R>) -> SymMat<R> {
        assert_eq!(self.d, other.d, "mul: dimension mismatch");
        let d = self.d;
        let mut out = vec![R::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = R::zero();
                for k in 0..d {
                    acc += self.data[i * d + k] * other.data[k * d + j];
                }
                out[i * d + j] = acc;
            }
        }
        SymMat::symmetrized(d, out)
    }

    /// `k`-th matrix power (k >= 1).
    pub fn pow(&self, k: u32) -> SymMat<R> {
        assert!(k >= 1);
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.mul_commuting(self);
        }
        acc
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: R, other: &SymMat<R>) -> SymMat<R> {
        assert_eq!(self.d, other.d, "add_scaled: dimension mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + c * b)
            .collect();
        SymMat { d: self.d, data }
    }

    pub fn scaled(&self, c: R) -> SymMat<R> {
        SymMat {
            d: self.d,
            data: self.data.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn sub(&self, other: &SymMat<R>) -> SymMat<R> {
        self.add_scaled(-R::one(), other)
    }

    /// Random symmetric matrix with i.i.d. Gaussian entries on and above
    /// the diagonal.
    pub fn random_gaussian(d: usize, rng: &mut super::RngStream) -> SymMat<R> {
        let mut m = SymMat::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set_sym(i, j, R::of(rng.next_gaussian()));
            }
        }
        m
    }

    /// Random symmetric positive definite matrix with eigenvalues
    /// log-spaced in `[scale, scale * cond]` (condition number exactly
    /// `cond` for `d >= 2`) in a random orthonormal eigenbasis.
    pub fn random_spd(d: usize, cond: f64, scale: R, rng: &mut super::RngStream) -> SymMat<R> {
        assert!(cond >= 1.0 && scale > R::zero());
        let basis = super::jacobi_eigs(&Self::random_gaussian(d, rng)).vectors;
        let spectrum: Vec<R> = (0..d)
            .map(|i| {
                let frac = if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 };
                scale * R::of(cond.powf(frac))
            })
            .collect();
        SymMat::from_eigen(&basis, &spectrum)
    }

    /// Congruence product `V diag(w) V^T` from an eigenbasis; used to build
    /// commuting ensembles and random test matrices.
    pub fn from_eigen(basis: &[Vector<R>], spectrum: &[R]) -> SymMat<R> {
        let d = spectrum.len();
        assert_eq!(basis.len(), d);
        let mut data = vec![R::zero(); d * d];
        for (vec, &lam) in basis.iter().zip(spectrum) {
            assert_eq!(vec.len(), d);
            for i in 0..d {
                for j in 0..d {
                    data[i * d + j] += lam * vec[i] * vec[j];
                }
            }
        }
        SymMat::symmetrized(d, data)
    }
}

fn frobenius<R: Real>(data: &[R]) -> R {
    data.iter()
        .fold(R::zero(), |acc, &x| acc + x * x)
        .sqrt()
}
