//! Eigen-routines: cyclic Jacobi sweeps for the full spectrum of a dense
//! symmetric matrix, and power iteration for the dominant eigenvalue of an
//! operator given only through matrix-vector products.

use crate::error::Result;
use crate::scalar::Real;

use super::rng::RngStream;
use super::symmat::SymMat;
use super::vector::Vector;

/// Full eigendecomposition `A = V diag(values) V^T` with eigenvalues sorted
/// descending and orthonormal eigenvectors as columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigDecomposition<R> {
    pub values: Vec<R>,
    /// `vectors[k]` is the eigenvector paired with `values[k]`.
    pub vectors: Vec<Vector<R>>,
}

impl<R: Real> EigDecomposition<R> {
    /// Rebuild `V diag(values) V^T`; used by reconstruction tests.
    pub fn reconstruct(&self) -> SymMat<R> {
        SymMat::from_eigen(&self.vectors, &self.values)
    }

    /// Largest eigenvalue (the spectrum is sorted descending).
    pub fn lambda_max(&self) -> R {
        self.values[0]
    }

    /// Eigenvalue of largest magnitude, sign preserved.
    pub fn dominant(&self) -> R {
        self.values
            .iter()
            .copied()
            .fold(R::zero(), |best, v| if v.abs() > best.abs() { v } else { best })
    }
}

/// Cyclic-by-row Jacobi rotations. Convergence is declared when the
/// off-diagonal Frobenius norm drops below 1e-12 times the Frobenius norm
/// of the input; the sweep count is capped at 64, far more than dense
/// matrices of dimension <= 200 require.
pub fn jacobi_eigs<R: Real>(m: &SymMat<R>) -> EigDecomposition<R> {
    let d = m.dim();
    let mut a: Vec<Vec<R>> = (0..d)
        .map(|i| (0..d).map(|j| m.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<R>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { R::one() } else { R::zero() })
                .collect()
        })
        .collect();

    let scale = m.frobenius_norm();
    let threshold = R::tol(1e-12) * scale;

    for _sweep in 0..64 {
        let mut off = R::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[i][j] * a[i][j];
            }
        }
        let off = (off + off).sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p][q];
                if apq == R::zero() {
                    continue;
                }
                // Rotation angle that annihilates a[p][q].
                let theta = (a[q][q] - a[p][p]) / (R::of(2.0) * apq);
                let t = {
                    let sign = if theta >= R::zero() { R::one() } else { -R::one() };
                    sign / (theta.abs() + (R::one() + theta * theta).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = t * c;
                let tau = s / (R::one() + c);

                let app = a[p][p];
                let aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = R::zero();
                a[q][p] = R::zero();
                for k in 0..d {
                    if k != p && k != q {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        let new_p = akp - s * (akq + tau * akp);
                        let new_q = akq + s * (akp - tau * akq);
                        a[k][p] = new_p;
                        a[p][k] = new_p;
                        a[k][q] = new_q;
                        a[q][k] = new_q;
                    }
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = vp - s * (vq + tau * vp);
                    row[q] = vq + s * (vp - tau * vq);
                }
            }
        }
    }

    let mut pairs: Vec<(R, Vector<R>)> = (0..d)
        .map(|k| (a[k][k], Vector::from_fn(d, |i| v[i][k])))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite eigenvalues"));
    let (values, vectors) = pairs.into_iter().unzip();
    EigDecomposition { values, vectors }
}

/// Result of a power iteration run.
#[derive(Clone, Debug)]
pub struct PowerIteration<R> {
    /// Rayleigh quotient of the final iterate; sign preserved, so a dominant
    /// negative eigenvalue is reported negative.
    pub value: R,
    /// Final unit-norm iterate.
    pub vector: Vector<R>,
    pub converged: bool,
    pub iterations: usize,
}

/// Fixed seed for the deterministic pseudo-random start vector; pinned so
/// repeated calls return bit-identical results.
const POWER_ITERATION_SEED: u64 = 0x01ab_5073_a27f_11e5;

/// Dominant-by-magnitude eigenvalue of a self-adjoint linear operator.
///
/// Convergence is declared when successive Rayleigh quotients differ by
/// less than `tol` relatively. A zero operator returns value 0 with the
/// non-converged flag set; running out of iterations reports the last
/// Rayleigh quotient, also flagged.
pub fn power_iteration<R: Real>(
    mut apply: impl FnMut(&Vector<R>) -> Result<Vector<R>>,
    d: usize,
    max_iters: usize,
    tol: R,
) -> Result<PowerIteration<R>> {
    assert!(max_iters >= 1, "power_iteration requires max_iters >= 1");
    let mut rng = RngStream::new(POWER_ITERATION_SEED);
    let mut v: Vector<R> = super::unit_sphere_direction(&mut rng, d);
    let mut lambda = R::zero();
    let tiny = R::of(1e-300);

    for iter in 1..=max_iters {
        let w = apply(&v)?;
        let rayleigh = v.dot(&w);
        let norm = w.norm2();
        if norm < tiny {
            return Ok(PowerIteration {
                value: R::zero(),
                vector: v,
                converged: false,
                iterations: iter,
            });
        }
        let next = w.scaled(R::one() / norm);
        let denom = rayleigh.abs().max(R::one());
        if iter > 1 && (rayleigh - lambda).abs() / denom < tol {
            return Ok(PowerIteration {
                value: rayleigh,
                vector: next,
                converged: true,
                iterations: iter,
            });
        }
        lambda = rayleigh;
        v = next;
    }

    Ok(PowerIteration {
        value: lambda,
        vector: v,
        converged: false,
        iterations: max_iters,
    })
}
