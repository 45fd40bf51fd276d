//! Hutchinson-type stochastic estimators for the Hessian diagonal and
//! trace: Rademacher probes `z` turned into `z ⊙ (Hz)` and `zᵀHz`
//! averages. Unbiased; exact in a single sample when `H` is diagonal.

use crate::error::{Error, Result};
use crate::numkit::{rademacher, RngStream, Vector};
use crate::scalar::Real;

/// Estimated `diag(H)` together with its sampling cost.
#[derive(Clone, Debug)]
pub struct DiagEstimate<R> {
    pub values: Vector<R>,
    pub n_samples: usize,
    /// Exactly one operator application per probe.
    pub hvp_count: u64,
}

/// `(1/n) Σ_j z_j ⊙ (H z_j)` over Rademacher probes drawn from the stream.
pub fn hutchinson_diag<R: Real>(
    mut apply: impl FnMut(&Vector<R>) -> Result<Vector<R>>,
    d: usize,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<DiagEstimate<R>> {
    if n_samples == 0 {
        return Err(Error::invalid("hutchinson_diag requires n_samples >= 1"));
    }
    let mut acc = Vector::zeros(d);
    for _ in 0..n_samples {
        let z: Vector<R> = rademacher(rng, d);
        let hz = apply(&z)?;
        if hz.len() != d {
            return Err(Error::DimMismatch {
                context: "hutchinson operator output",
                expected: d,
                got: hz.len(),
            });
        }
        for i in 0..d {
            acc[i] += z[i] * hz[i];
        }
    }
    let values = acc.scaled(R::one() / R::of(n_samples as f64));
    if !values.all_finite() {
        return Err(Error::non_finite("hutchinson diagonal estimate"));
    }
    Ok(DiagEstimate {
        values,
        n_samples,
        hvp_count: n_samples as u64,
    })
}

/// `(1/n) Σ_j z_jᵀ (H z_j)`, unbiased for `tr(H)`.
pub fn hutchinson_trace<R: Real>(
    mut apply: impl FnMut(&Vector<R>) -> Result<Vector<R>>,
    d: usize,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<R> {
    if n_samples == 0 {
        return Err(Error::invalid("hutchinson_trace requires n_samples >= 1"));
    }
    let mut acc = R::zero();
    for _ in 0..n_samples {
        let z: Vector<R> = rademacher(rng, d);
        let hz = apply(&z)?;
        acc += z.dot(&hz);
    }
    let t = acc / R::of(n_samples as f64);
    if !t.is_finite() {
        return Err(Error::non_finite("hutchinson trace estimate"));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SymMat;

    fn op(m: SymMat<f64>) -> impl FnMut(&Vector<f64>) -> Result<Vector<f64>> {
        move |v| Ok(m.matvec(v))
    }

    /// Test-side oracle: average over all 2^d sign vectors.
    fn enumerate_diag(m: &SymMat<f64>) -> Vector<f64> {
        let d = m.dim();
        let mut acc = Vector::zeros(d);
        for bits in 0..(1u32 << d) {
            let z = Vector::from_fn(d, |i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 });
            let hz = m.matvec(&z);
            for i in 0..d {
                acc[i] += z[i] * hz[i];
            }
        }
        acc.scaled(1.0 / (1u32 << d) as f64)
    }

    #[test]
    fn diagonal_matrix_is_exact_with_one_sample() {
        let m = SymMat::from_diag(&[2.0, -3.0]);
        let est = hutchinson_diag(op(m), 2, 1, &mut RngStream::new(1)).unwrap();
        assert_eq!(est.values.as_slice(), &[2.0, -3.0]);
        assert_eq!(est.hvp_count, 1);
    }

    #[test]
    fn full_enumeration_recovers_diagonal() {
        let m = SymMat::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let avg = enumerate_diag(&m);
        assert_eq!(avg.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn zero_samples_is_a_contract_error() {
        let m = SymMat::<f64>::identity(2);
        assert!(hutchinson_diag(op(m.clone()), 2, 0, &mut RngStream::new(1)).is_err());
        assert!(hutchinson_trace(op(m), 2, 0, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn identity_trace_is_exact_for_any_probe() {
        let t = hutchinson_trace(op(SymMat::identity(3)), 3, 1, &mut RngStream::new(5)).unwrap();
        assert_eq!(t, 3.0);
    }

    #[test]
    fn zero_operator_trace_is_zero() {
        let t = hutchinson_trace(op(SymMat::zeros(4)), 4, 7, &mut RngStream::new(5)).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn off_diagonals_cancel_under_enumeration() {
        let m = SymMat::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let mut acc = 0.0;
        for bits in 0..4u32 {
            let z = Vector::from_fn(2, |i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 });
            acc += z.dot(&m.matvec(&z));
        }
        assert_eq!(acc / 4.0, 4.0);
    }

    #[test]
    fn standard_error_scales_as_inverse_sqrt_n() {
        // Empirical std error of the diagonal estimate over repeated runs
        // should drop like 1/sqrt(n) within a factor of 2.
        let d = 10;
        let mut rng = RngStream::new(33);
        let mut m = SymMat::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set_sym(i, j, rng.next_gaussian());
            }
        }
        let truth = m.diag();
        let reps = 60;
        let mut ses = Vec::new();
        for &n in &[10usize, 100, 1000] {
            let mut total_sq = 0.0;
            for rep in 0..reps {
                let mut stream = RngStream::new(1000 + rep);
                let est = hutchinson_diag(op(m.clone()), d, n, &mut stream).unwrap();
                total_sq += est.values.sub(&truth).dot(&est.values.sub(&truth)) / d as f64;
            }
            ses.push((total_sq / reps as f64).sqrt());
        }
        let r1 = ses[0] / ses[1]; // expect ~ sqrt(10)
        let r2 = ses[1] / ses[2];
        let target = 10.0_f64.sqrt();
        assert!(r1 > target / 2.0 && r1 < target * 2.0, "ratio {r1}");
        assert!(r2 > target / 2.0 && r2 < target * 2.0, "ratio {r2}");
    }

    #[test]
    fn non_finite_operator_output_is_flagged() {
        let bad = |_v: &Vector<f64>| Ok(Vector::from_vec(vec![f64::NAN, 0.0]));
        let err = hutchinson_diag(bad, 2, 1, &mut RngStream::new(1)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }
}
