//! Sharpness metrics at a candidate solution: dominant Hessian eigenvalue,
//! Hutchinson trace, loss rise along the gradient direction, average loss
//! rise over random directions, and the local Hessian-sensitivity probe.

use crate::error::Result;
use crate::estimators::hutchinson_diag;
use crate::numkit::{power_iteration, unit_sphere_direction, RngStream, Vector};
use crate::objectives::Objective;
use crate::scalar::Real;

/// Power-iteration budget used for `lambda_max`.
pub const POWER_MAX_ITERS: usize = 200;
pub const POWER_TOL: f64 = 1e-8;

/// Default perturbation radius for the loss-difference metrics.
pub const DEFAULT_RHO: f64 = 0.1;
/// Default Monte-Carlo sample count for the averaged loss difference.
pub const DEFAULT_N_MC: usize = 100;

/// The metric set at one point, with the radius used and status flags.
#[derive(Clone, Debug)]
pub struct SharpnessReport<R> {
    pub lambda_max: R,
    pub trace: R,
    pub dl_grad: R,
    pub dl_avg: R,
    pub rho: R,
    pub n_mc: usize,
    /// Power iteration hit its iteration budget before converging.
    pub power_not_converged: bool,
    /// The gradient norm was below 1e-12, so `dl_grad` was forced to 0.
    pub near_critical: bool,
}

/// Dominant eigenvalue of the full-batch Hessian via power iteration;
/// non-convergence is reported through the flag, the value is still the
/// last Rayleigh quotient.
pub fn lambda_max<R: Real>(obj: &dyn Objective<R>, x: &Vector<R>) -> Result<(R, bool)> {
    let batch = obj.full_batch();
    let r = power_iteration(
        |v| obj.batch_hvp(x, v, &batch),
        obj.dim(),
        POWER_MAX_ITERS,
        R::of(POWER_TOL),
    )?;
    Ok((r.value, !r.converged))
}

/// Hutchinson estimate of `tr(H)` on the full batch.
pub fn hessian_trace<R: Real>(
    obj: &dyn Objective<R>,
    x: &Vector<R>,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<R> {
    let batch = obj.full_batch();
    crate::estimators::hutchinson_trace(
        |v| obj.batch_hvp(x, v, &batch),
        obj.dim(),
        n_samples,
        rng,
    )
}

/// `L(x + rho * g/||g||) - L(x)` on the full batch; 0 with the
/// near-critical flag when the gradient is numerically zero.
pub fn delta_l_grad<R: Real>(obj: &dyn Objective<R>, x: &Vector<R>, rho: R) -> Result<(R, bool)> {
    let g = obj.grad(x)?;
    let norm = g.norm2();
    if norm < R::of(1e-12) {
        return Ok((R::zero(), true));
    }
    let base = obj.value(x)?;
    let mut moved = x.clone();
    moved.axpy(rho / norm, &g);
    Ok((obj.value(&moved)? - base, false))
}

/// Monte-Carlo mean of `L(x + rho * u) - L(x)` over unit directions `u`.
pub fn delta_l_avg<R: Real>(
    obj: &dyn Objective<R>,
    x: &Vector<R>,
    rho: R,
    n_mc: usize,
    rng: &mut RngStream,
) -> Result<R> {
    assert!(n_mc >= 1, "delta_l_avg requires n_mc >= 1");
    let base = obj.value(x)?;
    let mut acc = R::zero();
    for _ in 0..n_mc {
        let u: Vector<R> = unit_sphere_direction(rng, x.len());
        let mut moved = x.clone();
        moved.axpy(rho, &u);
        acc += obj.value(&moved)? - base;
    }
    Ok(acc / R::of(n_mc as f64))
}

/// Maximum over random unit directions of the l2 change in the estimated
/// Hessian diagonal between `x + rho * delta` and `x`.
///
/// The same Rademacher probes are reused at the base point and at every
/// perturbed point (common random numbers), so estimator noise cancels and
/// a constant Hessian yields exactly zero.
pub fn hessian_sensitivity<R: Real>(
    obj: &dyn Objective<R>,
    x: &Vector<R>,
    rho: R,
    n_dirs: usize,
    n_probes: usize,
    rng: &mut RngStream,
) -> Result<R> {
    assert!(n_dirs >= 1, "hessian_sensitivity requires n_dirs >= 1");
    let batch = obj.full_batch();
    let d = obj.dim();

    let probe_rng = rng.child("sensitivity-probes");
    let base = hutchinson_diag(
        |v| obj.batch_hvp(x, v, &batch),
        d,
        n_probes,
        &mut probe_rng.clone(),
    )?;

    let mut max_change = R::zero();
    for _ in 0..n_dirs {
        let dir: Vector<R> = unit_sphere_direction(rng, d);
        let mut moved = x.clone();
        moved.axpy(rho, &dir);
        let there = hutchinson_diag(
            |v| obj.batch_hvp(&moved, v, &batch),
            d,
            n_probes,
            &mut probe_rng.clone(),
        )?;
        let change = there.values.sub(&base.values).norm2();
        max_change = max_change.max(change);
    }
    Ok(max_change)
}

/// Assemble the full metric set at `x`.
pub fn report<R: Real>(
    obj: &dyn Objective<R>,
    x: &Vector<R>,
    rho: R,
    n_mc: usize,
    trace_samples: usize,
    rng: &mut RngStream,
) -> Result<SharpnessReport<R>> {
    let (lam, power_not_converged) = lambda_max(obj, x)?;
    let trace = hessian_trace(obj, x, trace_samples, &mut rng.child("trace"))?;
    let (dl_grad, near_critical) = delta_l_grad(obj, x, rho)?;
    let dl_avg = delta_l_avg(obj, x, rho, n_mc, &mut rng.child("dl-avg"))?;
    Ok(SharpnessReport {
        lambda_max: lam,
        trace,
        dl_grad,
        dl_avg,
        rho,
        n_mc,
        power_not_converged,
        near_critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::TapeBuilder;
    use crate::numkit::{jacobi_eigs, SymMat};
    use crate::objectives::{Batch, QuadraticObjective};

    fn quad(h: SymMat<f64>) -> QuadraticObjective<f64> {
        let d = h.dim();
        QuadraticObjective::new(h, Vector::zeros(d)).unwrap()
    }

    #[test]
    fn lambda_max_diagonal_case() {
        let obj = quad(SymMat::from_diag(&[2.0, 8.0]));
        let (lam, flagged) = lambda_max(&obj, &Vector::zeros(2)).unwrap();
        assert!(!flagged);
        assert!((lam - 8.0).abs() < 1e-6);
    }

    #[test]
    fn lambda_max_coupled_case() {
        let obj = quad(SymMat::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap());
        let (lam, _) = lambda_max(&obj, &Vector::zeros(2)).unwrap();
        assert!((lam - 3.0).abs() < 1e-6);
    }

    #[test]
    fn lambda_max_zero_objective_is_flagged() {
        let obj = quad(SymMat::zeros(3));
        let (lam, flagged) = lambda_max(&obj, &Vector::zeros(3)).unwrap();
        assert_eq!(lam, 0.0);
        assert!(flagged);
    }

    #[test]
    fn trace_identity_exact() {
        let obj = quad(SymMat::identity(3));
        let t = hessian_trace(&obj, &Vector::zeros(3), 1, &mut RngStream::new(1)).unwrap();
        assert_eq!(t, 3.0);
    }

    #[test]
    fn trace_matches_eigen_ground_truth_within_noise() {
        let mut rng = RngStream::new(12);
        let d = 10;
        let mut m = SymMat::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set_sym(i, j, rng.next_gaussian());
            }
        }
        let truth: f64 = jacobi_eigs(&m).values.iter().sum();
        let obj = quad(m);
        // Standard error of z'Hz is bounded by sqrt(2 ||H||_F^2 / n).
        let n = 1000;
        let est = hessian_trace(&obj, &Vector::zeros(d), n, &mut RngStream::new(7)).unwrap();
        let se = (2.0 * obj.hessian().frobenius_norm().powi(2) / n as f64).sqrt();
        assert!(
            (est - truth).abs() <= 3.0 * se,
            "estimate {est}, truth {truth}, se {se}"
        );
    }

    #[test]
    fn dl_grad_hand_values() {
        // f = x^2/2 at x = 1, rho = 0.1: 0.5 * 1.1^2 - 0.5 = 0.105.
        let obj = quad(SymMat::from_diag(&[1.0]));
        let (dl, flag) = delta_l_grad(&obj, &Vector::from_vec(vec![1.0]), 0.1).unwrap();
        assert!(!flag);
        assert!((dl - 0.105).abs() < 1e-12);

        // Critical point: flagged zero.
        let (dl, flag) = delta_l_grad(&obj, &Vector::from_vec(vec![0.0]), 0.1).unwrap();
        assert_eq!(dl, 0.0);
        assert!(flag);
    }

    #[test]
    fn dl_grad_linear_function_is_rho_times_norm() {
        // f = c'x: the rise along the gradient direction is rho * ||c||.
        let c = vec![3.0_f64, -4.0];
        let obj = QuadraticObjective::new(SymMat::zeros(2), Vector::from_vec(c)).unwrap();
        let (dl, _) = delta_l_grad(&obj, &Vector::from_vec(vec![0.3, 0.9]), 0.2).unwrap();
        assert!((dl - 0.2 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn dl_avg_isotropic_quadratic_closed_form() {
        // f = ||x||^2/2 at the minimum: every unit direction gives rho^2/2.
        let obj = quad(SymMat::identity(4));
        let dl = delta_l_avg(&obj, &Vector::zeros(4), 0.1, 50, &mut RngStream::new(3)).unwrap();
        assert!((dl - 0.005).abs() < 1e-12);
    }

    #[test]
    fn dl_avg_linear_function_averages_out() {
        let obj =
            QuadraticObjective::new(SymMat::zeros(2), Vector::from_vec(vec![1.0_f64, 2.0])).unwrap();
        let x = Vector::zeros(2);
        let dl = delta_l_avg(&obj, &x, 0.1, 4000, &mut RngStream::new(5)).unwrap();
        assert!(dl.abs() < 0.01, "mean {dl}");
    }

    #[test]
    fn dl_avg_is_deterministic_given_seed() {
        let obj = quad(SymMat::from_diag(&[1.0, 3.0]));
        let x = Vector::from_vec(vec![0.2, -0.4]);
        let a = delta_l_avg(&obj, &x, 0.1, 1, &mut RngStream::new(10)).unwrap();
        let b = delta_l_avg(&obj, &x, 0.1, 1, &mut RngStream::new(10)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sensitivity_is_exactly_zero_on_quadratics() {
        let obj = quad(SymMat::new(2, vec![2.0, 0.7, 0.7, 1.0]).unwrap());
        for seed in [1u64, 2, 3] {
            let s = hessian_sensitivity(
                &obj,
                &Vector::from_vec(vec![0.5, -0.3]),
                0.5,
                4,
                2,
                &mut RngStream::new(seed),
            )
            .unwrap();
            assert_eq!(s, 0.0);
        }
    }

    /// f = x^3/6 on the tape, so H(x) = x; sensitivity at 0 with rho = 1 is 1.
    struct Cubic {
        tape: crate::autodiff::Tape<f64>,
    }

    impl Cubic {
        fn new() -> Self {
            let mut tb = TapeBuilder::new(1, 0);
            let x = tb.param(0);
            let x2 = tb.mul(x, x);
            let x3 = tb.mul(x2, x);
            let sixth = tb.constant(1.0 / 6.0);
            let out = tb.mul(sixth, x3);
            Cubic { tape: tb.finish(out) }
        }
    }

    impl Objective<f64> for Cubic {
        fn dim(&self) -> usize {
            1
        }
        fn n_examples(&self) -> usize {
            1
        }
        fn batch_value(&self, x: &Vector<f64>, _: &Batch) -> Result<f64> {
            self.tape.value(x, &[])
        }
        fn batch_grad(&self, x: &Vector<f64>, _: &Batch) -> Result<Vector<f64>> {
            self.tape.grad(x, &[])
        }
        fn batch_hvp(&self, x: &Vector<f64>, v: &Vector<f64>, _: &Batch) -> Result<Vector<f64>> {
            self.tape.hvp(x, v, &[])
        }
    }

    #[test]
    fn sensitivity_cubic_hand_value() {
        // In 1-D the direction is +-1 and H(x) = x, so the change is exactly 1.
        let obj = Cubic::new();
        let s = hessian_sensitivity(&obj, &Vector::zeros(1), 1.0, 3, 1, &mut RngStream::new(2))
            .unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_deterministic_for_fixed_seed() {
        let obj = Cubic::new();
        let a = hessian_sensitivity(&obj, &Vector::zeros(1), 0.7, 1, 2, &mut RngStream::new(4))
            .unwrap();
        let b = hessian_sensitivity(&obj, &Vector::zeros(1), 0.7, 1, 2, &mut RngStream::new(4))
            .unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn dl_grad_nonnegative_on_convex_objectives() {
        let mut rng = RngStream::new(17);
        let obj = quad(SymMat::from_diag(&[0.5, 2.0, 4.0]));
        for _ in 0..20 {
            let x = Vector::from_fn(3, |_| rng.next_gaussian());
            let (dl, flagged) = delta_l_grad(&obj, &x, 0.1).unwrap();
            if !flagged {
                assert!(dl >= -1e-12);
            }
        }
    }

    #[test]
    fn full_report_assembles() {
        let obj = quad(SymMat::from_diag(&[1.0, 5.0]));
        let rep = report(
            &obj,
            &Vector::from_vec(vec![0.5, 0.5]),
            0.1,
            16,
            64,
            &mut RngStream::new(9),
        )
        .unwrap();
        assert!((rep.lambda_max - 5.0).abs() < 1e-6);
        assert!(!rep.near_critical);
        assert_eq!(rep.n_mc, 16);
    }
}
