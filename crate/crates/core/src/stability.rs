//! Linear stability of the sharpness-aware second-order dynamics on
//! stochastic quadratic ensembles.
//!
//! An [`Ensemble`] is a finite distribution over symmetric matrices `H_xi`.
//! Near a fixed point the update linearizes to
//! `x' = x - eta * (1/(sqrt(diag(H_xi)) + eps)) ⊙ H_xi (x + rho H_xi x)`,
//! and bounding the diagonal scaling by `1/eps` gives the surrogate
//! `x' = x - (eta/eps) H_xi (I + rho H_xi) x`, whose second moment
//! contracts iff the largest eigenvalue of the stability matrix `M` is at
//! most 1:
//!
//! `M = (I - (eta/eps) H - (eta rho/eps) H^2)^2
//!    + ((eta^2 - 2 eta rho eps)/eps^2) (E[H^2] - H^2)
//!    + (2 eta^2 rho/eps^2)            (E[H^3] - H^3)
//!    + (eta^2 rho^2/eps^2)            (E[H^4] - H^4)`,  H = E[H_xi].
//!
//! The necessary conditions split `lambda_max(M) <= 1` into a sharpness
//! bound on `a = lambda_max(H)` and non-uniformity bounds on the moment
//! gaps `s_k`.

use crate::error::{Error, Result};
use crate::numkit::{jacobi_eigs, RngStream, SymMat, Vector};
use crate::scalar::Real;

/// Finite set of symmetric matrices with probabilities; the stochastic
/// Hessian at a fixed point.
#[derive(Clone, Debug)]
pub struct Ensemble<R> {
    mats: Vec<SymMat<R>>,
    probs: Vec<R>,
    commuting: bool,
}

impl<R: Real> Ensemble<R> {
    pub fn new(mats: Vec<SymMat<R>>, probs: Vec<R>) -> Result<Self> {
        if mats.is_empty() || mats.len() != probs.len() {
            return Err(Error::invalid(
                "ensemble needs matching, non-empty matrices and probabilities",
            ));
        }
        let d = mats[0].dim();
        if mats.iter().any(|m| m.dim() != d) {
            return Err(Error::invalid("ensemble matrices must share a dimension"));
        }
        if probs.iter().any(|&p| p < R::zero()) {
            return Err(Error::invalid("ensemble probabilities must be >= 0"));
        }
        let total = probs.iter().fold(R::zero(), |a, &p| a + p);
        if (total - R::one()).abs() > R::tol(1e-12) {
            return Err(Error::invalid(format!(
                "ensemble probabilities sum to {total}, expected 1"
            )));
        }
        let commuting = all_pairs_commute(&mats);
        Ok(Ensemble {
            mats,
            probs,
            commuting,
        })
    }

    pub fn dim(&self) -> usize {
        self.mats[0].dim()
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mats(&self) -> &[SymMat<R>] {
        &self.mats
    }

    pub fn probs(&self) -> &[R] {
        &self.probs
    }

    /// All pairs commute within 1e-10 (Frobenius, scale-relative).
    pub fn commuting(&self) -> bool {
        self.commuting
    }

    fn sample(&self, rng: &mut RngStream) -> usize {
        let u = R::of(rng.next_f64());
        let mut acc = R::zero();
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

fn all_pairs_commute<R: Real>(mats: &[SymMat<R>]) -> bool {
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let scale = (mats[i].frobenius_norm() * mats[j].frobenius_norm()).max(R::one());
            if commutator_norm(&mats[i], &mats[j]) > R::tol(1e-10) * scale {
                return false;
            }
        }
    }
    true
}

/// `||AB - BA||_F` without any symmetrization.
fn commutator_norm<R: Real>(a: &SymMat<R>, b: &SymMat<R>) -> R {
    let d = a.dim();
    let mut acc = R::zero();
    for i in 0..d {
        for j in 0..d {
            let mut ab = R::zero();
            let mut ba = R::zero();
            for k in 0..d {
                ab += a.get(i, k) * b.get(k, j);
                ba += b.get(i, k) * a.get(k, j);
            }
            let diff = ab - ba;
            acc += diff * diff;
        }
    }
    acc.sqrt()
}

/// First four probability-weighted matrix moments `E[H^k]`.
#[derive(Clone, Debug)]
pub struct Moments<R> {
    pub e_h: SymMat<R>,
    pub e_h2: SymMat<R>,
    pub e_h3: SymMat<R>,
    pub e_h4: SymMat<R>,
}

pub fn moments<R: Real>(e: &Ensemble<R>) -> Moments<R> {
    let d = e.dim();
    let mut acc = [
        SymMat::zeros(d),
        SymMat::zeros(d),
        SymMat::zeros(d),
        SymMat::zeros(d),
    ];
    for (m, &p) in e.mats().iter().zip(e.probs()) {
        let mut power = m.clone();
        for slot in acc.iter_mut() {
            *slot = slot.add_scaled(p, &power);
            power = power.mul_commuting(m);
        }
    }
    let [e_h, e_h2, e_h3, e_h4] = acc;
    Moments {
        e_h,
        e_h2,
        e_h3,
        e_h4,
    }
}

/// Assemble the stability matrix `M` and its largest eigenvalue.
pub fn stability_matrix<R: Real>(
    e: &Ensemble<R>,
    eta: R,
    rho: R,
    eps: R,
) -> Result<(SymMat<R>, R)> {
    if eta <= R::zero() || eps <= R::zero() || rho < R::zero() {
        return Err(Error::invalid(
            "stability matrix requires eta > 0, eps > 0, rho >= 0",
        ));
    }
    let mo = moments(e);
    let d = e.dim();
    let h = &mo.e_h;
    let h2 = h.mul_commuting(h);
    let h3 = h2.mul_commuting(h);
    let h4 = h3.mul_commuting(h);

    // A = I - (eta/eps) H - (eta rho/eps) H^2
    let mut a = SymMat::identity(d);
    a = a.add_scaled(-eta / eps, h);
    a = a.add_scaled(-eta * rho / eps, &h2);
    let mut m = a.mul_commuting(&a);

    let c2 = (eta * eta - R::of(2.0) * eta * rho * eps) / (eps * eps);
    let c3 = R::of(2.0) * eta * eta * rho / (eps * eps);
    let c4 = eta * eta * rho * rho / (eps * eps);
    m = m.add_scaled(c2, &mo.e_h2.sub(&h2));
    m = m.add_scaled(c3, &mo.e_h3.sub(&h3));
    m = m.add_scaled(c4, &mo.e_h4.sub(&h4));

    let lambda_max = jacobi_eigs(&m).lambda_max();
    Ok((m, lambda_max))
}

/// Necessary-condition report for a parameter triple on one ensemble.
#[derive(Clone, Debug)]
pub struct StabilityReport<R> {
    /// Sharpness `a = lambda_max(E[H])`.
    pub a: R,
    /// Non-uniformity `s_k = lambda_max(E[H^k] - E[H]^k)^(1/k)` (0 when the
    /// gap's top eigenvalue is not positive).
    pub s2: R,
    pub s3: R,
    pub s4: R,
    /// Right-hand sides of the four inequalities; `None` when the
    /// denominator is not positive (condition inapplicable).
    pub bounds: [Option<R>; 4],
    /// Outcome per condition; `None` mirrors an inapplicable bound.
    pub conditions: [Option<bool>; 4],
    /// Moment-gap matrices (k = 2, 3, 4) with eigenvalues below -tolerance.
    pub gap_indefinite: [bool; 3],
    pub lambda_max_m: R,
    /// `lambda_max(M) <= 1`.
    pub stable: bool,
    pub eta: R,
    pub rho: R,
    pub eps: R,
}

impl<R: Real> StabilityReport<R> {
    /// True when every applicable inequality holds.
    pub fn all_applicable_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.unwrap_or(true))
    }
}

pub fn necessary_conditions<R: Real>(
    e: &Ensemble<R>,
    eta: R,
    rho: R,
    eps: R,
) -> Result<StabilityReport<R>> {
    let (_, lambda_max_m) = stability_matrix(e, eta, rho, eps)?;
    let mo = moments(e);
    let a = jacobi_eigs(&mo.e_h).lambda_max();

    let mut s = [R::zero(); 3];
    let mut gap_indefinite = [false; 3];
    let powers = [&mo.e_h2, &mo.e_h3, &mo.e_h4];
    for (idx, k) in (2u32..=4).enumerate() {
        let gap = powers[idx].sub(&mo.e_h.pow(k));
        let eig = jacobi_eigs(&gap);
        let top = eig.lambda_max();
        let bottom = *eig.values.last().expect("non-empty spectrum");
        let tol = R::tol(1e-10) * gap.frobenius_norm().max(R::one());
        if bottom < -tol {
            gap_indefinite[idx] = true;
        }
        s[idx] = if top > R::zero() {
            // Real k-th root of the top eigenvalue.
            top.powf(R::one() / R::of(k as f64))
        } else {
            R::zero()
        };
    }
    let [s2, s3, s4] = s;

    let two = R::of(2.0);
    let denom2 = eta * eta - two * eta * rho * eps;
    let bound1 = Some(two * eps / eta);
    let bound2 = (denom2 > R::zero()).then(|| eps * eps / denom2);
    let bound3 = (rho > R::zero()).then(|| eps * eps / (two * eta * eta * rho));
    let bound4 = (rho > R::zero()).then(|| eps * eps / (eta * eta * rho * rho));

    let lhs1 = a * (R::one() + rho * a);
    let conditions = [
        bound1.map(|b| lhs1 >= R::zero() && lhs1 <= b),
        bound2.map(|b| s2 * s2 <= b),
        bound3.map(|b| s3 * s3 <= b),
        bound4.map(|b| s4 * s4 <= b),
    ];

    Ok(StabilityReport {
        a,
        s2,
        s3,
        s4,
        bounds: [bound1, bound2, bound3, bound4],
        conditions,
        gap_indefinite,
        lambda_max_m,
        stable: lambda_max_m <= R::one(),
        eta,
        rho,
        eps,
    })
}

/// Trajectory of mean squared norms from Monte-Carlo simulation.
#[derive(Clone, Debug)]
pub struct Trajectory<R> {
    /// `mean ||x_t||^2` for `t = 0..=steps`.
    pub mean_sq_norm: Vec<R>,
    /// Some trajectory exceeded the overflow clamp.
    pub diverged: bool,
}

const NORM_SQ_CLAMP: f64 = 1e100;

/// Monte-Carlo simulation of the surrogate dynamics
/// `x' = x - (eta/eps) H_xi (I + rho H_xi) x` with an i.i.d. draw per step
/// per trajectory. The exact one-step identity
/// `E[||x_{t+1}||^2 | x_t] = x_t' M x_t` holds for this dynamic.
#[allow(clippy::too_many_arguments)]
pub fn simulate_surrogate<R: Real>(
    e: &Ensemble<R>,
    eta: R,
    rho: R,
    eps: R,
    x0: &Vector<R>,
    steps: usize,
    n_traj: usize,
    rng: &mut RngStream,
) -> Result<Trajectory<R>> {
    if steps == 0 || n_traj == 0 {
        return Err(Error::invalid("simulation needs steps >= 1, n_traj >= 1"));
    }
    if x0.len() != e.dim() {
        return Err(Error::DimMismatch {
            context: "surrogate simulation x0",
            expected: e.dim(),
            got: x0.len(),
        });
    }
    let scale = eta / eps;
    let clamp = R::of(NORM_SQ_CLAMP);
    let mut acc = vec![R::zero(); steps + 1];
    let mut diverged = false;

    for traj in 0..n_traj {
        let mut stream = rng.child(&format!("surrogate-{traj}"));
        let mut x = x0.clone();
        acc[0] += x.dot(&x);
        let mut clamped = false;
        for slot in acc.iter_mut().skip(1) {
            if !clamped {
                let h = &e.mats()[e.sample(&mut stream)];
                let hx = h.matvec(&x);
                let hhx = h.matvec(&hx);
                // x <- x - (eta/eps) (Hx + rho H^2 x)
                x.axpy(-scale, &hx);
                x.axpy(-scale * rho, &hhx);
                if x.dot(&x) > clamp {
                    clamped = true;
                    diverged = true;
                }
            }
            *slot += x.dot(&x).min(clamp);
        }
    }
    let inv = R::one() / R::of(n_traj as f64);
    Ok(Trajectory {
        mean_sq_norm: acc.into_iter().map(|v| v * inv).collect(),
        diverged,
    })
}

/// Exact simulation of the linearized update with the true per-sample
/// diagonal scaling `1/(sqrt(diag(H_xi)) + eps)`. Requires every member to
/// have a non-negative diagonal (the square root is undefined otherwise).
pub fn simulate_linearized_sassha<R: Real>(
    e: &Ensemble<R>,
    eta: R,
    rho: R,
    eps: R,
    x0: &Vector<R>,
    steps: usize,
    rng: &mut RngStream,
) -> Result<Trajectory<R>> {
    if steps == 0 {
        return Err(Error::invalid("simulation needs steps >= 1"));
    }
    if x0.len() != e.dim() {
        return Err(Error::DimMismatch {
            context: "linearized simulation x0",
            expected: e.dim(),
            got: x0.len(),
        });
    }
    for (i, m) in e.mats().iter().enumerate() {
        for j in 0..m.dim() {
            if m.get(j, j) < R::zero() {
                return Err(Error::invalid(format!(
                    "ensemble member {i} has negative diagonal entry at {j}"
                )));
            }
        }
    }
    let clamp = R::of(NORM_SQ_CLAMP);
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.dot(&x));
    let mut diverged = false;
    for _ in 0..steps {
        if !diverged {
            let h = &e.mats()[e.sample(rng)];
            let hx = h.matvec(&x);
            let mut inner = x.clone();
            inner.axpy(rho, &hx); // x + rho H x
            let h_inner = h.matvec(&inner);
            for i in 0..x.len() {
                let denom = h.get(i, i).sqrt() + eps;
                x[i] -= eta * h_inner[i] / denom;
            }
            if x.dot(&x) > clamp {
                diverged = true;
            }
        }
        out.push(x.dot(&x).min(clamp));
    }
    Ok(Trajectory {
        mean_sq_norm: out,
        diverged,
    })
}

/// Random ensemble with a shared eigenbasis (hence commuting members).
/// Spectra are uniform in `spectrum_range`; probabilities are uniform over
/// members. Used by the stability test suites.
pub fn random_commuting_ensemble<R: Real>(
    d: usize,
    members: usize,
    spectrum_range: (f64, f64),
    rng: &mut RngStream,
) -> Ensemble<R> {
    assert!(members >= 1 && d >= 1);
    // Orthonormal basis from the eigenvectors of a random symmetric matrix.
    let mut seed_mat = SymMat::zeros(d);
    for i in 0..d {
        for j in i..d {
            seed_mat.set_sym(i, j, R::of(rng.next_gaussian()));
        }
    }
    let basis = jacobi_eigs(&seed_mat).vectors;

    let (lo, hi) = spectrum_range;
    let mats = (0..members)
        .map(|_| {
            let spectrum: Vec<R> = (0..d)
                .map(|_| R::of(lo + (hi - lo) * rng.next_f64()))
                .collect();
            SymMat::from_eigen(&basis, &spectrum)
        })
        .collect();
    let p = R::of(1.0 / members as f64);
    Ensemble::new(mats, vec![p; members]).expect("construction is valid")
}
