//! Learning-rate and perturbation-radius schedules, plus the summability
//! check behind the convergence guarantee for power-law schedules.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar schedule evaluated at 1-based step `t` of `total` steps.
#[derive(Clone, Debug)]
pub enum Schedule<R> {
    Constant {
        base: R,
    },
    /// `base * gamma^(#milestones <= t)`.
    MultiStep {
        base: R,
        milestones: Vec<u64>,
        gamma: R,
    },
    /// Linear ramp to `base` over `warmup` steps, then a half cosine to 0.
    CosineWarmup {
        base: R,
        warmup: u64,
    },
    /// `base * (1 - t/total)^power`.
    Polynomial {
        base: R,
        power: R,
    },
    /// `base * t^(-exponent)`.
    PowerDecay {
        base: R,
        exponent: R,
    },
}

impl<R: Real> Schedule<R> {
    pub fn constant(base: R) -> Self {
        Schedule::Constant { base }
    }

    /// Base value before any decay; used for config validation.
    pub fn base(&self) -> R {
        match self {
            Schedule::Constant { base }
            | Schedule::MultiStep { base, .. }
            | Schedule::CosineWarmup { base, .. }
            | Schedule::Polynomial { base, .. }
            | Schedule::PowerDecay { base, .. } => *base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Constant { .. } => Ok(()),
            Schedule::MultiStep { milestones, gamma, .. } => {
                if *gamma <= R::zero() {
                    return Err(Error::invalid("multistep gamma must be > 0"));
                }
                if milestones.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::invalid("multistep milestones must be sorted"));
                }
                Ok(())
            }
            Schedule::CosineWarmup { warmup, .. } => {
                if *warmup == 0 {
                    return Err(Error::invalid("cosine warmup length must be >= 1"));
                }
                Ok(())
            }
            Schedule::Polynomial { power, .. } => {
                if *power < R::zero() {
                    return Err(Error::invalid("polynomial power must be >= 0"));
                }
                Ok(())
            }
            Schedule::PowerDecay { exponent, .. } => {
                if *exponent < R::zero() {
                    return Err(Error::invalid("power-decay exponent must be >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, t: u64, total: u64) -> R {
        debug_assert!(t >= 1);
        match self {
            Schedule::Constant { base } => *base,
            Schedule::MultiStep {
                base,
                milestones,
                gamma,
            } => {
                let hits = milestones.iter().filter(|&&m| m <= t).count();
                *base * gamma.powi(hits as i32)
            }
            Schedule::CosineWarmup { base, warmup } => {
                if t <= *warmup {
                    *base * R::of(t as f64 / *warmup as f64)
                } else if total <= *warmup {
                    *base
                } else {
                    let progress = (t - warmup) as f64 / (total - warmup) as f64;
                    *base * R::of(0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
                }
            }
            Schedule::Polynomial { base, power } => {
                let frac = R::of(1.0 - t as f64 / total as f64).max(R::zero());
                *base * frac.powf(*power)
            }
            Schedule::PowerDecay { base, exponent } => {
                *base * R::of(t as f64).powf(-*exponent)
            }
        }
    }
}

/// Outcome of the power-schedule summability conditions for
/// `eta_t = c1 * t^-p`, `rho_t = c2 * t^-q`: the step sizes must sum to
/// infinity, their squares must be summable, and `rho_t^2 eta_t` must be
/// summable. For power laws this is exactly `0.5 < p <= 1` and
/// `p + 2q > 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleCheck {
    pub ok: bool,
    pub eta_sum_diverges: bool,
    pub eta_sq_converges: bool,
    pub rho_sq_eta_converges: bool,
}

impl std::fmt::Display for ScheduleCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "sum eta_t {} | sum eta_t^2 {} | sum rho_t^2 eta_t {} => {}",
            if self.eta_sum_diverges {
                "diverges (ok)"
            } else {
                "converges (violates)"
            },
            if self.eta_sq_converges {
                "converges (ok)"
            } else {
                "diverges (violates)"
            },
            if self.rho_sq_eta_converges {
                "converges (ok)"
            } else {
                "diverges (violates)"
            },
            if self.ok { "admissible" } else { "inadmissible" }
        )
    }
}

pub fn check_theorem_schedule(p: f64, q: f64) -> ScheduleCheck {
    assert!(p >= 0.0 && q >= 0.0, "exponents must be non-negative");
    let eta_sum_diverges = p <= 1.0;
    let eta_sq_converges = 2.0 * p > 1.0;
    let rho_sq_eta_converges = p + 2.0 * q > 1.0;
    ScheduleCheck {
        ok: eta_sum_diverges && eta_sq_converges && rho_sq_eta_converges,
        eta_sum_diverges,
        eta_sq_converges,
        rho_sq_eta_converges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multistep_matches_decay_table() {
        let s: Schedule<f64> = Schedule::MultiStep {
            base: 0.15,
            milestones: vec![80, 120],
            gamma: 0.1,
        };
        assert!((s.value(100, 160) - 0.015).abs() < 1e-15);
        assert!((s.value(10, 160) - 0.15).abs() < 1e-15);
        assert!((s.value(150, 160) - 0.0015).abs() < 1e-15);
    }

    #[test]
    fn power_decay_starts_at_base() {
        let s = Schedule::PowerDecay {
            base: 1.0,
            exponent: 0.7,
        };
        assert_eq!(s.value(1, 100), 1.0);
        assert!(s.value(100, 100) < s.value(2, 100));
    }

    #[test]
    fn cosine_warmup_hits_base_at_warmup_end() {
        let s: Schedule<f64> = Schedule::CosineWarmup {
            base: 0.4,
            warmup: 8,
        };
        assert_eq!(s.value(8, 100), 0.4);
        assert!(s.value(4, 100) < 0.4);
        assert!(s.value(100, 100).abs() < 1e-15);
    }

    #[test]
    fn polynomial_decays_to_zero() {
        let s = Schedule::Polynomial {
            base: 2.0,
            power: 2.0,
        };
        assert_eq!(s.value(100, 100), 0.0);
        assert!(s.value(1, 100) > s.value(50, 100));
    }

    #[test]
    fn theorem_schedule_examples() {
        assert!(check_theorem_schedule(0.7, 0.4).ok);
        // 2p = 0.8 <= 1: squared step sizes not summable.
        let c = check_theorem_schedule(0.4, 1.0);
        assert!(!c.ok);
        assert!(!c.eta_sq_converges);
        // p + 2q = 1: harmonic, rho^2 eta not summable.
        let c = check_theorem_schedule(1.0, 0.0);
        assert!(!c.ok);
        assert!(!c.rho_sq_eta_converges);
    }
}
