//! Two-dimensional landscape built from a mixture of bivariate Gaussian
//! densities (negated, so component means become basins). Gradient and
//! Hessian are analytic, which makes this the reference surface for basin
//! selection and curvature-contrast experiments.

use crate::error::{Error, Result};
use crate::numkit::{SymMat, Vector};
use crate::scalar::Real;

use super::{check_dim, Batch, Objective};

/// One Gaussian bump: weight, mean, and a symmetric positive definite 2x2
/// covariance given as `[a, b, c]` for `[[a, b], [b, c]]`.
#[derive(Clone, Debug)]
pub struct MixtureComponent<R> {
    pub weight: R,
    pub mean: [R; 2],
    pub cov: [R; 3],
}

#[derive(Clone, Debug)]
pub struct MixtureSpec<R> {
    pub components: Vec<MixtureComponent<R>>,
}

impl<R: Real> MixtureSpec<R> {
    pub fn new(components: Vec<MixtureComponent<R>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.weight <= R::zero() {
                return Err(Error::invalid(format!("component {i} weight must be > 0")));
            }
            let [a, b, cc] = c.cov;
            if a <= R::zero() || a * cc - b * b <= R::zero() {
                return Err(Error::invalid(format!(
                    "component {i} covariance is not positive definite"
                )));
            }
        }
        Ok(MixtureSpec { components })
    }

    /// Canonical two-basin spec: a sharp bump at (+2, 0) with covariance
    /// 0.5 I and a broad flat bump at (-2, 0) with covariance 8 I, both of
    /// unit peak density. The basins have comparable depth, the Hessian
    /// trace at the centers contrasts by ~16x, and the broad component
    /// keeps the gradient field alive over the whole sweep region.
    pub fn canonical_two_basin() -> Self {
        let pi = std::f64::consts::PI;
        MixtureSpec::new(vec![
            MixtureComponent {
                weight: R::of(pi),
                mean: [R::of(2.0), R::zero()],
                cov: [R::of(0.5), R::zero(), R::of(0.5)],
            },
            MixtureComponent {
                weight: R::of(16.0 * pi),
                mean: [R::of(-2.0), R::zero()],
                cov: [R::of(8.0), R::zero(), R::of(8.0)],
            },
        ])
        .expect("canonical spec is valid")
    }
}

struct PreparedComponent<R> {
    weight: R,
    mean: [R; 2],
    inv: [R; 3],
    norm: R, // 1 / (2 pi sqrt(det))
}

pub struct GaussianMixtureLandscape<R> {
    spec: MixtureSpec<R>,
    prepared: Vec<PreparedComponent<R>>,
}

impl<R: Real> GaussianMixtureLandscape<R> {
    pub fn new(spec: MixtureSpec<R>) -> Result<Self> {
        let spec = MixtureSpec::new(spec.components)?; // re-validate
        let prepared = spec
            .components
            .iter()
            .map(|c| {
                let [a, b, cc] = c.cov;
                let det = a * cc - b * b;
                PreparedComponent {
                    weight: c.weight,
                    mean: c.mean,
                    inv: [cc / det, -b / det, a / det],
                    norm: R::one() / (R::of(2.0 * std::f64::consts::PI) * det.sqrt()),
                }
            })
            .collect();
        Ok(GaussianMixtureLandscape { spec, prepared })
    }

    pub fn canonical() -> Self {
        Self::new(MixtureSpec::canonical_two_basin()).expect("canonical spec is valid")
    }

    pub fn spec(&self) -> &MixtureSpec<R> {
        &self.spec
    }

    /// Index of the component mean nearest to `x`; the basin identifier.
    pub fn nearest_mean(&self, x: &Vector<R>) -> usize {
        let mut best = (0usize, R::infinity());
        for (i, c) in self.prepared.iter().enumerate() {
            let dx = x[0] - c.mean[0];
            let dy = x[1] - c.mean[1];
            let d2 = dx * dx + dy * dy;
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best.0
    }

    /// Analytic Hessian of the landscape at `x`.
    pub fn hessian(&self, x: &Vector<R>) -> SymMat<R> {
        let mut h = [R::zero(); 3]; // [h00, h01, h11]
        for c in &self.prepared {
            let (density, u) = self.component_terms(c, x);
            h[0] += density * (c.inv[0] - u[0] * u[0]);
            h[1] += density * (c.inv[1] - u[0] * u[1]);
            h[2] += density * (c.inv[2] - u[1] * u[1]);
        }
        SymMat::new(2, vec![h[0], h[1], h[1], h[2]]).expect("analytic Hessian is symmetric")
    }

    pub fn hessian_trace(&self, x: &Vector<R>) -> R {
        let h = self.hessian(x);
        h.get(0, 0) + h.get(1, 1)
    }

    /// (w N(x), Sigma^-1 (x - mu)) for one component.
    fn component_terms(&self, c: &PreparedComponent<R>, x: &Vector<R>) -> (R, [R; 2]) {
        let dx = x[0] - c.mean[0];
        let dy = x[1] - c.mean[1];
        let u = [c.inv[0] * dx + c.inv[1] * dy, c.inv[1] * dx + c.inv[2] * dy];
        let q = dx * u[0] + dy * u[1];
        let density = c.weight * c.norm * (-q * R::of(0.5)).exp();
        (density, u)
    }
}

impl<R: Real> Objective<R> for GaussianMixtureLandscape<R> {
    fn dim(&self) -> usize {
        2
    }

    fn n_examples(&self) -> usize {
        1
    }

    fn batch_value(&self, x: &Vector<R>, _batch: &Batch) -> Result<R> {
        check_dim(x, 2, "mixture value")?;
        let mut f = R::zero();
        for c in &self.prepared {
            f -= self.component_terms(c, x).0;
        }
        if !f.is_finite() {
            return Err(Error::non_finite("mixture value"));
        }
        Ok(f)
    }

    fn batch_grad(&self, x: &Vector<R>, _batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, 2, "mixture grad")?;
        let mut g = [R::zero(); 2];
        for c in &self.prepared {
            let (density, u) = self.component_terms(c, x);
            g[0] += density * u[0];
            g[1] += density * u[1];
        }
        let g = Vector::from_vec(vec![g[0], g[1]]);
        if !g.all_finite() {
            return Err(Error::non_finite("mixture gradient"));
        }
        Ok(g)
    }

    fn batch_hvp(&self, x: &Vector<R>, v: &Vector<R>, _batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, 2, "mixture hvp")?;
        check_dim(v, 2, "mixture hvp direction")?;
        let hv = self.hessian(x).matvec(v);
        if !hv.all_finite() {
            return Err(Error::non_finite("mixture hvp"));
        }
        Ok(hv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_standard() -> GaussianMixtureLandscape<f64> {
        GaussianMixtureLandscape::new(
            MixtureSpec::new(vec![MixtureComponent {
                weight: 1.0,
                mean: [0.0, 0.0],
                cov: [1.0, 0.0, 1.0],
            }])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gradient_vanishes_at_single_mean() {
        let obj = single_standard();
        let g = obj.grad(&Vector::zeros(2)).unwrap();
        assert!(g.norm2() < 1e-15);
    }

    #[test]
    fn value_at_standard_mean_is_normal_density() {
        let obj = single_standard();
        let f = obj.value(&Vector::zeros(2)).unwrap();
        assert!((f + 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn canonical_curvature_contrast_is_at_least_ten() {
        let obj = GaussianMixtureLandscape::<f64>::canonical();
        let sharp = obj.hessian_trace(&Vector::from_vec(vec![2.0, 0.0]));
        let flat = obj.hessian_trace(&Vector::from_vec(vec![-2.0, 0.0]));
        assert!(sharp > 0.0 && flat > 0.0);
        assert!(sharp >= 10.0 * flat, "sharp {sharp} vs flat {flat}");
    }

    #[test]
    fn canonical_basin_depths_are_comparable() {
        let obj = GaussianMixtureLandscape::<f64>::canonical();
        let sharp = obj.value(&Vector::from_vec(vec![2.0, 0.0])).unwrap();
        let flat = obj.value(&Vector::from_vec(vec![-2.0, 0.0])).unwrap();
        assert!(sharp < 0.0 && flat < 0.0);
        let ratio = sharp / flat;
        assert!((0.5..=2.0).contains(&ratio), "depth ratio {ratio}");
    }

    #[test]
    fn uneven_weights_still_give_tenfold_trace_contrast() {
        // Same covariances with weights (0.7, 0.5): the curvature ratio at
        // the two means stays above 10x even with very different depths.
        let obj = GaussianMixtureLandscape::new(
            MixtureSpec::new(vec![
                MixtureComponent {
                    weight: 0.7,
                    mean: [2.0, 0.0],
                    cov: [0.05, 0.0, 0.05],
                },
                MixtureComponent {
                    weight: 0.5,
                    mean: [-2.0, 0.0],
                    cov: [1.0, 0.0, 1.0],
                },
            ])
            .unwrap(),
        )
        .unwrap();
        let sharp = obj.hessian_trace(&Vector::from_vec(vec![2.0, 0.0]));
        let flat = obj.hessian_trace(&Vector::from_vec(vec![-2.0, 0.0]));
        assert!(sharp >= 10.0 * flat, "sharp {sharp} vs flat {flat}");
    }

    #[test]
    fn hessian_trace_matches_closed_form_at_means() {
        // At a component mean, that component contributes w N(mu) tr(inv);
        // the others contribute their own analytic terms, all summed by the
        // same formula evaluated independently here per component.
        let obj = GaussianMixtureLandscape::<f64>::canonical();
        for target in [[2.0, 0.0], [-2.0, 0.0]] {
            let x = Vector::from_vec(target.to_vec());
            let mut expected = 0.0;
            for c in &obj.spec().components {
                let [a, b, cc] = c.cov;
                let det = a * cc - b * b;
                let inv = [cc / det, -b / det, a / det];
                let dx = target[0] - c.mean[0];
                let dy = target[1] - c.mean[1];
                let u = [inv[0] * dx + inv[1] * dy, inv[1] * dx + inv[2] * dy];
                let q = dx * u[0] + dy * u[1];
                let dens =
                    c.weight / (2.0 * std::f64::consts::PI * det.sqrt()) * (-0.5 * q).exp();
                expected += dens * (inv[0] + inv[2] - u[0] * u[0] - u[1] * u[1]);
            }
            assert!((obj.hessian_trace(&x) - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_covariance_rejected() {
        let err = MixtureSpec::<f64>::new(vec![MixtureComponent {
            weight: 1.0,
            mean: [0.0, 0.0],
            cov: [1.0, 1.0, 1.0],
        }])
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn nearest_mean_classifies_basins() {
        let obj = GaussianMixtureLandscape::<f64>::canonical();
        assert_eq!(obj.nearest_mean(&Vector::from_vec(vec![1.5, 0.3])), 0);
        assert_eq!(obj.nearest_mean(&Vector::from_vec(vec![-0.5, 0.0])), 1);
    }
}
