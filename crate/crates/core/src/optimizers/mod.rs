//! The update rules: `sassha` and its momentum-perturbed variant, SAM over
//! SGD-momentum or AdamW, AdaHessian (without spatial averaging), Sophia-H,
//! AdamW, and SGD-momentum — all over a shared state layout with exact
//! gradient-computation (GC) and Hessian-vector-product (HVP) accounting.
//!
//! Within one step every evaluation (gradient, perturbed gradient, Hessian
//! probes) shares the same batch. The preconditioner `d_bar` refreshes only
//! on steps with `t mod k = 1` (always for `k = 1`) and is frozen bitwise in
//! between. Any non-finite parameter, loss, or preconditioner entry aborts
//! the run with a divergence report naming the step and quantity.

mod schedule;

pub use schedule::{check_theorem_schedule, Schedule, ScheduleCheck};

use crate::error::{Error, Result};
use crate::estimators::hutchinson_diag;
use crate::numkit::{RngStream, Vector};
use crate::objectives::{Batch, Objective};
use crate::scalar::Real;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Sassha,
    MSassha,
    SamSgd,
    SamAdamW,
    AdaHessian,
    SophiaH,
    AdamW,
    Sgd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sassha => "sassha",
            Method::MSassha => "msassha",
            Method::SamSgd => "sam_sgd",
            Method::SamAdamW => "sam_adamw",
            Method::AdaHessian => "adahessian",
            Method::SophiaH => "sophiah",
            Method::AdamW => "adamw",
            Method::Sgd => "sgd",
        }
    }

    /// Gradient computations per step.
    pub fn gc_per_step(self) -> u64 {
        match self {
            Method::Sassha | Method::SamSgd | Method::SamAdamW => 2,
            _ => 1,
        }
    }

    /// Hessian-vector products per step, averaged over a cycle of `k`.
    pub fn hvp_per_step(self, k: u64, n_hutch: u64) -> f64 {
        match self {
            Method::Sassha | Method::MSassha | Method::SophiaH => n_hutch as f64 / k as f64,
            Method::AdaHessian => n_hutch as f64,
            _ => 0.0,
        }
    }

    pub fn uses_rho(self) -> bool {
        matches!(
            self,
            Method::Sassha | Method::MSassha | Method::SamSgd | Method::SamAdamW
        )
    }
}

/// Full hyperparameter set; fields not used by a method are ignored there.
#[derive(Clone, Debug)]
pub struct OptimizerConfig<R> {
    pub method: Method,
    pub eta: Schedule<R>,
    pub rho: Schedule<R>,
    pub beta1: R,
    pub beta2: R,
    /// Hessian refresh interval; refresh happens when `t mod k = 1`.
    pub k: u64,
    /// Decoupled weight decay coefficient.
    pub weight_decay: R,
    /// Preconditioner denominator floor.
    pub epsilon: R,
    /// Hutchinson probes per Hessian refresh.
    pub n_hutch: usize,
    /// Heavy-ball coefficient for SGD.
    pub momentum: R,
    /// Sophia-H update clip threshold.
    pub clip_threshold: R,
    /// Sophia-H hard Hessian floor.
    pub hessian_floor: R,
}

impl<R: Real> OptimizerConfig<R> {
    /// Method defaults: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8, one
    /// Hutchinson probe per refresh, k = 10 for the lazy-Hessian methods and
    /// k = 1 for Sophia-H, Sophia clip 0.1 with Hessian floor 1e-2.
    pub fn new(method: Method) -> Self {
        let k = match method {
            Method::Sassha | Method::MSassha => 10,
            _ => 1,
        };
        OptimizerConfig {
            method,
            eta: Schedule::constant(R::of(0.1)),
            rho: Schedule::constant(R::zero()),
            beta1: R::of(0.9),
            beta2: R::of(0.999),
            k,
            weight_decay: R::zero(),
            epsilon: R::of(1e-8),
            n_hutch: 1,
            momentum: R::of(0.9),
            clip_threshold: R::of(0.1),
            hessian_floor: R::of(1e-2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = R::zero()..R::one();
        if !unit.contains(&self.beta1) || !unit.contains(&self.beta2) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if self.k == 0 {
            return Err(Error::invalid("hessian update interval k must be >= 1"));
        }
        if self.epsilon < R::zero() {
            return Err(Error::invalid("epsilon must be >= 0"));
        }
        if self.n_hutch == 0 {
            return Err(Error::invalid("n_hutch must be >= 1"));
        }
        if self.weight_decay < R::zero() {
            return Err(Error::invalid("weight decay must be >= 0"));
        }
        if !(R::zero()..R::one()).contains(&self.momentum) {
            return Err(Error::invalid("sgd momentum must lie in [0, 1)"));
        }
        self.eta.validate()?;
        self.rho.validate()?;
        if self.eta.base() <= R::zero() {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        if self.rho.base() < R::zero() {
            return Err(Error::invalid("perturbation radius must be >= 0"));
        }
        if self.method == Method::SophiaH
            && (self.clip_threshold <= R::zero() || self.hessian_floor <= R::zero())
        {
            return Err(Error::invalid(
                "sophia requires clip_threshold > 0 and hessian_floor > 0",
            ));
        }
        Ok(())
    }
}

/// Mutable optimizer state. Buffer roles by method:
/// - `m`: gradient EMA (heavy-ball accumulator for SGD);
/// - `v`: squared-gradient EMA (AdamW) or squared-Hessian EMA (AdaHessian);
/// - `d`: EMA of `|H_hat|` (`sassha`) or of the floored Hessian (Sophia-H);
/// - `d_bar`: bias-corrected square-rooted preconditioner, frozen between
///   refreshes.
#[derive(Clone, Debug)]
pub struct OptState<R> {
    pub x: Vector<R>,
    pub m: Vector<R>,
    pub v: Vector<R>,
    pub d: Vector<R>,
    pub d_bar: Vector<R>,
    /// Step about to execute; starts at 1.
    pub t: u64,
    /// Step of the last Hessian refresh (0 = none yet).
    pub t_hess: u64,
    pub gc_count: u64,
    pub hvp_count: u64,
}

impl<R: Real> OptState<R> {
    pub fn new(x0: Vector<R>) -> Self {
        let d = x0.len();
        OptState {
            x: x0,
            m: Vector::zeros(d),
            v: Vector::zeros(d),
            d: Vector::zeros(d),
            d_bar: Vector::zeros(d),
            t: 1,
            t_hess: 0,
            gc_count: 0,
            hvp_count: 0,
        }
    }
}

/// Per-step record returned to the caller.
#[derive(Clone, Debug)]
pub struct StepInfo<R> {
    pub step: u64,
    pub eta: R,
    pub rho: R,
    /// Batch loss at the pre-step iterate.
    pub loss: R,
    pub update_norm: R,
    pub refreshed_hessian: bool,
}

/// SAM ascent step: `rho * g / ||g||_2`, or zero when the gradient norm is
/// below 1e-16 (the formula is undefined at critical points).
pub fn perturbation<R: Real>(g: &Vector<R>, rho: R) -> Result<Vector<R>> {
    if rho < R::zero() {
        return Err(Error::invalid("perturbation radius must be >= 0"));
    }
    if !g.all_finite() {
        return Err(Error::non_finite("perturbation input gradient"));
    }
    let norm = g.norm2();
    if norm < R::of(1e-16) {
        return Ok(Vector::zeros(g.len()));
    }
    Ok(g.scaled(rho / norm))
}

fn refresh_due(t: u64, k: u64) -> bool {
    k == 1 || t % k == 1
}

/// One optimization run's driver: owns the config and state, dispatches the
/// method-specific update each step.
pub struct Optimizer<R: Real> {
    cfg: OptimizerConfig<R>,
    state: OptState<R>,
    total_steps: u64,
}

impl<R: Real> Optimizer<R> {
    pub fn new(cfg: OptimizerConfig<R>, x0: Vector<R>, total_steps: u64) -> Result<Self> {
        cfg.validate()?;
        if total_steps == 0 {
            return Err(Error::invalid("total_steps must be >= 1"));
        }
        Ok(Optimizer {
            cfg,
            state: OptState::new(x0),
            total_steps,
        })
    }

    pub fn cfg(&self) -> &OptimizerConfig<R> {
        &self.cfg
    }

    pub fn state(&self) -> &OptState<R> {
        &self.state
    }

    pub fn x(&self) -> &Vector<R> {
        &self.state.x
    }

    /// Execute step `t` on the given batch. Every objective evaluation made
    /// here uses this same batch.
    pub fn step(
        &mut self,
        obj: &dyn Objective<R>,
        batch: &Batch,
        rng: &mut RngStream,
    ) -> Result<StepInfo<R>> {
        let t = self.state.t;
        let eta = self.cfg.eta.value(t, self.total_steps);
        let rho = if self.cfg.method.uses_rho() {
            self.cfg.rho.value(t, self.total_steps)
        } else {
            R::zero()
        };

        let loss = obj
            .batch_value(&self.state.x, batch)
            .map_err(|e| diverged(t, "loss", e))?;
        let x_before = self.state.x.clone();

        let refreshed = match self.cfg.method {
            Method::Sassha => self.sassha_step(obj, batch, rng, eta, rho, false),
            Method::MSassha => self.sassha_step(obj, batch, rng, eta, rho, true),
            Method::SamSgd => self.sam_step(obj, batch, eta, rho, BaseRule::Sgd),
            Method::SamAdamW => self.sam_step(obj, batch, eta, rho, BaseRule::AdamW),
            Method::AdaHessian => self.adahessian_step(obj, batch, rng, eta),
            Method::SophiaH => self.sophiah_step(obj, batch, rng, eta),
            Method::AdamW => self.first_order_step(obj, batch, eta, BaseRule::AdamW),
            Method::Sgd => self.first_order_step(obj, batch, eta, BaseRule::Sgd),
        }?;

        if !self.state.x.all_finite() {
            return Err(Error::Diverged {
                step: t,
                quantity: "parameters".into(),
            });
        }
        if !self.state.d_bar.all_finite() {
            return Err(Error::Diverged {
                step: t,
                quantity: "preconditioner".into(),
            });
        }

        let update_norm = self.state.x.sub(&x_before).norm2();
        self.state.t += 1;
        Ok(StepInfo {
            step: t,
            eta,
            rho,
            loss,
            update_norm,
            refreshed_hessian: refreshed,
        })
    }

    /// Shared body of `sassha` and `msassha`; they differ only in how the
    /// perturbation is built and whether the unperturbed gradient is
    /// computed at all.
    fn sassha_step(
        &mut self,
        obj: &dyn Objective<R>,
        batch: &Batch,
        rng: &mut RngStream,
        eta: R,
        rho: R,
        momentum_perturbation: bool,
    ) -> Result<bool> {
        let st = &mut self.state;
        let t = st.t;
        let cfg = &self.cfg;

        let eps_star = if momentum_perturbation {
            // Normalized momentum stands in for the ascent direction; zero
            // on the first step while m is still zero.
            perturbation(&st.m, rho)?
        } else {
            let g = obj
                .batch_grad(&st.x, batch)
                .map_err(|e| diverged(t, "gradient", e))?;
            st.gc_count += 1;
            perturbation(&g, rho)?
        };

        let x_pert = st.x.add(&eps_star);
        let g_tilde = obj
            .batch_grad(&x_pert, batch)
            .map_err(|e| diverged(t, "perturbed gradient", e))?;
        st.gc_count += 1;

        let one = R::one();
        st.m = st
            .m
            .zip_map(&g_tilde, |m, g| cfg.beta1 * m + (one - cfg.beta1) * g);
        let m_bc = one - cfg.beta1.powi(t as i32);
        let m_bar = st.m.scaled(one / m_bc);

        let mut refreshed = false;
        if refresh_due(t, cfg.k) {
            let est = hutchinson_diag(
                |v| obj.batch_hvp(&x_pert, v, batch),
                st.x.len(),
                cfg.n_hutch,
                rng,
            )
            .map_err(|e| diverged(t, "hessian estimate", e))?;
            st.hvp_count += est.hvp_count;
            st.d = st
                .d
                .zip_map(&est.values, |d, h| cfg.beta2 * d + (one - cfg.beta2) * h.abs());
            let d_bc = one - cfg.beta2.powi(t as i32);
            st.d_bar = st.d.map(|d| (d / d_bc).sqrt());
            st.t_hess = t;
            refreshed = true;
        }

        let decay = eta * cfg.weight_decay;
        for i in 0..st.x.len() {
            let step = eta * m_bar[i] / (st.d_bar[i] + cfg.epsilon);
            st.x[i] = st.x[i] - step - decay * st.x[i];
        }
        Ok(refreshed)
    }

    fn sam_step(
        &mut self,
        obj: &dyn Objective<R>,
        batch: &Batch,
        eta: R,
        rho: R,
        base: BaseRule,
    ) -> Result<bool> {
        let t = self.state.t;
        let g = obj
            .batch_grad(&self.state.x, batch)
            .map_err(|e| diverged(t, "gradient", e))?;
        self.state.gc_count += 1;
        let x_pert = self.state.x.add(&perturbation(&g, rho)?);
        let g_tilde = obj
            .batch_grad(&x_pert, batch)
            .map_err(|e| diverged(t, "perturbed gradient", e))?;
        self.state.gc_count += 1;
        self.apply_base(base, &g_tilde, eta);
        Ok(false)
    }

    fn first_order_step(
        &mut self,
        obj: &dyn Objective<R>,
        batch: &Batch,
        eta: R,
        base: BaseRule,
    ) -> Result<bool> {
        let t = self.state.t;
        let g = obj
            .batch_grad(&self.state.x, batch)
            .map_err(|e| diverged(t, "gradient", e))?;
        self.state.gc_count += 1;
        self.apply_base(base, &g, eta);
        Ok(false)
    }

    fn apply_base(&mut self, base: BaseRule, g: &Vector<R>, eta: R) {
        let st = &mut self.state;
        let cfg = &self.cfg;
        let one = R::one();
        let decay = eta * cfg.weight_decay;
        match base {
            BaseRule::Sgd => {
                // Heavy-ball accumulation m <- mu m + g.
                st.m = st.m.zip_map(g, |m, gi| cfg.momentum * m + gi);
                for i in 0..st.x.len() {
                    st.x[i] = st.x[i] - eta * st.m[i] - decay * st.x[i];
                }
            }
            BaseRule::AdamW => {
                let t = st.t;
                st.m = st.m.zip_map(g, |m, gi| cfg.beta1 * m + (one - cfg.beta1) * gi);
                st.v = st
                    .v
                    .zip_map(g, |v, gi| cfg.beta2 * v + (one - cfg.beta2) * gi * gi);
                let m_bc = one - cfg.beta1.powi(t as i32);
                let v_bc = one - cfg.beta2.powi(t as i32);
                for i in 0..st.x.len() {
                    let m_bar = st.m[i] / m_bc;
                    let v_bar = st.v[i] / v_bc;
                    st.x[i] =
                        st.x[i] - eta * m_bar / (v_bar.sqrt() + cfg.epsilon) - decay * st.x[i];
                }
            }
        }
    }

    fn adahessian_step(
        &mut self,
        obj: &dyn Objective<R>,
        batch: &Batch,
        rng: &mut RngStream,
        eta: R,
    ) -> Result<bool> {
        let t = self.state.t;
        let g = obj
            .batch_grad(&self.state.x, batch)
            .map_err(|e| diverged(t, "gradient", e))?;
        self.state.gc_count += 1;
        let x_here = self.state.x.clone();
        let est = hutchinson_diag(
            |v| obj.batch_hvp(&x_here, v, batch),
            x_here.len(),
            self.cfg.n_hutch,
            rng,
        )
        .map_err(|e| diverged(t, "hessian estimate", e))?;
        self.state.hvp_count += est.hvp_count;

        let st = &mut self.state;
        let cfg = &self.cfg;
        let one = R::one();
        st.m = st.m.zip_map(&g, |m, gi| cfg.beta1 * m + (one - cfg.beta1) * gi);
        // Squares keep v >= 0 even though raw Hessian entries may be negative.
        st.v = st
            .v
            .zip_map(&est.values, |v, h| cfg.beta2 * v + (one - cfg.beta2) * h * h);
        let m_bc = one - cfg.beta1.powi(t as i32);
        let v_bc = one - cfg.beta2.powi(t as i32);
        let decay = eta * cfg.weight_decay;
        for i in 0..st.x.len() {
            let m_bar = st.m[i] / m_bc;
            let v_bar = st.v[i] / v_bc;
            st.x[i] = st.x[i] - eta * m_bar / (v_bar.sqrt() + cfg.epsilon) - decay * st.x[i];
        }
        Ok(true)
    }

    fn sophiah_step(
        &mut self,
        obj: &dyn Objective<R>,
        batch: &Batch,
        rng: &mut RngStream,
        eta: R,
    ) -> Result<bool> {
        let t = self.state.t;
        let g = obj
            .batch_grad(&self.state.x, batch)
            .map_err(|e| diverged(t, "gradient", e))?;
        self.state.gc_count += 1;

        let mut refreshed = false;
        if refresh_due(t, self.cfg.k) {
            let x_here = self.state.x.clone();
            let est = hutchinson_diag(
                |v| obj.batch_hvp(&x_here, v, batch),
                x_here.len(),
                self.cfg.n_hutch,
                rng,
            )
            .map_err(|e| diverged(t, "hessian estimate", e))?;
            self.state.hvp_count += est.hvp_count;
            let cfg = &self.cfg;
            let one = R::one();
            // Hard floor before averaging: negative or tiny entries are
            // replaced, not reflected.
            self.state.d = self.state.d.zip_map(&est.values, |d, h| {
                cfg.beta2 * d + (one - cfg.beta2) * h.max(cfg.hessian_floor)
            });
            refreshed = true;
        }

        let st = &mut self.state;
        let cfg = &self.cfg;
        let one = R::one();
        st.m = st.m.zip_map(&g, |m, gi| cfg.beta1 * m + (one - cfg.beta1) * gi);
        let m_bc = one - cfg.beta1.powi(t as i32);
        let decay = eta * cfg.weight_decay;
        for i in 0..st.x.len() {
            let m_bar = st.m[i] / m_bc;
            let ratio = m_bar / st.d[i].max(cfg.hessian_floor);
            let clipped = ratio.min(cfg.clip_threshold).max(-cfg.clip_threshold);
            st.x[i] = st.x[i] - eta * clipped - decay * st.x[i];
        }
        Ok(refreshed)
    }
}

#[derive(Copy, Clone)]
enum BaseRule {
    Sgd,
    AdamW,
}

fn diverged(step: u64, quantity: &str, source: Error) -> Error {
    match source {
        Error::NonFinite { context } => Error::Diverged {
            step,
            quantity: format!("{quantity} ({context})"),
        },
        other => other,
    }
}
