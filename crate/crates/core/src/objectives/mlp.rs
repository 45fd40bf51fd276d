//! One-hidden-layer network objective built on the autodiff tape.
//!
//! The tape encodes the loss of a *single* example with the example's
//! features and one-hot target wired in as data inputs; batch quantities
//! are means of per-example sweeps. The tape is constructed once and never
//! mutated afterwards.

use crate::autodiff::{NodeId, Tape, TapeBuilder, Workspace};
use crate::error::{Error, Result};
use crate::numkit::{RngStream, Vector};
use crate::scalar::Real;

use super::{check_batch, check_dim, Batch, Dataset, Objective};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Rectifier,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

/// Parameter layout (flattened): W1 [hidden x p], b1 [hidden],
/// W2 [classes x hidden], b2 [classes].
pub struct MlpObjective<R: Real> {
    ds: Dataset<R>,
    hidden: usize,
    activation: Activation,
    loss: LossKind,
    tape: Tape<R>,
    dim: usize,
}

/// Desk-scale guard on the parameter count.
const MAX_DIM: usize = 5000;

impl<R: Real> MlpObjective<R> {
    pub fn new(
        ds: Dataset<R>,
        hidden: usize,
        activation: Activation,
        loss: LossKind,
    ) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::invalid("hidden width must be >= 1"));
        }
        let p = ds.p();
        let c = ds.n_classes();
        let dim = p * hidden + hidden + hidden * c + c;
        if dim > MAX_DIM {
            return Err(Error::invalid(format!(
                "mlp parameter count {dim} exceeds the desk-scale limit {MAX_DIM}"
            )));
        }
        let tape = build_tape(p, hidden, c, activation, loss);
        Ok(MlpObjective {
            ds,
            hidden,
            activation,
            loss,
            tape,
            dim,
        })
    }

    pub fn dataset(&self) -> &Dataset<R> {
        &self.ds
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    /// Standard scaled-Gaussian initialization drawn from the stream:
    /// W1 ~ N(0, 1/p), W2 ~ N(0, 1/hidden), biases zero.
    pub fn init_params(&self, rng: &mut RngStream, scale: R) -> Vector<R> {
        let p = self.ds.p();
        let c = self.ds.n_classes();
        let h = self.hidden;
        let w1_std = scale * R::of(1.0 / (p as f64).sqrt());
        let w2_std = scale * R::of(1.0 / (h as f64).sqrt());
        let mut x = vec![R::zero(); self.dim];
        for slot in x.iter_mut().take(p * h) {
            *slot = w1_std * R::of(rng.next_gaussian());
        }
        let w2_off = p * h + h;
        for slot in x.iter_mut().skip(w2_off).take(h * c) {
            *slot = w2_std * R::of(rng.next_gaussian());
        }
        Vector::from_vec(x)
    }

    /// Forward logits without the tape; used for classification accuracy.
    fn logits(&self, x: &Vector<R>, example: usize, out: &mut [R]) {
        let p = self.ds.p();
        let c = self.ds.n_classes();
        let h = self.hidden;
        let w1 = &x.as_slice()[..p * h];
        let b1 = &x.as_slice()[p * h..p * h + h];
        let w2 = &x.as_slice()[p * h + h..p * h + h + h * c];
        let b2 = &x.as_slice()[p * h + h + h * c..];
        let features = self.ds.feature_row(example);

        let mut act = vec![R::zero(); h];
        for j in 0..h {
            let mut pre = b1[j];
            for (k, &f) in features.iter().enumerate() {
                pre += w1[j * p + k] * f;
            }
            act[j] = match self.activation {
                Activation::Tanh => pre.tanh(),
                Activation::Rectifier => pre.max(R::zero()),
            };
        }
        for (cls, o) in out.iter_mut().enumerate() {
            let mut logit = b2[cls];
            for (j, &a) in act.iter().enumerate() {
                logit += w2[cls * h + j] * a;
            }
            *o = logit;
        }
    }

    fn fill_data(&self, example: usize, data: &mut [R]) {
        let p = self.ds.p();
        data[..p].copy_from_slice(self.ds.feature_row(example));
        for slot in data[p..].iter_mut() {
            *slot = R::zero();
        }
        data[p + self.ds.label(example)] = R::one();
    }
}

fn build_tape<R: Real>(
    p: usize,
    hidden: usize,
    c: usize,
    activation: Activation,
    loss: LossKind,
) -> Tape<R> {
    let dim = p * hidden + hidden + hidden * c + c;
    let mut tb = TapeBuilder::new(dim, p + c);

    let features: Vec<NodeId> = (0..p).map(|k| tb.input(k)).collect();
    let targets: Vec<NodeId> = (0..c).map(|k| tb.input(p + k)).collect();

    let w2_off = p * hidden + hidden;
    let b2_off = w2_off + hidden * c;

    let mut act = Vec::with_capacity(hidden);
    for j in 0..hidden {
        let row: Vec<NodeId> = (0..p).map(|k| tb.param(j * p + k)).collect();
        let dot = tb.dot(&row, &features);
        let bias = tb.param(p * hidden + j);
        let pre = tb.add(dot, bias);
        act.push(match activation {
            Activation::Tanh => tb.tanh(pre),
            Activation::Rectifier => tb.relu(pre),
        });
    }

    let mut logits = Vec::with_capacity(c);
    for cls in 0..c {
        let row: Vec<NodeId> = (0..hidden).map(|j| tb.param(w2_off + cls * hidden + j)).collect();
        let dot = tb.dot(&row, &act);
        let bias = tb.param(b2_off + cls);
        logits.push(tb.add(dot, bias));
    }

    let out = match loss {
        LossKind::Mse => {
            // mean over classes of (logit - target)^2
            let diffs: Vec<NodeId> = logits
                .iter()
                .zip(&targets)
                .map(|(&z, &t)| {
                    let d = tb.sub(z, t);
                    tb.mul(d, d)
                })
                .collect();
            let total = tb.sum(&diffs);
            let inv_c = tb.constant(R::of(1.0 / c as f64));
            tb.mul(inv_c, total)
        }
        LossKind::CrossEntropy => {
            // log-sum-exp(logits) - <target, logits>
            let exps: Vec<NodeId> = logits.iter().map(|&z| tb.exp(z)).collect();
            let total = tb.sum(&exps);
            let lse = tb.log(total);
            let picked = tb.dot(&targets, &logits);
            tb.sub(lse, picked)
        }
    };
    tb.finish(out)
}

impl<R: Real> Objective<R> for MlpObjective<R> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_examples(&self) -> usize {
        self.ds.n()
    }

    fn batch_value(&self, x: &Vector<R>, batch: &Batch) -> Result<R> {
        check_dim(x, self.dim, "mlp value")?;
        check_batch(batch, self.ds.n())?;
        let mut ws = Workspace::new();
        let mut data = vec![R::zero(); self.tape.n_inputs()];
        let mut acc = R::zero();
        for &i in batch.indices() {
            self.fill_data(i, &mut data);
            acc += self.tape.value_with(x.as_slice(), &data, &mut ws)?;
        }
        let v = acc / R::of(batch.len() as f64);
        if !v.is_finite() {
            return Err(Error::non_finite("mlp value"));
        }
        Ok(v)
    }

    fn batch_grad(&self, x: &Vector<R>, batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, self.dim, "mlp grad")?;
        check_batch(batch, self.ds.n())?;
        let mut ws = Workspace::new();
        let mut data = vec![R::zero(); self.tape.n_inputs()];
        let mut grad = vec![R::zero(); self.dim];
        let weight = R::one() / R::of(batch.len() as f64);
        for &i in batch.indices() {
            self.fill_data(i, &mut data);
            self.tape
                .grad_into(x.as_slice(), &data, weight, &mut grad, &mut ws)?;
        }
        let grad = Vector::from_vec(grad);
        if !grad.all_finite() {
            return Err(Error::non_finite("mlp gradient"));
        }
        Ok(grad)
    }

    fn batch_hvp(&self, x: &Vector<R>, v: &Vector<R>, batch: &Batch) -> Result<Vector<R>> {
        check_dim(x, self.dim, "mlp hvp")?;
        check_dim(v, self.dim, "mlp hvp direction")?;
        check_batch(batch, self.ds.n())?;
        let mut ws = Workspace::new();
        let mut data = vec![R::zero(); self.tape.n_inputs()];
        let mut hv = vec![R::zero(); self.dim];
        let weight = R::one() / R::of(batch.len() as f64);
        for &i in batch.indices() {
            self.fill_data(i, &mut data);
            self.tape
                .hvp_into(x.as_slice(), v.as_slice(), &data, weight, &mut hv, &mut ws)?;
        }
        let hv = Vector::from_vec(hv);
        if !hv.all_finite() {
            return Err(Error::non_finite("mlp hvp"));
        }
        Ok(hv)
    }

    fn accuracy(&self, x: &Vector<R>) -> Option<R> {
        let c = self.ds.n_classes();
        let mut logits = vec![R::zero(); c];
        let mut correct = 0usize;
        for i in 0..self.ds.n() {
            self.logits(x, i, &mut logits);
            let mut best = 0usize;
            for k in 1..c {
                if logits[k] > logits[best] {
                    best = k;
                }
            }
            if best == self.ds.label(i) {
                correct += 1;
            }
        }
        Some(R::of(correct as f64 / self.ds.n() as f64))
    }
}
