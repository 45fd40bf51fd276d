//! The desk-scale problem suite: deterministic and stochastic objectives
//! with batching, data ingestion, and label-noise injection.

mod dataset;
mod logistic;
mod mixture;
mod mlp;
mod quadratic;
mod sampler;

pub use dataset::{gaussian_blobs, teacher_mlp_data, Dataset};
pub use logistic::LogisticRegression;
pub use mixture::{GaussianMixtureLandscape, MixtureComponent, MixtureSpec};
pub use mlp::{Activation, LossKind, MlpObjective};
pub use quadratic::QuadraticObjective;
pub use sampler::BatchSampler;

use crate::error::{Error, Result};
use crate::numkit::Vector;
use crate::scalar::Real;

/// Index list into a dataset; the unit all stochastic evaluations share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    indices: Vec<usize>,
}

impl Batch {
    /// Validated construction: indices unique and `< n`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Batch> {
        if indices.is_empty() {
            return Err(Error::invalid("batch must be non-empty"));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("batch indices must be unique"));
        }
        if *sorted.last().unwrap() >= n {
            return Err(Error::invalid(format!(
                "batch index {} out of range (n = {n})",
                sorted.last().unwrap()
            )));
        }
        Ok(Batch { indices })
    }

    /// Full batch 0..n.
    pub fn all(n: usize) -> Batch {
        Batch {
            indices: (0..n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A differentiable objective evaluated on batches of examples.
///
/// Batch values are per-example *means*, so learning-rate grids stay
/// comparable across batch sizes. Evaluations are pure: repeating a call on
/// a fixed batch returns identical results, which the sharpness-aware steps
/// rely on (gradient, perturbed gradient, and Hessian probes of one step
/// all share a batch).
pub trait Objective<R: Real> {
    fn dim(&self) -> usize;

    /// Number of examples; deterministic objectives report 1.
    fn n_examples(&self) -> usize;

    fn batch_value(&self, x: &Vector<R>, batch: &Batch) -> Result<R>;
    fn batch_grad(&self, x: &Vector<R>, batch: &Batch) -> Result<Vector<R>>;
    fn batch_hvp(&self, x: &Vector<R>, v: &Vector<R>, batch: &Batch) -> Result<Vector<R>>;

    fn full_batch(&self) -> Batch {
        Batch::all(self.n_examples())
    }

    fn value(&self, x: &Vector<R>) -> Result<R> {
        self.batch_value(x, &self.full_batch())
    }

    fn grad(&self, x: &Vector<R>) -> Result<Vector<R>> {
        self.batch_grad(x, &self.full_batch())
    }

    fn hvp(&self, x: &Vector<R>, v: &Vector<R>) -> Result<Vector<R>> {
        self.batch_hvp(x, v, &self.full_batch())
    }

    /// Classification accuracy over all examples, when the problem has one.
    fn accuracy(&self, _x: &Vector<R>) -> Option<R> {
        None
    }
}

pub(crate) fn check_dim<R: Real>(x: &Vector<R>, dim: usize, context: &'static str) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimMismatch {
            context,
            expected: dim,
            got: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_batch(batch: &Batch, n: usize) -> Result<()> {
    if batch.indices().iter().any(|&i| i >= n) {
        return Err(Error::invalid("batch index out of range for objective"));
    }
    Ok(())
}
