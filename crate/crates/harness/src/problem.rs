//! Turn a problem config plus per-seed streams into a concrete objective,
//! optional held-out objective, and initial parameter vector.

use optlab_core::numkit::{RngStream, SymMat, Vector};
use optlab_core::objectives::{
    gaussian_blobs, teacher_mlp_data, Dataset, GaussianMixtureLandscape, LogisticRegression,
    MixtureSpec, MlpObjective, Objective, QuadraticObjective,
};
use optlab_core::Vec64;

use crate::config::{Generator, ProblemConfig, ProblemKind};
use crate::Result;

type BuiltObjectives = (Box<dyn Objective<f64>>, Option<Box<dyn Objective<f64>>>, Vec64);

pub struct Problem {
    pub train: Box<dyn Objective<f64>>,
    /// Held-out objective on the validation split, when one exists.
    pub val: Option<Box<dyn Objective<f64>>>,
    /// The landscape itself for mixture problems (basin ids, exact traces).
    pub mixture: Option<GaussianMixtureLandscape<f64>>,
    pub x0: Vec64,
    pub n_train: usize,
    pub batch_size: usize,
}

fn build_dataset(cfg: &ProblemConfig, data_rng: &mut RngStream) -> Result<Dataset<f64>> {
    let ds = match &cfg.data {
        Some(path) => Dataset::load_csv(path)?,
        None => match cfg.generator {
            Generator::Blobs => gaussian_blobs(
                cfg.n,
                cfg.p,
                cfg.classes,
                cfg.separation,
                &mut data_rng.child("blobs"),
            ),
            Generator::Teacher => teacher_mlp_data(
                cfg.n,
                cfg.p,
                cfg.hidden,
                cfg.classes,
                &mut data_rng.child("teacher"),
            ),
        },
    };
    Ok(ds)
}

/// Build the problem for one seed. Label noise touches the training split
/// only; the split keeps the last `val_fraction` of rows for validation.
pub fn build(cfg: &ProblemConfig, data_rng: &mut RngStream, init_rng: &mut RngStream) -> Result<Problem> {
    match cfg.kind {
        ProblemKind::Quadratic => {
            let h = SymMat::random_spd(cfg.dim, cfg.cond, cfg.scale, &mut data_rng.child("spd"));
            let obj = QuadraticObjective::new(h, Vector::zeros(cfg.dim))?;
            let x0 = Vector::from_fn(cfg.dim, |_| cfg.init_scale * init_rng.next_gaussian());
            Ok(Problem {
                train: Box::new(obj),
                val: None,
                mixture: None,
                x0,
                n_train: 1,
                batch_size: 1,
            })
        }
        ProblemKind::Mixture => {
            let obj = GaussianMixtureLandscape::new(MixtureSpec::canonical_two_basin())?;
            let x0 = Vector::from_fn(2, |_| cfg.init_scale * init_rng.next_gaussian());
            Ok(Problem {
                train: Box::new(GaussianMixtureLandscape::new(
                    MixtureSpec::canonical_two_basin(),
                )?),
                val: None,
                mixture: Some(obj),
                x0,
                n_train: 1,
                batch_size: 1,
            })
        }
        ProblemKind::Logistic | ProblemKind::Mlp => {
            let full = build_dataset(cfg, data_rng)?;
            let n_val = (cfg.val_fraction * full.n() as f64).round() as usize;
            let (train_ds, val_ds) = if n_val > 0 && n_val < full.n() {
                let (head, tail) = full.split_tail(n_val)?;
                (head, Some(tail))
            } else {
                (full, None)
            };
            let train_ds = if cfg.noise_fraction > 0.0 {
                train_ds.inject_label_noise(cfg.noise_fraction, &mut data_rng.child("noise"))?
            } else {
                train_ds
            };
            let n_train = train_ds.n();
            let batch_size = cfg.batch_size.clamp(1, n_train);

            let (train, val, x0): BuiltObjectives = match cfg.kind {
                    ProblemKind::Logistic => {
                        let train = LogisticRegression::new(train_ds, cfg.l2)?;
                        let val = val_ds
                            .map(|ds| LogisticRegression::new(ds, cfg.l2))
                            .transpose()?
                            .map(|o| Box::new(o) as Box<dyn Objective<f64>>);
                        let x0 = Vector::from_fn(cfg.p, |_| {
                            cfg.init_scale * init_rng.next_gaussian() / (cfg.p as f64).sqrt()
                        });
                        (Box::new(train), val, x0)
                    }
                    ProblemKind::Mlp => {
                        let train =
                            MlpObjective::new(train_ds, cfg.hidden, cfg.activation, cfg.loss)?;
                        let val = val_ds
                            .map(|ds| MlpObjective::new(ds, cfg.hidden, cfg.activation, cfg.loss))
                            .transpose()?
                            .map(|o| Box::new(o) as Box<dyn Objective<f64>>);
                        let x0 = train.init_params(init_rng, cfg.init_scale);
                        (Box::new(train), val, x0)
                    }
                    _ => unreachable!(),
                };
            Ok(Problem {
                train,
                val,
                mixture: None,
                x0,
                n_train,
                batch_size,
            })
        }
    }
}
