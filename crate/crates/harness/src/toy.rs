//! Two-basin landscape sweep: run the configured optimizer from every
//! point of an initialization grid and record the basin each run settles
//! in, together with the exact Hessian trace at the endpoint.

use optlab_core::numkit::{RngStream, Vector};
use optlab_core::objectives::{Batch, GaussianMixtureLandscape};
use optlab_core::optimizers::Optimizer;
use optlab_core::Error;

use crate::config::{ExperimentConfig, ProblemKind};
use crate::{HarnessError, Result};

#[derive(Clone, Debug)]
pub struct ToyRow {
    pub init: [f64; 2],
    pub final_point: [f64; 2],
    /// Index of the nearest component mean (0 = sharp, 1 = flat in the
    /// canonical spec); None when the run diverged.
    pub basin: Option<usize>,
    pub trace: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug)]
pub struct ToyConfig {
    pub grid: usize,
    pub range: f64,
}

pub const TOY_HEADER: &str = "init_x0,init_x1,final_x0,final_x1,basin,trace,status";

/// Sweep a `grid x grid` lattice over `[-range, range]^2`.
pub fn run_sweep(cfg: &ExperimentConfig, toy: &ToyConfig) -> Result<Vec<ToyRow>> {
    if cfg.problem.kind != ProblemKind::Mixture {
        return Err(HarnessError::config(
            "the toy sweep requires problem.kind = mixture",
        ));
    }
    if toy.grid < 2 {
        return Err(HarnessError::config("key `toy.grid`: need at least 2"));
    }
    let landscape = GaussianMixtureLandscape::<f64>::canonical();
    let seed = cfg.run.seeds[0];
    let batch = Batch::all(1);

    let mut rows = Vec::with_capacity(toy.grid * toy.grid);
    for i in 0..toy.grid {
        for j in 0..toy.grid {
            let frac = |k: usize| -> f64 { k as f64 / (toy.grid - 1) as f64 };
            let x0 = -toy.range + 2.0 * toy.range * frac(i);
            let x1 = -toy.range + 2.0 * toy.range * frac(j);
            let init = Vector::from_vec(vec![x0, x1]);

            let mut opt = Optimizer::new(cfg.optimizer.clone(), init.clone(), cfg.run.steps)?;
            let mut rng = RngStream::new(seed).child(&format!("toy-{i}-{j}"));
            let mut diverged = false;
            for _ in 0..cfg.run.steps {
                match opt.step(&landscape, &batch, &mut rng) {
                    Ok(_) => {}
                    Err(Error::Diverged { .. }) => {
                        diverged = true;
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let final_x = opt.x().clone();
            let (basin, trace) = if diverged || !final_x.all_finite() {
                (None, f64::NAN)
            } else {
                (
                    Some(landscape.nearest_mean(&final_x)),
                    landscape.hessian_trace(&final_x),
                )
            };
            rows.push(ToyRow {
                init: [x0, x1],
                final_point: [final_x[0], final_x[1]],
                basin,
                trace,
                diverged,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[ToyRow]) -> String {
    let mut out = String::from(TOY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.init[0],
            r.init[1],
            r.final_point[0],
            r.final_point[1],
            r.basin.map(|b| b.to_string()).unwrap_or_default(),
            r.trace,
            if r.diverged { "diverged" } else { "completed" }
        ));
    }
    out
}
