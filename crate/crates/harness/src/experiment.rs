//! Run orchestration: per-seed training loops with derived streams,
//! per-step and per-eval records, summaries, and the cost model.

use std::time::Instant;

use optlab_core::numkit::RngStream;
use optlab_core::objectives::{Batch, BatchSampler};
use optlab_core::optimizers::{Method, Optimizer};
use optlab_core::sharpness::{self, SharpnessReport};
use optlab_core::{Error, Vec64};

use crate::config::ExperimentConfig;
use crate::problem;
use crate::Result;

#[derive(Clone, Debug)]
pub struct StepRow {
    pub step: u64,
    pub train_loss: f64,
    pub eta: f64,
    pub rho: f64,
    pub update_norm: f64,
    pub gc_count: u64,
    pub hvp_count: u64,
}

#[derive(Clone, Debug)]
pub struct EvalRow {
    pub step: u64,
    pub val_loss: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Step index and the quantity that went non-finite.
    Diverged { step: u64, quantity: String },
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub seed: u64,
    pub steps: Vec<StepRow>,
    pub evals: Vec<EvalRow>,
    pub sharpness: Option<SharpnessReport<f64>>,
    pub termination: Termination,
    pub final_x: Vec64,
    pub gc_count: u64,
    pub hvp_count: u64,
    pub steps_executed: u64,
    pub elapsed_secs: f64,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn final_train_loss(&self) -> Option<f64> {
        self.steps.last().map(|r| r.train_loss)
    }

    pub fn final_val_loss(&self) -> Option<f64> {
        self.evals.last().map(|r| r.val_loss)
    }

    pub fn final_val_acc(&self) -> Option<f64> {
        self.evals.last().and_then(|r| r.val_acc)
    }
}

/// Run every seed of the experiment; a diverged seed is recorded, not
/// raised, so the remaining seeds still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.run
        .seeds
        .iter()
        .map(|&seed| run_seed(cfg, seed))
        .collect()
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let started = Instant::now();
    let root = RngStream::new(seed);
    let mut data_rng = root.child("data");
    let mut init_rng = root.child("init");
    let mut opt_rng = root.child("optimizer");
    let mut metrics_rng = root.child("metrics");
    let batch_rng = root.child("batches");

    let problem = problem::build(&cfg.problem, &mut data_rng, &mut init_rng)?;
    let mut sampler = BatchSampler::new(problem.n_train, problem.batch_size, batch_rng)?;
    let mut opt = Optimizer::new(cfg.optimizer.clone(), problem.x0.clone(), cfg.run.steps)?;

    let mut steps = Vec::with_capacity(cfg.run.steps as usize);
    let mut evals = Vec::new();
    let mut termination = Termination::Completed;

    for t in 1..=cfg.run.steps {
        let batch = if problem.n_train == 1 {
            Batch::all(1)
        } else {
            sampler.next_batch()
        };
        match opt.step(problem.train.as_ref(), &batch, &mut opt_rng) {
            Ok(info) => {
                steps.push(StepRow {
                    step: info.step,
                    train_loss: info.loss,
                    eta: info.eta,
                    rho: info.rho,
                    update_norm: info.update_norm,
                    gc_count: opt.state().gc_count,
                    hvp_count: opt.state().hvp_count,
                });
                if t % cfg.run.eval_every == 0 || t == cfg.run.steps {
                    let eval_obj = problem.val.as_deref().unwrap_or(problem.train.as_ref());
                    match eval_obj.value(opt.x()) {
                        Ok(val_loss) => evals.push(EvalRow {
                            step: t,
                            val_loss,
                            val_acc: eval_obj.accuracy(opt.x()),
                        }),
                        Err(Error::NonFinite { .. }) => evals.push(EvalRow {
                            step: t,
                            val_loss: f64::INFINITY,
                            val_acc: None,
                        }),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Err(Error::Diverged { step, quantity }) => {
                termination = Termination::Diverged { step, quantity };
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let sharpness = if cfg.run.sharpness && termination == Termination::Completed {
        Some(sharpness::report(
            problem.train.as_ref(),
            opt.x(),
            cfg.run.sharpness_rho,
            cfg.run.sharpness_mc,
            cfg.run.trace_samples,
            &mut metrics_rng,
        )?)
    } else {
        None
    };

    Ok(RunRecord {
        seed,
        gc_count: opt.state().gc_count,
        hvp_count: opt.state().hvp_count,
        steps_executed: opt.state().t - 1,
        final_x: opt.x().clone(),
        steps,
        evals,
        sharpness,
        termination,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for n = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    Some(Summary { mean, std, n })
}

/// Per-metric summary over the completed seeds of one experiment.
#[derive(Clone, Debug)]
pub struct RecordSummary {
    pub train_loss: Option<Summary>,
    pub val_loss: Option<Summary>,
    pub val_acc: Option<Summary>,
    pub n_completed: usize,
    pub n_diverged: usize,
}

pub fn summarize_records(records: &[RunRecord]) -> RecordSummary {
    let completed: Vec<&RunRecord> = records.iter().filter(|r| r.completed()).collect();
    let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> {
        completed.iter().filter_map(|r| f(r)).collect()
    };
    RecordSummary {
        train_loss: summarize(&collect(&RunRecord::final_train_loss)),
        val_loss: summarize(&collect(&RunRecord::final_val_loss)),
        val_acc: summarize(&collect(&RunRecord::final_val_acc)),
        n_completed: completed.len(),
        n_diverged: records.len() - completed.len(),
    }
}

/// Average per-step cost of a set of runs, in gradient computations (GC),
/// Hessian-vector products (HVP), and GC-equivalents at HVP = 3 GC.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    pub gc_per_step: f64,
    pub hvp_per_step: f64,
    pub gc_equivalents: f64,
}

pub const HVP_GC_RATIO: f64 = 3.0;

pub fn cost_report(records: &[RunRecord]) -> Option<CostReport> {
    let total_steps: u64 = records.iter().map(|r| r.steps_executed).sum();
    if total_steps == 0 {
        return None;
    }
    let gc: u64 = records.iter().map(|r| r.gc_count).sum();
    let hvp: u64 = records.iter().map(|r| r.hvp_count).sum();
    let gc_per_step = gc as f64 / total_steps as f64;
    let hvp_per_step = hvp as f64 / total_steps as f64;
    Some(CostReport {
        gc_per_step,
        hvp_per_step,
        gc_equivalents: gc_per_step + HVP_GC_RATIO * hvp_per_step,
    })
}

/// Analytic per-step cost of a method (the wall-clock-free model).
pub fn cost_model(method: Method, k: u64, n_hutch: u64) -> CostReport {
    let gc = method.gc_per_step() as f64;
    let hvp = method.hvp_per_step(k, n_hutch);
    CostReport {
        gc_per_step: gc,
        hvp_per_step: hvp,
        gc_equivalents: gc + HVP_GC_RATIO * hvp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_experiment, RawConfig};

    fn quick_cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            "problem.kind = quadratic\nproblem.dim = 6\nproblem.cond = 10\noptimizer.method = sassha\noptimizer.eta = 0.05\noptimizer.rho = 0.01\nrun.steps = 50\nrun.seeds = 1,2,3\n{extra}"
        );
        parse_experiment(RawConfig::parse(&text).unwrap(), None).unwrap()
    }

    #[test]
    fn seeds_fan_out_with_independent_streams() {
        let records = run_experiment(&quick_cfg("")).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.completed()));
        // Different seeds must not produce identical trajectories.
        assert_ne!(
            records[0].final_x.as_slice(),
            records[1].final_x.as_slice()
        );
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let cfg = quick_cfg("");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.final_x.as_slice(), rb.final_x.as_slice());
            for (sa, sb) in ra.steps.iter().zip(&rb.steps) {
                assert_eq!(sa.train_loss.to_bits(), sb.train_loss.to_bits());
                assert_eq!(sa.update_norm.to_bits(), sb.update_norm.to_bits());
            }
        }
    }

    #[test]
    fn counters_follow_cost_model() {
        let records = run_experiment(&quick_cfg("optimizer.k = 10\n")).unwrap();
        for r in &records {
            assert_eq!(r.gc_count, 100); // 2 GC x 50 steps
            assert_eq!(r.hvp_count, 5); // refresh at t = 1, 11, 21, 31, 41
        }
        let cost = cost_report(&records).unwrap();
        assert!((cost.gc_per_step - 2.0).abs() < 1e-12);
        assert!((cost.hvp_per_step - 0.1).abs() < 1e-12);
        assert!((cost.gc_equivalents - 2.3).abs() < 1e-12);
    }

    #[test]
    fn summary_hand_statistics() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert!((s.mean - 2.0).abs() < 1e-15);
        assert!((s.std - 1.0).abs() < 1e-15);
        assert_eq!(s.n, 3);

        let single = summarize(&[5.0]).unwrap();
        assert_eq!(single.std, 0.0);
        assert_eq!(single.n, 1);
    }

    #[test]
    fn cost_model_matches_published_table() {
        let sassha = cost_model(Method::Sassha, 10, 1);
        assert!((sassha.gc_equivalents - 2.3).abs() < 1e-12);
        let msassha = cost_model(Method::MSassha, 10, 1);
        assert!((msassha.gc_equivalents - 1.3).abs() < 1e-12);
        let sam = cost_model(Method::SamSgd, 1, 1);
        assert!((sam.gc_equivalents - 2.0).abs() < 1e-12);
        let adah = cost_model(Method::AdaHessian, 1, 1);
        assert!((adah.gc_equivalents - 4.0).abs() < 1e-12);
        let first = cost_model(Method::AdamW, 1, 1);
        assert!((first.gc_equivalents - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diverged_seed_is_recorded_not_raised() {
        // A huge learning rate on an ill-conditioned quadratic blows up.
        let text = "problem.kind = quadratic\nproblem.dim = 6\nproblem.cond = 1000\nproblem.scale = 10\noptimizer.method = sgd\noptimizer.eta = 1e6\noptimizer.momentum = 0.0\nrun.steps = 2000\nrun.seeds = 1,2\n";
        let cfg = parse_experiment(RawConfig::parse(text).unwrap(), None).unwrap();
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert!(!r.completed());
            match &r.termination {
                Termination::Diverged { step, .. } => assert!(*step >= 1),
                other => panic!("expected divergence, got {other:?}"),
            }
        }
        let summary = summarize_records(&records);
        assert_eq!(summary.n_diverged, 2);
        assert!(summary.val_loss.is_none());
    }
}
