//! Line-oriented `key = value` configuration with dotted section keys.
//!
//! Blank lines and `#` comments are ignored. Every key must be consumed by
//! the active subcommand; unknown keys are rejected with their line number,
//! missing required keys and type mismatches are reported by key name.
//! The full key list is documented in the repository README.

use std::collections::BTreeMap;
use std::path::PathBuf;

use optlab_core::optimizers::{Method, OptimizerConfig, Schedule};
use optlab_core::objectives::{Activation, LossKind};

use crate::{HarnessError, Result};

/// Parsed-but-untyped config: key -> (value, line number).
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    consumed: std::collections::BTreeSet<String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::config(format!(
                    "line {line_no}: expected `key = value`, got {line:?}"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(HarnessError::config(format!("line {line_no}: empty key")));
            }
            if let Some((_, first)) = entries.insert(key.clone(), (value, line_no)) {
                return Err(HarnessError::config(format!(
                    "line {line_no}: duplicate key `{key}` (first set at line {first})"
                )));
            }
        }
        Ok(RawConfig {
            entries,
            consumed: Default::default(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<RawConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        let hit = self.entries.get(key).cloned();
        if hit.is_some() {
            self.consumed.insert(key.to_string());
        }
        hit
    }

    pub fn opt_str(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    pub fn req_str(&mut self, key: &str) -> Result<String> {
        self.opt_str(key)
            .ok_or_else(|| HarnessError::config(format!("missing required key `{key}`")))
    }

    fn typed<T: std::str::FromStr>(&mut self, key: &str, type_name: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                HarnessError::config(format!(
                    "key `{key}` at line {line}: cannot parse {v:?} as {type_name}"
                ))
            }),
        }
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.typed(key, "a number")
    }

    pub fn opt_u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.typed(key, "an integer")
    }

    pub fn opt_usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.typed(key, "an integer")
    }

    pub fn opt_bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.typed(key, "a boolean (true/false)")
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        Ok(self.opt_u64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.opt_usize(key)?.unwrap_or(default))
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        Ok(self.opt_bool(key)?.unwrap_or(default))
    }

    pub fn req_f64(&mut self, key: &str) -> Result<f64> {
        self.opt_f64(key)?
            .ok_or_else(|| HarnessError::config(format!("missing required key `{key}`")))
    }

    /// Comma-separated u64 list.
    pub fn opt_u64_list(&mut self, key: &str) -> Result<Option<Vec<u64>>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| {
                    HarnessError::config(format!(
                        "key `{key}` at line {line}: cannot parse {v:?} as a list of integers"
                    ))
                }),
        }
    }

    /// Comma-separated f64 list.
    pub fn opt_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| {
                    HarnessError::config(format!(
                        "key `{key}` at line {line}: cannot parse {v:?} as a list of numbers"
                    ))
                }),
        }
    }

    /// Fail on any key the subcommand did not consume.
    pub fn finish(self) -> Result<()> {
        for (key, (_, line)) in &self.entries {
            if !self.consumed.contains(key) {
                return Err(HarnessError::config(format!(
                    "unknown key `{key}` at line {line}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    Mixture,
    Logistic,
    Mlp,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Mixture => "mixture",
            ProblemKind::Logistic => "logistic",
            ProblemKind::Mlp => "mlp",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Blobs,
    Teacher,
}

/// Problem block of a train/toy/sharpness config.
#[derive(Clone, Debug)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    // quadratic
    pub dim: usize,
    pub cond: f64,
    pub scale: f64,
    // dataset problems
    pub data: Option<PathBuf>,
    pub generator: Generator,
    pub n: usize,
    pub p: usize,
    pub classes: usize,
    pub separation: f64,
    pub val_fraction: f64,
    pub noise_fraction: f64,
    pub l2: f64,
    pub hidden: usize,
    pub activation: Activation,
    pub loss: LossKind,
    pub batch_size: usize,
    pub init_scale: f64,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub steps: u64,
    pub seeds: Vec<u64>,
    pub eval_every: u64,
    pub sharpness: bool,
    pub sharpness_rho: f64,
    pub sharpness_mc: usize,
    pub trace_samples: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig<f64>,
    pub run: RunConfig,
}

fn parse_method(s: &str) -> Result<Method> {
    Ok(match s {
        "sassha" => Method::Sassha,
        "msassha" => Method::MSassha,
        "sam_sgd" => Method::SamSgd,
        "sam_adamw" => Method::SamAdamW,
        "adahessian" => Method::AdaHessian,
        "sophiah" => Method::SophiaH,
        "adamw" => Method::AdamW,
        "sgd" => Method::Sgd,
        other => {
            return Err(HarnessError::config(format!(
                "key `optimizer.method`: unknown method {other:?}"
            )))
        }
    })
}

fn parse_schedule(
    raw: &mut RawConfig,
    prefix: &str,
    base: f64,
    total_hint: u64,
) -> Result<Schedule<f64>> {
    let kind = raw
        .opt_str(&format!("{prefix}_schedule"))
        .unwrap_or_else(|| "constant".into());
    Ok(match kind.as_str() {
        "constant" => Schedule::Constant { base },
        "multistep" => Schedule::MultiStep {
            base,
            milestones: raw
                .opt_u64_list(&format!("{prefix}_milestones"))?
                .unwrap_or_default(),
            gamma: raw.f64_or(&format!("{prefix}_gamma"), 0.1)?,
        },
        "cosine_warmup" => Schedule::CosineWarmup {
            base,
            warmup: raw.u64_or(&format!("{prefix}_warmup"), (total_hint / 10).max(1))?,
        },
        "polynomial" => Schedule::Polynomial {
            base,
            power: raw.f64_or(&format!("{prefix}_power"), 1.0)?,
        },
        "power_decay" => Schedule::PowerDecay {
            base,
            exponent: raw.f64_or(&format!("{prefix}_power"), 0.7)?,
        },
        other => {
            return Err(HarnessError::config(format!(
                "key `{prefix}_schedule`: unknown schedule kind {other:?}"
            )))
        }
    })
}

pub fn parse_problem(raw: &mut RawConfig) -> Result<ProblemConfig> {
    let kind = match raw.req_str("problem.kind")?.as_str() {
        "quadratic" => ProblemKind::Quadratic,
        "mixture" => ProblemKind::Mixture,
        "logistic" => ProblemKind::Logistic,
        "mlp" => ProblemKind::Mlp,
        other => {
            return Err(HarnessError::config(format!(
                "key `problem.kind`: unknown problem {other:?}"
            )))
        }
    };
    let data = raw.opt_str("problem.data").map(PathBuf::from);
    if let Some(path) = &data {
        if !path.exists() {
            return Err(HarnessError::config(format!(
                "key `problem.data`: file {} does not exist",
                path.display()
            )));
        }
    }
    let generator = match raw
        .opt_str("problem.generator")
        .unwrap_or_else(|| "blobs".into())
        .as_str()
    {
        "blobs" => Generator::Blobs,
        "teacher" => Generator::Teacher,
        other => {
            return Err(HarnessError::config(format!(
                "key `problem.generator`: unknown generator {other:?}"
            )))
        }
    };
    let activation = match raw
        .opt_str("problem.activation")
        .unwrap_or_else(|| "tanh".into())
        .as_str()
    {
        "tanh" => Activation::Tanh,
        "rectifier" | "relu" => Activation::Rectifier,
        other => {
            return Err(HarnessError::config(format!(
                "key `problem.activation`: unknown activation {other:?}"
            )))
        }
    };
    let loss = match raw
        .opt_str("problem.loss")
        .unwrap_or_else(|| "cross_entropy".into())
        .as_str()
    {
        "cross_entropy" => LossKind::CrossEntropy,
        "mse" => LossKind::Mse,
        other => {
            return Err(HarnessError::config(format!(
                "key `problem.loss`: unknown loss {other:?}"
            )))
        }
    };

    let cfg = ProblemConfig {
        kind,
        dim: raw.usize_or("problem.dim", 20)?,
        cond: raw.f64_or("problem.cond", 100.0)?,
        scale: raw.f64_or("problem.scale", 0.1)?,
        data,
        generator,
        n: raw.usize_or("problem.n", 1000)?,
        p: raw.usize_or("problem.p", 2)?,
        classes: raw.usize_or("problem.classes", 2)?,
        separation: raw.f64_or("problem.separation", 2.0)?,
        val_fraction: raw.f64_or("problem.val_fraction", 0.0)?,
        noise_fraction: raw.f64_or("problem.noise_fraction", 0.0)?,
        l2: raw.f64_or("problem.l2", 0.0)?,
        hidden: raw.usize_or("problem.hidden", 32)?,
        activation,
        loss,
        batch_size: raw.usize_or("problem.batch_size", 64)?,
        init_scale: raw.f64_or("problem.init_scale", 1.0)?,
    };
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(HarnessError::config(
            "key `problem.val_fraction`: must lie in [0, 1)",
        ));
    }
    if !(0.0..=1.0).contains(&cfg.noise_fraction) {
        return Err(HarnessError::config(
            "key `problem.noise_fraction`: must lie in [0, 1]",
        ));
    }
    if cfg.kind == ProblemKind::Quadratic && cfg.cond < 1.0 {
        return Err(HarnessError::config(
            "key `problem.cond`: condition number must be >= 1",
        ));
    }
    Ok(cfg)
}

pub fn parse_optimizer(raw: &mut RawConfig, total_steps: u64) -> Result<OptimizerConfig<f64>> {
    let method = parse_method(&raw.req_str("optimizer.method")?)?;
    let mut cfg = OptimizerConfig::<f64>::new(method);

    let eta_base = raw.req_f64("optimizer.eta")?;
    cfg.eta = parse_schedule(raw, "optimizer.eta", eta_base, total_steps)?;

    let rho_base = raw.opt_f64("optimizer.rho")?;
    if method.uses_rho() {
        let base = rho_base.ok_or_else(|| {
            HarnessError::config(format!(
                "missing required key `optimizer.rho` (method {} perturbs)",
                method.name()
            ))
        })?;
        cfg.rho = parse_schedule(raw, "optimizer.rho", base, total_steps)?;
    } else if let Some(base) = rho_base {
        // Tolerated but inert for non-perturbing methods.
        cfg.rho = parse_schedule(raw, "optimizer.rho", base, total_steps)?;
    }

    cfg.beta1 = raw.f64_or("optimizer.beta1", cfg.beta1)?;
    cfg.beta2 = raw.f64_or("optimizer.beta2", cfg.beta2)?;
    cfg.k = raw.u64_or("optimizer.k", cfg.k)?;
    cfg.weight_decay = raw.f64_or("optimizer.weight_decay", cfg.weight_decay)?;
    cfg.epsilon = raw.f64_or("optimizer.epsilon", cfg.epsilon)?;
    cfg.n_hutch = raw.usize_or("optimizer.n_hutch", cfg.n_hutch)?;
    cfg.momentum = raw.f64_or("optimizer.momentum", cfg.momentum)?;
    cfg.clip_threshold = raw.f64_or("optimizer.clip_threshold", cfg.clip_threshold)?;
    cfg.hessian_floor = raw.f64_or("optimizer.hessian_floor", cfg.hessian_floor)?;

    cfg.validate()
        .map_err(|e| HarnessError::config(format!("optimizer block: {e}")))?;
    Ok(cfg)
}

pub fn parse_run(raw: &mut RawConfig) -> Result<RunConfig> {
    let steps = raw.u64_or("run.steps", 0)?;
    if steps == 0 {
        return Err(HarnessError::config(
            "missing or zero required key `run.steps` (steps >= 1)",
        ));
    }
    let seeds = raw
        .opt_u64_list("run.seeds")?
        .ok_or_else(|| HarnessError::config("missing required key `run.seeds`"))?;
    if seeds.is_empty() {
        return Err(HarnessError::config("key `run.seeds`: list must be non-empty"));
    }
    Ok(RunConfig {
        steps,
        seeds,
        eval_every: raw.u64_or("run.eval_every", steps.max(1))?,
        sharpness: raw.bool_or("run.sharpness", false)?,
        sharpness_rho: raw.f64_or("run.sharpness_rho", 0.1)?,
        sharpness_mc: raw.usize_or("run.sharpness_mc", 100)?,
        trace_samples: raw.usize_or("run.trace_samples", 100)?,
    })
}

/// Parse a full train config. `seed_override` replaces the seed list.
pub fn parse_experiment(mut raw: RawConfig, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let mut run = parse_run(&mut raw)?;
    if let Some(seed) = seed_override {
        run.seeds = vec![seed];
    }
    let problem = parse_problem(&mut raw)?;
    let optimizer = parse_optimizer(&mut raw, run.steps)?;
    raw.finish()?;
    Ok(ExperimentConfig {
        problem,
        optimizer,
        run,
    })
}

impl ExperimentConfig {
    /// Fully resolved key/value pairs (defaults included) for the manifest.
    pub fn resolved_pairs(&self) -> Vec<(String, String)> {
        let p = &self.problem;
        let o = &self.optimizer;
        let r = &self.run;
        let mut out: Vec<(String, String)> = vec![
            ("problem.kind".into(), p.kind.name().into()),
            ("problem.dim".into(), p.dim.to_string()),
            ("problem.cond".into(), p.cond.to_string()),
            ("problem.scale".into(), p.scale.to_string()),
            (
                "problem.data".into(),
                p.data
                    .as_ref()
                    .map(|q| q.display().to_string())
                    .unwrap_or_default(),
            ),
            (
                "problem.generator".into(),
                match p.generator {
                    Generator::Blobs => "blobs".into(),
                    Generator::Teacher => "teacher".to_string(),
                },
            ),
            ("problem.n".into(), p.n.to_string()),
            ("problem.p".into(), p.p.to_string()),
            ("problem.classes".into(), p.classes.to_string()),
            ("problem.separation".into(), p.separation.to_string()),
            ("problem.val_fraction".into(), p.val_fraction.to_string()),
            ("problem.noise_fraction".into(), p.noise_fraction.to_string()),
            ("problem.l2".into(), p.l2.to_string()),
            ("problem.hidden".into(), p.hidden.to_string()),
            (
                "problem.activation".into(),
                match p.activation {
                    Activation::Tanh => "tanh".into(),
                    Activation::Rectifier => "rectifier".to_string(),
                },
            ),
            (
                "problem.loss".into(),
                match p.loss {
                    LossKind::CrossEntropy => "cross_entropy".into(),
                    LossKind::Mse => "mse".to_string(),
                },
            ),
            ("problem.batch_size".into(), p.batch_size.to_string()),
            ("problem.init_scale".into(), p.init_scale.to_string()),
            ("optimizer.method".into(), o.method.name().into()),
            ("optimizer.eta".into(), format!("{:?}", o.eta)),
            ("optimizer.rho".into(), format!("{:?}", o.rho)),
            ("optimizer.beta1".into(), o.beta1.to_string()),
            ("optimizer.beta2".into(), o.beta2.to_string()),
            ("optimizer.k".into(), o.k.to_string()),
            ("optimizer.weight_decay".into(), o.weight_decay.to_string()),
            ("optimizer.epsilon".into(), o.epsilon.to_string()),
            ("optimizer.n_hutch".into(), o.n_hutch.to_string()),
            ("optimizer.momentum".into(), o.momentum.to_string()),
            ("optimizer.clip_threshold".into(), o.clip_threshold.to_string()),
            ("optimizer.hessian_floor".into(), o.hessian_floor.to_string()),
            ("run.steps".into(), r.steps.to_string()),
            (
                "run.seeds".into(),
                r.seeds
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("run.eval_every".into(), r.eval_every.to_string()),
            ("run.sharpness".into(), r.sharpness.to_string()),
            ("run.sharpness_rho".into(), r.sharpness_rho.to_string()),
            ("run.sharpness_mc".into(), r.sharpness_mc.to_string()),
            ("run.trace_samples".into(), r.trace_samples.to_string()),
        ];
        out.sort();
        out
    }

    /// FNV-1a hash of the resolved problem block; stored in checkpoints so
    /// a saved parameter vector is only reloaded against the same problem.
    pub fn problem_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, v) in self.resolved_pairs() {
            if !k.starts_with("problem.") {
                continue;
            }
            for b in k.bytes().chain(v.bytes()) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        "problem.kind = quadratic\noptimizer.method = sassha\noptimizer.eta = 0.1\noptimizer.rho = 0.05\nrun.steps = 100\nrun.seeds = 1\n".to_string()
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let raw = RawConfig::parse(&minimal()).unwrap();
        let cfg = parse_experiment(raw, None).unwrap();
        assert_eq!(cfg.optimizer.beta1, 0.9);
        assert_eq!(cfg.optimizer.beta2, 0.999);
        assert_eq!(cfg.optimizer.k, 10);
        assert_eq!(cfg.optimizer.epsilon, 1e-8);
        assert_eq!(cfg.run.seeds, vec![1]);
    }

    #[test]
    fn zero_k_is_rejected() {
        let text = format!("{}optimizer.k = 0\n", minimal());
        let raw = RawConfig::parse(&text).unwrap();
        let err = parse_experiment(raw, None).unwrap_err();
        assert!(err.to_string().contains("k"), "{err}");
    }

    #[test]
    fn missing_rho_names_the_key() {
        let text = "problem.kind = quadratic\noptimizer.method = sassha\noptimizer.eta = 0.1\nrun.steps = 10\nrun.seeds = 1\n";
        let raw = RawConfig::parse(text).unwrap();
        let err = parse_experiment(raw, None).unwrap_err();
        assert!(err.to_string().contains("optimizer.rho"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = format!("{}optimizer.bogus = 3\n", minimal());
        let raw = RawConfig::parse(&text).unwrap();
        let err = parse_experiment(raw, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("optimizer.bogus") && msg.contains("line 7"), "{msg}");
    }

    #[test]
    fn type_mismatch_names_key_and_line() {
        let text = "problem.kind = quadratic\noptimizer.method = sgd\noptimizer.eta = fast\nrun.steps = 10\nrun.seeds = 1\n";
        let raw = RawConfig::parse(text).unwrap();
        let err = parse_experiment(raw, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("optimizer.eta") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# comment\n\nproblem.kind = quadratic # trailing\noptimizer.method = sgd\noptimizer.eta = 0.1\nrun.steps = 10\nrun.seeds = 1,2\n";
        let raw = RawConfig::parse(text).unwrap();
        let cfg = parse_experiment(raw, None).unwrap();
        assert_eq!(cfg.run.seeds, vec![1, 2]);
    }

    #[test]
    fn seed_override_replaces_list() {
        let raw = RawConfig::parse(&minimal()).unwrap();
        let cfg = parse_experiment(raw, Some(77)).unwrap();
        assert_eq!(cfg.run.seeds, vec![77]);
    }

    #[test]
    fn missing_data_file_is_rejected_at_parse_time() {
        let text = "problem.kind = logistic\nproblem.data = /nonexistent/x.csv\noptimizer.method = sgd\noptimizer.eta = 0.1\nrun.steps = 10\nrun.seeds = 1\n";
        let raw = RawConfig::parse(text).unwrap();
        let err = parse_experiment(raw, None).unwrap_err();
        assert!(err.to_string().contains("does not exist"), "{err}");
    }

    #[test]
    fn problem_hash_tracks_problem_block_only() {
        let a = parse_experiment(RawConfig::parse(&minimal()).unwrap(), None).unwrap();
        let mut b_text = minimal().replace("optimizer.eta = 0.1", "optimizer.eta = 0.2");
        let b = parse_experiment(RawConfig::parse(&b_text).unwrap(), None).unwrap();
        assert_eq!(a.problem_hash(), b.problem_hash());
        b_text = b_text.replace("problem.kind = quadratic", "problem.kind = mixture");
        let c = parse_experiment(RawConfig::parse(&b_text).unwrap(), None).unwrap();
        assert_ne!(a.problem_hash(), c.problem_hash());
    }
}
