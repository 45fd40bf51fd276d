//! Command-line interface. Exit codes: 0 success, 1 validation/usage
//! error, 2 when every seed of a training run diverged.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use optlab_core::optimizers::Method;

use crate::config::{parse_experiment, RawConfig};
use crate::experiment::{cost_model, run_experiment, summarize, Termination};
use crate::output;
use crate::problem;
use crate::stability_cmd;
use crate::toy::{self, ToyConfig};
use crate::{HarnessError, Result};

#[derive(Parser)]
#[command(
    name = "optlab",
    version,
    about = "Desk-scale optimization laboratory: train, measure sharpness, analyze stability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (line-oriented `key = value`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the config's seed list with a single seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Output format where applicable.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment for every seed and write records.
    Train(CommonArgs),
    /// Evaluate sharpness metrics of a saved parameter vector.
    Sharpness {
        #[command(flatten)]
        common: CommonArgs,
        /// Binary checkpoint written by `train` (x.bin).
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Analyze linear stability of a stochastic Hessian ensemble.
    Stability(CommonArgs),
    /// Sweep the two-basin landscape over an initialization grid.
    Toy(CommonArgs),
    /// Print the per-step cost model (GC / HVP / GC-equivalents).
    Cost {
        /// Optional config naming one optimizer; omitted = all methods.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Aggregate one or more run directories written by `train`.
    Summary {
        /// Run directories (each containing manifest.json and <seed>/).
        dirs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// Entry point used by `main` and the CLI tests.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train(args) => train(&args),
        Command::Sharpness { common, checkpoint } => sharpness(&common, &checkpoint),
        Command::Stability(args) => stability(&args),
        Command::Toy(args) => toy_cmd(&args),
        Command::Cost { config, format } => cost(config.as_deref(), format),
        Command::Summary { dirs, format } => summary(&dirs, format),
    }
}

fn train(args: &CommonArgs) -> Result<i32> {
    let raw = RawConfig::load(&args.config)?;
    let cfg = parse_experiment(raw, args.seed_override)?;
    let records = run_experiment(&cfg)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    output::write_experiment(&out, &cfg, &records)?;

    for r in &records {
        match &r.termination {
            Termination::Completed => println!(
                "seed {}: completed {} steps, final train loss {:?}, gc {}, hvp {}",
                r.seed,
                r.steps_executed,
                r.final_train_loss().unwrap_or(f64::NAN),
                r.gc_count,
                r.hvp_count
            ),
            Termination::Diverged { step, quantity } => {
                println!("seed {}: diverged at step {step} ({quantity})", r.seed)
            }
        }
    }
    println!("outputs written to {}", out.display());
    if records.iter().all(|r| !r.completed()) {
        return Ok(2);
    }
    Ok(0)
}

fn sharpness(args: &CommonArgs, checkpoint: &Path) -> Result<i32> {
    let raw = RawConfig::load(&args.config)?;
    let cfg = parse_experiment(raw, args.seed_override)?;
    let (x, hash) = output::load_checkpoint(checkpoint)?;
    if hash != cfg.problem_hash() {
        return Err(HarnessError::Output(format!(
            "checkpoint problem hash {hash:#x} does not match the config's {:#x}",
            cfg.problem_hash()
        )));
    }
    let seed = cfg.run.seeds[0];
    let root = optlab_core::numkit::RngStream::new(seed);
    let built = problem::build(&cfg.problem, &mut root.child("data"), &mut root.child("init"))?;
    if x.len() != built.train.dim() {
        return Err(HarnessError::Output(format!(
            "checkpoint dimension {} does not match problem dimension {}",
            x.len(),
            built.train.dim()
        )));
    }
    let report = optlab_core::sharpness::report(
        built.train.as_ref(),
        &x,
        cfg.run.sharpness_rho,
        cfg.run.sharpness_mc,
        cfg.run.trace_samples,
        &mut root.child("metrics"),
    )?;
    let json = output::sharpness_json(&report);
    println!("{}", serde_json::to_string_pretty(&json).unwrap());
    if let Some(out) = &args.out {
        output::write_json(&out.join("sharpness.json"), &json)?;
    }
    Ok(0)
}

fn stability(args: &CommonArgs) -> Result<i32> {
    let raw = RawConfig::load(&args.config)?;
    let job = stability_cmd::parse_job(raw)?;
    let outcome = stability_cmd::run_job(&job)?;
    let json = stability_cmd::report_json(&outcome);
    println!("{}", serde_json::to_string_pretty(&json).unwrap());
    if let Some(out) = &args.out {
        output::write_json(&out.join("stability.json"), &json)?;
        if let Some(traj) = &outcome.surrogate {
            write_text(
                &out.join("surrogate_trajectory.csv"),
                &stability_cmd::trajectory_csv(traj),
            )?;
        }
        if let Some(traj) = &outcome.linearized {
            write_text(
                &out.join("linearized_trajectory.csv"),
                &stability_cmd::trajectory_csv(traj),
            )?;
        }
    }
    Ok(0)
}

fn toy_cmd(args: &CommonArgs) -> Result<i32> {
    let mut raw = RawConfig::load(&args.config)?;
    let toy_cfg = ToyConfig {
        grid: raw.usize_or("toy.grid", 10)?,
        range: raw.f64_or("toy.range", 4.0)?,
    };
    let cfg = parse_experiment(raw, args.seed_override)?;
    let rows = toy::run_sweep(&cfg, &toy_cfg)?;
    let csv = toy::sweep_csv(&rows);
    match &args.out {
        Some(out) => {
            let path = out.join("toy.csv");
            write_text(&path, &csv)?;
            println!("sweep written to {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cost(config: Option<&Path>, format: Format) -> Result<i32> {
    let rows: Vec<(String, u64, u64)> = match config {
        Some(path) => {
            let mut raw = RawConfig::load(path)?;
            // Only the optimizer block matters here; other keys may remain.
            let method_name = raw.req_str("optimizer.method")?;
            let k = raw.u64_or("optimizer.k", default_k(&method_name))?;
            let n_hutch = raw.u64_or("optimizer.n_hutch", 1)?;
            vec![(method_name, k, n_hutch)]
        }
        None => ALL_METHODS
            .iter()
            .map(|m| (m.name().to_string(), default_k(m.name()), 1))
            .collect(),
    };

    let mut entries = Vec::new();
    for (name, k, n_hutch) in rows {
        let method = method_from_name(&name)?;
        let c = cost_model(method, k, n_hutch);
        entries.push((name, k, c));
    }
    match format {
        Format::Csv => {
            println!("method,k,gc_per_step,hvp_per_step,gc_equivalents");
            for (name, k, c) in entries {
                println!(
                    "{name},{k},{},{},{}",
                    c.gc_per_step, c.hvp_per_step, c.gc_equivalents
                );
            }
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = entries
                .iter()
                .map(|(name, k, c)| {
                    serde_json::json!({
                        "method": name,
                        "k": k,
                        "gc_per_step": c.gc_per_step,
                        "hvp_per_step": c.hvp_per_step,
                        "gc_equivalents": c.gc_equivalents,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&items).unwrap());
        }
    }
    Ok(0)
}

const ALL_METHODS: [Method; 8] = [
    Method::Sassha,
    Method::MSassha,
    Method::SamSgd,
    Method::SamAdamW,
    Method::AdaHessian,
    Method::SophiaH,
    Method::AdamW,
    Method::Sgd,
];

fn default_k(method: &str) -> u64 {
    match method {
        "sassha" | "msassha" => 10,
        _ => 1,
    }
}

fn method_from_name(name: &str) -> Result<Method> {
    ALL_METHODS
        .iter()
        .copied()
        .find(|m| m.name() == name)
        .ok_or_else(|| HarnessError::config(format!("unknown method {name:?}")))
}

/// Final metrics extracted from one seed's record.csv.
struct SeedFinal {
    train_loss: Option<f64>,
    val_loss: Option<f64>,
    val_acc: Option<f64>,
}

fn read_record_csv(path: &Path) -> Result<SeedFinal> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    let mut train_loss = None;
    let mut val_loss = None;
    let mut val_acc = None;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 9 {
            continue;
        }
        if let Ok(v) = fields[1].parse::<f64>() {
            train_loss = Some(v);
        }
        if let Ok(v) = fields[7].parse::<f64>() {
            val_loss = Some(v);
        }
        if let Ok(v) = fields[8].parse::<f64>() {
            val_acc = Some(v);
        }
    }
    Ok(SeedFinal {
        train_loss,
        val_loss,
        val_acc,
    })
}

fn summary(dirs: &[PathBuf], format: Format) -> Result<i32> {
    if dirs.is_empty() {
        return Err(HarnessError::config(
            "summary requires at least one run directory",
        ));
    }
    let mut blocks = Vec::new();
    for dir in dirs {
        let manifest_path = dir.join("manifest.json");
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(&manifest_path)
                .map_err(|e| HarnessError::io(manifest_path.display().to_string(), e))?,
        )
        .map_err(|e| HarnessError::Output(format!("manifest parse: {e}")))?;

        let runs = manifest["runs"]
            .as_array()
            .cloned()
            .unwrap_or_default();
        let mut train = Vec::new();
        let mut val = Vec::new();
        let mut acc = Vec::new();
        let mut diverged = 0usize;
        for run in &runs {
            let seed = run["seed"].as_u64().unwrap_or(0);
            let ok = run["termination"]["status"] == "completed";
            if !ok {
                diverged += 1;
                continue;
            }
            let finals = read_record_csv(&dir.join(seed.to_string()).join("record.csv"))?;
            if let Some(v) = finals.train_loss {
                train.push(v);
            }
            if let Some(v) = finals.val_loss {
                val.push(v);
            }
            if let Some(v) = finals.val_acc {
                acc.push(v);
            }
        }
        blocks.push((
            dir.display().to_string(),
            manifest["config"]["optimizer.method"]
                .as_str()
                .unwrap_or("?")
                .to_string(),
            summarize(&train),
            summarize(&val),
            summarize(&acc),
            runs.len() - diverged,
            diverged,
        ));
    }

    match format {
        Format::Csv => {
            println!(
                "dir,method,n_completed,n_diverged,train_loss_mean,train_loss_std,val_loss_mean,val_loss_std,val_acc_mean,val_acc_std"
            );
            for (dir, method, train, val, acc, completed, diverged) in blocks {
                let fmt = |s: Option<crate::experiment::Summary>| match s {
                    Some(s) => format!("{},{}", s.mean, s.std),
                    None => ",".to_string(),
                };
                println!(
                    "{dir},{method},{completed},{diverged},{},{},{}",
                    fmt(train),
                    fmt(val),
                    fmt(acc)
                );
            }
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = blocks
                .into_iter()
                .map(|(dir, method, train, val, acc, completed, diverged)| {
                    let s = |x: Option<crate::experiment::Summary>| match x {
                        Some(s) => serde_json::json!({"mean": s.mean, "std": s.std, "n": s.n}),
                        None => serde_json::Value::Null,
                    };
                    serde_json::json!({
                        "dir": dir,
                        "method": method,
                        "n_completed": completed,
                        "n_diverged": diverged,
                        "train_loss": s(train),
                        "val_loss": s(val),
                        "val_acc": s(acc),
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&items).unwrap());
        }
    }
    Ok(0)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::io(path.display().to_string(), e))
}
