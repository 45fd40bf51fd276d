//! File outputs: per-seed record CSV (fixed column order), run-level JSON
//! manifest, sharpness reports, and the binary parameter checkpoint.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use optlab_core::numkit::RNG_ALGORITHM;
use optlab_core::sharpness::SharpnessReport;
use optlab_core::Vec64;

use crate::config::ExperimentConfig;
use crate::experiment::{RunRecord, Termination};
use crate::{HarnessError, Result};

/// Fixed record.csv header; per-eval columns are empty on non-eval steps.
pub const RECORD_HEADER: &str =
    "step,train_loss,eta,rho,update_norm,gc_count,hvp_count,val_loss,val_acc";

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
    }
    std::fs::File::create(path).map_err(|e| HarnessError::io(path.display().to_string(), e))
}

pub fn record_csv(record: &RunRecord) -> String {
    let mut evals: BTreeMap<u64, (f64, Option<f64>)> = BTreeMap::new();
    for e in &record.evals {
        evals.insert(e.step, (e.val_loss, e.val_acc));
    }
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for row in &record.steps {
        let (val_loss, val_acc) = match evals.get(&row.step) {
            Some((l, a)) => (
                l.to_string(),
                a.map(|x| x.to_string()).unwrap_or_default(),
            ),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.step,
            row.train_loss,
            row.eta,
            row.rho,
            row.update_norm,
            row.gc_count,
            row.hvp_count,
            val_loss,
            val_acc
        ));
    }
    out
}

pub fn write_record_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(record_csv(record).as_bytes())
        .map_err(|e| HarnessError::io(path.display().to_string(), e))
}

pub fn sharpness_json(report: &SharpnessReport<f64>) -> serde_json::Value {
    serde_json::json!({
        "lambda_max": report.lambda_max,
        "trace": report.trace,
        "dl_grad": report.dl_grad,
        "dl_avg": report.dl_avg,
        "rho": report.rho,
        "n_mc": report.n_mc,
        "flags": {
            "power_not_converged": report.power_not_converged,
            "near_critical": report.near_critical,
        },
    })
}

fn termination_json(t: &Termination) -> serde_json::Value {
    match t {
        Termination::Completed => serde_json::json!({"status": "completed"}),
        Termination::Diverged { step, quantity } => serde_json::json!({
            "status": "diverged",
            "step": step,
            "quantity": quantity,
        }),
    }
}

/// Run-level manifest: resolved config, RNG identifier, software version,
/// and per-seed termination plus timing.
pub fn manifest_json(cfg: &ExperimentConfig, records: &[RunRecord]) -> serde_json::Value {
    let config: BTreeMap<String, String> = cfg.resolved_pairs().into_iter().collect();
    let seeds: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            serde_json::json!({
                "seed": r.seed,
                "termination": termination_json(&r.termination),
                "gc_count": r.gc_count,
                "hvp_count": r.hvp_count,
                "steps_executed": r.steps_executed,
                "elapsed_secs": r.elapsed_secs,
            })
        })
        .collect();
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "rng": RNG_ALGORITHM,
        "problem_hash": cfg.problem_hash(),
        "config": config,
        "runs": seeds,
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Output(format!("json serialization: {e}")))?;
    f.write_all(text.as_bytes())
        .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    f.write_all(b"\n")
        .map_err(|e| HarnessError::io(path.display().to_string(), e))
}

/// Write the full experiment output tree under `out`:
/// `out/<seed>/record.csv`, `out/<seed>/x.bin`, optional
/// `out/<seed>/sharpness.json`, and `out/manifest.json`.
pub fn write_experiment(
    out: &Path,
    cfg: &ExperimentConfig,
    records: &[RunRecord],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for r in records {
        let dir = out.join(r.seed.to_string());
        let csv_path = dir.join("record.csv");
        write_record_csv(&csv_path, r)?;
        written.push(csv_path);
        let ckpt = dir.join("x.bin");
        save_checkpoint(&ckpt, &r.final_x, cfg.problem_hash())?;
        written.push(ckpt);
        if let Some(rep) = &r.sharpness {
            let path = dir.join("sharpness.json");
            write_json(&path, &sharpness_json(rep))?;
            written.push(path);
        }
    }
    let manifest = out.join("manifest.json");
    write_json(&manifest, &manifest_json(cfg, records))?;
    written.push(manifest);
    Ok(written)
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"OPTLAB01";

/// Binary checkpoint: magic, dimension (u64 LE), problem hash (u64 LE),
/// then the raw little-endian f64 parameter values. Round-trips bitwise.
pub fn save_checkpoint(path: &Path, x: &Vec64, problem_hash: u64) -> Result<()> {
    let mut f = create(path)?;
    let io = |e| HarnessError::io(path.display().to_string(), e);
    f.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    f.write_all(&(x.len() as u64).to_le_bytes()).map_err(io)?;
    f.write_all(&problem_hash.to_le_bytes()).map_err(io)?;
    for &v in x.iter() {
        f.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Vec64, u64)> {
    let mut f =
        std::fs::File::open(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)
        .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    let fail = |msg: &str| HarnessError::Output(format!("checkpoint {}: {msg}", path.display()));
    if bytes.len() < 24 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(fail("bad magic or truncated header"));
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let hash = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if bytes.len() != 24 + 8 * dim {
        return Err(fail("length does not match recorded dimension"));
    }
    let mut data = Vec::with_capacity(dim);
    for chunk in bytes[24..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok((Vec64::from_vec(data), hash))
}
