//! Config-driven stability analyzer: parse an ensemble spec, evaluate the
//! stability matrix and the necessary conditions, optionally simulate the
//! surrogate and linearized dynamics.

use optlab_core::numkit::{RngStream, SymMat, Vector};
use optlab_core::stability::{
    necessary_conditions, simulate_linearized_sassha, simulate_surrogate, StabilityReport,
    Trajectory,
};

use crate::config::RawConfig;
use crate::{HarnessError, Result};

#[derive(Clone, Debug)]
pub struct StabilityJob {
    pub ensemble: optlab_core::stability::Ensemble<f64>,
    pub eta: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub simulate: bool,
    pub linearized: bool,
    pub steps: usize,
    pub trajectories: usize,
    pub x0_scale: f64,
    pub seed: u64,
}

/// Matrix syntax: rows separated by `;`, entries by `,` —
/// `ensemble.mat.1 = 1,0;0,2`.
fn parse_matrix(text: &str, key: &str) -> Result<SymMat<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| HarnessError::config(format!("key `{key}`: non-numeric matrix entry")))?;
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(HarnessError::config(format!(
            "key `{key}`: matrix must be square (rows of equal length)"
        )));
    }
    let data = rows.into_iter().flatten().collect();
    SymMat::new(d, data).map_err(|e| HarnessError::config(format!("key `{key}`: {e}")))
}

pub fn parse_job(mut raw: RawConfig) -> Result<StabilityJob> {
    let count = raw
        .opt_usize("ensemble.count")?
        .ok_or_else(|| HarnessError::config("missing required key `ensemble.count`"))?;
    if count == 0 {
        return Err(HarnessError::config("key `ensemble.count`: must be >= 1"));
    }
    let mut mats = Vec::with_capacity(count);
    let mut probs = Vec::with_capacity(count);
    for i in 1..=count {
        let mat_key = format!("ensemble.mat.{i}");
        let text = raw
            .opt_str(&mat_key)
            .ok_or_else(|| HarnessError::config(format!("missing required key `{mat_key}`")))?;
        mats.push(parse_matrix(&text, &mat_key)?);
        let prob_key = format!("ensemble.prob.{i}");
        probs.push(
            raw.opt_f64(&prob_key)?
                .unwrap_or(1.0 / count as f64),
        );
    }
    let ensemble = optlab_core::stability::Ensemble::new(mats, probs)
        .map_err(|e| HarnessError::config(format!("ensemble block: {e}")))?;

    let job = StabilityJob {
        ensemble,
        eta: raw.req_f64("stability.eta")?,
        rho: raw.f64_or("stability.rho", 0.0)?,
        epsilon: raw.req_f64("stability.epsilon")?,
        simulate: raw.bool_or("stability.simulate", false)?,
        linearized: raw.bool_or("stability.linearized", false)?,
        steps: raw.usize_or("stability.steps", 200)?,
        trajectories: raw.usize_or("stability.trajectories", 100)?,
        x0_scale: raw.f64_or("stability.x0_scale", 1.0)?,
        seed: raw.u64_or("stability.seed", 1)?,
    };
    raw.finish()?;
    Ok(job)
}

pub struct StabilityOutcome {
    pub report: StabilityReport<f64>,
    pub commuting: bool,
    pub surrogate: Option<Trajectory<f64>>,
    pub linearized: Option<Trajectory<f64>>,
}

pub fn run_job(job: &StabilityJob) -> Result<StabilityOutcome> {
    let report = necessary_conditions(&job.ensemble, job.eta, job.rho, job.epsilon)?;
    let rng = RngStream::new(job.seed);
    let x0 = Vector::from_fn(job.ensemble.dim(), |_| {
        job.x0_scale * rng.child("x0").next_gaussian()
    });

    let surrogate = if job.simulate {
        Some(simulate_surrogate(
            &job.ensemble,
            job.eta,
            job.rho,
            job.epsilon,
            &x0,
            job.steps,
            job.trajectories,
            &mut rng.child("surrogate"),
        )?)
    } else {
        None
    };
    let linearized = if job.linearized {
        Some(simulate_linearized_sassha(
            &job.ensemble,
            job.eta,
            job.rho,
            job.epsilon,
            &x0,
            job.steps,
            &mut rng.child("linearized"),
        )?)
    } else {
        None
    };
    Ok(StabilityOutcome {
        report,
        commuting: job.ensemble.commuting(),
        surrogate,
        linearized,
    })
}

pub fn report_json(outcome: &StabilityOutcome) -> serde_json::Value {
    let r = &outcome.report;
    let bound = |b: Option<f64>| match b {
        Some(v) => serde_json::json!(v),
        None => serde_json::Value::Null,
    };
    let cond = |c: Option<bool>| match c {
        Some(v) => serde_json::json!(v),
        None => serde_json::json!("inapplicable"),
    };
    serde_json::json!({
        "a": r.a,
        "s2": r.s2,
        "s3": r.s3,
        "s4": r.s4,
        "bounds": {
            "sharpness": bound(r.bounds[0]),
            "s2": bound(r.bounds[1]),
            "s3": bound(r.bounds[2]),
            "s4": bound(r.bounds[3]),
        },
        "conditions": {
            "sharpness": cond(r.conditions[0]),
            "s2": cond(r.conditions[1]),
            "s3": cond(r.conditions[2]),
            "s4": cond(r.conditions[3]),
        },
        "gap_indefinite": r.gap_indefinite,
        "lambda_max_m": r.lambda_max_m,
        "stable": r.stable,
        "eta": r.eta,
        "rho": r.rho,
        "epsilon": r.eps,
        "commuting": outcome.commuting,
        "surrogate_diverged": outcome.surrogate.as_ref().map(|t| t.diverged),
    })
}

pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let mut out = String::from("step,mean_sq_norm\n");
    for (t, v) in traj.mean_sq_norm.iter().enumerate() {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}
