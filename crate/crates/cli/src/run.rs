//! Executes the pipeline declared in a config and assembles the report.

use crate::config::{ExperimentConfig, Measure, ResourceKind, Step};
use crate::families::FamilyStore;
use crate::{ext_json, CliError};
use compdiv_core::approx::{bernstein_k, run_trials, HullElement};
use compdiv_core::circuits::EffectFamily;
use compdiv_core::divergences as dv;
use compdiv_core::hyptest::{stein_sequence, TensorPowerBuilder};
use compdiv_core::qmatrix::DensityMatrix;
use compdiv_core::resources::{check_continuity, resource_bracket, sep_candidates, BracketOptions, ResourceMeasure};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct StepOutcome {
    pub step: usize,
    pub op: String,
    pub result: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub results: Vec<StepOutcome>,
    pub timings_ms: Vec<f64>,
    pub cache_events: Vec<Value>,
}

impl RunReport {
    /// Everything except timings and cache activity; reproducible bit for bit.
    pub fn body(&self) -> Value {
        json!({
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "results": self.results,
        })
    }
}

pub fn qubits(s: &DensityMatrix) -> Result<usize, CliError> {
    s.num_qubits().ok_or_else(|| CliError::Config("state is not a qubit register".into()))
}

pub fn divergence_value(
    measure: Measure,
    alpha: Option<f64>,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    f: &EffectFamily,
) -> Result<Value, CliError> {
    let r = match measure {
        Measure::Tracedist => dv::comp_trace_distance(rho, sigma, f)?,
        Measure::Renyi => {
            let a = alpha.ok_or_else(|| CliError::Config("renyi needs alpha".into()))?;
            dv::measured_renyi(rho, sigma, f, a)?
        }
        Measure::Relent => dv::measured_relative_entropy(rho, sigma, f)?,
        Measure::Maxdiv => dv::measured_max_divergence(rho, sigma, f)?,
        Measure::Conic => dv::conic_max_divergence(rho, sigma, f)?,
        Measure::Fidelity => dv::comp_fidelity(rho, sigma, f)?,
        Measure::Hilbert => {
            let v = dv::hilbert_metric(rho, sigma, f)?;
            return Ok(json!({ "measure": measure, "value": ext_json(v) }));
        }
    };
    Ok(json!({ "measure": measure, "alpha": alpha, "value": ext_json(r.value), "argopt": r.argopt }))
}

fn resource_kind(k: ResourceKind) -> ResourceMeasure {
    match k {
        ResourceKind::Relent => ResourceMeasure::Relent,
        ResourceKind::Max => ResourceMeasure::Max,
    }
}

fn run_step(step: &Step, c: &ExperimentConfig, store: &mut FamilyStore, base: &Path) -> Result<Value, CliError> {
    let seed = c.seed;
    Ok(match step {
        Step::BuildFamily { n, extras } => {
            let f = store.family(*n, extras)?;
            json!({
                "n": n,
                "budget": f.budget(),
                "size": f.len(),
                "span_rank": f.span_rank(),
                "flags": f.flags(),
                "gate_set_hash": store.gate_set.hash(),
            })
        }
        Step::Divergence { n, measure, alpha, rho, sigma, extras } => {
            let f = store.family(*n, extras)?;
            divergence_value(*measure, *alpha, &rho.resolve(seed, base)?, &sigma.resolve(seed, base)?, &f)?
        }
        Step::ApproxTrial { n, eps, trials, indices, weights } => {
            let f = store.family(*n, &[])?;
            let h = HullElement::new(weights.clone(), indices.clone())?;
            let k = bernstein_k(*n, 2, *eps)?;
            serde_json::to_value(run_trials(&h, &f, k, *eps, *trials, seed)?)?
        }
        Step::Stein { rho, sigma, eps, m_max, extras } => {
            let (r, s) = (rho.resolve(seed, base)?, sigma.resolve(seed, base)?);
            let base_f = store.family(qubits(&r)?, extras)?;
            let mut b = TensorPowerBuilder::new(base_f, store.poly.clone(), store.options.family_cap);
            serde_json::to_value(stein_sequence(&r, &s, &mut b, *eps, *m_max)?)?
        }
        Step::Resource { n_a, n_b, rho, measure, samples, extras } => {
            let f = store.family(n_a + n_b, extras)?;
            let free = sep_candidates(*n_a, *n_b, *samples, seed)?;
            let b = resource_bracket(&rho.resolve(seed, base)?, &free, &f, resource_kind(*measure), BracketOptions::default())?;
            serde_json::to_value(b)?
        }
        Step::Continuity { n_a, n_b, rho, rho2, samples, extras } => {
            let f = store.family(n_a + n_b, extras)?;
            let free = sep_candidates(*n_a, *n_b, *samples, seed)?;
            let reference = free.named("maximally_mixed").expect("always tagged").clone();
            let chk = check_continuity(&rho.resolve(seed, base)?, &rho2.resolve(seed, base)?, &free, &f, &reference)?;
            let mut v = serde_json::to_value(&chk)?;
            v["holds"] = json!(chk.holds(c.tolerances.inequality));
            v
        }
    })
}

fn op_name(step: &Step) -> String {
    let v = serde_json::to_value(step).expect("serializable");
    v["op"].as_str().unwrap_or("unknown").to_string()
}

/// Runs every pipeline step in order. Relative state paths resolve against
/// `base`.
pub fn run(c: &ExperimentConfig, base: &Path, cache_dir: Option<PathBuf>) -> Result<RunReport, CliError> {
    c.validate()?;
    let mut store = FamilyStore::from_config(c, cache_dir)?;
    let mut results = Vec::new();
    let mut timings_ms = Vec::new();
    for (i, step) in c.pipeline.iter().enumerate() {
        let t = Instant::now();
        let result = run_step(step, c, &mut store, base)?;
        timings_ms.push(t.elapsed().as_secs_f64() * 1e3);
        results.push(StepOutcome { step: i, op: op_name(step), result });
    }
    let cache_events = store.events.iter().map(|(k, e)| json!({ "family": k, "event": e })).collect();
    Ok(RunReport {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: c.hash(),
        seed: c.seed,
        results,
        timings_ms,
        cache_events,
    })
}
