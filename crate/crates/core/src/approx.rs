//! Approximating convex combinations of effects by uniform averages of a few
//! sampled generators.

use crate::circuits::{EffectFamily, EffectOperator, Provenance};
use crate::error::{invalid, Result};
use crate::qmatrix::{schatten_norm, ComplexMatrix, HermitianMatrix};
use crate::random::rng;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const WEIGHT_TOL: f64 = 1e-12;

/// Convex combination Σ w_i E_{indices[i]} of family generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullElement {
    weights: Vec<f64>,
    indices: Vec<usize>,
}

impl HullElement {
    pub fn new(weights: Vec<f64>, indices: Vec<usize>) -> Result<Self> {
        if weights.is_empty() || weights.len() != indices.len() {
            return Err(invalid("approx", "weights and indices must be nonempty and of equal length"));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(invalid("approx", "weights must be nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid("approx", format!("weights sum to {s}, not 1")));
        }
        Ok(Self { weights, indices })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn matrix(&self, f: &EffectFamily) -> Result<ComplexMatrix> {
        let mut acc = ComplexMatrix::zeros(f.dim());
        for (&w, &i) in self.weights.iter().zip(&self.indices) {
            let e = f.effects().get(i).ok_or_else(|| invalid("approx", format!("index {i} outside family")))?;
            acc = &acc + &e.m().scale(w);
        }
        Ok(acc)
    }
}

/// ⌈5(n ln d + 1)/ε²⌉ samples suffice for an ε-approximation in operator norm.
pub fn bernstein_k(n: usize, dim_per_site: usize, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("approx", format!("epsilon must lie in (0,1], got {eps}")));
    }
    if dim_per_site < 1 {
        return Err(invalid("approx", "site dimension must be positive"));
    }
    Ok((5.0 * (n as f64 * (dim_per_site as f64).ln() + 1.0) / (eps * eps)).ceil() as u64)
}

fn operator_norm(m: &ComplexMatrix) -> f64 {
    schatten_norm(m, f64::INFINITY).expect("p = ∞ is valid")
}

/// Draws `k` generators i.i.d. from the hull weights and returns their uniform
/// average with its operator-norm distance to the hull element.
pub fn sample_average_approx(h: &HullElement, f: &EffectFamily, k: u64, seed: u64, stream: u64) -> Result<(EffectOperator, f64)> {
    if k == 0 {
        return Err(invalid("approx", "k must be at least 1"));
    }
    let target = h.matrix(f)?;
    let dist = WeightedIndex::new(&h.weights).map_err(|e| invalid("approx", e.to_string()))?;
    let mut r = rng(seed, stream);
    let mut counts = vec![0u64; h.indices.len()];
    for _ in 0..k {
        counts[dist.sample(&mut r)] += 1;
    }
    let mut avg = ComplexMatrix::zeros(f.dim());
    let mut cost = 0;
    for (c, &i) in counts.iter().zip(&h.indices) {
        if *c > 0 {
            let e = &f.effects()[i];
            avg = &avg + &e.m().scale(*c as f64 / k as f64);
            cost = cost.max(e.cost);
        }
    }
    let err = operator_norm(&(&target - &avg));
    let effect = EffectOperator {
        matrix: HermitianMatrix::symmetrized(avg),
        cost,
        provenance: Provenance::Named(format!("sample-average(k={k})")),
    };
    Ok((effect, err))
}

/// 2‖E − E′‖∞, which bounds the diamond distance of the two binary
/// measurement channels.
pub fn measurement_map_bound(e: &EffectOperator, e2: &EffectOperator) -> f64 {
    2.0 * operator_norm(&(e.m() - e2.m()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub k: u64,
    pub eps: f64,
    pub trials: u64,
    pub failures: u64,
    pub median_err: f64,
    pub seed: u64,
    /// Rough gate count of a multiplexed circuit realizing the average.
    pub circuit_estimate: u64,
}

impl TrialSummary {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

/// Runs independent trials (trial `t` uses stream `t`) and counts err > ε.
pub fn run_trials(h: &HullElement, f: &EffectFamily, k: u64, eps: f64, trials: u64, seed: u64) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(invalid("approx", "need at least one trial"));
    }
    let mut errs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| sample_average_approx(h, f, k, seed, t).map(|(_, e)| e))
        .collect::<Result<_>>()?;
    let failures = errs.iter().filter(|&&e| e > eps).count() as u64;
    errs.sort_by(f64::total_cmp);
    let median_err = errs[errs.len() / 2];
    let max_cost = h.indices.iter().map(|&i| f.effects()[i].cost as u64).max().unwrap_or(0);
    let logk = 64 - k.leading_zeros() as u64;
    Ok(TrialSummary { k, eps, trials, failures, median_err, seed, circuit_estimate: (max_cost + 1) * k * logk })
}
