//! Divergences optimized over the binary measurements of an effect family.
//!
//! Every quantity depends on the states only through the induced outcome
//! probabilities `p_E = Tr[Eρ]`, `q_E = Tr[Eσ]`, so each operation has a
//! `*_probs` form taking those tables directly. Optimization runs over the
//! family's generators only; ties go to the lowest effect index.

use crate::circuits::EffectFamily;
use crate::error::{invalid, precondition, Error, Result};
use crate::qmatrix::DensityMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Probabilities at or below this are treated as exactly zero.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    /// Value in bits (or a plain number for norms and fidelities); may be +∞.
    #[serde(with = "crate::divergences::ext_real")]
    pub value: f64,
    /// Index of the optimizing effect in the family.
    pub argopt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<f64>>,
}

/// Serializes +∞ as `{"inf": true}` and finite values as numbers.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Inf { inf: bool },
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            Repr::Inf { inf: *x > 0.0 }.serialize(s)
        } else {
            Repr::Finite(*x).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Finite(x) => x,
            Repr::Inf { inf: true } => f64::INFINITY,
            Repr::Inf { inf: false } => f64::NEG_INFINITY,
        })
    }
}

/// Tr[Eρ] for every effect, clamped to [0, 1].
pub fn effect_probabilities(f: &EffectFamily, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if f.dim() != rho.dim() {
        return Err(Error::Dimension(format!("family dim {} vs state dim {}", f.dim(), rho.dim())));
    }
    Ok(f.effects().par_iter().map(|e| rho.expectation(e.m()).clamp(0.0, 1.0)).collect())
}

fn tables(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<(Vec<f64>, Vec<f64>)> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    if f.is_empty() {
        return Err(invalid("divergences", "empty family"));
    }
    Ok((effect_probabilities(f, rho)?, effect_probabilities(f, sigma)?))
}

fn require_closed(f: &EffectFamily) -> Result<()> {
    if !f.flags().complement_closed {
        return Err(precondition("divergences", "family is not complement-closed"));
    }
    Ok(())
}

fn argmax(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

fn argmin(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v < best.0 {
            best = (v, i);
        }
    }
    best
}

fn result(values: Vec<f64>, maximize: bool) -> DivergenceResult {
    let (value, argopt) = if maximize { argmax(&values) } else { argmin(&values) };
    DivergenceResult { value, argopt, diagnostics: None }
}

impl DivergenceResult {
    /// Attaches the per-effect values the optimum was taken over.
    pub fn with_diagnostics(mut self, values: Vec<f64>) -> Self {
        self.diagnostics = Some(values);
        self
    }
}

/// Classical Rényi divergence of two distributions in bits, with
/// `alpha == 1` the Kullback–Leibler divergence and `alpha == ∞` the log of
/// the largest likelihood ratio.
pub fn classical_renyi(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let zero = |x: f64| x <= PROB_TOL;
    if alpha == 1.0 {
        let mut acc = 0.0;
        for (&a, &b) in p.iter().zip(q) {
            if zero(a) {
                continue;
            }
            if zero(b) {
                return f64::INFINITY;
            }
            acc += a * (a / b).log2();
        }
        return acc.max(0.0);
    }
    if alpha.is_infinite() {
        let mut best: f64 = 0.0;
        for (&a, &b) in p.iter().zip(q) {
            if zero(a) {
                continue;
            }
            if zero(b) {
                return f64::INFINITY;
            }
            best = best.max(a / b);
        }
        return best.log2().max(0.0);
    }
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if zero(a) {
            continue;
        }
        if zero(b) {
            if alpha > 1.0 {
                return f64::INFINITY;
            }
            continue;
        }
        s += a.powf(alpha) * b.powf(1.0 - alpha);
    }
    if s == 0.0 {
        return f64::INFINITY;
    }
    (s.log2() / (alpha - 1.0)).max(0.0)
}

/// Rényi divergence of the outcome distributions (p₀, p₁) and (q₀, q₁).
pub fn binary_renyi(p: [f64; 2], q: [f64; 2], alpha: f64) -> f64 {
    classical_renyi(&p, &q, alpha)
}

/// Binary KL with outcome-1 probabilities `p` and `q`.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    binary_renyi([p, 1.0 - p], [q, 1.0 - q], 1.0)
}

/// Tr[Eρ]/Tr[Eσ] with 0/0 skipped (`None`) and x/0 = +∞.
pub fn ratio(p: f64, q: f64) -> Option<f64> {
    match (p <= PROB_TOL, q <= PROB_TOL) {
        (true, true) => None,
        (false, true) => Some(f64::INFINITY),
        _ => Some(p / q),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 || alpha == 1.0 || alpha.is_infinite() {
        return Err(invalid("divergences", format!("Rényi order must lie in (0,1)∪(1,∞), got {alpha}")));
    }
    Ok(())
}

pub fn comp_trace_norm_probs(p: &[f64], q: &[f64]) -> DivergenceResult {
    let mut r = result(p.iter().zip(q).map(|(a, b)| 2.0 * (a - b)).collect(), true);
    r.value = r.value.max(0.0);
    r
}

pub fn measured_renyi_probs(p: &[f64], q: &[f64], alpha: f64) -> DivergenceResult {
    result(p.iter().zip(q).map(|(&a, &b)| binary_renyi([a, 1.0 - a], [b, 1.0 - b], alpha)).collect(), true)
}

pub fn measured_max_probs(p: &[f64], q: &[f64]) -> DivergenceResult {
    let v = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let r1 = ratio(a, b).unwrap_or(0.0);
            let r0 = ratio(1.0 - a, 1.0 - b).unwrap_or(0.0);
            r1.max(r0).log2()
        })
        .collect();
    result(v, true)
}

pub fn conic_max_probs(p: &[f64], q: &[f64]) -> DivergenceResult {
    let v = p.iter().zip(q).map(|(&a, &b)| ratio(a, b).map_or(f64::NEG_INFINITY, f64::log2)).collect();
    result(v, true)
}

pub fn comp_fidelity_probs(p: &[f64], q: &[f64]) -> DivergenceResult {
    let v = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let s = (a * b).sqrt() + ((1.0 - a) * (1.0 - b)).max(0.0).sqrt();
            (s * s).min(1.0)
        })
        .collect();
    result(v, false)
}

/// 2·max_E Tr[E(ρ−σ)].
pub fn comp_trace_norm(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<DivergenceResult> {
    let (p, q) = tables(rho, sigma, f)?;
    Ok(comp_trace_norm_probs(&p, &q))
}

/// Half of [`comp_trace_norm`].
pub fn comp_trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<DivergenceResult> {
    let mut r = comp_trace_norm(rho, sigma, f)?;
    r.value *= 0.5;
    Ok(r)
}

/// Smallest error probability of discriminating equiprobable ρ and σ with
/// the family: ½(1 − cΔ).
pub fn min_error_probability(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<f64> {
    Ok(0.5 * (1.0 - comp_trace_distance(rho, sigma, f)?.value))
}

pub fn measured_renyi(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily, alpha: f64) -> Result<DivergenceResult> {
    check_alpha(alpha)?;
    require_closed(f)?;
    let (p, q) = tables(rho, sigma, f)?;
    Ok(measured_renyi_probs(&p, &q, alpha))
}

pub fn measured_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<DivergenceResult> {
    require_closed(f)?;
    let (p, q) = tables(rho, sigma, f)?;
    Ok(measured_renyi_probs(&p, &q, 1.0))
}

pub fn measured_max_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<DivergenceResult> {
    require_closed(f)?;
    let (p, q) = tables(rho, sigma, f)?;
    Ok(measured_max_probs(&p, &q))
}

/// log sup over nonzero generators of Tr[Eρ]/Tr[Eσ].
pub fn conic_max_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<DivergenceResult> {
    let (p, q) = tables(rho, sigma, f)?;
    Ok(conic_max_probs(&p, &q))
}

/// Hilbert projective metric induced by the family's cone.
pub fn hilbert_metric(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<f64> {
    let (p, q) = tables(rho, sigma, f)?;
    Ok(conic_max_probs(&p, &q).value + conic_max_probs(&q, &p).value)
}

pub fn comp_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix, f: &EffectFamily) -> Result<DivergenceResult> {
    require_closed(f)?;
    let (p, q) = tables(rho, sigma, f)?;
    Ok(comp_fidelity_probs(&p, &q))
}
