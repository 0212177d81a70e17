//! Invariant battery. Each check returns one row of the pass/fail table; the
//! acceptance tests call the same functions at larger sample counts.

use crate::config::{ExperimentConfig, ExtraEffect};
use crate::families::FamilyStore;
use crate::CliError;
use compdiv_core::approx::{bernstein_k, run_trials, HullElement};
use compdiv_core::circuits::{
    apply_gate, build_effect_family, load_family_cache, placements, save_family_cache, tensor_family, BudgetPolynomial, BuildOptions,
    EffectFamily, GateSet,
};
use compdiv_core::divergences::{
    comp_fidelity, comp_trace_distance, comp_trace_norm, conic_max_divergence, measured_max_divergence,
    measured_relative_entropy, measured_renyi,
};
use compdiv_core::hyptest::{beta_dh_consistency, regularized_sequence, stein_sequence, Quantity, TensorPowerBuilder};
use compdiv_core::qmatrix::{fidelity_info, trace_distance_info, DensityMatrix, C64};
use compdiv_core::random::{haar_vector, random_density, rng};
use compdiv_core::resources::{
    bell_state, check_continuity, resource_measured_relent, sep_candidates, separation_states, sigma_star,
};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A known limitation of the configured family, not a defect.
    ExpectedFail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub status: CheckStatus,
    pub cases: usize,
    pub violations: usize,
    /// Smallest margin by which the checked inequality held.
    #[serde(with = "compdiv_core::divergences::ext_real")]
    pub min_slack: f64,
    pub detail: String,
}

impl CheckRow {
    fn tally(name: &str, cases: usize, violations: usize, min_slack: f64, detail: impl Into<String>) -> Self {
        let status = if violations == 0 && cases > 0 { CheckStatus::Pass } else { CheckStatus::Fail };
        Self { name: name.into(), status, cases, violations, min_slack, detail: detail.into() }
    }

    fn error(name: &str, e: impl std::fmt::Display) -> Self {
        Self { name: name.into(), status: CheckStatus::Fail, cases: 0, violations: 0, min_slack: f64::NAN, detail: e.to_string() }
    }
}

/// Margin tracker: records `rhs − lhs` for claims lhs ≤ rhs.
struct Slack {
    cases: usize,
    violations: usize,
    min: f64,
}

impl Slack {
    fn new() -> Self {
        Self { cases: 0, violations: 0, min: f64::INFINITY }
    }

    fn le(&mut self, lhs: f64, rhs: f64, tol: f64) {
        self.cases += 1;
        let s = if lhs == rhs { 0.0 } else { rhs - lhs };
        if s.is_nan() || s < -tol {
            self.violations += 1;
        }
        self.min = self.min.min(if s.is_nan() { f64::NEG_INFINITY } else { s });
    }

    fn row(self, name: &str, detail: impl Into<String>) -> CheckRow {
        CheckRow::tally(name, self.cases, self.violations, self.min, detail)
    }
}

fn random_pair(qubits: usize, seed: u64, stream: u64) -> (DensityMatrix, DensityMatrix) {
    let d = 1usize << qubits;
    let mut r = rng(seed, stream);
    let ra = 1 + (stream as usize) % d;
    let rb = 1 + (stream as usize / d) % d;
    let rho = random_density(vec![2; qubits], ra, &mut r);
    // every seventh pair has σ = |0…0⟩, which planted effects can annihilate
    if stream % 7 == 6 {
        return (rho, DensityMatrix::basis(&vec![0; qubits]));
    }
    (rho, random_density(vec![2; qubits], rb, &mut r))
}

fn qubits_of(f: &EffectFamily) -> usize {
    f.dim().trailing_zeros() as usize
}

pub fn check_family_invariants(fams: &[EffectFamily]) -> CheckRow {
    let mut s = Slack::new();
    for f in fams {
        let fl = f.flags();
        for ok in [fl.contains_zero, fl.contains_identity, fl.complement_closed] {
            s.le(if ok { 0.0 } else { 1.0 }, 0.0, 0.0);
        }
        for e in f.effects() {
            let lo = e.matrix.min_eigenvalue().unwrap_or(f64::NEG_INFINITY);
            let hi = 1.0 - e.complement().matrix.min_eigenvalue().unwrap_or(f64::NEG_INFINITY);
            s.le(-lo, 0.0, 1e-9);
            s.le(hi, 1.0, 1e-9);
        }
    }
    s.row("family_invariants", "0 and 1 present, complement closed, spectra in [0,1]")
}

pub fn check_informational_completeness(fams: &[EffectFamily]) -> CheckRow {
    let missing: Vec<String> = fams
        .iter()
        .filter(|f| !f.flags().info_complete)
        .map(|f| format!("n={} budget={} rank {}/{}", f.n(), f.budget(), f.span_rank(), f.dim() * f.dim()))
        .collect();
    let mut row = CheckRow::tally("informational_completeness", fams.len(), missing.len(), 0.0, "");
    if !missing.is_empty() {
        row.status = CheckStatus::ExpectedFail;
        row.detail = format!("span deficient: {}", missing.join("; "));
    } else {
        row.detail = "every family spans the operator space".into();
    }
    row
}

/// Saves a family cache, optionally corrupts its header, and reloads it.
pub fn check_cache_integrity(store: &FamilyStore, f: &EffectFamily, corrupt: bool) -> CheckRow {
    let name = "cache_integrity";
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return CheckRow::error(name, e),
    };
    let header = store.header(f.n(), &[]);
    let path = dir.path().join("family.json");
    if let Err(e) = save_family_cache(&path, &header, f) {
        return CheckRow::error(name, e);
    }
    if corrupt {
        let text = std::fs::read_to_string(&path).unwrap_or_default();
        let bad = text.replacen("\"budget\":", "\"budget\":1", 1);
        if std::fs::write(&path, bad).is_err() {
            return CheckRow::error(name, "could not rewrite cache");
        }
    }
    let mut other = header.clone();
    other.gate_set_hash = "0".repeat(64);
    match (load_family_cache(&path, &header), load_family_cache(&path, &other)) {
        (Ok(g), Err(_)) if g.len() == f.len() => {
            CheckRow::tally(name, 2, 0, 0.0, "round trip verified; foreign gate-set hash refused")
        }
        (Err(e), _) => CheckRow::tally(name, 1, 1, f64::NEG_INFINITY, e.to_string()),
        _ => CheckRow::tally(name, 2, 1, f64::NEG_INFINITY, "cache accepted under a foreign gate-set hash"),
    }
}

pub fn check_max_equivalence(fams: &[EffectFamily], pairs: usize, seed: u64, tol: f64) -> CheckRow {
    let mut s = Slack::new();
    let mut infinite = 0;
    for (fi, f) in fams.iter().enumerate() {
        for i in 0..pairs {
            let (a, b) = random_pair(qubits_of(f), seed, (fi * 100_000 + i) as u64);
            match (conic_max_divergence(&a, &b, f), measured_max_divergence(&a, &b, f)) {
                (Ok(c), Ok(m)) => {
                    if c.value.is_infinite() || m.value.is_infinite() {
                        infinite += 1;
                        s.le(if c.value == m.value { 0.0 } else { 1.0 }, 0.0, 0.0);
                    } else {
                        s.le((c.value - m.value).abs(), 0.0, tol);
                    }
                }
                (Err(e), _) | (_, Err(e)) => return CheckRow::error("max_divergence_equivalence", e),
            }
        }
    }
    let detail = format!("{} families, {infinite} infinite cases", fams.len());
    s.row("max_divergence_equivalence", detail)
}

pub fn check_pinsker(fams: &[EffectFamily], pairs: usize, seed: u64, tol: f64) -> CheckRow {
    let name = "computational_pinsker";
    let mut s = Slack::new();
    for (fi, f) in fams.iter().enumerate() {
        for i in 0..pairs {
            let (a, b) = random_pair(qubits_of(f), seed ^ 0x5eed, (fi * 100_000 + i) as u64);
            let tn = match comp_trace_norm(&a, &b, f) {
                Ok(r) => r.value,
                Err(e) => return CheckRow::error(name, e),
            };
            for alpha in [0.5, 1.0, 2.0] {
                let d = if alpha == 1.0 { measured_relative_entropy(&a, &b, f) } else { measured_renyi(&a, &b, f, alpha) };
                match d {
                    Ok(d) => s.le(alpha.min(1.0) * tn * tn / (2.0 * LN_2), d.value, tol),
                    Err(e) => return CheckRow::error(name, e),
                }
            }
        }
    }
    s.row(name, "D_α ≥ min(α,1)·‖ρ−σ‖²/(2 ln 2) for α ∈ {1/2, 1, 2}")
}

pub fn check_fuchs_van_de_graaf(fams: &[EffectFamily], pairs: usize, seed: u64, tol: f64) -> CheckRow {
    let name = "fuchs_van_de_graaf";
    let mut s = Slack::new();
    for (fi, f) in fams.iter().enumerate() {
        for i in 0..pairs {
            let (a, b) = random_pair(qubits_of(f), seed ^ 0xf1de, (fi * 100_000 + i) as u64);
            let (cd, cf) = match (comp_trace_distance(&a, &b, f), comp_fidelity(&a, &b, f)) {
                (Ok(d), Ok(fd)) => (d.value, fd.value),
                (Err(e), _) | (_, Err(e)) => return CheckRow::error(name, e),
            };
            s.le(1.0 - cf.sqrt(), cd, tol);
            s.le(cd, (1.0 - cf).max(0.0).sqrt(), tol);
        }
    }
    s.row(name, "1 − √F ≤ Δ ≤ √(1 − F)")
}

fn max_cost(f: &EffectFamily) -> u32 {
    f.effects().iter().map(|e| e.cost).max().unwrap_or(0)
}

/// Composite family large enough to hold every product of two generators.
pub fn product_family(f: &EffectFamily) -> compdiv_core::Result<EffectFamily> {
    tensor_family(f, f, 2 * max_cost(f) + 1, 1_000_000)
}

pub fn check_super_additivity(f: &EffectFamily, composite: &EffectFamily, trials: usize, seed: u64, tol: f64) -> CheckRow {
    let name = "super_additivity";
    let n = qubits_of(f);
    let mut s = Slack::new();
    for i in 0..trials as u64 {
        let (r1, s1) = random_pair(n, seed ^ 0xadd, 2 * i);
        let (r2, s2) = random_pair(n, seed ^ 0xadd, 2 * i + 1);
        let parts = (conic_max_divergence(&r1, &s1, f), conic_max_divergence(&r2, &s2, f));
        let whole = conic_max_divergence(&r1.tensor(&r2), &s1.tensor(&s2), composite);
        match (parts, whole) {
            ((Ok(a), Ok(b)), Ok(w)) => s.le(a.value + b.value, w.value, tol),
            ((Err(e), _), _) | ((_, Err(e)), _) | (_, Err(e)) => return CheckRow::error(name, e),
        }
    }
    s.row(name, "D(ρ₁⊗ρ₂‖σ₁⊗σ₂) ≥ D(ρ₁‖σ₁) + D(ρ₂‖σ₂) for the conic max-divergence")
}

/// (1/m)·D(ρ^⊗m‖σ^⊗m) ≥ D(ρ‖σ) for the conic max-divergence.
pub fn check_iid_lower_bound(f: &EffectFamily, trials: usize, m_max: usize, seed: u64, tol: f64) -> CheckRow {
    let name = "iid_lower_bound";
    let poly = BudgetPolynomial::new(vec![0, 0, max_cost(f) as i64 + 1]);
    let mut builder = TensorPowerBuilder::new(f.clone(), poly, 1_000_000);
    let mut s = Slack::new();
    for i in 0..trials as u64 {
        let (a, b) = random_pair(qubits_of(f), seed ^ 0x11d, i);
        match regularized_sequence(&a, &b, &mut builder, Quantity::Conic, m_max) {
            Ok(v) => v[1..].iter().for_each(|&x| s.le(v[0], x, tol)),
            Err(e) => return CheckRow::error(name, e),
        }
    }
    s.row(name, format!("m = 2..={m_max}"))
}

/// Sub-additivity with preparation cost κ. States are prepared on a system
/// wire plus a purifier wire, so the composite family acts on two bare data
/// qubits at budget `b` and each factor family on one data qubit with two
/// ancillas at budget `b + κ`.
pub struct SubAdditivity {
    gate_set: GateSet,
    budget: u32,
    composite: EffectFamily,
    factors: BTreeMap<u32, EffectFamily>,
}

impl SubAdditivity {
    pub fn new(gate_set: GateSet, budget: u32) -> compdiv_core::Result<Self> {
        let opts = BuildOptions { n_anc: 0, postprocessing: false, ..Default::default() };
        let composite = build_effect_family(2, &gate_set, &BudgetPolynomial::constant(budget as i64), &opts)?;
        Ok(Self { gate_set, budget, composite, factors: BTreeMap::new() })
    }

    fn factor(&mut self, kappa: u32) -> compdiv_core::Result<&EffectFamily> {
        if !self.factors.contains_key(&kappa) {
            let opts = BuildOptions { n_anc: 2, postprocessing: false, ..Default::default() };
            let poly = BudgetPolynomial::constant((self.budget + kappa) as i64);
            let f = build_effect_family(1, &self.gate_set, &poly, &opts)?;
            self.factors.insert(kappa, f);
        }
        Ok(&self.factors[&kappa])
    }

    /// Runs a random circuit of at most `max_len` gates on (system, purifier)
    /// from |00⟩ and keeps the system. With probability `p_mixed` the circuit
    /// opens with H on the purifier and CNOT onto the system, when available.
    fn prepared(&self, r: &mut impl Rng, max_len: u32, p_mixed: f64) -> DensityMatrix {
        let gs = &self.gate_set;
        let places = placements(gs, 2);
        let mut ops: Vec<(usize, Vec<usize>)> = Vec::new();
        if let (Some(h), Some(cx)) = (gs.index_of("H"), gs.index_of("CNOT")) {
            if max_len >= 2 && r.random_bool(p_mixed) {
                ops = vec![(h, vec![1]), (cx, vec![1, 0])];
            }
        }
        let extra = r.random_range(0..=max_len - ops.len() as u32);
        for _ in 0..extra {
            ops.push(places[r.random_range(0..places.len())].clone());
        }
        let mut u = compdiv_core::qmatrix::ComplexMatrix::identity(4);
        for (g, w) in &ops {
            u = apply_gate(&u, &gs.gates()[*g].unitary, w, 2);
        }
        let v: Vec<C64> = (0..4).map(|i| u.get(i, 0)).collect();
        let cost = ops.len() as u32;
        let joint = DensityMatrix::pure(&v, vec![2, 2]).expect("normalized");
        joint.partial_trace(&[0]).expect("valid subsystem").with_prep_cost(cost)
    }

    pub fn check(&mut self, trials: usize, max_len: u32, seed: u64, tol: f64) -> CheckRow {
        let name = "sub_additivity";
        let mut s = Slack::new();
        let mut finite = 0;
        let mut r = rng(seed, 0x50b);
        for _ in 0..trials {
            let states: Vec<DensityMatrix> =
                [0.25, 0.25, 0.75, 0.75].iter().map(|&p| self.prepared(&mut r, max_len, p)).collect();
            let kappa = states.iter().filter_map(DensityMatrix::prep_cost).max().unwrap_or(0);
            let (r1, r2, s1, s2) = (&states[0], &states[1], &states[2], &states[3]);
            let whole = conic_max_divergence(&r1.tensor(r2), &s1.tensor(s2), &self.composite);
            let f = match self.factor(kappa) {
                Ok(f) => f,
                Err(e) => return CheckRow::error(name, e),
            };
            match (whole, conic_max_divergence(r1, s1, f), conic_max_divergence(r2, s2, f)) {
                (Ok(w), Ok(a), Ok(b)) => {
                    let rhs = a.value + b.value;
                    finite += usize::from(rhs.is_finite() && w.value > 0.0);
                    s.le(w.value, rhs, tol)
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return CheckRow::error(name, e),
            }
        }
        let detail = format!("composite budget {b}, factor budget {b} + κ, κ ≤ {max_len}, {finite} finite nonzero cases", b = self.budget);
        s.row(name, detail)
    }
}

/// Random hull elements of up to three generators, weights summing to one.
pub fn random_hull_elements(f: &EffectFamily, count: usize, seed: u64) -> Vec<HullElement> {
    let mut r = rng(seed, 0xb3);
    (0..count)
        .map(|_| {
            let k = 3.min(f.len());
            let mut idx: Vec<usize> = Vec::new();
            while idx.len() < k {
                let i = r.random_range(0..f.len());
                if !idx.contains(&i) {
                    idx.push(i);
                }
            }
            let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let head: f64 = w[..k - 1].iter().sum();
            w[k - 1] = 1.0 - head;
            HullElement::new(w, idx).expect("normalized weights")
        })
        .collect()
}

pub fn check_bernstein(f: &EffectFamily, hulls: &[HullElement], eps_list: &[f64], trials: u64, seed: u64) -> CheckRow {
    let name = "bernstein_sampling";
    let limit = 2.0 / std::f64::consts::E + 0.1;
    let mut s = Slack::new();
    let mut worst = 0.0f64;
    for &eps in eps_list {
        let k = match bernstein_k(f.n(), 2, eps) {
            Ok(k) => k,
            Err(e) => return CheckRow::error(name, e),
        };
        for h in hulls {
            match run_trials(h, f, k, eps, trials, seed) {
                Ok(t) => {
                    worst = worst.max(t.failure_rate());
                    s.le(t.failure_rate(), limit, 0.0);
                }
                Err(e) => return CheckRow::error(name, e),
            }
        }
    }
    s.row(name, format!("{} hull elements, worst failure rate {worst:.3} against {limit:.3}", hulls.len()))
}

/// Stein converse bound on every entry of every sequence.
pub fn check_stein_converse(
    bases: &[(EffectFamily, usize)],
    pairs: usize,
    eps_list: &[f64],
    seed: u64,
    tol: f64,
) -> CheckRow {
    let name = "stein_converse";
    let mut s = Slack::new();
    let mut truncated = 0;
    for (bi, (f, m_max)) in bases.iter().enumerate() {
        let poly = BudgetPolynomial::new(vec![0, 0, max_cost(f) as i64 + 1]);
        let mut builder = TensorPowerBuilder::new(f.clone(), poly, 1_000_000);
        for i in 0..pairs {
            let (a, b) = random_pair(qubits_of(f), seed ^ 0x57e, (bi * 100_000 + i) as u64);
            for &eps in eps_list {
                match stein_sequence(&a, &b, &mut builder, eps, *m_max) {
                    Ok(seq) => {
                        truncated += usize::from(seq.truncated.is_some());
                        seq.reports.iter().for_each(|r| s.le(r.stein_term, r.bound_term, tol));
                    }
                    Err(e) => return CheckRow::error(name, e),
                }
            }
        }
    }
    s.row(name, format!("−log β / m ≤ (1 + D)/((1 − ε) m); {truncated} sequences truncated"))
}

/// Φ₁ against σ* at ε = 0: the Stein term equals 1 for every m. Families
/// whose Bell-type effects come from H gates carry rounding of order 1e-16,
/// hence `tol`.
pub fn check_bell_stein(bell_family: &EffectFamily, m_max: usize, tol: f64) -> CheckRow {
    let name = "bell_stein_exact";
    let mut builder = TensorPowerBuilder::new(bell_family.clone(), BudgetPolynomial::new(vec![0, 0, 1]), 1_000_000);
    match stein_sequence(&bell_state(1), &sigma_star(1), &mut builder, 0.0, m_max) {
        Ok(seq) => {
            let mut s = Slack::new();
            for r in &seq.reports {
                s.le((r.stein_term - 1.0).abs(), 0.0, tol);
            }
            if seq.reports.len() < m_max {
                s.violations += 1;
            }
            s.row(name, format!("m = 1..={}", seq.reports.len()))
        }
        Err(e) => CheckRow::error(name, e),
    }
}

/// β ≥ (1−ε)2^{−D_H} always; equality for the scaled search where the
/// unscaled optimizer over-satisfies the constraint.
pub fn check_beta_dh(fams: &[EffectFamily], pairs: usize, seed: u64, tol: f64) -> (CheckRow, usize) {
    let name = "beta_dh_consistency";
    let mut s = Slack::new();
    let mut scaled = 0;
    let mut r = rng(seed, 0xbd);
    for (fi, f) in fams.iter().enumerate() {
        for i in 0..pairs {
            let (a, b) = random_pair(qubits_of(f), seed ^ 0xbd, (fi * 100_000 + i) as u64);
            let eps = r.random_range(0.0..0.5);
            match beta_dh_consistency(f, &a, &b, eps) {
                Ok(c) => {
                    s.le(c.predicted, c.beta, 1e-12);
                    if c.slack_optimizer {
                        scaled += 1;
                        s.le((c.beta_scaled - c.predicted).abs(), 0.0, tol);
                    }
                }
                Err(e) => return (CheckRow::error(name, e), 0),
            }
        }
    }
    (s.row(name, format!("{scaled} instances with a slack optimizer")), scaled)
}

pub fn check_bell_resource(cases: &[(usize, EffectFamily)], samples: usize, seed: u64, width: f64) -> CheckRow {
    let name = "bell_resource_value";
    let mut s = Slack::new();
    let mut widths = Vec::new();
    for (n, f) in cases {
        let free = match sep_candidates(*n, *n, samples, seed) {
            Ok(fr) => fr,
            Err(e) => return CheckRow::error(name, e),
        };
        match resource_measured_relent(&bell_state(*n), &free, f) {
            Ok(b) => {
                s.le((b.lower - *n as f64).abs(), 0.0, width);
                s.le((b.upper - *n as f64).abs(), 0.0, width);
                widths.push(format!("n={n}: [{:.9}, {:.9}]", b.lower, b.upper));
            }
            Err(e) => return CheckRow::error(name, e),
        }
    }
    s.row(name, widths.join("; "))
}

/// Perturbed pairs ρ, (1−t)ρ + tτ with t log-uniform in [1e-4, 0.3], SEP
/// candidates on a 1|1 cut and reference I/4.
pub fn check_continuity_bound(f: &EffectFamily, pairs: usize, samples: usize, seed: u64, tol: f64) -> CheckRow {
    let name = "continuity_bound";
    let free = match sep_candidates(1, 1, samples, seed) {
        Ok(fr) => fr,
        Err(e) => return CheckRow::error(name, e),
    };
    let reference = free.named("maximally_mixed").expect("tagged").clone();
    let mut s = Slack::new();
    let mut r = rng(seed, 0xc0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..pairs {
        let rho = if i % 4 == 0 { bell_state(1) } else { random_density(vec![2, 2], 1 + i % 4, &mut r) };
        // the computational distance scales linearly in the mixing weight,
        // so a target ε in [1e-4, 0.3] fixes t
        let (tau, full) = loop {
            let tau = random_density(vec![2, 2], 4, &mut r);
            match comp_trace_distance(&rho, &tau, f) {
                Ok(d) if d.value > 2e-4 => break (tau, d.value),
                Ok(_) => continue,
                Err(e) => return CheckRow::error(name, e),
            }
        };
        let target = 10f64.powf(r.random_range(1.0001e-4f64.log10()..0.3f64.min(full).log10()));
        let rho2 = rho.mix(&tau, target / full).expect("same dimension");
        match check_continuity(&rho, &rho2, &free, f, &reference) {
            Ok(c) => {
                lo = lo.min(c.eps);
                hi = hi.max(c.eps);
                s.le(c.lhs_bound, c.rhs, tol);
            }
            Err(e) => return CheckRow::error(name, e),
        }
    }
    s.row(name, format!("κ = 2, measured ε in [{lo:.2e}, {hi:.2e}]"))
}

/// Orthogonal register states ρ0 ⊥ ρ1: information-theoretic values are
/// fixed, while a budget-0 family cannot tell ψ from φ.
pub fn check_separation(shallow: &EffectFamily, pairs: usize, seed: u64, tol: f64) -> CheckRow {
    let name = "separation_gap";
    let mut s = Slack::new();
    let mut r = rng(seed, 0x5e9);
    for i in 0..pairs {
        let (r0, r1) = if i == 0 {
            (DensityMatrix::basis(&[0]), DensityMatrix::basis(&[1]))
        } else {
            let v = haar_vector(2, &mut r);
            let w = [-v[1].conj(), v[0].conj()];
            (DensityMatrix::pure(&v, vec![2]).expect("unit"), DensityMatrix::pure(&w, vec![2]).expect("unit"))
        };
        let (psi, phi) = match separation_states(&r0, &r1) {
            Ok(p) => p,
            Err(e) => return CheckRow::error(name, e),
        };
        let res = (trace_distance_info(&psi, &phi), fidelity_info(&psi, &phi), comp_trace_distance(&psi, &phi, shallow));
        match res {
            (Ok(td), Ok(fid), Ok(cd)) => {
                s.le((td - 0.5).abs(), 0.0, tol);
                s.le(0.25, fid, tol);
                s.le(fid, 0.75, tol);
                s.le(cd.value, 0.0, tol);
            }
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return CheckRow::error(name, e),
        }
    }
    s.row(name, "Δ = 1/2, 1/4 ≤ F ≤ 3/4, computational Δ = 0 at budget 0")
}

/// Budget-0 family on ψ/φ's three qubits: computational-basis readouts only.
pub fn shallow_family(gate_set: &GateSet) -> compdiv_core::Result<EffectFamily> {
    build_effect_family(3, gate_set, &BudgetPolynomial::constant(0), &BuildOptions { n_anc: 1, ..Default::default() })
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
    pub timings_ms: Vec<f64>,
}

impl VerifyReport {
    pub fn body(&self) -> Value {
        json!({
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "checks": self.checks,
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<28} {:<14} {:>7} {:>10}  {}\n", "check", "status", "cases", "violations", "detail");
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::ExpectedFail => "expected-fail",
            };
            out += &format!("{:<28} {:<14} {:>7} {:>10}  {}\n", c.name, status, c.cases, c.violations, c.detail);
        }
        out
    }
}

/// Runs the battery against the families described by `c`.
pub fn verify_suite(c: &ExperimentConfig, store: &mut FamilyStore) -> Result<VerifyReport, CliError> {
    c.validate()?;
    let (seed, tol, v) = (c.seed, &c.tolerances, &c.verify);
    let gs = c.gate_set.build()?;
    let fams: Vec<EffectFamily> = c.system_sizes.iter().map(|&n| store.family(n, &[])).collect::<Result<_, _>>()?;
    let one = store.family(1, &[])?;
    let bell1 = store.family(2, &[ExtraEffect::Bell { n: 1 }])?;

    let mut checks = Vec::new();
    let mut timings_ms = Vec::new();
    let mut timed = |row: &mut dyn FnMut() -> CheckRow| {
        let t = Instant::now();
        checks.push(row());
        timings_ms.push(t.elapsed().as_secs_f64() * 1e3);
    };
    timed(&mut || check_family_invariants(&fams));
    timed(&mut || check_informational_completeness(&fams));
    timed(&mut || check_cache_integrity(store, &one, v.corrupt_cache));
    timed(&mut || check_max_equivalence(&fams, v.pairs, seed, tol.equality));
    timed(&mut || check_pinsker(&fams, v.pairs, seed, tol.inequality));
    timed(&mut || check_fuchs_van_de_graaf(&fams, v.pairs, seed, tol.inequality));
    timed(&mut || match product_family(&one) {
        Ok(comp) => check_super_additivity(&one, &comp, v.pairs, seed, tol.inequality),
        Err(e) => CheckRow::error("super_additivity", e),
    });
    timed(&mut || check_iid_lower_bound(&one, v.pairs.min(20), 3, seed, tol.inequality));
    timed(&mut || match SubAdditivity::new(gs.clone(), c.poly().eval(2)) {
        Ok(mut sa) => sa.check(v.pairs, 2, seed, tol.inequality),
        Err(e) => CheckRow::error("sub_additivity", e),
    });
    timed(&mut || {
        let hulls = random_hull_elements(&one, 5, seed);
        check_bernstein(&one, &hulls, &[0.5, 0.25], v.trials, seed)
    });
    timed(&mut || check_stein_converse(&[(one.clone(), 3)], v.pairs.min(20), &[0.0, 0.1, 0.3], seed, tol.inequality));
    timed(&mut || check_bell_stein(&bell1, 2, tol.inequality));
    timed(&mut || check_beta_dh(&fams, v.pairs, seed, tol.equality).0);
    timed(&mut || check_bell_resource(&[(1, bell1.clone())], 20, seed, tol.bracket_width));
    timed(&mut || check_continuity_bound(&bell1, v.pairs, 20, seed, tol.inequality));
    timed(&mut || match shallow_family(&gs) {
        Ok(sh) => check_separation(&sh, v.pairs.min(20), seed, tol.equality),
        Err(e) => CheckRow::error("separation_gap", e),
    });

    Ok(VerifyReport {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: c.hash(),
        seed,
        checks,
        timings_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(budget: i64, post: bool) -> EffectFamily {
        let o = BuildOptions { n_anc: 1, postprocessing: post, ..Default::default() };
        build_effect_family(1, &GateSet::preset("HTCNOT").unwrap(), &BudgetPolynomial::constant(budget), &o).unwrap()
    }

    #[test]
    fn slack_tracks_violations() {
        let mut s = Slack::new();
        s.le(1.0, 2.0, 0.0);
        s.le(f64::INFINITY, f64::INFINITY, 0.0);
        assert_eq!((s.violations, s.min), (0, 0.0));
        s.le(2.0, 1.0, 0.5);
        s.le(f64::NAN, 1.0, 0.5);
        assert_eq!(s.violations, 2);
    }

    #[test]
    fn budget_zero_family_flags_completeness_only() {
        let f = family(0, false);
        assert_eq!(check_informational_completeness(std::slice::from_ref(&f)).status, CheckStatus::ExpectedFail);
        assert_eq!(check_family_invariants(std::slice::from_ref(&f)).status, CheckStatus::Pass);
        assert_eq!(check_max_equivalence(&[f], 10, 1, 1e-9).status, CheckStatus::Pass);
        assert_eq!(check_informational_completeness(&[family(2, true)]).status, CheckStatus::Pass);
    }

    #[test]
    fn hull_elements_are_valid_and_seeded() {
        let f = family(1, true);
        let a = random_hull_elements(&f, 5, 3);
        assert_eq!(a, random_hull_elements(&f, 5, 3));
        for h in &a {
            assert!((h.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(h.indices().iter().all(|&i| i < f.len()));
        }
    }

    #[test]
    fn separation_check_passes_on_shallow_family() {
        let sh = shallow_family(&GateSet::preset("HTCNOT").unwrap()).unwrap();
        assert_eq!(check_separation(&sh, 5, 2, 1e-9).status, CheckStatus::Pass);
    }
}
