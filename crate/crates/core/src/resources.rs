//! Resource measures relative to a set of free states, reported as certified
//! brackets `[lower, upper]`.
//!
//! The upper side evaluates the divergence at explicit free states; the lower
//! side fixes a measurement and minimizes over every value Tr[Eσ] the free
//! set can produce, which is an interval because Tr[Eσ] is linear in σ.

use crate::circuits::{hermitian_coords, EffectFamily, Provenance};
use crate::divergences::{
    binary_kl, comp_trace_distance, conic_max_probs, effect_probabilities, measured_renyi_probs, ratio,
};
use crate::error::{invalid, precondition, Error, Result};
use crate::qmatrix::{eig_hermitian, ComplexMatrix, DensityMatrix, StateFile, C64};
use crate::random::{haar_pure, rng};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

const GOLDEN_ITERS: usize = 60;
const HULL_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeKind {
    Generic,
    /// Separable across the first `n_a` qubits versus the remaining `n_b`.
    Separable { n_a: usize, n_b: usize },
}

/// Finite list of free states whose convex hull stands in for the free set.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeStateSet {
    pub candidates: Vec<DensityMatrix>,
    /// Tags of distinguished candidates, e.g. `"maximally_mixed"`.
    pub named: Vec<(String, usize)>,
    pub convex: bool,
    pub kind: FreeKind,
}

impl FreeStateSet {
    pub fn new(candidates: Vec<DensityMatrix>, kind: FreeKind) -> Result<Self> {
        let Some(first) = candidates.first() else {
            return Err(invalid("resources", "free set needs at least one candidate"));
        };
        if candidates.iter().any(|c| c.dim() != first.dim()) {
            return Err(Error::Dimension("free candidates of differing dimension".into()));
        }
        Ok(Self { candidates, named: vec![], convex: true, kind })
    }

    pub fn dim(&self) -> usize {
        self.candidates[0].dim()
    }

    pub fn named(&self, tag: &str) -> Option<&DensityMatrix> {
        self.named.iter().find(|(t, _)| t == tag).map(|(_, i)| &self.candidates[*i])
    }

    pub fn push_named(&mut self, tag: impl Into<String>, s: DensityMatrix) -> Result<()> {
        if s.dim() != self.dim() {
            return Err(Error::Dimension("named member dimension".into()));
        }
        self.named.push((tag.into(), self.candidates.len()));
        self.candidates.push(s);
        Ok(())
    }

    /// Adds the images of every candidate under a channel, so the hull is
    /// closed under it.
    pub fn closed_under(&self, kraus: &[ComplexMatrix]) -> Result<Self> {
        let mut out = self.clone();
        for c in &self.candidates {
            out.candidates.push(c.apply_kraus(kraus)?);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = FreeSetFile {
            members: self
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| FreeMember {
                    state: StateFile::from(c),
                    tag: self.named.iter().find(|(_, j)| *j == i).map(|(t, _)| t.clone()),
                })
                .collect(),
            convex: self.convex,
            kind: self.kind,
        };
        std::fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: FreeSetFile = serde_json::from_slice(&std::fs::read(path)?)?;
        let mut named = Vec::new();
        let mut candidates = Vec::new();
        for (i, m) in file.members.into_iter().enumerate() {
            if let Some(t) = m.tag {
                named.push((t, i));
            }
            candidates.push(m.state.to_state()?);
        }
        let mut s = Self::new(candidates, file.kind)?;
        s.named = named;
        s.convex = file.convex;
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FreeMember {
    #[serde(flatten)]
    state: StateFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FreeSetFile {
    members: Vec<FreeMember>,
    convex: bool,
    kind: FreeKind,
}

/// Free state achieving the upper side: a candidate or a two-candidate mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessState {
    Candidate(usize),
    Mixture { a: usize, b: usize, t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceBracket {
    pub lower: f64,
    #[serde(with = "crate::divergences::ext_real")]
    pub upper: f64,
    /// Family index of the effect certifying `lower`.
    pub witness_measurement: usize,
    pub witness_state: WitnessState,
}

impl ResourceBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceMeasure {
    Relent,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketOptions {
    /// Number of best candidate pairs refined by a line search over mixtures.
    pub refine_pairs: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self { refine_pairs: 4 }
    }
}

fn measure_value(measure: ResourceMeasure, p: &[f64], q: &[f64]) -> f64 {
    match measure {
        ResourceMeasure::Relent => measured_renyi_probs(p, q, 1.0).value,
        ResourceMeasure::Max => conic_max_probs(p, q).value,
    }
}

/// Value of Tr[Eσ] ranges over the free set, with the analytic Bell-projector
/// maximum 2^{-n} applied when the set is declared separable.
fn q_intervals(f: &EffectFamily, free: &FreeStateSet, tables: &[Vec<f64>]) -> Vec<(f64, f64)> {
    (0..f.len())
        .map(|i| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for t in tables {
                lo = lo.min(t[i]);
                hi = hi.max(t[i]);
            }
            if let (FreeKind::Separable { n_a, n_b }, Provenance::Named(name)) = (free.kind, &f.effects()[i].provenance) {
                if n_a == n_b && *name == format!("bell({n_a})") {
                    lo = 0.0;
                    hi = hi.max((-(n_a as f64)).exp2());
                }
            }
            (lo, hi)
        })
        .collect()
}

fn inner_min(measure: ResourceMeasure, p: f64, (lo, hi): (f64, f64)) -> f64 {
    match measure {
        ResourceMeasure::Relent => binary_kl(p, p.clamp(lo, hi)),
        ResourceMeasure::Max => ratio(p, hi).map_or(f64::NEG_INFINITY, f64::log2),
    }
}

/// Golden-section minimization of a convex function on [0, 1].
fn golden_min(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc <= gd { (c, gc) } else { (d, gd) }
}

pub fn resource_bracket(
    rho: &DensityMatrix,
    free: &FreeStateSet,
    f: &EffectFamily,
    measure: ResourceMeasure,
    opts: BracketOptions,
) -> Result<ResourceBracket> {
    if rho.dim() != free.dim() {
        return Err(Error::Dimension("state and free set dimension".into()));
    }
    let p = effect_probabilities(f, rho)?;
    let tables: Vec<Vec<f64>> =
        free.candidates.par_iter().map(|s| effect_probabilities(f, s)).collect::<Result<_>>()?;
    let values: Vec<f64> = tables.iter().map(|q| measure_value(measure, &p, q)).collect();
    let best = values.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut witness_state = WitnessState::Candidate(best.0);
    let mut upper = best.1;

    if free.convex && opts.refine_pairs > 0 && tables.len() > 1 {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let top: Vec<usize> = order.into_iter().take(opts.refine_pairs + 1).collect();
        for (x, &a) in top.iter().enumerate() {
            for &b in &top[x + 1..] {
                let mix = |t: f64| -> Vec<f64> { tables[a].iter().zip(&tables[b]).map(|(u, v)| (1.0 - t) * u + t * v).collect() };
                let (t, v) = golden_min(|t| measure_value(measure, &p, &mix(t)));
                if v < upper {
                    upper = v;
                    witness_state = WitnessState::Mixture { a, b, t };
                }
            }
        }
    }

    let intervals = q_intervals(f, free, &tables);
    let mut lower = (0.0f64, 0usize);
    for (i, (&pi, &iv)) in p.iter().zip(&intervals).enumerate() {
        let v = inner_min(measure, pi, iv);
        if v > lower.0 {
            lower = (v, i);
        }
    }
    Ok(ResourceBracket { lower: lower.0, upper, witness_measurement: lower.1, witness_state })
}

pub fn resource_measured_relent(rho: &DensityMatrix, free: &FreeStateSet, f: &EffectFamily) -> Result<ResourceBracket> {
    resource_bracket(rho, free, f, ResourceMeasure::Relent, BracketOptions::default())
}

pub fn resource_max_relent(rho: &DensityMatrix, free: &FreeStateSet, f: &EffectFamily) -> Result<ResourceBracket> {
    resource_bracket(rho, free, f, ResourceMeasure::Max, BracketOptions::default())
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// (1+ε)h(ε/(1+ε)) + ε(κ + log(2/ε)), extended by 0 at ε = 0.
pub fn continuity_rhs(eps: f64, kappa: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) || !(kappa >= 0.0) {
        return Err(invalid("resources", format!("need ε ∈ [0,1] and κ ≥ 0, got ε={eps}, κ={kappa}")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + eps) * binary_entropy(eps / (1.0 + eps)) + eps * (kappa + (2.0 / eps).log2()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCheck {
    pub eps: f64,
    pub kappa: f64,
    pub lhs_bound: f64,
    pub rhs: f64,
    pub brackets: [ResourceBracket; 2],
}

impl ContinuityCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs_bound <= self.rhs + tol
    }
}

pub fn check_continuity(
    rho: &DensityMatrix,
    rho2: &DensityMatrix,
    free: &FreeStateSet,
    f: &EffectFamily,
    sigma_star: &DensityMatrix,
) -> Result<ContinuityCheck> {
    let lam = sigma_star.hermitian().min_eigenvalue()?;
    if lam <= 0.0 || lam < 1e-12 {
        return Err(precondition("resources", "reference free state is singular"));
    }
    if !free.candidates.iter().any(|c| c.matrix().max_abs_diff(sigma_star.matrix()) <= 1e-12) {
        return Err(precondition("resources", "reference state is not a member of the free set"));
    }
    let kappa = -lam.log2();
    let eps = comp_trace_distance(rho, rho2, f)?.value;
    let b1 = resource_measured_relent(rho, free, f)?;
    let b2 = resource_measured_relent(rho2, free, f)?;
    let lhs_bound = 0f64.max(b1.lower - b2.upper).max(b2.lower - b1.upper);
    Ok(ContinuityCheck { eps, kappa, lhs_bound, rhs: continuity_rhs(eps.min(1.0), kappa.max(0.0))?, brackets: [b1, b2] })
}

/// 2^{-n} Σ_x |x><x|_A ⊗ |x><x|_B on n + n qubits.
pub fn sigma_star(n: usize) -> DensityMatrix {
    let half = 1usize << n;
    let mut diag = vec![0.0; half * half];
    for x in 0..half {
        diag[x * half + x] = 1.0 / half as f64;
    }
    DensityMatrix::from_diagonal(&diag, vec![2; 2 * n]).expect("valid diagonal state")
}

/// |Φ_n><Φ_n| on registers A (n qubits) then B (n qubits).
pub fn bell_state(n: usize) -> DensityMatrix {
    DensityMatrix::new(crate::circuits::bell_projector(n).m().clone(), vec![2; 2 * n]).expect("pure state")
}

/// Separable candidates across an `n_a | n_b` qubit cut: the maximally mixed
/// state, σ* when the halves match, and Haar-random pure product states.
pub fn sep_candidates(n_a: usize, n_b: usize, num_samples: usize, seed: u64) -> Result<FreeStateSet> {
    if n_a == 0 || n_b == 0 {
        return Err(invalid("resources", "both sides of the cut need qubits"));
    }
    let dims = vec![2; n_a + n_b];
    let mut set = FreeStateSet::new(vec![DensityMatrix::maximally_mixed(dims)], FreeKind::Separable { n_a, n_b })?;
    set.named.push(("maximally_mixed".into(), 0));
    if n_a == n_b {
        set.push_named("sigma_star", sigma_star(n_a))?;
    }
    let mut r = rng(seed, 0);
    for _ in 0..num_samples {
        let a = haar_pure(vec![2; n_a], &mut r);
        let b = haar_pure(vec![2; n_b], &mut r);
        set.candidates.push(a.tensor(&b));
    }
    Ok(set)
}

/// Both states of the pseudo-entanglement pair built from ρ0 and ρ1, on the
/// Bell pair AB followed by the register of ρ0 and ρ1.
pub fn separation_states(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::Dimension("ρ0 and ρ1 differ in dimension".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let plus = DensityMatrix::pure(&[C64::new(h, 0.0), z, z, C64::new(h, 0.0)], vec![2, 2])?;
    let minus = DensityMatrix::pure(&[C64::new(h, 0.0), z, z, C64::new(-h, 0.0)], vec![2, 2])?;
    let mut dims = vec![2, 2];
    dims.extend_from_slice(rho0.factor_dims());
    let bell_avg = &plus.matrix().scale(0.5) + &minus.matrix().scale(0.5);
    let reg_avg = &rho0.matrix().scale(0.5) + &rho1.matrix().scale(0.5);
    let psi = DensityMatrix::new(crate::qmatrix::tensor(&bell_avg, &reg_avg), dims.clone())?;
    let phi_m = &plus.tensor(rho0).matrix().scale(0.5) + &minus.tensor(rho1).matrix().scale(0.5);
    let phi = DensityMatrix::new(phi_m, dims)?;
    Ok((psi, phi))
}

/// Λ†(E) = Σ K† E K.
pub fn pull_back(kraus: &[ComplexMatrix], e: &ComplexMatrix) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(e.dim());
    for k in kraus {
        acc = &acc + &(&(&k.dagger() * e) * k);
    }
    acc
}

/// Nonnegative least squares by the Lawson–Hanson active-set method.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > 1e-12).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let Ok(sol) = sub.clone().svd(true, true).solve(b, 1e-12) else { return x };
            if sol.iter().all(|&v| v > 0.0) {
                for (c, &k) in idx.iter().enumerate() {
                    x[k] = sol[c];
                }
                break;
            }
            let mut step = 1.0f64;
            for (c, &k) in idx.iter().enumerate() {
                if sol[c] <= 0.0 {
                    step = step.min(x[k] / (x[k] - sol[c]));
                }
            }
            for (c, &k) in idx.iter().enumerate() {
                x[k] += step * (sol[c] - x[k]);
                if x[k] <= 1e-14 {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

/// Distance from `target` to the convex hull of the family, in Hermitian
/// coordinates, via NNLS with a heavily weighted sum-to-one row.
pub fn hull_distance(f: &EffectFamily, target: &ComplexMatrix) -> f64 {
    if let Some(i) = f.position(target) {
        return f.effects()[i].m().max_abs_diff(target);
    }
    let d2 = target.dim() * target.dim();
    let cols: Vec<Vec<f64>> = f.effects().iter().map(|e| hermitian_coords(e.m())).collect();
    let big = 1e4;
    let a = DMatrix::from_fn(d2 + 1, cols.len(), |r, c| if r < d2 { cols[c][r] } else { big });
    let t = hermitian_coords(target);
    let b = DVector::from_fn(d2 + 1, |r, _| if r < d2 { t[r] } else { big });
    let w = nnls(&a, &b);
    let resid = &a * &w - &b;
    let sum: f64 = w.iter().sum();
    resid.rows(0, d2).norm().max((sum - 1.0).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub input: ResourceBracket,
    pub output: ResourceBracket,
    pub holds: bool,
}

/// Resource of Λ(ρ) against resource of ρ, after verifying that every
/// effect of `f` pulls back into the hull of `f`. Brackets are computed
/// without mixture refinement so that the free set's closure under Λ carries
/// over to the upper bounds.
pub fn check_monotonicity(
    rho: &DensityMatrix,
    free: &FreeStateSet,
    f: &EffectFamily,
    kraus: &[ComplexMatrix],
    measure: ResourceMeasure,
    tol: f64,
) -> Result<MonotonicityCheck> {
    for (i, e) in f.effects().iter().enumerate() {
        let back = pull_back(kraus, e.m());
        let dist = hull_distance(f, &back);
        if dist > HULL_TOL {
            return Err(precondition(
                "resources",
                format!("pulled-back effect {i} ({:?}) lies {dist:.2e} outside the family hull", e.provenance),
            ));
        }
    }
    let opts = BracketOptions { refine_pairs: 0 };
    let input = resource_bracket(rho, free, f, measure, opts)?;
    let output = resource_bracket(&rho.apply_kraus(kraus)?, free, f, measure, opts)?;
    let holds = output.upper <= input.upper + tol && output.lower <= input.upper + tol;
    Ok(MonotonicityCheck { input, output, holds })
}

/// Smallest eigenvalue helper exposed for κ bookkeeping.
pub fn kappa_of(sigma_star: &DensityMatrix) -> Result<f64> {
    let e = eig_hermitian(sigma_star.hermitian())?;
    Ok(-e.values.last().expect("nonempty").log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{bell_projector, build_effect_family, BudgetPolynomial, BuildOptions, GateSet};
    use crate::divergences::comp_trace_distance;
    use crate::qmatrix::{fidelity_info, tensor, trace_distance_info};
    use crate::random::random_density;
    use proptest::prelude::*;

    fn fam(n: usize, budget: i64, anc: usize, post: bool) -> EffectFamily {
        let o = BuildOptions { n_anc: anc, postprocessing: post, ..Default::default() };
        build_effect_family(n, &GateSet::preset("HTCNOT").unwrap(), &BudgetPolynomial::constant(budget), &o).unwrap()
    }

    fn bell_fam(n: usize) -> EffectFamily {
        fam(2 * n, 0, 0, true).with_extra(vec![bell_projector(n)], 100_000).unwrap()
    }

    #[test]
    fn continuity_rhs_values() {
        assert_eq!(continuity_rhs(0.0, 3.0).unwrap(), 0.0);
        assert!((continuity_rhs(1.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(continuity_rhs(1.5, 1.0).is_err());
        for kappa in [0.0, 1.0, 3.0] {
            let g: Vec<f64> = (1..=100).map(|i| continuity_rhs(i as f64 / 100.0, kappa).unwrap()).collect();
            assert!(g.windows(2).all(|w| w[1] >= w[0]));
            assert!(g.windows(3).all(|w| w[0] + w[2] <= 2.0 * w[1] + 1e-12));
        }
    }

    #[test]
    fn bell_brackets_are_exact() {
        for n in [1, 2] {
            let free = sep_candidates(n, n, 20, 7).unwrap();
            let b = resource_measured_relent(&bell_state(n), &free, &bell_fam(n)).unwrap();
            assert!((b.lower - n as f64).abs() <= 1e-6 && (b.upper - n as f64).abs() <= 1e-6, "{b:?}");
        }
    }

    #[test]
    fn max_relent_bell_bracket() {
        let free = sep_candidates(1, 1, 20, 7).unwrap();
        let f = bell_fam(1);
        let b = resource_max_relent(&bell_state(1), &free, &f).unwrap();
        assert!(b.upper <= 1.0 + 1e-12);
        assert!(b.lower + 1e-12 >= 1.5f64.log2());
    }

    #[test]
    fn free_input_gives_zero_bracket() {
        let free = sep_candidates(1, 1, 10, 3).unwrap();
        let f = fam(2, 1, 1, true);
        for s in [&free.candidates[0], &free.candidates[5]] {
            for m in [ResourceMeasure::Relent, ResourceMeasure::Max] {
                let b = resource_bracket(s, &free, &f, m, BracketOptions::default()).unwrap();
                assert_eq!((b.lower, b.upper), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn sep_candidate_properties() {
        let free = sep_candidates(1, 1, 30, 1).unwrap();
        assert!(free.named("maximally_mixed").is_some());
        let phi = bell_projector(1);
        let overlaps: Vec<f64> = free.candidates.iter().map(|c| c.expectation(phi.m())).collect();
        assert!(overlaps.iter().all(|&x| x <= 0.5 + 1e-12));
        assert!((free.named("sigma_star").unwrap().expectation(phi.m()) - 0.5).abs() < 1e-15);
        for c in &free.candidates[2..] {
            let a = c.partial_trace(&[0]).unwrap();
            let b = c.partial_trace(&[1]).unwrap();
            assert!(a.tensor(&b).matrix().max_abs_diff(c.matrix()) < 1e-12);
        }
        assert_eq!(sep_candidates(1, 1, 30, 1).unwrap(), free);
    }

    #[test]
    fn sigma_star_reference_values() {
        let (phi, s) = (bell_state(1), sigma_star(1));
        assert!((crate::qmatrix::relative_entropy_info(&phi, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!((crate::qmatrix::dmax_info(&phi, &s).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(kappa_of(&DensityMatrix::maximally_mixed(vec![2, 2])).unwrap(), 2.0);
    }

    #[test]
    fn separation_state_values() {
        let (z, o) = (DensityMatrix::basis(&[0]), DensityMatrix::basis(&[1]));
        let (psi, phi) = separation_states(&z, &o).unwrap();
        assert!((trace_distance_info(&psi, &phi).unwrap() - 0.5).abs() < 1e-9);
        let fid = fidelity_info(&psi, &phi).unwrap();
        assert!((fid - 0.5).abs() < 1e-9 && (0.25..=0.75).contains(&fid));
        let (a, b) = separation_states(&z, &z).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-15);
        let shallow = fam(3, 0, 1, false);
        assert!(comp_trace_distance(&psi, &phi, &shallow).unwrap().value <= 1e-9);
    }

    #[test]
    fn shallow_family_sees_no_resource_in_phi() {
        let (z, o) = (DensityMatrix::basis(&[0]), DensityMatrix::basis(&[1]));
        let (psi, phi) = separation_states(&z, &o).unwrap();
        let shallow = fam(3, 0, 1, false);
        let free = FreeStateSet::new(vec![psi.clone()], FreeKind::Generic).unwrap();
        let b = resource_measured_relent(&phi, &free, &shallow).unwrap();
        assert!(b.upper <= 1e-9 && b.lower <= b.upper);
    }

    #[test]
    fn continuity_examples() {
        let free = sep_candidates(1, 1, 20, 5).unwrap();
        let f = bell_fam(1);
        let mm = DensityMatrix::maximally_mixed(vec![2, 2]);
        let phi = bell_state(1);
        let c = check_continuity(&phi, &phi, &free, &f, &mm).unwrap();
        assert_eq!((c.lhs_bound, c.rhs), (0.0, 0.0));
        assert_eq!(c.kappa, 2.0);
        let noisy = phi.mix(&mm, 0.01).unwrap();
        let c = check_continuity(&phi, &noisy, &free, &f, &mm).unwrap();
        assert!(c.holds(1e-12) && c.eps > 0.0);
        assert!(check_continuity(&phi, &noisy, &free, &f, &sigma_star(1)).is_err());
    }

    #[test]
    fn free_set_file_round_trip() {
        let free = sep_candidates(1, 1, 3, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("free.json");
        free.save(&p).unwrap();
        assert_eq!(FreeStateSet::load(&p).unwrap(), free);
    }

    fn x_on_a() -> Vec<ComplexMatrix> {
        let x = crate::circuits::Gate::named("X").unwrap().unitary;
        vec![tensor(&x, &ComplexMatrix::identity(2))]
    }

    #[test]
    fn monotonicity_examples() {
        let f = fam(2, 0, 0, false).with_extra(vec![bell_projector(1)], 1000).unwrap();
        let free = sep_candidates(1, 1, 10, 9).unwrap();
        let phi = bell_state(1);
        let id = vec![ComplexMatrix::identity(4)];
        assert!(check_monotonicity(&phi, &free, &f, &id, ResourceMeasure::Relent, 1e-9).unwrap().holds);

        // full depolarization: Kraus operators |i><j| / 2
        let dep: Vec<ComplexMatrix> = (0..16)
            .map(|k| ComplexMatrix::from_fn(4, |r, c| if r == k / 4 && c == k % 4 { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) }))
            .collect();
        let m = check_monotonicity(&phi, &free, &f, &dep, ResourceMeasure::Relent, 1e-9).unwrap();
        assert!(m.holds && m.output.lower == 0.0 && m.output.upper.abs() < 1e-12);

        // X on the first share: the family must contain the rotated Bell projector too
        let xa = x_on_a();
        let rotated = crate::circuits::EffectOperator {
            matrix: crate::qmatrix::HermitianMatrix::symmetrized(pull_back(&xa, bell_projector(1).m())),
            cost: 3,
            provenance: Provenance::Named("bell-x".into()),
        };
        let fx = f.with_extra(vec![rotated], 1000).unwrap();
        let closed = free.closed_under(&xa).unwrap();
        let m = check_monotonicity(&phi, &closed, &fx, &xa, ResourceMeasure::Relent, 1e-9).unwrap();
        assert!(m.holds);
        assert!((m.output.upper - m.input.upper).abs() <= m.input.width().max(1e-9));
        let bad = check_monotonicity(&phi, &closed, &f, &xa, ResourceMeasure::Relent, 1e-9);
        assert!(matches!(bad, Err(Error::Precondition { .. })));
    }

    #[test]
    fn hull_distance_detects_membership() {
        let f = fam(1, 0, 0, false);
        assert!(hull_distance(&f, &ComplexMatrix::identity(2).scale(0.3)) < 1e-9);
        assert!(hull_distance(&f, &ComplexMatrix::from_diagonal(&[0.2, 0.7])) < 1e-9);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix::projector(&[C64::new(h, 0.0), C64::new(h, 0.0)]);
        assert!(hull_distance(&f, &plus) > 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn brackets_are_ordered(seed in 0u64..100_000) {
            let free = sep_candidates(1, 1, 8, seed).unwrap();
            let f = fam(2, 1, 1, true);
            let rho = random_density(vec![2, 2], 1 + (seed % 4) as usize, &mut rng(seed, 1));
            for m in [ResourceMeasure::Relent, ResourceMeasure::Max] {
                let b = resource_bracket(&rho, &free, &f, m, BracketOptions::default()).unwrap();
                prop_assert!(b.lower <= b.upper + 1e-12);
            }
        }

        #[test]
        fn single_candidate_pinsker_certificate(seed in 0u64..100_000) {
            let f = fam(1, 2, 1, true);
            let mut r = rng(seed, 2);
            let (rho, sigma) = (random_density(vec![2], 2, &mut r), random_density(vec![2], 2, &mut r));
            let free = FreeStateSet::new(vec![sigma.clone()], FreeKind::Generic).unwrap();
            let b = resource_measured_relent(&rho, &free, &f).unwrap();
            let cd = comp_trace_distance(&rho, &sigma, &f).unwrap().value;
            prop_assert!(b.lower + 1e-12 >= cd * cd / (2.0 * std::f64::consts::LN_2));
        }
    }
}
