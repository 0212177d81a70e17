//! Binary hypothesis testing restricted to an effect family: optimal type-II
//! errors, the complexity relative entropy and finite-copy Stein sequences.

use crate::circuits::{tensor_family, BudgetPolynomial, EffectFamily, EffectOperator};
use crate::divergences::{
    effect_probabilities, ext_real, measured_max_probs, measured_renyi_probs, conic_max_probs, PROB_TOL,
};
use crate::error::{invalid, Error, Result};
use crate::qmatrix::DensityMatrix;
use serde::{Deserialize, Serialize};

/// Slack on the type-I constraint α ≤ ε.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTestReport {
    pub m: usize,
    pub eps: f64,
    pub beta: f64,
    pub argmin: usize,
    pub alpha_err: f64,
    #[serde(with = "ext_real")]
    pub dh: f64,
    #[serde(with = "ext_real")]
    pub stein_term: f64,
    #[serde(with = "ext_real")]
    pub bound_term: f64,
}

/// (Tr[ρ(1−E)], Tr[σE]).
pub fn type_errors(e: &EffectOperator, rho: &DensityMatrix, sigma: &DensityMatrix) -> (f64, f64) {
    (1.0 - rho.expectation(e.m()), sigma.expectation(e.m()))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid("hyptest", format!("type-I budget must lie in [0,1), got {eps}")));
    }
    Ok(())
}

fn tables(f: &EffectFamily, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    if f.is_empty() {
        return Err(invalid("hyptest", "empty family"));
    }
    Ok((effect_probabilities(f, rho)?, effect_probabilities(f, sigma)?))
}

/// (β, index) minimizing q over generators with 1 − p ≤ ε.
fn beta_probs(p: &[f64], q: &[f64], eps: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if 1.0 - a <= eps + FEASIBILITY_TOL && best.is_none_or(|(v, _)| b < v) {
            best = Some((b, i));
        }
    }
    best
}

/// Smallest type-II error over scaled generators αE, α ∈ (0,1].
fn beta_scaled_probs(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let need = 1.0 - eps;
    let mut best = f64::INFINITY;
    for (&a, &b) in p.iter().zip(q) {
        if a + FEASIBILITY_TOL >= need && a > PROB_TOL {
            best = best.min((need / a).min(1.0) * b);
        }
    }
    best.min(1.0)
}

/// −log of the smallest q/p over generators with p ≥ η.
fn dh_probs(p: &[f64], q: &[f64], eta: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (&a, &b) in p.iter().zip(q) {
        if a + FEASIBILITY_TOL >= eta && a > PROB_TOL {
            best = best.min(b / a);
        }
    }
    -best.log2()
}

fn report(p: &[f64], q: &[f64], eps: f64, m: usize) -> HypothesisTestReport {
    let (beta, argmin) = beta_probs(p, q, eps).unwrap_or_else(|| {
        let one = p.iter().zip(q).position(|(&a, &b)| a == 1.0 && b == 1.0).unwrap_or(0);
        (1.0, one)
    });
    let cdm = measured_renyi_probs(p, q, 1.0).value;
    HypothesisTestReport {
        m,
        eps,
        beta,
        argmin,
        alpha_err: 1.0 - p[argmin],
        dh: dh_probs(p, q, 1.0 - eps),
        stein_term: if beta > 0.0 { -beta.log2() / m as f64 } else { f64::INFINITY },
        bound_term: (1.0 + cdm) / ((1.0 - eps) * m as f64),
    }
}

/// Optimal type-II error subject to type-I error ≤ ε over the generators of
/// `f`, for `m`-copy states `rho_m`, `sigma_m`.
pub fn optimal_beta(f: &EffectFamily, rho_m: &DensityMatrix, sigma_m: &DensityMatrix, eps: f64, m: usize) -> Result<HypothesisTestReport> {
    check_eps(eps)?;
    if m == 0 {
        return Err(invalid("hyptest", "copy count must be positive"));
    }
    let (p, q) = tables(f, rho_m, sigma_m)?;
    Ok(report(&p, &q, eps, m))
}

/// Complexity relative entropy at threshold η. The ratio Tr[Eσ]/Tr[Eρ] is
/// invariant under E → αE while the constraint only tightens, so the scaled
/// search attains the same value as the plain one.
pub fn complexity_rel_entropy(
    f: &EffectFamily,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eta: f64,
    allow_scaling: bool,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("hyptest", format!("threshold must lie in [0,1], got {eta}")));
    }
    let _ = allow_scaling;
    let (p, q) = tables(f, rho, sigma)?;
    Ok(dh_probs(&p, &q, eta))
}

/// Complexity relative entropy over the convex hull of the family. The
/// optimum of this linear-fractional program sits on a vertex of the
/// constrained simplex, which has at most two nonzero weights.
pub fn complexity_rel_entropy_hull(f: &EffectFamily, rho: &DensityMatrix, sigma: &DensityMatrix, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("hyptest", format!("threshold must lie in [0,1], got {eta}")));
    }
    let (p, q) = tables(f, rho, sigma)?;
    let mut best = 10f64.powi(300);
    let above: Vec<usize> = (0..p.len()).filter(|&i| p[i] + FEASIBILITY_TOL >= eta && p[i] > PROB_TOL).collect();
    for &i in &above {
        best = best.min(q[i] / p[i]);
        for j in 0..p.len() {
            if p[j] < eta && p[i] > p[j] {
                let t = (eta - p[j]) / (p[i] - p[j]);
                let pm = t * p[i] + (1.0 - t) * p[j];
                if pm > PROB_TOL {
                    best = best.min((t * q[i] + (1.0 - t) * q[j]) / pm);
                }
            }
        }
    }
    if above.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(-best.log2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaDhCheck {
    /// Optimal β over the raw generators.
    pub beta: f64,
    /// Optimal β when generators may be scaled down into the hull.
    pub beta_scaled: f64,
    /// (1 − ε)·2^{−D_H} at threshold 1 − ε.
    pub predicted: f64,
    /// Whether the raw optimizer strictly over-satisfies the constraint.
    pub slack_optimizer: bool,
}

pub fn beta_dh_consistency(f: &EffectFamily, rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<BetaDhCheck> {
    check_eps(eps)?;
    let (p, q) = tables(f, rho, sigma)?;
    let (beta, idx) = beta_probs(&p, &q, eps).unwrap_or((1.0, 0));
    let dh = dh_probs(&p, &q, 1.0 - eps);
    Ok(BetaDhCheck {
        beta,
        beta_scaled: beta_scaled_probs(&p, &q, eps),
        predicted: (1.0 - eps) * (-dh).exp2(),
        slack_optimizer: p[idx] > 1.0 - eps + FEASIBILITY_TOL,
    })
}

/// Source of composite families for m copies.
pub trait FamilyBuilder {
    fn family(&mut self, m: usize) -> Result<EffectFamily>;
}

/// m-fold tensor powers of a base family; the m-copy family admits products
/// whose summed cost is below p(n·m).
pub struct TensorPowerBuilder {
    base: EffectFamily,
    poly: BudgetPolynomial,
    cap: usize,
    built: Vec<EffectFamily>,
}

impl TensorPowerBuilder {
    pub fn new(base: EffectFamily, poly: BudgetPolynomial, cap: usize) -> Self {
        Self { built: vec![base.clone()], base, poly, cap }
    }
}

impl FamilyBuilder for TensorPowerBuilder {
    fn family(&mut self, m: usize) -> Result<EffectFamily> {
        if m == 0 {
            return Err(invalid("hyptest", "copy count must be positive"));
        }
        let n = self.base.n();
        self.poly.check_super_additive(n * m)?;
        while self.built.len() < m {
            let k = self.built.len() + 1;
            let prev = self.built.last().expect("nonempty");
            let next = tensor_family(prev, &self.base, self.poly.eval(n * k), self.cap)?;
            self.built.push(next);
        }
        Ok(self.built[m - 1].clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinSequence {
    pub reports: Vec<HypothesisTestReport>,
    /// Set when a resource cap stopped the sequence early.
    pub truncated: Option<String>,
}

pub fn stein_sequence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    builder: &mut dyn FamilyBuilder,
    eps: f64,
    m_max: usize,
) -> Result<SteinSequence> {
    check_eps(eps)?;
    let mut reports = Vec::new();
    for m in 1..=m_max {
        let f = match builder.family(m) {
            Ok(f) => f,
            Err(e @ Error::CapExceeded { .. }) => {
                return Ok(SteinSequence { reports, truncated: Some(format!("stopped at m={m}: {e}")) })
            }
            Err(e) => return Err(e),
        };
        let (rm, sm) = (rho.tensor_power(m), sigma.tensor_power(m));
        reports.push(optimal_beta(&f, &rm, &sm, eps, m)?);
    }
    Ok(SteinSequence { reports, truncated: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Relent,
    Max,
    Conic,
    Renyi(f64),
}

/// (1/m)·D(ρ^⊗m ‖ σ^⊗m) over the m-copy family, for m = 1..=m_max.
pub fn regularized_sequence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    builder: &mut dyn FamilyBuilder,
    quantity: Quantity,
    m_max: usize,
) -> Result<Vec<f64>> {
    if let Quantity::Renyi(a) = quantity {
        if !(a > 0.0 && a != 1.0 && a.is_finite()) {
            return Err(invalid("hyptest", format!("Rényi order {a} outside (0,1)∪(1,∞)")));
        }
    }
    (1..=m_max)
        .map(|m| {
            let f = builder.family(m)?;
            let (p, q) = tables(&f, &rho.tensor_power(m), &sigma.tensor_power(m))?;
            let v = match quantity {
                Quantity::Relent => measured_renyi_probs(&p, &q, 1.0).value,
                Quantity::Max => measured_max_probs(&p, &q).value,
                Quantity::Conic => conic_max_probs(&p, &q).value,
                Quantity::Renyi(a) => measured_renyi_probs(&p, &q, a).value,
            };
            Ok(v / m as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{bell_projector, build_effect_family, BuildOptions, GateSet};
    use crate::random::{random_density, rng};
    use proptest::prelude::*;

    fn base(n: usize, budget: i64, anc: usize, post: bool) -> EffectFamily {
        let o = BuildOptions { n_anc: anc, postprocessing: post, ..Default::default() };
        build_effect_family(n, &GateSet::preset("HTCNOT").unwrap(), &BudgetPolynomial::constant(budget), &o).unwrap()
    }

    fn phi() -> DensityMatrix {
        DensityMatrix::new(bell_projector(1).m().clone(), vec![2, 2]).unwrap()
    }

    fn sigma_star() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.5, 0.0, 0.0, 0.5], vec![2, 2]).unwrap()
    }

    fn bell_family() -> EffectFamily {
        base(2, 0, 0, false).with_extra(vec![bell_projector(1)], 1000).unwrap()
    }

    /// Filter-then-min over the generators, written independently.
    fn brute_beta(f: &EffectFamily, r: &DensityMatrix, s: &DensityMatrix, eps: f64) -> f64 {
        f.effects()
            .iter()
            .filter(|e| r.expectation(&(&crate::qmatrix::ComplexMatrix::identity(f.dim()) - e.m())) <= eps + 1e-12)
            .map(|e| s.expectation(e.m()))
            .fold(1.0, f64::min)
    }

    #[test]
    fn type_error_examples() {
        let f = bell_family();
        let (r, s) = (phi(), sigma_star());
        let one = &f.effects()[1];
        let zero = &f.effects()[0];
        let (a1, b1) = type_errors(one, &r, &s);
        assert!(a1.abs() < 1e-15 && (b1 - 1.0).abs() < 1e-15);
        let (a0, b0) = type_errors(zero, &r, &s);
        assert!((a0 - 1.0).abs() < 1e-15 && b0.abs() < 1e-15);
        let (a, b) = type_errors(&bell_projector(1), &r, &s);
        assert!(a.abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn optimal_beta_examples() {
        let f = bell_family();
        let rep = optimal_beta(&f, &phi(), &sigma_star(), 0.0, 1).unwrap();
        assert_eq!(rep.beta, 0.5);
        assert_eq!(rep.beta, brute_beta(&f, &phi(), &sigma_star(), 0.0));
        let fb = base(1, 0, 0, false);
        let (z, o) = (DensityMatrix::basis(&[0]), DensityMatrix::basis(&[1]));
        assert_eq!(optimal_beta(&fb, &z, &o, 0.0, 1).unwrap().beta, 0.0);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        for eps in [0.0, 0.3, 0.6] {
            let rep = optimal_beta(&fb, &mixed, &mixed, eps, 1).unwrap();
            assert_eq!(rep.beta, brute_beta(&fb, &mixed, &mixed, eps));
        }
        let trivial = EffectFamily::assemble(1, 0, 2, vec![], 4).unwrap();
        assert_eq!(optimal_beta(&trivial, &mixed, &mixed, 0.2, 1).unwrap().beta, 1.0);
    }

    #[test]
    fn dh_examples() {
        let f = bell_family();
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert_eq!(complexity_rel_entropy(&f, &mixed, &mixed, 0.7, false).unwrap(), 0.0);
        assert!((complexity_rel_entropy(&f, &phi(), &sigma_star(), 1.0, true).unwrap() - 1.0).abs() < 1e-12);
        let fb = base(1, 0, 0, false);
        let (z, o) = (DensityMatrix::basis(&[0]), DensityMatrix::basis(&[1]));
        assert_eq!(complexity_rel_entropy(&fb, &z, &o, 0.9, false).unwrap(), f64::INFINITY);
        let c = beta_dh_consistency(&f, &phi(), &sigma_star(), 0.0).unwrap();
        assert_eq!((c.beta, c.predicted), (0.5, 0.5));
        let c = beta_dh_consistency(&fb, &z, &o, 0.0).unwrap();
        assert_eq!((c.beta, c.predicted), (0.0, 0.0));
    }

    #[test]
    fn hull_dh_dominates_generator_dh() {
        let f = base(1, 2, 1, true);
        let mut r = rng(21, 0);
        for _ in 0..20 {
            let (a, b) = (random_density(vec![2], 2, &mut r), random_density(vec![2], 2, &mut r));
            for eta in [0.3, 0.8] {
                let raw = complexity_rel_entropy(&f, &a, &b, eta, false).unwrap();
                let hull = complexity_rel_entropy_hull(&f, &a, &b, eta).unwrap();
                assert!(hull + 1e-12 >= raw);
            }
        }
    }

    #[test]
    fn stein_bell_sequence_is_exact() {
        let poly = BudgetPolynomial::new(vec![0, 0, 1]);
        let mut b = TensorPowerBuilder::new(bell_family(), poly, 100_000);
        let seq = stein_sequence(&phi(), &sigma_star(), &mut b, 0.0, 2).unwrap();
        assert!(seq.truncated.is_none());
        for r in &seq.reports {
            assert_eq!(r.stein_term, 1.0);
            assert!(r.stein_term <= r.bound_term);
        }
    }

    #[test]
    fn stein_identical_states() {
        let poly = BudgetPolynomial::new(vec![0, 0, 1]);
        let mut b = TensorPowerBuilder::new(base(1, 1, 1, false), poly, 100_000);
        let rho = random_density(vec![2], 2, &mut rng(2, 0));
        let eps = 0.2;
        let seq = stein_sequence(&rho, &rho, &mut b, eps, 3).unwrap();
        for r in &seq.reports {
            assert!(r.stein_term <= -(1.0 - eps).log2() / r.m as f64 + 1e-12);
        }
        let z = regularized_sequence(&rho, &rho, &mut b, Quantity::Max, 3).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn truncation_is_reported() {
        let poly = BudgetPolynomial::new(vec![0, 0, 1]);
        let mut b = TensorPowerBuilder::new(base(1, 1, 1, true), poly, 60);
        let rho = random_density(vec![2], 2, &mut rng(2, 0));
        let seq = stein_sequence(&rho, &rho, &mut b, 0.1, 3).unwrap();
        assert!(seq.truncated.is_some() && seq.reports.len() < 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn beta_dh_relations(seed in 0u64..100_000, eps in 0.0f64..0.5) {
            let f = base(1, 2, 1, true);
            let mut r = rng(seed, 0);
            let (a, b) = (random_density(vec![2], 2, &mut r), random_density(vec![2], 2, &mut r));
            let c = beta_dh_consistency(&f, &a, &b, eps).unwrap();
            prop_assert!(c.beta + 1e-12 >= c.predicted);
            prop_assert!((c.beta_scaled - c.predicted).abs() <= 1e-9);
            prop_assert_eq!(c.beta, brute_beta(&f, &a, &b, eps));
        }

        #[test]
        fn beta_nonincreasing_in_eps(seed in 0u64..100_000) {
            let f = base(1, 2, 1, true);
            let mut r = rng(seed, 0);
            let (a, b) = (random_density(vec![2], 2, &mut r), random_density(vec![2], 2, &mut r));
            let mut prev = 1.0;
            for eps in [0.0, 0.1, 0.2, 0.4, 0.8] {
                let beta = optimal_beta(&f, &a, &b, eps, 1).unwrap().beta;
                prop_assert!(beta <= prev);
                prev = beta;
            }
        }

        #[test]
        fn stein_bound_and_regularized_ordering(seed in 0u64..100_000) {
            let poly = BudgetPolynomial::new(vec![0, 0, 1]);
            let mut r = rng(seed, 0);
            let (a, b) = (random_density(vec![2], 2, &mut r), random_density(vec![2], 2, &mut r));
            let mut bl = TensorPowerBuilder::new(base(1, 1, 1, true), poly, 100_000);
            let seq = stein_sequence(&a, &b, &mut bl, 0.1, 3).unwrap();
            for rep in &seq.reports {
                prop_assert!(rep.beta <= 0.0 || rep.stein_term <= rep.bound_term + 1e-12);
            }
            let lo = regularized_sequence(&a, &b, &mut bl, Quantity::Renyi(0.5), 3).unwrap();
            let mid = regularized_sequence(&a, &b, &mut bl, Quantity::Relent, 3).unwrap();
            let hi = regularized_sequence(&a, &b, &mut bl, Quantity::Renyi(2.0), 3).unwrap();
            let top = regularized_sequence(&a, &b, &mut bl, Quantity::Max, 3).unwrap();
            let conic = regularized_sequence(&a, &b, &mut bl, Quantity::Conic, 3).unwrap();
            for m in 0..3 {
                prop_assert!(lo[m] <= mid[m] + 1e-12 && mid[m] <= hi[m] + 1e-12 && hi[m] <= top[m] + 1e-12);
                prop_assert!(conic[m] + 1e-12 >= conic[0]);
            }
        }
    }
}
