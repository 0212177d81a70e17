//! Python bindings. States cross the boundary as nested lists of complex
//! numbers in row-major order.

use compdiv_core::approx;
use compdiv_core::circuits::{bell_projector, build_effect_family, BudgetPolynomial, BuildOptions, EffectFamily, GateSet};
use compdiv_core::divergences as dv;
use compdiv_core::hyptest::{stein_sequence, TensorPowerBuilder};
use compdiv_core::qmatrix::{ComplexMatrix, DensityMatrix, C64};
use compdiv_core::resources::{self, BracketOptions, ResourceMeasure};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: compdiv_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_state(rows: Vec<Vec<C64>>) -> PyResult<DensityMatrix> {
    let d = rows.len();
    if d == 0 || !d.is_power_of_two() || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("state must be a square 2^n x 2^n matrix"));
    }
    let m = ComplexMatrix::from_fn(d, |i, j| rows[i][j]);
    DensityMatrix::new(m, vec![2; d.trailing_zeros() as usize]).map_err(py_err)
}

fn from_state(s: &DensityMatrix) -> Vec<Vec<C64>> {
    let d = s.dim();
    (0..d).map(|i| (0..d).map(|j| s.matrix().get(i, j)).collect()).collect()
}

/// Binary measurements implementable within a gate budget.
#[pyclass(name = "Family", frozen)]
struct Family {
    inner: EffectFamily,
}

#[pymethods]
impl Family {
    #[new]
    #[pyo3(signature = (n, gate_set="HTCNOT", budget_poly=vec![2], ancillas=1, postprocessing=true))]
    fn new(n: usize, gate_set: &str, budget_poly: Vec<i64>, ancillas: usize, postprocessing: bool) -> PyResult<Self> {
        let gs = GateSet::preset(gate_set).map_err(py_err)?;
        let opts = BuildOptions { n_anc: ancillas, postprocessing, ..Default::default() };
        let inner = build_effect_family(n, &gs, &BudgetPolynomial::new(budget_poly), &opts).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Copy of the family with the Bell projector on n|n qubits added.
    fn with_bell(&self, n: usize) -> PyResult<Self> {
        let inner = self.inner.with_extra(vec![bell_projector(n)], 1_000_000).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn budget(&self) -> u32 {
        self.inner.budget()
    }

    #[getter]
    fn span_rank(&self) -> usize {
        self.inner.span_rank()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Family(n={}, budget={}, size={})", self.inner.n(), self.inner.budget(), self.inner.len())
    }
}

/// Divergence value: measure is one of tracedist, renyi, relent, maxdiv,
/// conic, fidelity, hilbert.
#[pyfunction]
#[pyo3(signature = (measure, rho, sigma, family, alpha=None))]
fn divergence(measure: &str, rho: Vec<Vec<C64>>, sigma: Vec<Vec<C64>>, family: &Family, alpha: Option<f64>) -> PyResult<f64> {
    let (r, s, f) = (to_state(rho)?, to_state(sigma)?, &family.inner);
    let v = match measure {
        "tracedist" => dv::comp_trace_distance(&r, &s, f).map(|x| x.value),
        "renyi" => {
            let a = alpha.ok_or_else(|| PyValueError::new_err("renyi needs alpha"))?;
            dv::measured_renyi(&r, &s, f, a).map(|x| x.value)
        }
        "relent" => dv::measured_relative_entropy(&r, &s, f).map(|x| x.value),
        "maxdiv" => dv::measured_max_divergence(&r, &s, f).map(|x| x.value),
        "conic" => dv::conic_max_divergence(&r, &s, f).map(|x| x.value),
        "fidelity" => dv::comp_fidelity(&r, &s, f).map(|x| x.value),
        "hilbert" => dv::hilbert_metric(&r, &s, f),
        other => return Err(PyValueError::new_err(format!("unknown measure {other}"))),
    };
    v.map_err(py_err)
}

/// (lower, upper) bracket on the resource of `rho` relative to sampled
/// separable states on an n_a|n_b cut.
#[pyfunction]
#[pyo3(signature = (rho, n_a, n_b, family, samples=20, seed=0, measure="relent"))]
fn resource_bracket(
    rho: Vec<Vec<C64>>,
    n_a: usize,
    n_b: usize,
    family: &Family,
    samples: usize,
    seed: u64,
    measure: &str,
) -> PyResult<(f64, f64)> {
    let m = match measure {
        "relent" => ResourceMeasure::Relent,
        "max" => ResourceMeasure::Max,
        other => return Err(PyValueError::new_err(format!("unknown resource measure {other}"))),
    };
    let free = resources::sep_candidates(n_a, n_b, samples, seed).map_err(py_err)?;
    let b = resources::resource_bracket(&to_state(rho)?, &free, &family.inner, m, BracketOptions::default())
        .map_err(py_err)?;
    Ok((b.lower, b.upper))
}

/// Per-copy (beta, stein_term, bound_term) for m = 1..=m_max.
#[pyfunction]
#[pyo3(signature = (rho, sigma, family, eps, m_max, budget_poly))]
fn stein(
    rho: Vec<Vec<C64>>,
    sigma: Vec<Vec<C64>>,
    family: &Family,
    eps: f64,
    m_max: usize,
    budget_poly: Vec<i64>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let mut b = TensorPowerBuilder::new(family.inner.clone(), BudgetPolynomial::new(budget_poly), 1_000_000);
    let seq = stein_sequence(&to_state(rho)?, &to_state(sigma)?, &mut b, eps, m_max).map_err(py_err)?;
    Ok(seq.reports.iter().map(|r| (r.beta, r.stein_term, r.bound_term)).collect())
}

#[pyfunction]
fn continuity_rhs(eps: f64, kappa: f64) -> PyResult<f64> {
    resources::continuity_rhs(eps, kappa).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (n, eps, dim_per_site=2))]
fn bernstein_k(n: usize, eps: f64, dim_per_site: usize) -> PyResult<u64> {
    approx::bernstein_k(n, dim_per_site, eps).map_err(py_err)
}

#[pyfunction]
fn bell_state(n: usize) -> Vec<Vec<C64>> {
    from_state(&resources::bell_state(n))
}

#[pyfunction]
fn sigma_star(n: usize) -> Vec<Vec<C64>> {
    from_state(&resources::sigma_star(n))
}

#[pymodule]
fn compdiv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Family>()?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(resource_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(stein, m)?)?;
    m.add_function(wrap_pyfunction!(continuity_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_k, m)?)?;
    m.add_function(wrap_pyfunction!(bell_state, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_star, m)?)?;
    Ok(())
}
