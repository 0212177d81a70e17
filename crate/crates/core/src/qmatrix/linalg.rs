use super::{ComplexMatrix, HermitianMatrix, C64};
use crate::error::{invalid, Error, Result};
use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;

/// Spectral decomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// Σ f(λ_i) |v_i><v_i|.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let v = self.vectors.inner();
        let d = v.nrows();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut scaled = v.clone();
        for (k, &w) in fv.iter().enumerate() {
            scaled.column_mut(k).scale_mut(w);
        }
        let m = &scaled * v.adjoint();
        debug_assert_eq!(m.nrows(), d);
        HermitianMatrix::symmetrized(ComplexMatrix(m))
    }

    /// Eigenvalue count above the relative support cutoff.
    pub fn support_size(&self, rel_tol: f64) -> usize {
        let cut = self.support_cutoff(rel_tol);
        self.values.iter().filter(|&&x| x > cut).count()
    }

    pub fn support_cutoff(&self, rel_tol: f64) -> f64 {
        rel_tol * self.values[0].abs().max(f64::MIN_POSITIVE)
    }
}

pub fn eig_hermitian(h: &HermitianMatrix) -> Result<Eigen> {
    let m = h.as_matrix().inner().clone();
    let d = m.nrows();
    let se = SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(d, d, |i, j| se.eigenvectors[(i, order[j])]);
    Ok(Eigen { values, vectors: ComplexMatrix(vectors) })
}

/// Kronecker product, `a` on the more significant factor.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.inner().kronecker(b.inner()))
}

/// Schatten p-norm for p >= 1 (use `f64::INFINITY` for the operator norm).
pub fn schatten_norm(a: &ComplexMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("qmatrix", format!("Schatten norm needs p >= 1, got {p}")));
    }
    let svd = a.inner().clone().try_svd(false, false, f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let s = svd.singular_values;
    if p.is_infinite() {
        return Ok(s.iter().cloned().fold(0.0, f64::max));
    }
    if p == 1.0 {
        return Ok(s.iter().sum());
    }
    Ok(s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

/// Traces out every factor not listed in `keep` (strictly increasing indices).
pub fn partial_trace(a: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let d: usize = dims.iter().product();
    if d != a.dim() {
        return Err(Error::Dimension(format!("factor dims {dims:?} vs matrix dim {}", a.dim())));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(invalid("qmatrix", format!("keep list {keep:?} invalid for {} factors", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kd: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let td: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let st = strides(dims);
    let dk: usize = kd.iter().product();
    let dt: usize = td.iter().product();
    let offset = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut kdig = vec![0; kd.len()];
        let mut tdig = vec![0; td.len()];
        digits(kept_idx, &kd, &mut kdig);
        digits(traced_idx, &td, &mut tdig);
        keep.iter().zip(&kdig).map(|(&f, &x)| st[f] * x).sum::<usize>()
            + traced.iter().zip(&tdig).map(|(&f, &x)| st[f] * x).sum::<usize>()
    };
    let m = a.inner();
    let mut out = DMatrix::<C64>::zeros(dk, dk);
    for t in 0..dt {
        let rows: Vec<usize> = (0..dk).map(|r| offset(r, t)).collect();
        for (r, &ir) in rows.iter().enumerate() {
            for (c, &ic) in rows.iter().enumerate() {
                out[(r, c)] += m[(ir, ic)];
            }
        }
    }
    Ok(ComplexMatrix(out))
}

/// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of `a`.
pub fn permute_subsystems(a: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let d: usize = dims.iter().product();
    if d != a.dim() {
        return Err(Error::Dimension(format!("factor dims {dims:?} vs matrix dim {}", a.dim())));
    }
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(invalid("qmatrix", format!("{perm:?} is not a permutation")));
    }
    let old_st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut dig = vec![0; dims.len()];
    let map: Vec<usize> = (0..d)
        .map(|new_idx| {
            digits(new_idx, &new_dims, &mut dig);
            perm.iter().zip(&dig).map(|(&p, &x)| old_st[p] * x).sum()
        })
        .collect();
    let m = a.inner();
    Ok(ComplexMatrix(DMatrix::from_fn(d, d, |i, j| m[(map[i], map[j])])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::DensityMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_of_identities_and_dims() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let k = tensor(&a, &b);
        assert_eq!(k.dim(), 6);
        assert_eq!(k.get(4, 4), c(2.0, 0.0));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexMatrix::from_fn(2, |i, j| c((i + 2 * j) as f64, i as f64 - j as f64));
        let b = ComplexMatrix::from_diagonal(&[0.25, 0.75, 0.0]);
        let k = tensor(&a, &b);
        let ta = partial_trace(&k, &[2, 3], &[0]).unwrap();
        assert!(ta.max_abs_diff(&a) < 1e-14);
        let tb = partial_trace(&k, &[2, 3], &[1]).unwrap();
        assert!(tb.max_abs_diff(&b.scale(a.trace().re)) < 1e-14);
        assert!(partial_trace(&k, &[2, 3], &[1, 0]).is_err());
    }

    #[test]
    fn swap_matches_explicit_kron_order() {
        let a = ComplexMatrix::from_fn(2, |i, j| c(i as f64, j as f64 + 0.5));
        let b = ComplexMatrix::from_fn(3, |i, j| c((i * j) as f64, -(i as f64)));
        let ab = tensor(&a, &b);
        let ba = tensor(&b, &a);
        assert!(permute_subsystems(&ab, &[2, 3], &[1, 0]).unwrap().max_abs_diff(&ba) < 1e-15);
    }

    #[test]
    fn eigen_descending_and_reconstructs() {
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 1.0)], vec![2]).unwrap();
        let e = eig_hermitian(rho.hermitian()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && e.values[1].abs() < 1e-14);
        let back = e.reconstruct(|x| x);
        assert!(back.as_matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn schatten_examples() {
        let m = ComplexMatrix::from_diagonal(&[3.0, -4.0]);
        assert!((schatten_norm(&m, 1.0).unwrap() - 7.0).abs() < 1e-12);
        assert!((schatten_norm(&m, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((schatten_norm(&m, f64::INFINITY).unwrap() - 4.0).abs() < 1e-12);
        assert!(schatten_norm(&m, 0.5).is_err());
    }
}
