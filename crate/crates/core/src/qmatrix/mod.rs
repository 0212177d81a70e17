//! Dense complex matrices, density matrices and the information quantities
//! built on their spectra.
//!
//! All logarithms are base 2. Eigenvalues below `SUPPORT_REL_TOL * λ_max`
//! are treated as zero when deciding supports.

mod info;
mod io;
mod linalg;

pub use info::{
    dmax_info, fidelity_info, relative_entropy_info, sandwiched_renyi_info, trace_distance_info,
};
pub use io::{MatrixFile, StateFile};
pub use linalg::{eig_hermitian, partial_trace, permute_subsystems, schatten_norm, tensor, Eigen};

use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const SUPPORT_REL_TOL: f64 = 1e-10;

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("qmatrix", "non-finite entry"));
        }
        Ok(Self(m))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(d, d, f))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self::from_fn(d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Row-major real and imaginary parts.
    pub fn from_row_major(d: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != d * d || im.len() != d * d {
            return Err(Error::Dimension(format!(
                "expected {} entries, got re={} im={}",
                d * d,
                re.len(),
                im.len()
            )));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| C64::new(re[i * d + j], im[i * d + j])))
    }

    /// Outer product |v><v|.
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    /// Re Tr[self * other] without forming the product.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let d = self.dim();
        let (a, b) = (&self.0, &other.0);
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let x = a[(i, j)];
                let y = b[(j, i)];
                acc += x.re * y.re - x.im * y.im;
            }
        }
        acc
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn row_major(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(self.0[(i, j)].re);
                im.push(self.0[(i, j)].im);
            }
        }
        (re, im)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Hermitian matrix. The stored matrix is exactly Hermitian: construction
/// checks the defect and then symmetrizes.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, HERMITIAN_TOL)
    }

    pub fn with_tol(m: ComplexMatrix, tol: f64) -> Result<Self> {
        let deviation = m.hermiticity_defect();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// (M + M†)/2 with no check.
    pub fn symmetrized(m: ComplexMatrix) -> Self {
        let d = m.dim();
        let a = m.0;
        Self(ComplexMatrix(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(a[(i, i)].re, 0.0)
            } else {
                (a[(i, j)] + a[(j, i)].conj()) * 0.5
            }
        })))
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// f applied to the spectrum.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let e = eig_hermitian(self)?;
        Ok(e.reconstruct(f))
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*eig_hermitian(self)?.values.last().expect("nonempty"))
    }
}

/// Unit-trace positive semidefinite matrix with its tensor-factor dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    herm: HermitianMatrix,
    factor_dims: Vec<usize>,
    prep_cost: Option<u32>,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix, factor_dims: Vec<usize>) -> Result<Self> {
        Self::with_tol(m, factor_dims, HERMITIAN_TOL, PSD_TOL, TRACE_TOL)
    }

    pub fn with_tol(
        m: ComplexMatrix,
        factor_dims: Vec<usize>,
        herm_tol: f64,
        psd_tol: f64,
        trace_tol: f64,
    ) -> Result<Self> {
        check_factor_dims(m.dim(), &factor_dims)?;
        let herm = HermitianMatrix::with_tol(m, herm_tol)?;
        let trace = herm.trace();
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::Trace { trace });
        }
        let min_eig = herm.min_eigenvalue()?;
        if min_eig < -psd_tol {
            return Err(Error::NotPsd { min_eig });
        }
        Ok(Self { herm, factor_dims, prep_cost: None })
    }

    /// Normalized pure state |v><v|/<v|v>.
    pub fn pure(v: &[C64], factor_dims: Vec<usize>) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(invalid("qmatrix", "zero state vector"));
        }
        let m = ComplexMatrix::projector(v).scale(1.0 / norm2);
        Self::new(m, factor_dims)
    }

    /// Computational basis state on qubits, `bits[0]` most significant.
    pub fn basis(bits: &[u8]) -> Self {
        let d = 1usize << bits.len();
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let mut diag = vec![0.0; d];
        diag[idx] = 1.0;
        Self::from_diagonal_unchecked(&diag, vec![2; bits.len()])
    }

    pub fn maximally_mixed(factor_dims: Vec<usize>) -> Self {
        let d: usize = factor_dims.iter().product();
        Self::from_diagonal_unchecked(&vec![1.0 / d as f64; d], factor_dims)
    }

    pub fn from_diagonal(p: &[f64], factor_dims: Vec<usize>) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(p), factor_dims)
    }

    fn from_diagonal_unchecked(p: &[f64], factor_dims: Vec<usize>) -> Self {
        Self {
            herm: HermitianMatrix(ComplexMatrix::from_diagonal(p)),
            factor_dims,
            prep_cost: None,
        }
    }

    pub fn with_prep_cost(mut self, cost: u32) -> Self {
        self.prep_cost = Some(cost);
        self
    }

    pub fn prep_cost(&self) -> Option<u32> {
        self.prep_cost
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.herm.as_matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn dim(&self) -> usize {
        self.herm.dim()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    /// Number of qubits when every factor is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    /// Re Tr[E rho].
    pub fn expectation(&self, e: &ComplexMatrix) -> f64 {
        e.trace_product(self.matrix())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        let prep_cost = match (self.prep_cost, other.prep_cost) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        DensityMatrix {
            herm: HermitianMatrix::symmetrized(tensor(self.matrix(), other.matrix())),
            factor_dims: dims,
            prep_cost,
        }
    }

    pub fn tensor_power(&self, m: usize) -> DensityMatrix {
        assert!(m >= 1, "tensor power needs m >= 1");
        let mut out = self.clone();
        for _ in 1..m {
            out = out.tensor(self);
        }
        out
    }

    /// Convex combination (1-t) self + t other.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("mixing states of different dimension".into()));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("qmatrix", format!("mixing weight {t} outside [0,1]")));
        }
        let m = &self.matrix().scale(1.0 - t) + &other.matrix().scale(t);
        Ok(DensityMatrix {
            herm: HermitianMatrix::symmetrized(m),
            factor_dims: self.factor_dims.clone(),
            prep_cost: None,
        })
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = partial_trace(self.matrix(), &self.factor_dims, keep)?;
        let dims = keep.iter().map(|&k| self.factor_dims[k]).collect();
        Ok(DensityMatrix { herm: HermitianMatrix::symmetrized(m), factor_dims: dims, prep_cost: None })
    }

    /// Applies a channel given by Kraus operators.
    pub fn apply_kraus(&self, kraus: &[ComplexMatrix]) -> Result<DensityMatrix> {
        let mut acc = ComplexMatrix::zeros(self.dim());
        for k in kraus {
            if k.dim() != self.dim() {
                return Err(Error::Dimension("Kraus operator dimension".into()));
            }
            acc = &acc + &(&(k * self.matrix()) * &k.dagger());
        }
        DensityMatrix::new(acc, self.factor_dims.clone())
    }
}

fn check_factor_dims(d: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || prod != d || dims.contains(&0) {
        return Err(Error::Dimension(format!("factor dims {dims:?} do not multiply to {d}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::from_diagonal(&[0.7, 0.7]);
        assert!(matches!(DensityMatrix::new(bad, vec![2]), Err(Error::Trace { .. })));
        let neg = ComplexMatrix::from_diagonal(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(neg, vec![2]), Err(Error::NotPsd { .. })));
        let mut nh = ComplexMatrix::from_diagonal(&[0.5, 0.5]).into_inner();
        nh[(0, 1)] = C64::new(0.1, 0.0);
        let nh = ComplexMatrix::new(nh).unwrap();
        assert!(matches!(DensityMatrix::new(nh, vec![2]), Err(Error::NotHermitian { .. })));
        assert!(DensityMatrix::new(ComplexMatrix::identity(4).scale(0.25), vec![2, 3]).is_err());
    }

    #[test]
    fn trace_product_matches_product_trace() {
        let a = ComplexMatrix::from_fn(3, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        let b = ComplexMatrix::from_fn(3, |i, j| C64::new((i * j) as f64, 0.25 * i as f64));
        let direct = (&a * &b).trace().re;
        assert!((a.trace_product(&b) - direct).abs() < 1e-12);
    }

    #[test]
    fn basis_state_ordering() {
        let s = DensityMatrix::basis(&[1, 0]);
        assert_eq!(s.matrix().get(2, 2).re, 1.0);
    }
}
