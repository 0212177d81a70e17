use super::{eig_hermitian, DensityMatrix, Eigen, HermitianMatrix, SUPPORT_REL_TOL};
use crate::error::{invalid, Error, Result};

/// Weight of `rho` outside the support of `sigma` before it counts as leaking.
const LEAK_TOL: f64 = 1e-9;

struct Support {
    eig: Eigen,
    cut: f64,
}

impl Support {
    fn of(s: &DensityMatrix) -> Result<Self> {
        let eig = eig_hermitian(s.hermitian())?;
        let cut = eig.support_cutoff(SUPPORT_REL_TOL);
        Ok(Self { eig, cut })
    }

    /// <v_k|rho|v_k> for every eigenvector of the support state.
    fn diag_weights(&self, rho: &DensityMatrix) -> Vec<f64> {
        let v = self.eig.vectors.inner();
        let r = rho.matrix().inner();
        (0..v.ncols())
            .map(|k| {
                let col = v.column(k);
                (col.adjoint() * r * col)[(0, 0)].re
            })
            .collect()
    }

    /// Weights of rho (inside, outside) the support.
    fn split(&self, rho: &DensityMatrix) -> (f64, f64) {
        let w = self.diag_weights(rho);
        let mut inside = 0.0;
        let mut outside = 0.0;
        for (x, &lam) in w.iter().zip(&self.eig.values) {
            if lam > self.cut {
                inside += x;
            } else {
                outside += x;
            }
        }
        (inside, outside)
    }

    fn power(&self, gamma: f64) -> HermitianMatrix {
        let cut = self.cut;
        self.eig.reconstruct(|x| if x > cut { x.powf(gamma) } else { 0.0 })
    }
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    Ok(())
}

fn sandwich(s: &HermitianMatrix, rho: &DensityMatrix) -> HermitianMatrix {
    let m = s.as_matrix();
    HermitianMatrix::symmetrized(&(m * rho.matrix()) * m)
}

/// Sandwiched Rényi divergence. `alpha == 1` gives the Umegaki relative
/// entropy and `alpha == ∞` the max-relative entropy.
pub fn sandwiched_renyi_info(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_dims(rho, sigma)?;
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(invalid("qmatrix", format!("Rényi order must be positive, got {alpha}")));
    }
    if alpha == 1.0 {
        return relative_entropy_info(rho, sigma);
    }
    if alpha.is_infinite() {
        return dmax_info(rho, sigma);
    }
    let sup = Support::of(sigma)?;
    let (inside, outside) = sup.split(rho);
    let finite = if alpha < 1.0 { inside > LEAK_TOL } else { outside <= LEAK_TOL };
    if !finite {
        return Ok(f64::INFINITY);
    }
    let gamma = (1.0 - alpha) / (2.0 * alpha);
    let x = sandwich(&sup.power(gamma), rho);
    let ex = eig_hermitian(&x)?;
    let q: f64 = ex.values.iter().map(|&m| if m > 0.0 { m.powf(alpha) } else { 0.0 }).sum();
    Ok((q / rho.hermitian().trace()).log2() / (alpha - 1.0))
}

pub fn relative_entropy_info(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let sup = Support::of(sigma)?;
    let w = sup.diag_weights(rho);
    let mut cross = 0.0;
    for (x, &lam) in w.iter().zip(&sup.eig.values) {
        if lam > sup.cut {
            cross += x * lam.log2();
        } else if *x > LEAK_TOL {
            return Ok(f64::INFINITY);
        }
    }
    let er = eig_hermitian(rho.hermitian())?;
    let neg_entropy: f64 = er.values.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum();
    Ok((neg_entropy - cross).max(0.0))
}

pub fn dmax_info(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let sup = Support::of(sigma)?;
    let (_, outside) = sup.split(rho);
    if outside > LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    let x = sandwich(&sup.power(-0.5), rho);
    Ok(eig_hermitian(&x)?.max().log2())
}

/// F = ‖√ρ √σ‖₁².
pub fn fidelity_info(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let sr = rho.hermitian().apply_fn(|x| x.max(0.0).sqrt())?;
    let m = sr.as_matrix();
    let inner = HermitianMatrix::symmetrized(&(m * sigma.matrix()) * m);
    let root: f64 = eig_hermitian(&inner)?.values.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok((root * root).min(1.0))
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance_info(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let diff = HermitianMatrix::symmetrized(rho.matrix() - sigma.matrix());
    Ok(0.5 * eig_hermitian(&diff)?.values.iter().map(|x| x.abs()).sum::<f64>())
}
