//! JSON file formats for matrices and states (row-major real/imaginary parts).

use super::{ComplexMatrix, DensityMatrix};
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub factor_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep_cost: Option<u32>,
}

impl From<&ComplexMatrix> for MatrixFile {
    fn from(m: &ComplexMatrix) -> Self {
        let (re, im) = m.row_major();
        Self { dim: m.dim(), re, im }
    }
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        ComplexMatrix::from_row_major(self.dim, &self.re, &self.im)
    }
}

impl From<&DensityMatrix> for StateFile {
    fn from(s: &DensityMatrix) -> Self {
        let (re, im) = s.matrix().row_major();
        Self { dim: s.dim(), re, im, factor_dims: s.factor_dims().to_vec(), prep_cost: s.prep_cost() }
    }
}

impl StateFile {
    pub fn to_state(&self) -> Result<DensityMatrix> {
        let m = ComplexMatrix::from_row_major(self.dim, &self.re, &self.im)?;
        let s = DensityMatrix::new(m, self.factor_dims.clone())?;
        Ok(match self.prep_cost {
            Some(c) => s.with_prep_cost(c),
            None => s,
        })
    }
}

impl DensityMatrix {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: StateFile = serde_json::from_slice(&std::fs::read(path)?)?;
        f.to_state()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(&StateFile::from(self))?)?;
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: MatrixFile = serde_json::from_slice(&std::fs::read(path)?)?;
        f.to_matrix()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(&MatrixFile::from(self))?)?;
        Ok(())
    }
}
