use crate::error::{invalid, precondition, Result};
use crate::qmatrix::{ComplexMatrix, MatrixFile, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub label: String,
    pub arity: usize,
    pub unitary: ComplexMatrix,
}

impl Gate {
    pub fn new(label: impl Into<String>, unitary: ComplexMatrix) -> Result<Self> {
        let d = unitary.dim();
        if !d.is_power_of_two() || d < 2 {
            return Err(invalid("circuits", format!("gate dimension {d} is not a qubit dimension")));
        }
        let defect = (&unitary.dagger() * &unitary).max_abs_diff(&ComplexMatrix::identity(d));
        if defect > UNITARY_TOL {
            return Err(invalid("circuits", format!("gate is not unitary (defect {defect:.2e})")));
        }
        Ok(Self { label: label.into(), arity: d.trailing_zeros() as usize, unitary })
    }

    /// Standard gates by label: H, X, Y, Z, S, Sdg, T, Tdg, CNOT, CZ.
    pub fn named(label: &str) -> Result<Self> {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let m = |d: usize, e: &[C64]| ComplexMatrix::from_fn(d, |i, j| e[i * d + j]);
        let u = match label {
            "H" => m(2, &[h, h, h, -h]),
            "X" => m(2, &[z, o, o, z]),
            "Y" => m(2, &[z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z]),
            "Z" => m(2, &[o, z, z, -o]),
            "S" => m(2, &[o, z, z, C64::new(0.0, 1.0)]),
            "Sdg" => m(2, &[o, z, z, C64::new(0.0, -1.0)]),
            "T" => m(2, &[o, z, z, C64::from_polar(1.0, FRAC_PI_4)]),
            "Tdg" => m(2, &[o, z, z, C64::from_polar(1.0, -FRAC_PI_4)]),
            "CNOT" => ComplexMatrix::from_fn(4, |i, j| {
                let t = [0, 1, 3, 2];
                if t[j] == i { o } else { z }
            }),
            "CZ" => ComplexMatrix::from_diagonal(&[1.0, 1.0, 1.0, -1.0]),
            other => return Err(invalid("circuits", format!("unknown gate label {other:?}"))),
        };
        Self::new(label, u)
    }
}

/// Finite gate set. A gate of arity `a` may act on any ordered `a`-tuple of
/// distinct wires.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    gates: Vec<Gate>,
}

impl GateSet {
    pub fn new(gates: Vec<Gate>) -> Result<Self> {
        if gates.is_empty() {
            return Err(invalid("circuits", "empty gate set"));
        }
        for (i, g) in gates.iter().enumerate() {
            if gates[..i].iter().any(|o| o.label == g.label) {
                return Err(invalid("circuits", format!("duplicate gate label {:?}", g.label)));
            }
        }
        Ok(Self { gates })
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::new(labels.iter().map(|l| Gate::named(l.as_ref())).collect::<Result<_>>()?)
    }

    /// `"HTCNOT"` = {H, T, CNOT}, `"HCNOT"` = {H, CNOT}, `"CLIFFORDT"` = {H, S, T, CNOT}.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "HTCNOT" => Self::from_labels(&["H", "T", "CNOT"]),
            "HCNOT" => Self::from_labels(&["H", "CNOT"]),
            "CLIFFORDT" => Self::from_labels(&["H", "S", "T", "CNOT"]),
            other => Err(invalid("circuits", format!("unknown gate-set preset {other:?}"))),
        }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.label == label)
    }

    pub fn max_arity(&self) -> usize {
        self.gates.iter().map(|g| g.arity).max().unwrap_or(0)
    }

    /// SHA-256 over labels, arities and the exact bits of every unitary entry.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for g in &self.gates {
            h.update(g.label.as_bytes());
            h.update([0u8]);
            h.update((g.arity as u64).to_le_bytes());
            let (re, im) = g.unitary.row_major();
            for x in re.iter().chain(&im) {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn to_specs(&self) -> Vec<GateSpec> {
        self.gates
            .iter()
            .map(|g| GateSpec { label: g.label.clone(), matrix: MatrixFile::from(&g.unitary) })
            .collect()
    }

    pub fn from_specs(specs: &[GateSpec]) -> Result<Self> {
        Self::new(specs.iter().map(|s| Gate::new(s.label.clone(), s.matrix.to_matrix()?)).collect::<Result<_>>()?)
    }
}

/// Serialized gate: label plus unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub label: String,
    #[serde(flatten)]
    pub matrix: MatrixFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateOp {
    pub gate: String,
    pub wires: Vec<usize>,
}

/// Gate sequence on data wires followed by ancilla wires. Wire 0 is the most
/// significant bit; ancillas start in |0>.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Circuit {
    pub n_data: usize,
    pub n_anc: usize,
    pub ops: Vec<GateOp>,
    pub measured_wire: usize,
}

impl Circuit {
    pub fn cost(&self) -> u32 {
        self.ops.len() as u32
    }

    pub fn n_wires(&self) -> usize {
        self.n_data + self.n_anc
    }

    pub fn validate(&self, gs: &GateSet) -> Result<()> {
        let w = self.n_wires();
        if self.measured_wire >= w {
            return Err(invalid("circuits", format!("measured wire {} of {w}", self.measured_wire)));
        }
        for op in &self.ops {
            let g = gs
                .index_of(&op.gate)
                .map(|i| &gs.gates()[i])
                .ok_or_else(|| invalid("circuits", format!("gate {:?} not in gate set", op.gate)))?;
            let mut seen = vec![false; w];
            if op.wires.len() != g.arity
                || op.wires.iter().any(|&x| x >= w || std::mem::replace(&mut seen[x], true))
            {
                return Err(invalid("circuits", format!("bad wires {:?} for {}", op.wires, op.gate)));
            }
        }
        Ok(())
    }
}

/// Integer polynomial p(n) = Σ c_k n^k; negative values clamp to zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BudgetPolynomial {
    pub coeffs: Vec<i64>,
}

impl BudgetPolynomial {
    pub fn new(coeffs: Vec<i64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: i64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn eval(&self, n: usize) -> u32 {
        let v = self.coeffs.iter().rev().fold(0i64, |acc, &c| acc * n as i64 + c);
        v.clamp(0, u32::MAX as i64) as u32
    }

    /// Checks p(a+b) ≥ p(a) + p(b) + 1 for all a, b ≥ 1 with a + b ≤ max_n.
    pub fn check_super_additive(&self, max_n: usize) -> Result<()> {
        for a in 1..max_n {
            for b in 1..=(max_n - a) {
                let (pa, pb, pab) = (self.eval(a) as u64, self.eval(b) as u64, self.eval(a + b) as u64);
                if pab < pa + pb + 1 {
                    return Err(precondition(
                        "circuits",
                        format!("budget polynomial not strictly super-additive: p({})={pab} < p({a})+p({b})+1", a + b),
                    ));
                }
            }
        }
        Ok(())
    }
}
