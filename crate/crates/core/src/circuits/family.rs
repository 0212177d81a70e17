use super::enumerate::{circuit_unitary, enumerate_unitaries, MatrixIndex, DEDUP_TOL};
use super::gates::{BudgetPolynomial, Circuit, GateSet};
use crate::error::{invalid, Error, Result};
use crate::qmatrix::{eig_hermitian, tensor, ComplexMatrix, HermitianMatrix, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

const EFFECT_TOL: f64 = 1e-9;
const SPAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Zero,
    Identity,
    Circuit(Circuit),
    Complement(Box<Provenance>),
    Tensor(Box<Provenance>, Box<Provenance>),
    /// Product projector onto Pauli eigenstates; `bases` over {X,Y,Z}, `outcomes` over {0,1}.
    Postprocessing { bases: String, outcomes: String },
    Named(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectOperator {
    pub matrix: HermitianMatrix,
    pub cost: u32,
    pub provenance: Provenance,
}

impl EffectOperator {
    /// Checks 0 ≤ E ≤ 1 within tolerance.
    pub fn new(matrix: HermitianMatrix, cost: u32, provenance: Provenance) -> Result<Self> {
        let e = eig_hermitian(&matrix)?;
        let (hi, lo) = (e.values[0], *e.values.last().expect("nonempty"));
        if lo < -EFFECT_TOL || hi > 1.0 + EFFECT_TOL {
            return Err(invalid("circuits", format!("effect spectrum [{lo:.3e}, {hi:.3e}] outside [0,1]")));
        }
        Ok(Self { matrix, cost, provenance })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn m(&self) -> &ComplexMatrix {
        self.matrix.as_matrix()
    }

    pub fn complement(&self) -> EffectOperator {
        let d = self.dim();
        EffectOperator {
            matrix: HermitianMatrix::symmetrized(&ComplexMatrix::identity(d) - self.m()),
            cost: self.cost,
            provenance: Provenance::Complement(Box::new(self.provenance.clone())),
        }
    }

    pub fn tensor(&self, other: &EffectOperator) -> EffectOperator {
        EffectOperator {
            matrix: HermitianMatrix::symmetrized(tensor(self.m(), other.m())),
            cost: self.cost + other.cost,
            provenance: Provenance::Tensor(Box::new(self.provenance.clone()), Box::new(other.provenance.clone())),
        }
    }
}

/// E = V† Π₁ V with V the isometry `U (· ⊗ |0…0>_anc)` and Π₁ projecting
/// `measured_wire` onto |1>.
pub fn effect_from_unitary(u: &ComplexMatrix, n_data: usize, n_anc: usize, measured_wire: usize) -> HermitianMatrix {
    let n = n_data + n_anc;
    let d = 1usize << n_data;
    let stride = 1usize << n_anc;
    let mask = 1usize << (n - 1 - measured_wire);
    let rows: Vec<usize> = (0..1usize << n).filter(|k| k & mask != 0).collect();
    let m = u.inner();
    HermitianMatrix::symmetrized(ComplexMatrix::from_fn(d, |i, j| {
        rows.iter().map(|&k| m[(k, i * stride)].conj() * m[(k, j * stride)]).sum()
    }))
}

pub fn effect_from_circuit(c: &Circuit, gs: &GateSet) -> Result<EffectOperator> {
    let u = circuit_unitary(c, gs)?;
    Ok(EffectOperator {
        matrix: effect_from_unitary(&u, c.n_data, c.n_anc, c.measured_wire),
        cost: c.cost(),
        provenance: Provenance::Circuit(c.clone()),
    })
}

/// Rank-one projector onto 2^{-n/2} Σ_i |i>_A |i>_B (registers A then B,
/// n qubits each), costed as n Hadamards plus n CNOTs.
pub fn bell_projector(n: usize) -> EffectOperator {
    let half = 1usize << n;
    let w = 1.0 / half as f64;
    let m = ComplexMatrix::from_fn(half * half, |r, c| {
        if r % (half + 1) == 0 && c % (half + 1) == 0 { C64::new(w, 0.0) } else { C64::new(0.0, 0.0) }
    });
    EffectOperator {
        matrix: HermitianMatrix::symmetrized(m),
        cost: 2 * n as u32,
        provenance: Provenance::Named(format!("bell({n})")),
    }
}

/// Product projectors onto X, Y or Z eigenstates of every qubit. Cost counts
/// the qubits whose basis is rotated away from Z.
pub fn pauli_product_family(n: usize) -> Vec<EffectOperator> {
    let h = FRAC_1_SQRT_2;
    let vec_of = |basis: u8, out: u8| -> [C64; 2] {
        let s = if out == 0 { 1.0 } else { -1.0 };
        match basis {
            b'Z' => if out == 0 { [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] } else { [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] },
            b'X' => [C64::new(h, 0.0), C64::new(s * h, 0.0)],
            _ => [C64::new(h, 0.0), C64::new(0.0, s * h)],
        }
    };
    let mut out = Vec::new();
    let bases = *b"ZXY";
    for bcode in 0..3usize.pow(n as u32) {
        let b: Vec<u8> = (0..n).map(|i| bases[bcode / 3usize.pow((n - 1 - i) as u32) % 3]).collect();
        for o in 0..1usize << n {
            let bits: Vec<u8> = (0..n).map(|i| (o >> (n - 1 - i) & 1) as u8).collect();
            let mut m = ComplexMatrix::identity(1);
            for (bb, oo) in b.iter().zip(&bits) {
                m = tensor(&m, &ComplexMatrix::projector(&vec_of(*bb, *oo)));
            }
            out.push(EffectOperator {
                matrix: HermitianMatrix::symmetrized(m),
                cost: b.iter().filter(|&&x| x != b'Z').count() as u32,
                provenance: Provenance::Postprocessing {
                    bases: String::from_utf8(b.clone()).expect("ascii"),
                    outcomes: bits.iter().map(|x| char::from(b'0' + x)).collect(),
                },
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyFlags {
    pub contains_zero: bool,
    pub contains_identity: bool,
    pub complement_closed: bool,
    pub info_complete: bool,
}

/// Deduplicated set of effect operators closed under complement and
/// containing 0 and 1.
#[derive(Clone, Debug)]
pub struct EffectFamily {
    n: usize,
    budget: u32,
    effects: Vec<EffectOperator>,
    flags: FamilyFlags,
    span_rank: usize,
}

impl EffectFamily {
    /// Deduplicates, adds 0, 1 and all complements, then computes flags.
    pub fn assemble(n: usize, budget: u32, dim: usize, effects: Vec<EffectOperator>, cap: usize) -> Result<Self> {
        let mut asm = Assembler::new(dim, cap);
        asm.push(EffectOperator { matrix: HermitianMatrix::symmetrized(ComplexMatrix::zeros(dim)), cost: 0, provenance: Provenance::Zero })?;
        asm.push(EffectOperator { matrix: HermitianMatrix::symmetrized(ComplexMatrix::identity(dim)), cost: 0, provenance: Provenance::Identity })?;
        for e in effects {
            if e.dim() != dim {
                return Err(Error::Dimension(format!("effect of dim {} in family of dim {dim}", e.dim())));
            }
            asm.push(e)?;
        }
        let base = asm.effects.len();
        for i in 0..base {
            let c = asm.effects[i].complement();
            asm.push(c)?;
        }
        let effects = asm.effects;
        let zero = ComplexMatrix::zeros(dim);
        let id = ComplexMatrix::identity(dim);
        let mut index = MatrixIndex::new(DEDUP_TOL);
        for (i, e) in effects.iter().enumerate() {
            index.insert(e.m(), i);
        }
        let complement_closed = effects
            .iter()
            .all(|e| index.find_by(&(&id - e.m()), |j| effects[j].m()).is_some());
        let span_rank = span_rank(effects.iter().map(|e| e.m()), dim);
        let flags = FamilyFlags {
            contains_zero: effects.iter().any(|e| e.m().max_abs_diff(&zero) <= DEDUP_TOL),
            contains_identity: effects.iter().any(|e| e.m().max_abs_diff(&id) <= DEDUP_TOL),
            complement_closed,
            info_complete: span_rank == dim * dim,
        };
        Ok(Self { n, budget, effects, flags, span_rank })
    }

    /// This family with extra generators (and their complements) added.
    pub fn with_extra(&self, extra: Vec<EffectOperator>, cap: usize) -> Result<Self> {
        let mut all = self.effects.clone();
        all.extend(extra);
        Self::assemble(self.n, self.budget, self.dim(), all, cap)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn effects(&self) -> &[EffectOperator] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn flags(&self) -> FamilyFlags {
        self.flags
    }

    pub fn span_rank(&self) -> usize {
        self.span_rank
    }

    /// Index of an effect within dedup tolerance of `m`.
    pub fn position(&self, m: &ComplexMatrix) -> Option<usize> {
        self.effects.iter().position(|e| e.m().max_abs_diff(m) <= DEDUP_TOL)
    }
}

struct Assembler {
    dim: usize,
    cap: usize,
    index: MatrixIndex,
    effects: Vec<EffectOperator>,
}

impl Assembler {
    fn new(dim: usize, cap: usize) -> Self {
        Self { dim, cap, index: MatrixIndex::new(DEDUP_TOL), effects: Vec::new() }
    }

    /// Insert-if-absent; on a duplicate the cheaper provenance wins.
    fn push(&mut self, e: EffectOperator) -> Result<()> {
        debug_assert_eq!(e.dim(), self.dim);
        let effects = &self.effects;
        match self.index.find_by(e.m(), |j| effects[j].m()) {
            Some(j) => {
                if e.cost < self.effects[j].cost {
                    self.effects[j].cost = e.cost;
                    self.effects[j].provenance = e.provenance;
                }
            }
            None => {
                if self.effects.len() >= self.cap {
                    return Err(Error::CapExceeded { cap: self.cap, reached: self.effects.len() });
                }
                self.index.insert(e.m(), self.effects.len());
                self.effects.push(e);
            }
        }
        Ok(())
    }
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis of the
/// d²-dimensional real space of Hermitian matrices.
pub fn hermitian_coords(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.dim();
    let r2 = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m.get(i, i).re);
    }
    for i in 0..d {
        for j in i + 1..d {
            v.push(r2 * m.get(i, j).re);
            v.push(r2 * m.get(i, j).im);
        }
    }
    v
}

/// Dimension of the real span, by Gram–Schmidt with re-orthogonalization.
pub fn span_rank<'a>(mats: impl Iterator<Item = &'a ComplexMatrix>, dim: usize) -> usize {
    let full = dim * dim;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for m in mats {
        if basis.len() == full {
            break;
        }
        let mut v = hermitian_coords(m);
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > SPAN_TOL * norm0 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis.len()
}

pub fn is_informationally_complete(f: &EffectFamily) -> bool {
    f.flags.info_complete
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildOptions {
    pub n_anc: usize,
    pub postprocessing: bool,
    pub unitary_cap: usize,
    pub family_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { n_anc: 1, postprocessing: false, unitary_cap: 200_000, family_cap: 200_000 }
    }
}

pub fn build_effect_family(
    n: usize,
    gs: &GateSet,
    budget_poly: &BudgetPolynomial,
    options: &BuildOptions,
) -> Result<EffectFamily> {
    if n == 0 {
        return Err(invalid("circuits", "family needs at least one data qubit"));
    }
    let budget = budget_poly.eval(n);
    let wires = n + options.n_anc;
    let unitaries = if gs.max_arity() > wires {
        let usable: Vec<_> = gs.gates().iter().filter(|g| g.arity <= wires).cloned().collect();
        if usable.is_empty() {
            vec![]
        } else {
            enumerate_unitaries(&GateSet::new(usable)?, wires, budget, options.unitary_cap)?
        }
    } else {
        enumerate_unitaries(gs, wires, budget, options.unitary_cap)?
    };
    let mut effects = Vec::new();
    if unitaries.is_empty() {
        for w in 0..wires {
            effects.push(EffectOperator {
                matrix: effect_from_unitary(&ComplexMatrix::identity(1 << wires), n, options.n_anc, w),
                cost: 0,
                provenance: Provenance::Circuit(Circuit { n_data: n, n_anc: options.n_anc, ops: vec![], measured_wire: w }),
            });
        }
    }
    for u in &unitaries {
        for w in 0..wires {
            effects.push(EffectOperator {
                matrix: effect_from_unitary(&u.unitary, n, options.n_anc, w),
                cost: u.cost,
                provenance: Provenance::Circuit(Circuit { n_data: n, n_anc: options.n_anc, ops: u.ops.clone(), measured_wire: w }),
            });
        }
    }
    if options.postprocessing {
        effects.extend(pauli_product_family(n));
    }
    EffectFamily::assemble(n, budget, 1 << n, effects, options.family_cap)
}

/// Products E₁⊗E₂ with c₁ + c₂ < `composite_budget`, closed as a family.
pub fn tensor_family(f1: &EffectFamily, f2: &EffectFamily, composite_budget: u32, cap: usize) -> Result<EffectFamily> {
    let mut products = Vec::new();
    for a in f1.effects() {
        for b in f2.effects() {
            if a.cost + b.cost < composite_budget {
                products.push(a.tensor(b));
            }
        }
    }
    EffectFamily::assemble(f1.n + f2.n, composite_budget, f1.dim() * f2.dim(), products, cap)
}
