use super::gates::{Circuit, GateOp, GateSet};
use crate::error::{invalid, Error, Result};
use crate::qmatrix::{ComplexMatrix, C64};
use rayon::prelude::*;
use std::collections::HashMap;

pub const DEDUP_TOL: f64 = 1e-8;
const QUANTUM: f64 = 1e6;
const PIVOT_TOL: f64 = 1e-6;
pub const MAX_WIRES: usize = 8;

/// Insert-if-absent index over matrices, hashed on quantized entries and
/// confirmed entrywise within `tol`.
#[derive(Debug, Default)]
pub struct MatrixIndex {
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    tol: f64,
}

impl MatrixIndex {
    pub fn new(tol: f64) -> Self {
        Self { buckets: HashMap::new(), tol }
    }

    fn key(m: &ComplexMatrix) -> Vec<i64> {
        m.inner().iter().flat_map(|z| [(z.re * QUANTUM).round() as i64, (z.im * QUANTUM).round() as i64]).collect()
    }

    pub fn find(&self, m: &ComplexMatrix, store: &[ComplexMatrix]) -> Option<usize> {
        self.find_by(m, |i| &store[i])
    }

    pub fn find_by<'a>(&self, m: &ComplexMatrix, get: impl Fn(usize) -> &'a ComplexMatrix) -> Option<usize> {
        self.buckets.get(&Self::key(m))?.iter().copied().find(|&i| get(i).max_abs_diff(m) <= self.tol)
    }

    /// Records `m` under `id`; the caller has already checked absence.
    pub fn insert(&mut self, m: &ComplexMatrix, id: usize) {
        self.buckets.entry(Self::key(m)).or_default().push(id);
    }
}

/// Multiplies the first nonzero entry of the first column to positive real.
pub fn canonical_phase(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.dim();
    let pivot = (0..d).map(|i| u.get(i, 0)).find(|z| z.norm() > PIVOT_TOL).unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    ComplexMatrix::from_fn(d, |i, j| u.get(i, j) * phase)
}

/// Left-multiplies `u` by `g` acting on `wires` of an `n_wires` register.
pub fn apply_gate(u: &ComplexMatrix, g: &ComplexMatrix, wires: &[usize], n_wires: usize) -> ComplexMatrix {
    let d = 1usize << n_wires;
    let k = wires.len();
    let masks: Vec<usize> = wires.iter().map(|&w| 1usize << (n_wires - 1 - w)).collect();
    let all: usize = masks.iter().sum();
    let sub = |r: usize| masks.iter().fold(0usize, |acc, &m| (acc << 1) | usize::from(r & m != 0));
    let with = |base: usize, s: usize| {
        let mut r = base & !all;
        for (i, &m) in masks.iter().enumerate() {
            if s >> (k - 1 - i) & 1 == 1 {
                r |= m;
            }
        }
        r
    };
    let src = u.inner();
    ComplexMatrix::from_fn(d, |r, c| {
        let sr = sub(r);
        (0..1usize << k).map(|t| g.get(sr, t) * src[(with(r, t), c)]).sum()
    })
}

/// Every (gate index, ordered distinct wire tuple).
pub fn placements(gs: &GateSet, n_wires: usize) -> Vec<(usize, Vec<usize>)> {
    fn tuples(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for w in 0..n {
            if !cur.contains(&w) {
                cur.push(w);
                tuples(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for (gi, g) in gs.gates().iter().enumerate() {
        let mut t = Vec::new();
        tuples(n_wires, g.arity, &mut Vec::new(), &mut t);
        out.extend(t.into_iter().map(|w| (gi, w)));
    }
    out
}

#[derive(Clone, Debug)]
pub struct EnumeratedUnitary {
    pub unitary: ComplexMatrix,
    pub cost: u32,
    /// One minimal gate sequence, first gate applied first.
    pub ops: Vec<GateOp>,
}

/// Breadth-first enumeration of distinct unitaries (up to global phase) with
/// at most `budget` gates on `n_wires` wires.
pub fn enumerate_unitaries(gs: &GateSet, n_wires: usize, budget: u32, cap: usize) -> Result<Vec<EnumeratedUnitary>> {
    if n_wires == 0 || n_wires > MAX_WIRES {
        return Err(invalid("circuits", format!("{n_wires} wires outside 1..={MAX_WIRES}")));
    }
    if gs.max_arity() > n_wires {
        return Err(invalid("circuits", format!("gate arity {} exceeds {n_wires} wires", gs.max_arity())));
    }
    let places = placements(gs, n_wires);
    let gates: Vec<&ComplexMatrix> = gs.gates().iter().map(|g| &g.unitary).collect();
    let mut found = vec![EnumeratedUnitary { unitary: ComplexMatrix::identity(1 << n_wires), cost: 0, ops: vec![] }];
    let mut index = MatrixIndex::new(DEDUP_TOL);
    index.insert(&found[0].unitary, 0);
    let mut frontier = vec![0usize];
    for cost in 1..=budget {
        let mut next = Vec::new();
        for chunk in frontier.chunks(256) {
            let candidates: Vec<Vec<ComplexMatrix>> = chunk
                .par_iter()
                .map(|&i| {
                    places
                        .iter()
                        .map(|(g, w)| canonical_phase(&apply_gate(&found[i].unitary, gates[*g], w, n_wires)))
                        .collect()
                })
                .collect();
            for (&parent, cands) in chunk.iter().zip(candidates) {
                for (p, u) in cands.into_iter().enumerate() {
                    if index.find_by(&u, |j| &found[j].unitary).is_some() {
                        continue;
                    }
                    if found.len() >= cap {
                        return Err(Error::CapExceeded { cap, reached: found.len() });
                    }
                    let (g, w) = &places[p];
                    let mut ops = found[parent].ops.clone();
                    ops.push(GateOp { gate: gs.gates()[*g].label.clone(), wires: w.clone() });
                    index.insert(&u, found.len());
                    next.push(found.len());
                    found.push(EnumeratedUnitary { unitary: u, cost, ops });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(found)
}

/// Full unitary of a circuit on its data+ancilla register.
pub fn circuit_unitary(c: &Circuit, gs: &GateSet) -> Result<ComplexMatrix> {
    c.validate(gs)?;
    let n = c.n_wires();
    let mut u = ComplexMatrix::identity(1 << n);
    for op in &c.ops {
        let g = &gs.gates()[gs.index_of(&op.gate).expect("validated")].unitary;
        u = apply_gate(&u, g, &op.wires, n);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::tensor;

    fn gs(l: &[&str]) -> GateSet {
        GateSet::from_labels(l).unwrap()
    }

    #[test]
    fn budget_zero_is_identity_only() {
        let u = enumerate_unitaries(&gs(&["H", "T"]), 1, 0, 10).unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].cost, 0);
    }

    #[test]
    fn hadamard_involution_dedups() {
        let u = enumerate_unitaries(&gs(&["H"]), 1, 2, 10).unwrap();
        assert_eq!(u.iter().map(|e| e.cost).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn apply_gate_matches_kron_embedding() {
        let h = crate::circuits::Gate::named("H").unwrap().unitary;
        let cx = crate::circuits::Gate::named("CNOT").unwrap().unitary;
        let i2 = ComplexMatrix::identity(2);
        let id = ComplexMatrix::identity(8);
        let on1 = apply_gate(&id, &h, &[1], 3);
        assert!(on1.max_abs_diff(&tensor(&tensor(&i2, &h), &i2)) < 1e-15);
        let cx01 = apply_gate(&id, &cx, &[0, 1], 3);
        assert!(cx01.max_abs_diff(&tensor(&cx, &i2)) < 1e-15);
        let swap = ComplexMatrix::from_fn(4, |i, j| {
            let s = [0, 2, 1, 3];
            if s[j] == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let cx10 = apply_gate(&ComplexMatrix::identity(4), &cx, &[1, 0], 2);
        assert!(cx10.max_abs_diff(&(&(&swap * &cx) * &swap)) < 1e-15);
    }

    #[test]
    fn cap_error_reports_count() {
        match enumerate_unitaries(&gs(&["H", "T"]), 1, 6, 5) {
            Err(Error::CapExceeded { cap: 5, reached: 5 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Depth-first recount with quadratic phase-invariant comparison
    /// |Tr U†V| = d, sharing nothing with the hashed breadth-first path.
    fn dfs_count(gs: &GateSet, n_wires: usize, budget: u32) -> usize {
        fn rec(u: &ComplexMatrix, depth: u32, budget: u32, gs: &GateSet, n: usize, seen: &mut Vec<ComplexMatrix>) {
            let d = u.dim() as f64;
            if !seen.iter().any(|v| ((&v.dagger() * u).trace().norm() - d).abs() < 1e-9) {
                seen.push(u.clone());
            }
            if depth == budget {
                return;
            }
            for (g, w) in placements(gs, n) {
                let v = apply_gate(u, &gs.gates()[g].unitary, &w, n);
                rec(&v, depth + 1, budget, gs, n, seen);
            }
        }
        let mut seen = Vec::new();
        rec(&ComplexMatrix::identity(1 << n_wires), 0, budget, gs, n_wires, &mut seen);
        seen.len()
    }

    #[test]
    fn enumeration_count_matches_dfs_oracle() {
        let g = gs(&["H", "T"]);
        for b in 0..=3 {
            assert_eq!(enumerate_unitaries(&g, 1, b, 10_000).unwrap().len(), dfs_count(&g, 1, b));
        }
        let g2 = gs(&["H", "CNOT"]);
        assert_eq!(enumerate_unitaries(&g2, 2, 3, 10_000).unwrap().len(), dfs_count(&g2, 2, 3));
    }

    #[test]
    fn recorded_ops_reproduce_unitary_and_cost_is_minimal() {
        let g = gs(&["H", "T", "CNOT"]);
        let list = enumerate_unitaries(&g, 2, 3, 100_000).unwrap();
        for e in &list {
            let c = Circuit { n_data: 2, n_anc: 0, ops: e.ops.clone(), measured_wire: 0 };
            assert_eq!(c.cost(), e.cost);
            let u = canonical_phase(&circuit_unitary(&c, &g).unwrap());
            assert!(u.max_abs_diff(&e.unitary) < 1e-10);
        }
        assert!(list.windows(2).all(|w| w[0].cost <= w[1].cost));
    }
}
