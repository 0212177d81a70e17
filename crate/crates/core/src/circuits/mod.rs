//! Circuit enumeration over a finite gate set and the effect families it
//! generates.
//!
//! A family for `n` data qubits contains the outcome-1 effect of every
//! circuit with at most `p(n)` gates, for every choice of measured wire,
//! together with complements and the trivial effects 0 and 1.

mod cache;
mod enumerate;
mod family;
mod gates;

pub use cache::{load_family_cache, read_cache_header, save_family_cache, CacheHeader, CACHE_FORMAT};
pub use enumerate::{
    apply_gate, canonical_phase, circuit_unitary, enumerate_unitaries, placements, EnumeratedUnitary, MatrixIndex,
    DEDUP_TOL, MAX_WIRES,
};
pub use family::{
    bell_projector, build_effect_family, effect_from_circuit, effect_from_unitary, hermitian_coords,
    is_informationally_complete, pauli_product_family, span_rank, tensor_family, BuildOptions, EffectFamily,
    EffectOperator, FamilyFlags, Provenance,
};
pub use gates::{BudgetPolynomial, Circuit, Gate, GateOp, GateSet, GateSpec};
