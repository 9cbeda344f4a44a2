//! Symmetry group `Z2 × S_Φ` (register exchange and pixel complement), dense
//! equivariance certification, and the operator pool shared by both quantum
//! models.
//!
//! Pool operators are `n`-uniform families. They are certified densely at two
//! qubits per register and instantiated structurally at any `n`.
//!
//! Nearest-neighbour sums run over the closed ring of `2n` qubits, bonds
//! `(q, q+1 mod 2n)`. The register exchange maps bond `(n-1, n)` onto the
//! wrap-around bond `(2n-1, 0)`, so both must be present for the sums to
//! commute with it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::dataset::{Barcode, SamplePair};
use crate::dense::DenseMatrix;
use crate::observable::{ObservableExpr, Pauli, PauliString, PauliSum, Primitive};
use crate::statevec::{phase_state, product_expectation, RegisterState};
use crate::{seeded_rng, Error, Result};

/// Tolerance for every dense certification.
pub const DENSE_TOLERANCE: f64 = 1e-10;

/// Qubits per register used to certify operator families.
pub const CERTIFY_QUBITS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryKind {
    /// `(x1, x2) -> (x2, x1)`, represented by `Π_i SWAP(i, i+n)`.
    Exchange,
    /// `(x1, x2) -> (x̄1, x̄2)`, represented by `Y^{⊗n} ⊗ Y^{⊗n}`.
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryRep {
    pub kind: SymmetryKind,
}

impl SymmetryRep {
    pub const EXCHANGE: SymmetryRep = SymmetryRep { kind: SymmetryKind::Exchange };
    pub const COMPLEMENT: SymmetryRep = SymmetryRep { kind: SymmetryKind::Complement };

    pub fn both() -> [SymmetryRep; 2] {
        [Self::EXCHANGE, Self::COMPLEMENT]
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SymmetryKind::Exchange => "exchange",
            SymmetryKind::Complement => "complement",
        }
    }

    /// Unitary representation on `2n` qubits.
    pub fn operator(&self, n: usize) -> ObservableExpr {
        match self.kind {
            SymmetryKind::Exchange => ObservableExpr::single(n, Primitive::SwapNetwork),
            SymmetryKind::Complement => {
                ObservableExpr::single(n, Primitive::PauliString(PauliString::uniform(2 * n, Pauli::Y)))
            }
        }
    }

    /// Action on data.
    pub fn act(&self, pair: &SamplePair) -> SamplePair {
        match self.kind {
            SymmetryKind::Exchange => pair.exchanged(),
            SymmetryKind::Complement => pair.complemented(),
        }
    }
}

/// How an operator can be exponentiated inside the variational ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Sum of mutually commuting Pauli strings: product of per-term rotations.
    CommutingSum,
    /// `G² = 1`: `exp(-iθG) = cos θ − i sin θ G`.
    Involution,
    /// Not usable as a generator.
    None,
}

/// Named members of the equivariant operator pool, in default order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PoolOp {
    SumY,
    SumXX,
    SumYY,
    SumZZ,
    XAll,
    ZAll,
    Swap,
    HAll,
    SwapXAll,
    SwapHAll,
    /// Commutes with both symmetries but is not Hermitian.
    HAllZAll,
}

impl PoolOp {
    /// Default ordering; the first ten form the standard `K = 10` pool.
    pub const ALL: [PoolOp; 11] = [
        PoolOp::SumY,
        PoolOp::SumXX,
        PoolOp::SumYY,
        PoolOp::SumZZ,
        PoolOp::XAll,
        PoolOp::ZAll,
        PoolOp::Swap,
        PoolOp::HAll,
        PoolOp::SwapXAll,
        PoolOp::SwapHAll,
        PoolOp::HAllZAll,
    ];

    pub const DEFAULT_K: usize = 10;

    /// ASCII name used in config files.
    pub fn name(self) -> &'static str {
        match self {
            PoolOp::SumY => "sum_Y",
            PoolOp::SumXX => "sum_XX",
            PoolOp::SumYY => "sum_YY",
            PoolOp::SumZZ => "sum_ZZ",
            PoolOp::XAll => "X_all",
            PoolOp::ZAll => "Z_all",
            PoolOp::Swap => "SWAP",
            PoolOp::HAll => "H_all",
            PoolOp::SwapXAll => "SWAP*X_all",
            PoolOp::SwapHAll => "SWAP*H_all",
            PoolOp::HAllZAll => "H_all*Z_all",
        }
    }

    /// Mathematical notation, also accepted by [`PoolOp::from_name`].
    pub fn symbol(self) -> &'static str {
        match self {
            PoolOp::SumY => "ΣᵢŶᵢ",
            PoolOp::SumXX => "ΣᵢX̂ᵢX̂ᵢ₊₁",
            PoolOp::SumYY => "ΣᵢŶᵢŶᵢ₊₁",
            PoolOp::SumZZ => "ΣᵢẐᵢẐᵢ₊₁",
            PoolOp::XAll => "X̂^⊗2n",
            PoolOp::ZAll => "Ẑ^⊗2n",
            PoolOp::Swap => "ΠSWAP",
            PoolOp::HAll => "H^⊗2n",
            PoolOp::SwapXAll => "ΠSWAP·X̂^⊗2n",
            PoolOp::SwapHAll => "ΠSWAP·H^⊗2n",
            PoolOp::HAllZAll => "H^⊗2n·Z^⊗2n",
        }
    }

    pub fn from_name(s: &str) -> Result<PoolOp> {
        let s = s.trim();
        PoolOp::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s) || op.symbol() == s)
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }

    pub fn instantiate(self, n: usize) -> ObservableExpr {
        let q = 2 * n;
        let all = |p| Primitive::PauliString(PauliString::uniform(q, p));
        let factors = match self {
            PoolOp::SumY => vec![Primitive::PauliSum(PauliSum {
                terms: (0..q).map(|i| (1.0, PauliString::sparse(q, &[(i, Pauli::Y)]))).collect(),
            })],
            PoolOp::SumXX => vec![ring_sum(q, Pauli::X)],
            PoolOp::SumYY => vec![ring_sum(q, Pauli::Y)],
            PoolOp::SumZZ => vec![ring_sum(q, Pauli::Z)],
            PoolOp::XAll => vec![all(Pauli::X)],
            PoolOp::ZAll => vec![all(Pauli::Z)],
            PoolOp::Swap => vec![Primitive::SwapNetwork],
            PoolOp::HAll => vec![Primitive::GlobalWht],
            PoolOp::SwapXAll => vec![Primitive::SwapNetwork, all(Pauli::X)],
            PoolOp::SwapHAll => vec![Primitive::SwapNetwork, Primitive::GlobalWht],
            PoolOp::HAllZAll => vec![Primitive::GlobalWht, all(Pauli::Z)],
        };
        ObservableExpr::new(n, factors)
    }

    /// Structural exponentiation strategy; certified densely by [`build_pool`].
    pub fn generator_kind(self) -> GeneratorKind {
        match self {
            PoolOp::SumY | PoolOp::SumXX | PoolOp::SumYY | PoolOp::SumZZ => GeneratorKind::CommutingSum,
            PoolOp::HAllZAll => GeneratorKind::None,
            _ => GeneratorKind::Involution,
        }
    }
}

impl fmt::Display for PoolOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `Σ_q P_q P_{q+1 mod Q}` over the ring of `Q` qubits.
fn ring_sum(qubits: usize, p: Pauli) -> Primitive {
    let bonds = if qubits == 2 { 1 } else { qubits };
    let terms = (0..bonds).map(|i| (1.0, PauliString::sparse(qubits, &[(i, p), ((i + 1) % qubits, p)]))).collect();
    Primitive::PauliSum(PauliSum { terms })
}

pub fn dense(o: &ObservableExpr) -> DenseMatrix {
    DenseMatrix::from_action(o.dim(), |v| o.apply(v))
}

/// Largest `‖[O, U_σ]‖_F` over `reps`, computed densely at `o.n()` qubits per
/// register.
pub fn check_equivariance(o: &ObservableExpr, reps: &[SymmetryRep]) -> Result<f64> {
    if o.n() > 3 {
        return Err(Error::DenseTooLarge(o.n()));
    }
    let m = dense(o);
    Ok(reps.iter().map(|r| m.commutator_norm(&dense(&r.operator(o.n())))).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub op: PoolOp,
    pub hermitian: bool,
    pub generator: bool,
    pub commutator_norm: f64,
    pub hermiticity_residual: f64,
}

impl PoolEntry {
    pub fn name(&self) -> &'static str {
        self.op.name()
    }
}

/// Certified pool instantiated at `n` qubits per register.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPool {
    n: usize,
    entries: Vec<PoolEntry>,
}

impl OperatorPool {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ops(&self) -> Vec<PoolOp> {
        self.entries.iter().map(|e| e.op).collect()
    }

    pub fn entry(&self, op: PoolOp) -> Option<&PoolEntry> {
        self.entries.iter().find(|e| e.op == op)
    }

    /// The entry as a measurable observable; errors for non-Hermitian entries.
    pub fn observable(&self, op: PoolOp) -> Result<ObservableExpr> {
        match self.entry(op) {
            Some(e) if e.hermitian => Ok(op.instantiate(self.n)),
            Some(_) => Err(Error::NotObservable { name: op.name().to_string() }),
            None => Err(Error::UnknownOperator(op.name().to_string())),
        }
    }

    /// Every entry as an observable, in pool order.
    pub fn observables(&self) -> Result<Vec<ObservableExpr>> {
        self.entries.iter().map(|e| self.observable(e.op)).collect()
    }
}

/// Certifies one operator family at [`CERTIFY_QUBITS`] qubits per register.
pub fn certify(op: PoolOp) -> Result<PoolEntry> {
    let expr = op.instantiate(CERTIFY_QUBITS);
    let m = dense(&expr);
    let norm = check_equivariance(&expr, &SymmetryRep::both())?;
    if norm > DENSE_TOLERANCE {
        return Err(Error::NotEquivariant { name: op.name().to_string(), norm });
    }
    let herm = m.hermiticity_residual();
    let hermitian = herm <= DENSE_TOLERANCE;
    let generator = hermitian
        && match op.generator_kind() {
            GeneratorKind::CommutingSum => match expr.factors() {
                [Primitive::PauliSum(s)] => s.terms_commute(),
                _ => false,
            },
            GeneratorKind::Involution => m.involution_residual() <= DENSE_TOLERANCE,
            GeneratorKind::None => false,
        };
    Ok(PoolEntry { op, hermitian, generator, commutator_norm: norm, hermiticity_residual: herm })
}

/// First `k` operators of the default ordering, each certified.
pub fn build_pool(n: usize, k: usize) -> Result<OperatorPool> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1"));
    }
    if k == 0 || k > PoolOp::ALL.len() {
        return Err(Error::InvalidParameter("pool size must be between 1 and 11"));
    }
    pool_from_ops(n, &PoolOp::ALL[..k])
}

/// Pool made of an explicit operator list, each certified.
pub fn pool_from_ops(n: usize, ops: &[PoolOp]) -> Result<OperatorPool> {
    let entries = ops.iter().map(|&op| certify(op)).collect::<Result<Vec<_>>>()?;
    Ok(OperatorPool { n, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `U_σ |ψ0⟩ = |ψ0⟩` up to global phase.
    InitialState,
    /// Encoded `σ[x]` equals `U_σ` times encoded `x`, up to global phase.
    Embedding,
    /// `U_σ O U_σ† = O` for a pool observable.
    Observable,
    /// `⟨O⟩` is identical on encoded `x` and encoded `σ[x]`.
    FeatureInvariance,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::InitialState => "invariant initial state",
            Condition::Embedding => "equivariant embedding",
            Condition::Observable => "invariant observable",
            Condition::FeatureInvariance => "feature invariance",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub symmetry: SymmetryKind,
    pub subject: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InvarianceReport {
    pub checks: Vec<ConditionCheck>,
}

impl InvarianceReport {
    pub fn violations(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed(&self, condition: Condition, symmetry: SymmetryKind) -> bool {
        self.checks.iter().filter(|c| c.condition == condition && c.symmetry == symmetry).all(|c| c.passed)
    }

    fn push(&mut self, condition: Condition, symmetry: SymmetryKind, subject: String, residual: f64) {
        let passed = residual <= DENSE_TOLERANCE;
        self.checks.push(ConditionCheck { condition, symmetry, subject, residual, passed });
    }
}

/// `1 − |⟨a|b⟩|` for unit vectors: zero iff equal up to global phase.
pub fn phase_distance(a: &RegisterState, b: &RegisterState) -> f64 {
    (1.0 - a.inner(b).norm()).abs()
}

fn random_barcode(n: usize, rng: &mut impl Rng) -> Barcode {
    Barcode::new((0..1usize << n).map(|_| rng.random_range(0..2u8)).collect()).expect("power of two")
}

/// Checks the initial state, the phase-state embedding on `samples` random
/// pairs, and every listed observable against each representation, at
/// `n_check` qubits per register.
pub fn check_invariance_conditions(
    n_check: usize,
    reps: &[SymmetryRep],
    observables: &[PoolOp],
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if n_check == 0 || n_check > 3 {
        return Err(Error::DenseTooLarge(n_check));
    }
    let mut rng = seeded_rng(seed);
    let pairs: Vec<(Barcode, Barcode)> =
        (0..samples).map(|_| (random_barcode(n_check, &mut rng), random_barcode(n_check, &mut rng))).collect();
    let psi0 = RegisterState::uniform(n_check);
    let mut report = InvarianceReport::default();
    for rep in reps {
        let u = rep.operator(n_check);
        let u_dense = dense(&u);

        let moved = RegisterState::from_amps(n_check, u.apply(psi0.amps()))?;
        report.push(Condition::InitialState, rep.kind, "|+>^2n".to_string(), phase_distance(&psi0, &moved));

        let mut worst = 0.0f64;
        let mut worst_features = 0.0f64;
        let exprs: Vec<ObservableExpr> = observables.iter().map(|op| op.instantiate(n_check)).collect();
        for (x1, x2) in &pairs {
            let pair = SamplePair { x1: x1.clone(), x2: x2.clone(), label: crate::dataset::Label::Correlated };
            let image = rep.act(&pair);
            let encoded = RegisterState::encode(x1, x2)?;
            let encoded_image = RegisterState::encode(&image.x1, &image.x2)?;
            let rotated = RegisterState::from_amps(n_check, u.apply(encoded.amps()))?;
            worst = worst.max(phase_distance(&encoded_image, &rotated));
            for (op, e) in observables.iter().zip(&exprs) {
                if !certify(*op)?.hermitian {
                    continue;
                }
                let a = product_expectation(&phase_state(x1), &phase_state(x2), e)?;
                let b = product_expectation(&phase_state(&image.x1), &phase_state(&image.x2), e)?;
                worst_features = worst_features.max((a - b).abs());
            }
        }
        report.push(Condition::Embedding, rep.kind, format!("{samples} random pairs"), worst);
        report.push(Condition::FeatureInvariance, rep.kind, format!("{samples} random pairs"), worst_features);

        for (op, e) in observables.iter().zip(&exprs) {
            let m = dense(e);
            let conj = u_dense.mul(&m).mul(&u_dense.adjoint());
            report.push(Condition::Observable, rep.kind, op.name().to_string(), conj.sub(&m).frobenius());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for op in PoolOp::ALL {
            assert_eq!(PoolOp::from_name(op.name()).unwrap(), op);
            assert_eq!(PoolOp::from_name(op.symbol()).unwrap(), op);
        }
        assert!(PoolOp::from_name("X_1").is_err());
    }

    #[test]
    fn listed_operators_are_equivariant() {
        let reps = SymmetryRep::both();
        for op in [PoolOp::SumY, PoolOp::SwapHAll] {
            assert!(check_equivariance(&op.instantiate(2), &reps).unwrap() <= DENSE_TOLERANCE);
        }
    }

    #[test]
    fn single_x_is_not_equivariant() {
        let x1 = ObservableExpr::single(2, Primitive::PauliString(PauliString::sparse(4, &[(0, Pauli::X)])));
        assert!(check_equivariance(&x1, &SymmetryRep::both()).unwrap() > 0.5);
    }

    #[test]
    fn open_chain_with_crossing_bond_breaks_exchange() {
        // bonds (0,1), (1,2), (2,3) without the wrap-around (3,0)
        let terms = (0..3).map(|i| (1.0, PauliString::sparse(4, &[(i, Pauli::X), (i + 1, Pauli::X)]))).collect();
        let open = ObservableExpr::single(2, Primitive::PauliSum(PauliSum { terms }));
        assert!(check_equivariance(&open, &[SymmetryRep::EXCHANGE]).unwrap() > 0.5);
        assert!(check_equivariance(&PoolOp::SumXX.instantiate(2), &[SymmetryRep::EXCHANGE]).unwrap() < 1e-12);
    }

    #[test]
    fn dense_check_is_limited() {
        assert_eq!(
            check_equivariance(&PoolOp::Swap.instantiate(4), &SymmetryRep::both()),
            Err(Error::DenseTooLarge(4))
        );
    }

    #[test]
    fn default_pool_flags() {
        let pool = build_pool(3, 10).unwrap();
        assert_eq!(pool.len(), 10);
        assert!(pool.entry(PoolOp::SwapHAll).is_some());
        for e in pool.entries() {
            assert!(e.hermitian, "{}", e.op);
            assert!(e.generator, "{}", e.op);
            assert!(e.commutator_norm <= DENSE_TOLERANCE);
        }
        assert_eq!(pool.observables().unwrap().len(), 10);
    }

    #[test]
    fn h_times_z_is_flagged_non_hermitian() {
        let pool = build_pool(2, 11).unwrap();
        let e = pool.entry(PoolOp::HAllZAll).unwrap();
        assert!(!e.hermitian && !e.generator);
        assert!(e.commutator_norm <= DENSE_TOLERANCE);
        assert!(matches!(pool.observable(PoolOp::HAllZAll), Err(Error::NotObservable { .. })));
        assert!(pool.observables().is_err());
        assert!(build_pool(2, 12).is_err());
        assert!(build_pool(2, 0).is_err());
    }

    #[test]
    fn symmetry_reps_are_unitary_and_commute() {
        for n in 1..=3 {
            let ex = dense(&SymmetryRep::EXCHANGE.operator(n));
            let co = dense(&SymmetryRep::COMPLEMENT.operator(n));
            assert!(ex.unitarity_residual() < 1e-12);
            assert!(co.unitarity_residual() < 1e-12);
            assert!(ex.commutator_norm(&co) < 1e-12);
        }
    }

    #[test]
    fn products_of_pool_members_stay_equivariant() {
        let reps = SymmetryRep::both();
        for (a, b) in [(PoolOp::Swap, PoolOp::XAll), (PoolOp::HAll, PoolOp::ZAll), (PoolOp::Swap, PoolOp::HAll)] {
            let prod = a.instantiate(2).then(&b.instantiate(2));
            assert!(check_equivariance(&prod, &reps).unwrap() <= DENSE_TOLERANCE);
        }
    }

    #[test]
    fn invariance_report() {
        let report = check_invariance_conditions(2, &SymmetryRep::both(), &PoolOp::ALL[..10], 50, 9).unwrap();
        assert!(report.passed(Condition::InitialState, SymmetryKind::Exchange));
        assert!(report.passed(Condition::Embedding, SymmetryKind::Exchange));
        assert!(report.passed(Condition::Observable, SymmetryKind::Exchange));
        assert!(report.passed(Condition::Observable, SymmetryKind::Complement));
        assert!(report.passed(Condition::FeatureInvariance, SymmetryKind::Exchange));
        assert!(report.passed(Condition::FeatureInvariance, SymmetryKind::Complement));
        // Y maps |+> to |->, and complementing a barcode leaves its encoded
        // pair unchanged instead of applying Y^{⊗2n}.
        assert!(!report.passed(Condition::InitialState, SymmetryKind::Complement));
        assert!(!report.passed(Condition::Embedding, SymmetryKind::Complement));
        assert!(report.violations().all(|c| c.symmetry == SymmetryKind::Complement));
    }

    #[test]
    fn complemented_pair_encodes_to_same_state() {
        let mut rng = seeded_rng(21);
        for _ in 0..50 {
            let (x1, x2) = (random_barcode(2, &mut rng), random_barcode(2, &mut rng));
            let a = RegisterState::encode(&x1, &x2).unwrap();
            let b = RegisterState::encode(&x1.complement(), &x2.complement()).unwrap();
            assert!(phase_distance(&a, &b) < 1e-12);
            let swapped = RegisterState::encode(&x2, &x1).unwrap();
            assert_eq!(swapped, a.apply(&Primitive::SwapNetwork));
        }
    }
}
