//! Structured operators on the `2n`-qubit register: Pauli strings and sums,
//! the register-exchanging SWAP network, and the global Hadamard transform.
//!
//! An [`ObservableExpr`] is an ordered product `f_0 · f_1 · … · f_{k-1}` of
//! such factors; acting on a ket, the last factor is applied first.

use alloc::vec;
use alloc::vec::Vec;

use crate::wht::{fwht_bits, WhtTarget};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis; `letters[q]` acts on qubit `q`
/// (qubit 0 is the most significant index bit).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(qubits: usize) -> Self {
        Self { letters: vec![Pauli::I; qubits] }
    }

    pub fn uniform(qubits: usize, p: Pauli) -> Self {
        Self { letters: vec![p; qubits] }
    }

    /// Identity except the listed `(qubit, letter)` placements.
    pub fn sparse(qubits: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(qubits);
        for &(q, p) in ops {
            s.letters[q] = p;
        }
        s
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn qubits(&self) -> usize {
        self.letters.len()
    }

    /// `(flip mask, sign mask, phase)` with `P|i⟩ = phase · (-1)^{|i ∧ sign|} |i ⊕ flip⟩`.
    pub(crate) fn masks(&self) -> (usize, usize, C64) {
        let k = self.letters.len();
        let (mut flip, mut sign, mut ys) = (0usize, 0usize, 0u32);
        for (q, p) in self.letters.iter().enumerate() {
            let bit = 1usize << (k - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Z => sign |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    ys += 1;
                }
            }
        }
        let phase = match ys % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        (flip, sign, phase)
    }

    /// `out += coeff · P · input`.
    pub fn apply_add(&self, input: &[C64], coeff: C64, out: &mut [C64]) {
        debug_assert_eq!(input.len(), 1usize << self.letters.len());
        let (flip, sign, phase) = self.masks();
        let c = coeff * phase;
        for (i, &a) in input.iter().enumerate() {
            let v = if (i & sign).count_ones() % 2 == 0 { c * a } else { -c * a };
            out[i ^ flip] += v;
        }
    }

    pub fn apply(&self, input: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); input.len()];
        self.apply_add(input, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// Splits a `2n`-letter string into its register-1 and register-2 halves.
    pub fn split(&self) -> (PauliString, PauliString) {
        let n = self.letters.len() / 2;
        (PauliString::new(self.letters[..n].to_vec()), PauliString::new(self.letters[n..].to_vec()))
    }

    /// Two Pauli strings commute iff they anticommute on an even number of qubits.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let clashes = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        clashes % 2 == 0
    }
}

/// Weighted sum of Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn apply(&self, input: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); input.len()];
        for (w, s) in &self.terms {
            s.apply_add(input, C64::new(*w, 0.0), &mut out);
        }
        out
    }

    pub fn terms_commute(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, (_, a))| self.terms[i + 1..].iter().all(|(_, b)| a.commutes_with(b)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    PauliSum(PauliSum),
    PauliString(PauliString),
    /// `Π_i SWAP(i, i+n)`: exchanges the two registers.
    SwapNetwork,
    /// `H^{⊗2n}`.
    GlobalWht,
}

impl Primitive {
    /// Applies the factor to a `2n`-qubit vector.
    pub fn apply(&self, n: usize, input: &[C64]) -> Vec<C64> {
        match self {
            Primitive::PauliSum(s) => s.apply(input),
            Primitive::PauliString(s) => s.apply(input),
            Primitive::SwapNetwork => swap_registers(n, input),
            Primitive::GlobalWht => {
                let mut out = input.to_vec();
                fwht_bits(&mut out, 0, 2 * n as u32);
                out
            }
        }
    }
}

/// Index permutation `(a, b) -> (b, a)` for a two-register vector.
pub fn swap_registers<T: Copy>(n: usize, input: &[T]) -> Vec<T> {
    let mask = (1usize << n) - 1;
    let mut out = input.to_vec();
    for (i, &v) in input.iter().enumerate() {
        let j = ((i & mask) << n) | (i >> n);
        out[j] = v;
    }
    out
}

/// Product of primitives acting on `2n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableExpr {
    n: usize,
    factors: Vec<Primitive>,
}

impl ObservableExpr {
    pub fn new(n: usize, factors: Vec<Primitive>) -> Self {
        Self { n, factors }
    }

    pub fn single(n: usize, p: Primitive) -> Self {
        Self::new(n, vec![p])
    }

    /// Qubits per register.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << (2 * self.n)
    }

    pub fn factors(&self) -> &[Primitive] {
        &self.factors
    }

    /// `self · other`.
    pub fn then(&self, other: &ObservableExpr) -> ObservableExpr {
        debug_assert_eq!(self.n, other.n);
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self { n: self.n, factors }
    }

    /// `O · input`.
    pub fn apply(&self, input: &[C64]) -> Vec<C64> {
        let mut v = input.to_vec();
        for f in self.factors.iter().rev() {
            v = f.apply(self.n, &v);
        }
        v
    }
}

/// Component of a state that stays a product `coeff · a ⊗ b` under factor
/// application; a Pauli sum splits one term into several.
#[derive(Debug, Clone)]
pub(crate) struct ProductTerm {
    pub coeff: C64,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

/// Applies `expr` to `a ⊗ b` without forming the `4^n` register vector.
pub(crate) fn apply_to_product(expr: &ObservableExpr, a: &[C64], b: &[C64]) -> Vec<ProductTerm> {
    let n = expr.n;
    let mut terms = vec![ProductTerm { coeff: C64::new(1.0, 0.0), a: a.to_vec(), b: b.to_vec() }];
    let string_on_product = |s: &PauliString, t: &ProductTerm, w: f64| {
        let (s1, s2) = s.split();
        ProductTerm { coeff: t.coeff * w, a: s1.apply(&t.a), b: s2.apply(&t.b) }
    };
    for f in expr.factors.iter().rev() {
        terms = match f {
            Primitive::PauliString(s) => terms.iter().map(|t| string_on_product(s, t, 1.0)).collect(),
            Primitive::PauliSum(sum) => terms
                .iter()
                .flat_map(|t| sum.terms.iter().map(move |(w, s)| (t, *w, s)))
                .map(|(t, w, s)| string_on_product(s, t, w))
                .collect(),
            Primitive::SwapNetwork => {
                terms.into_iter().map(|t| ProductTerm { coeff: t.coeff, a: t.b, b: t.a }).collect()
            }
            Primitive::GlobalWht => terms
                .into_iter()
                .map(|mut t| {
                    fwht_bits(&mut t.a, 0, n as u32);
                    fwht_bits(&mut t.b, 0, n as u32);
                    t
                })
                .collect(),
        };
    }
    terms
}

/// Hadamard on the chosen register(s) of a complex register vector.
pub fn apply_wht_complex(state: &mut [C64], n: usize, target: WhtTarget) {
    crate::wht::apply_wht(state, n, target)
}
