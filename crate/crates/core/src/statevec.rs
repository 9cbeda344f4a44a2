//! Phase-state encoding, register states, expectation values and the
//! forrelation overlap `F = |⟨φ_{x1}| H^{⊗n} |φ_{x2}⟩|²`.
//!
//! Two evaluation paths exist. [`expectation`] works on the full `4^n`
//! register vector; [`product_expectation`] keeps the state as a product of
//! the two `2^n`-amplitude registers, which is what makes 20-qubit feature
//! extraction cheap.

use alloc::vec::Vec;

use crate::dataset::Barcode;
use crate::observable::{apply_to_product, ObservableExpr, Primitive};
use crate::wht::{apply_wht as wht_in_place, WhtTarget};
use crate::{Error, Result, C64};

/// Largest imaginary part tolerated in an expectation value.
pub const IMAG_TOLERANCE: f64 = 1e-9;

/// `2^{-n/2} Σ_j (-1)^{x_j} |j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    n: usize,
    amps: Vec<f64>,
}

impl PhaseState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[f64] {
        &self.amps
    }

    pub fn to_complex(&self) -> Vec<C64> {
        self.amps.iter().map(|&a| C64::new(a, 0.0)).collect()
    }

    pub fn inner(&self, other: &PhaseState) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a * b).sum()
    }
}

/// Amplitudes of the `2n`-qubit register; register 1 holds the high `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    n: usize,
    amps: Vec<C64>,
}

impl RegisterState {
    pub fn from_amps(n: usize, amps: Vec<C64>) -> Result<Self> {
        let dim = 1usize << (2 * n);
        if amps.len() != dim {
            return Err(Error::SizeMismatch { expected: dim, found: amps.len() });
        }
        Ok(Self { n, amps })
    }

    /// `|+⟩^{⊗2n}`.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << (2 * n);
        let a = 1.0 / libm::sqrt(dim as f64);
        Self { n, amps: alloc::vec![C64::new(a, 0.0); dim] }
    }

    /// Product state of the two barcodes' phase states.
    pub fn encode(x1: &Barcode, x2: &Barcode) -> Result<Self> {
        product_state(&phase_state(x1), &phase_state(x2))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &RegisterState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply(&self, p: &Primitive) -> RegisterState {
        apply_primitive(self, p)
    }
}

pub fn phase_state(b: &Barcode) -> PhaseState {
    let a = 1.0 / libm::sqrt(b.len() as f64);
    let amps = b.bits().iter().map(|&x| if x == 0 { a } else { -a }).collect();
    PhaseState { n: b.qubits(), amps }
}

/// Kronecker product, `p1` on the most significant qubits.
pub fn product_state(p1: &PhaseState, p2: &PhaseState) -> Result<RegisterState> {
    if p1.n != p2.n {
        return Err(Error::SizeMismatch { expected: p1.amps.len(), found: p2.amps.len() });
    }
    let mut amps = Vec::with_capacity(p1.amps.len() * p2.amps.len());
    for &a in &p1.amps {
        amps.extend(p2.amps.iter().map(|&b| C64::new(a * b, 0.0)));
    }
    Ok(RegisterState { n: p1.n, amps })
}

/// In-place transform on the chosen register(s) of `state`.
pub fn apply_wht(state: &mut RegisterState, target: WhtTarget) {
    let n = state.n;
    wht_in_place(&mut state.amps, n, target);
}

pub fn apply_primitive(state: &RegisterState, p: &Primitive) -> RegisterState {
    RegisterState { n: state.n, amps: p.apply(state.n, &state.amps) }
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAG_TOLERANCE || !z.re.is_finite() {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// `⟨v|O|v⟩` on the full register vector.
pub fn expectation(state: &RegisterState, o: &ObservableExpr) -> Result<f64> {
    if o.n() != state.n {
        return Err(Error::SizeMismatch { expected: o.dim(), found: state.amps.len() });
    }
    let w = o.apply(&state.amps);
    real_part(state.amps.iter().zip(&w).map(|(a, b)| a.conj() * b).sum())
}

/// `⟨p1 ⊗ p2| O |p1 ⊗ p2⟩` evaluated register by register.
pub fn product_expectation(p1: &PhaseState, p2: &PhaseState, o: &ObservableExpr) -> Result<f64> {
    if p1.n != p2.n || o.n() != p1.n {
        return Err(Error::SizeMismatch { expected: 1 << o.n(), found: p1.amps.len() });
    }
    let a = p1.to_complex();
    let b = p2.to_complex();
    let value: C64 = apply_to_product(o, &a, &b)
        .iter()
        .map(|t| {
            let ea: C64 = a.iter().zip(&t.a).map(|(x, y)| x.conj() * y).sum();
            let eb: C64 = b.iter().zip(&t.b).map(|(x, y)| x.conj() * y).sum();
            t.coeff * ea * eb
        })
        .sum();
    real_part(value)
}

/// Forrelation value, `0 ≤ F ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Forrelation(pub f64);

impl Forrelation {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `|⟨φ_{x1}| H^{⊗n} |φ_{x2}⟩|²`, computed as `S² / N³` with the integer
/// sum `S = Σ_{x,y} (−1)^{x1_x + x2_y + x·y}`. Both `S²` and `N³` are exact in
/// `f64` for barcodes of up to 2^17 pixels, so the value is correctly rounded.
pub fn forrelation(x1: &Barcode, x2: &Barcode) -> Result<Forrelation> {
    if x1.len() != x2.len() {
        return Err(Error::SizeMismatch { expected: x1.len(), found: x2.len() });
    }
    let sign = |b: u8| if b == 0 { 1i64 } else { -1 };
    let mut h: Vec<i64> = x2.bits().iter().map(|&b| sign(b)).collect();
    let mut half = 1;
    while half < h.len() {
        for block in h.chunks_exact_mut(half << 1) {
            let (left, right) = block.split_at_mut(half);
            for (a, b) in left.iter_mut().zip(right.iter_mut()) {
                (*a, *b) = (*a + *b, *a - *b);
            }
        }
        half <<= 1;
    }
    let s: i64 = x1.bits().iter().zip(&h).map(|(&a, &v)| sign(a) * v).sum();
    let big_n = x1.len() as f64;
    Ok(Forrelation((s * s) as f64 / (big_n * big_n * big_n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{Pauli, PauliString, PauliSum};
    use crate::seeded_rng;
    use alloc::vec;
    use rand::Rng;

    fn random_barcode(n: usize, rng: &mut impl Rng) -> Barcode {
        Barcode::new((0..1usize << n).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
    }

    #[test]
    fn phase_state_examples() {
        let p = phase_state(&Barcode::from_bitstring("0000").unwrap());
        assert_eq!(p.amps(), &[0.5; 4]);
        let p = phase_state(&Barcode::from_bitstring("01").unwrap());
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert!((p.amps()[0] - s).abs() < 1e-15 && (p.amps()[1] + s).abs() < 1e-15);
        let b = Barcode::from_bitstring("01101001").unwrap();
        let (p, q) = (phase_state(&b), phase_state(&b.complement()));
        assert!(p.amps().iter().zip(q.amps()).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn product_state_entries() {
        let mut rng = seeded_rng(1);
        let (b1, b2) = (random_barcode(2, &mut rng), random_barcode(2, &mut rng));
        let (p1, p2) = (phase_state(&b1), phase_state(&b2));
        let v = product_state(&p1, &p2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(v.amps()[i * 4 + j].re, p1.amps()[i] * p2.amps()[j]);
            }
        }
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let u = phase_state(&Barcode::from_bitstring("00").unwrap());
        let v = product_state(&u, &u).unwrap();
        assert!(v.amps().iter().all(|a| (a.re - 0.5).abs() < 1e-15));
        assert!(product_state(&p1, &phase_state(&random_barcode(3, &mut rng))).is_err());
    }

    #[test]
    fn swap_expectation_is_squared_overlap() {
        let mut rng = seeded_rng(2);
        for _ in 0..20 {
            let (b1, b2) = (random_barcode(3, &mut rng), random_barcode(3, &mut rng));
            let (p1, p2) = (phase_state(&b1), phase_state(&b2));
            let v = product_state(&p1, &p2).unwrap();
            let swap = ObservableExpr::single(3, Primitive::SwapNetwork);
            let e = expectation(&v, &swap).unwrap();
            assert!((e - p1.inner(&p2).powi(2)).abs() < 1e-12);
            let w = v.apply(&Primitive::SwapNetwork);
            assert_eq!(w, product_state(&p2, &p1).unwrap());
        }
    }

    #[test]
    fn sum_of_y_vanishes_on_real_states() {
        let mut rng = seeded_rng(3);
        let n = 2;
        let terms = (0..2 * n).map(|q| (1.0, PauliString::sparse(2 * n, &[(q, Pauli::Y)]))).collect();
        let o = ObservableExpr::single(n, Primitive::PauliSum(PauliSum { terms }));
        for _ in 0..10 {
            let v = RegisterState::encode(&random_barcode(n, &mut rng), &random_barcode(n, &mut rng)).unwrap();
            assert!(expectation(&v, &o).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn swap_times_hadamard_is_forrelation() {
        let mut rng = seeded_rng(4);
        for n in [1, 2, 3] {
            let o = ObservableExpr::new(n, vec![Primitive::SwapNetwork, Primitive::GlobalWht]);
            for _ in 0..20 {
                let (b1, b2) = (random_barcode(n, &mut rng), random_barcode(n, &mut rng));
                let v = RegisterState::encode(&b1, &b2).unwrap();
                let f = forrelation(&b1, &b2).unwrap().value();
                assert!((expectation(&v, &o).unwrap() - f).abs() < 1e-10);
                let fast = product_expectation(&phase_state(&b1), &phase_state(&b2), &o).unwrap();
                assert!((fast - f).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn forrelation_of_uniform_bra_is_one_over_n() {
        let mut rng = seeded_rng(5);
        let zero = Barcode::from_bitstring("0000").unwrap();
        for _ in 0..10 {
            let f = forrelation(&zero, &random_barcode(2, &mut rng)).unwrap().value();
            assert!((f - 0.25).abs() < 1e-15);
        }
        assert!(forrelation(&zero, &random_barcode(3, &mut rng)).is_err());
    }

    #[test]
    fn forrelation_symmetries() {
        let mut rng = seeded_rng(6);
        for _ in 0..100 {
            let (b1, b2) = (random_barcode(4, &mut rng), random_barcode(4, &mut rng));
            let f = forrelation(&b1, &b2).unwrap().value();
            assert!((f - forrelation(&b2, &b1).unwrap().value()).abs() < 1e-14);
            assert_eq!(f, forrelation(&b1.complement(), &b2.complement()).unwrap().value());
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn non_hermitian_product_is_rejected() {
        // H^{⊗2n} Z^{⊗2n} has complex expectation on suitable complex states.
        let n = 1;
        let o = ObservableExpr::new(
            n,
            vec![Primitive::GlobalWht, Primitive::PauliString(PauliString::uniform(2, Pauli::Z))],
        );
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![C64::new(r, 0.0), C64::new(0.0, r), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let v = RegisterState::from_amps(n, amps).unwrap();
        assert!(matches!(expectation(&v, &o), Err(Error::ImaginaryResidue(_))));
    }

    #[test]
    fn wht_on_register_state_round_trips() {
        let mut rng = seeded_rng(7);
        let v = RegisterState::encode(&random_barcode(2, &mut rng), &random_barcode(2, &mut rng)).unwrap();
        let mut w = v.clone();
        apply_wht(&mut w, WhtTarget::Both);
        assert!((w.norm() - 1.0).abs() < 1e-12);
        apply_wht(&mut w, WhtTarget::Both);
        for (a, b) in w.amps().iter().zip(v.amps()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
