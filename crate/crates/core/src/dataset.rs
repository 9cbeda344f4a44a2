//! Forrelated (class A) and uncorrelated (class B) barcode-pair datasets.
//!
//! A correlated pair starts from `z1 ~ N(0, ε·1)` and sets `z2 = WHT(z1)`
//! with the orthonormal transform; an uncorrelated pair draws `z1`, `z2`
//! independently. Each Gaussian entry is clamped to `[-1, 1]` and rounded to
//! a pixel so that the phase `(-1)^bit` has the clamped value as its mean.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::wht::fwht;
use crate::{seeded_rng, Error, Result};

/// Default Gaussian variance scale. Large enough that most entries saturate
/// the clamp, which keeps the forrelation gap visible down to 16-pixel
/// barcodes.
pub const DEFAULT_EPSILON: f64 = 16.0;

/// `1 / (4 ln N)`, the logarithmic variance scale of the original
/// forrelation-sampling construction. Much weaker class separation than
/// [`DEFAULT_EPSILON`] at the sizes simulated here.
pub fn log_scaled_epsilon(n: usize) -> f64 {
    let big_n = (1u64 << n) as f64;
    1.0 / (4.0 * libm::log(big_n))
}

/// One binary image of `N = 2^n` pixels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Barcode {
    bits: Vec<u8>,
}

impl Barcode {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || !bits.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(bits.len()));
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidBit(b));
        }
        Ok(Self { bits })
    }

    /// Parses a `0`/`1` string; character `k` is pixel `k`.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits = s
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                other => Err(Error::InvalidBit(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Qubits needed to hold the barcode as a phase state.
    pub fn qubits(&self) -> usize {
        self.bits.len().trailing_zeros() as usize
    }

    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| 1 - b).collect() }
    }

    /// Pixels as `0.0`/`1.0` reals, the classical networks' input.
    pub fn as_reals(&self) -> impl Iterator<Item = f64> + '_ {
        self.bits.iter().map(|&b| b as f64)
    }
}

impl fmt::Debug for Barcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Barcode({})", self.to_bitstring())
    }
}

/// Class label. `Correlated` is `y = 0`, `Uncorrelated` is `y = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Correlated,
    Uncorrelated,
}

impl Label {
    pub fn value(self) -> u8 {
        match self {
            Label::Correlated => 0,
            Label::Uncorrelated => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn from_value(y: u8) -> Option<Self> {
        match y {
            0 => Some(Label::Correlated),
            1 => Some(Label::Uncorrelated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SamplePair {
    pub x1: Barcode,
    pub x2: Barcode,
    pub label: Label,
}

impl SamplePair {
    pub fn new(x1: Barcode, x2: Barcode, label: Label) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::SizeMismatch { expected: x1.len(), found: x2.len() });
        }
        Ok(Self { x1, x2, label })
    }

    pub fn qubits(&self) -> usize {
        self.x1.qubits()
    }

    /// `(x2, x1)`, same label.
    pub fn exchanged(&self) -> Self {
        Self { x1: self.x2.clone(), x2: self.x1.clone(), label: self.label }
    }

    /// `(x̄1, x̄2)`, same label.
    pub fn complemented(&self) -> Self {
        Self { x1: self.x1.complement(), x2: self.x2.complement(), label: self.label }
    }

    /// True when both barcodes match bit for bit (labels ignored).
    pub fn same_barcodes(&self, other: &SamplePair) -> bool {
        self.x1 == other.x1 && self.x2 == other.x2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub samples: Vec<SamplePair>,
}

impl Dataset {
    /// Checks the shared-size invariant.
    pub fn validate(&self) -> Result<()> {
        let expected = 1usize << self.n;
        for s in &self.samples {
            for b in [&s.x1, &s.x2] {
                if b.len() != expected {
                    return Err(Error::SizeMismatch { expected, found: b.len() });
                }
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::OutOfRange { what: "epsilon", value: self.epsilon });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label.as_f64()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }
}

/// Pair of Gaussian vectors before clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDraw {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

/// How clamped Gaussian entries become pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Pixel is 1 with probability `(1 - t) / 2`.
    #[default]
    Randomized,
    /// Pixel is 1 exactly when `z < 0`.
    Sign,
}

pub fn truncate(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite { what: "gaussian entry" });
    }
    Ok(z.clamp(-1.0, 1.0))
}

/// Returns 1 with probability `(1 - t) / 2`, so `E[(-1)^bit] = t`.
pub fn round_to_bit<R: Rng + ?Sized>(t: f64, rng: &mut R) -> Result<u8> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange { what: "truncated value", value: t });
    }
    let u: f64 = rng.random();
    Ok(u8::from(u < (1.0 - t) / 2.0))
}

/// Draws the Gaussian pair. Correlated draws apply the transform to `z1`
/// rather than sampling `z2`.
pub fn gaussian_draw<R: Rng + ?Sized>(n: usize, epsilon: f64, correlated: bool, rng: &mut R) -> GaussianDraw {
    let big_n = 1usize << n;
    let sd = libm::sqrt(epsilon);
    let mut normal = || -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    };
    let z1: Vec<f64> = (0..big_n).map(|_| normal()).collect();
    let z2 = if correlated {
        let mut z2 = z1.clone();
        fwht(&mut z2);
        z2
    } else {
        (0..big_n).map(|_| normal()).collect()
    };
    GaussianDraw { z1, z2 }
}

/// Sampler for one `(n, ε, rounding)` setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSampler {
    pub n: usize,
    pub epsilon: f64,
    pub rounding: Rounding,
}

impl PairSampler {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::OutOfRange { what: "epsilon", value: epsilon });
        }
        Ok(Self { n, epsilon, rounding: Rounding::default() })
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    fn pixels<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R) -> Result<Barcode> {
        let bits = z
            .iter()
            .map(|&zi| match self.rounding {
                Rounding::Randomized => round_to_bit(truncate(zi)?, rng),
                Rounding::Sign => {
                    truncate(zi)?;
                    Ok(u8::from(zi < 0.0))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        Barcode::new(bits)
    }

    pub fn sample<R: Rng + ?Sized>(&self, correlated: bool, rng: &mut R) -> Result<SamplePair> {
        let draw = gaussian_draw(self.n, self.epsilon, correlated, rng);
        let x1 = self.pixels(&draw.z1, rng)?;
        let x2 = self.pixels(&draw.z2, rng)?;
        let label = if correlated { Label::Correlated } else { Label::Uncorrelated };
        SamplePair::new(x1, x2, label)
    }
}

/// One labelled pair with randomized rounding.
pub fn sample_pair<R: Rng + ?Sized>(n: usize, epsilon: f64, correlated: bool, rng: &mut R) -> Result<SamplePair> {
    PairSampler::new(n, epsilon)?.sample(correlated, rng)
}

/// `count_per_class` pairs of each class, alternating A, B, A, B, ... so any
/// even-length prefix is balanced.
pub fn generate_dataset(n: usize, epsilon: f64, count_per_class: usize, seed: u64) -> Result<Dataset> {
    generate_with(&PairSampler::new(n, epsilon)?, count_per_class, seed, &[])
}

/// Like [`generate_dataset`], rejecting any pair whose barcodes equal one in
/// `exclude`. Used to keep test splits disjoint from training splits.
pub fn generate_with(
    sampler: &PairSampler,
    count_per_class: usize,
    seed: u64,
    exclude: &[SamplePair],
) -> Result<Dataset> {
    if count_per_class == 0 {
        return Err(Error::InvalidParameter("count_per_class must be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let mut samples = Vec::with_capacity(2 * count_per_class);
    let max_attempts = 1000 * count_per_class;
    for _ in 0..count_per_class {
        for correlated in [true, false] {
            let mut attempts = 0;
            loop {
                let s = sampler.sample(correlated, &mut rng)?;
                if !exclude.iter().any(|e| e.same_barcodes(&s)) {
                    samples.push(s);
                    break;
                }
                attempts += 1;
                if attempts >= max_attempts {
                    return Err(Error::Exhausted(count_per_class));
                }
            }
        }
    }
    Ok(Dataset { n: sampler.n, epsilon: sampler.epsilon, seed, samples })
}
