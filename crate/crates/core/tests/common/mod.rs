//! Reference constructions built from first principles: Kronecker products
//! of 2×2 matrices, permutation matrices, a Taylor matrix exponential, and
//! the forrelation double sum. Nothing here calls the library's operator
//! code.

#![allow(dead_code)]

use gqml_core::dataset::Barcode;
use gqml_core::dense::DenseMatrix;
use gqml_core::symmetry::PoolOp;
use gqml_core::C64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![c(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[[C64; 2]; 2]) -> Self {
        Self { dim: 2, data: rows.iter().flatten().copied().collect() }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        let d = self.dim * other.dim;
        let mut out = Mat::zeros(d);
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        out.data[(i * other.dim + k) * d + j * other.dim + l] = self.at(i, j) * other.at(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.at(i, k);
                if a == c(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> Mat {
        Mat { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.at(i, j) * v[j]).sum()).collect()
    }

    pub fn dist(&self, other: &Mat) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dist_dense(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim());
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += (self.at(i, j) - other.get(i, j)).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn commutator_norm(&self, other: &Mat) -> f64 {
        self.mul(other).dist(&other.mul(self))
    }

    pub fn from_dense(m: &DenseMatrix) -> Mat {
        let d = m.dim();
        Mat { dim: d, data: (0..d * d).map(|k| m.get(k / d, k % d)).collect() }
    }
}

pub fn eye() -> Mat {
    Mat::identity(2)
}

pub fn x() -> Mat {
    Mat::from_rows(&[[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
}

pub fn y() -> Mat {
    Mat::from_rows(&[[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn z() -> Mat {
    Mat::from_rows(&[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])
}

pub fn h() -> Mat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_rows(&[[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]])
}

/// `ops[0] ⊗ ops[1] ⊗ …`; qubit 0 is the most significant index bit.
pub fn kron_all(ops: &[Mat]) -> Mat {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, m| acc.kron(m))
}

/// Single-qubit operators placed on the given qubits, identity elsewhere.
pub fn local(qubits: usize, placed: &[(usize, Mat)]) -> Mat {
    let ops: Vec<Mat> =
        (0..qubits).map(|q| placed.iter().find(|(p, _)| *p == q).map_or_else(eye, |(_, m)| m.clone())).collect();
    kron_all(&ops)
}

pub fn uniform(qubits: usize, m: &Mat) -> Mat {
    kron_all(&vec![m.clone(); qubits])
}

/// `|a⟩|b⟩ ↦ |b⟩|a⟩` for two `n`-qubit registers.
pub fn swap_network(n: usize) -> Mat {
    let d = 1usize << (2 * n);
    let mut m = Mat::zeros(d);
    for a in 0..1usize << n {
        for b in 0..1usize << n {
            m.data[((b << n) | a) * d + ((a << n) | b)] = c(1.0, 0.0);
        }
    }
    m
}

/// Nearest-neighbour sum over the closed ring of `q` qubits (one bond when `q = 2`).
pub fn ring(q: usize, p: &Mat) -> Mat {
    let bonds = if q == 2 { 1 } else { q };
    (0..bonds)
        .map(|i| local(q, &[(i, p.clone()), ((i + 1) % q, p.clone())]))
        .reduce(|a, b| a.add(&b))
        .expect("at least one bond")
}

/// Independent dense construction of every pool operator.
pub fn pool_operator(op: PoolOp, n: usize) -> Mat {
    let q = 2 * n;
    match op {
        PoolOp::SumY => (0..q).map(|i| local(q, &[(i, y())])).reduce(|a, b| a.add(&b)).unwrap(),
        PoolOp::SumXX => ring(q, &x()),
        PoolOp::SumYY => ring(q, &y()),
        PoolOp::SumZZ => ring(q, &z()),
        PoolOp::XAll => uniform(q, &x()),
        PoolOp::ZAll => uniform(q, &z()),
        PoolOp::Swap => swap_network(n),
        PoolOp::HAll => uniform(q, &h()),
        PoolOp::SwapXAll => swap_network(n).mul(&uniform(q, &x())),
        PoolOp::SwapHAll => swap_network(n).mul(&uniform(q, &h())),
        PoolOp::HAllZAll => uniform(q, &h()).mul(&uniform(q, &z())),
    }
}

/// `Y^{⊗2n}`, the representation of complementing both barcodes.
pub fn complement_rep(n: usize) -> Mat {
    uniform(2 * n, &y())
}

/// `exp(A)` by scaling and squaring with a Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let norm = a.data.iter().map(|v| v.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = a.scale(c(scale, 0.0));
    let mut term = Mat::identity(a.dim);
    let mut sum = Mat::identity(a.dim);
    for k in 1..30 {
        term = term.mul(&a).scale(c(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

/// `N^{-3} |Σ_{x,y} (−1)^{a_x + b_y + x·y}|²`, straight from the definition.
pub fn forrelation_sum(a: &Barcode, b: &Barcode) -> f64 {
    let big_n = a.len();
    let mut s = 0i64;
    for (xi, &ax) in a.bits().iter().enumerate() {
        for (yi, &by) in b.bits().iter().enumerate() {
            let parity = u32::from(ax) + u32::from(by) + (xi & yi).count_ones();
            s += if parity % 2 == 0 { 1 } else { -1 };
        }
    }
    (s * s) as f64 / (big_n as f64).powi(3)
}

/// Register state `|φ_a⟩ ⊗ |φ_b⟩` built from the amplitude definition.
pub fn encoded(a: &Barcode, b: &Barcode) -> Vec<C64> {
    let big_n = a.len();
    let norm = 1.0 / big_n as f64;
    let mut v = Vec::with_capacity(big_n * big_n);
    for &ai in a.bits() {
        for &bi in b.bits() {
            v.push(c(if (ai + bi) % 2 == 0 { norm } else { -norm }, 0.0));
        }
    }
    v
}

pub fn expectation(m: &Mat, v: &[C64]) -> C64 {
    v.iter().zip(m.apply(v)).map(|(a, b)| a.conj() * b).sum()
}

pub fn random_barcode<R: Rng>(n: usize, rng: &mut R) -> Barcode {
    Barcode::new((0..1usize << n).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
}
