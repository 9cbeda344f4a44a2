//! Small dense complex matrices for certifying structured operators at a few
//! qubits: Hermiticity, unitarity, involution and commutators.

use alloc::vec;
use alloc::vec::Vec;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Column `j` is `op(e_j)`.
    pub fn from_action(dim: usize, op: impl Fn(&[C64]) -> Vec<C64>) -> Self {
        let mut m = Self::zeros(dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = C64::new(1.0, 0.0);
            let col = op(&e);
            for (i, v) in col.into_iter().enumerate() {
                m.data[i * dim + j] = v;
            }
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|a| a.norm_sqr()).sum::<f64>())
    }

    /// `‖[A, B]‖_F`.
    pub fn commutator_norm(&self, other: &DenseMatrix) -> f64 {
        self.mul(other).sub(&other.mul(self)).frobenius()
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius()
    }

    /// `‖A†A − 1‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().mul(self).sub(&Self::identity(self.dim)).frobenius()
    }

    /// `‖A² − 1‖_F`.
    pub fn involution_residual(&self) -> f64 {
        self.mul(self).sub(&Self::identity(self.dim)).frobenius()
    }
}
