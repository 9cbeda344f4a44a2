//! Fast Walsh–Hadamard transform with orthonormal (1/√2 per qubit) scaling.
//!
//! Qubit `q` of a `k`-qubit vector lives on index bit `k - 1 - q`, so qubit 0
//! is the most significant. For a two-register state on `2n` qubits the first
//! register is the high half of the index.

use core::ops::{Add, Mul, Sub};

/// Which qubits of a two-register state the transform touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhtTarget {
    Register1,
    Register2,
    Both,
}

/// Butterflies over index bits `lo..hi`, followed by the `2^{-(hi-lo)/2}` scale.
pub fn fwht_bits<T>(data: &mut [T], lo: u32, hi: u32)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    debug_assert!(data.len().is_power_of_two());
    debug_assert!(1usize << hi <= data.len());
    for bit in lo..hi {
        let half = 1usize << bit;
        for block in data.chunks_exact_mut(half << 1) {
            let (left, right) = block.split_at_mut(half);
            for (a, b) in left.iter_mut().zip(right.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
    }
    let k = hi - lo;
    if k > 0 {
        // exact power of two for even k
        let scale = if k.is_multiple_of(2) {
            1.0 / (1u64 << (k / 2)) as f64
        } else {
            1.0 / libm::sqrt(libm::pow(2.0, k as f64))
        };
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// Orthonormal transform over every qubit of `data`.
pub fn fwht<T>(data: &mut [T])
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let k = data.len().trailing_zeros();
    fwht_bits(data, 0, k);
}

/// Transform on one or both registers of a `2n`-qubit vector.
pub fn apply_wht<T>(data: &mut [T], n: usize, target: WhtTarget)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    debug_assert_eq!(data.len(), 1usize << (2 * n));
    let n = n as u32;
    match target {
        WhtTarget::Register1 => fwht_bits(data, n, 2 * n),
        WhtTarget::Register2 => fwht_bits(data, 0, n),
        WhtTarget::Both => fwht_bits(data, 0, 2 * n),
    }
}
