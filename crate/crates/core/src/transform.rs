// SPDX-License-Identifier: MIT OR Apache-2.0
//! Discrete Fourier transforms over products of cyclic groups.
//!
//! Transforms are unnormalized: `X[k] = sum_x x[x] e(-k.x)`, and the inverse
//! uses `e(+k.x)` without the `1/|G|` factor. Power-of-two lengths use an
//! iterative radix-2 kernel; other lengths go through Bluestein's chirp-z
//! reduction to a power-of-two convolution.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::group::Group;

fn bit_reverse_permute(a: &mut [Complex64]) {
    let n = a.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
}

/// In-place radix-2 transform; `a.len()` must be a power of two.
fn fft_pow2(a: &mut [Complex64], inverse: bool) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    bit_reverse_permute(a);
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        // Twiddles computed directly per index to avoid drift from repeated products.
        let tw: Vec<Complex64> = (0..half)
            .map(|k| Complex64::new(Float::cos(ang * k as f64), Float::sin(ang * k as f64)))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = a[start + k];
                let v = a[start + k + half] * tw[k];
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

fn chirp(n: usize, k: usize, sign: f64) -> Complex64 {
    // k^2 mod 2n keeps the angle argument small and exact.
    let kk = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
    let ang = sign * PI * kk / n as f64;
    Complex64::new(Float::cos(ang), Float::sin(ang))
}

/// In-place transform of arbitrary length.
pub fn dft(a: &mut [Complex64], inverse: bool) {
    let n = a.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        fft_pow2(a, inverse);
        return;
    }
    if n <= 16 {
        let sign = if inverse { 1.0 } else { -1.0 };
        let src = a.to_vec();
        for (k, out) in a.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, &v) in src.iter().enumerate() {
                let e = ((k * x) % n) as f64;
                let ang = sign * 2.0 * PI * e / n as f64;
                acc += v * Complex64::new(Float::cos(ang), Float::sin(ang));
            }
            *out = acc;
        }
        return;
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let m = (2 * n - 1).next_power_of_two();
    let mut u = vec![Complex64::new(0.0, 0.0); m];
    let mut v = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        u[k] = a[k] * chirp(n, k, sign);
    }
    v[0] = chirp(n, 0, -sign);
    for k in 1..n {
        let c = chirp(n, k, -sign);
        v[k] = c;
        v[m - k] = c;
    }
    fft_pow2(&mut u, false);
    fft_pow2(&mut v, false);
    for (x, y) in u.iter_mut().zip(&v) {
        *x *= *y;
    }
    fft_pow2(&mut u, true);
    let scale = 1.0 / m as f64;
    for k in 0..n {
        a[k] = u[k] * scale * chirp(n, k, sign);
    }
}

/// Transform over every axis of the mixed-radix layout of `g`.
pub fn dft_group(g: &Group, a: &mut [Complex64], inverse: bool) {
    assert_eq!(a.len(), g.order(), "buffer length must equal |G|");
    let factors = g.factors();
    let mut inner = g.order();
    let mut buf = Vec::new();
    for &n in factors {
        let n = n as usize;
        inner /= n;
        let outer = g.order() / (n * inner);
        buf.resize(n, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            for i in 0..inner {
                let base = o * n * inner + i;
                for t in 0..n {
                    buf[t] = a[base + t * inner];
                }
                dft(&mut buf, inverse);
                for t in 0..n {
                    a[base + t * inner] = buf[t];
                }
            }
        }
    }
}

/// In-place unnormalized Walsh-Hadamard transform; length must be a power of two.
pub fn wht(a: &mut [f64]) {
    let n = a.len();
    debug_assert!(n.is_power_of_two() || n == 0);
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (x, y) = (a[i], a[i + h]);
                a[i] = x + y;
                a[i + h] = x - y;
            }
        }
        h <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[Complex64], inverse: bool) -> Vec<Complex64> {
        let n = a.len();
        let sign = if inverse { 1.0 } else { -1.0 };
        (0..n)
            .map(|k| {
                a.iter()
                    .enumerate()
                    .map(|(x, &v)| {
                        let ang = sign * 2.0 * PI * ((k * x) % n) as f64 / n as f64;
                        v * Complex64::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 3, 5, 8, 17, 30, 64, 97] {
            let a: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i * 7 % 5) as f64 - 2.0, (i % 3) as f64))
                .collect();
            for inverse in [false, true] {
                let mut b = a.clone();
                dft(&mut b, inverse);
                for (x, y) in b.iter().zip(naive(&a, inverse)) {
                    assert!((x - y).norm() < 1e-9 * n as f64, "n={n}");
                }
            }
        }
    }

    #[test]
    fn wht_involution() {
        let mut a = [1.0, 0.0, 2.0, -1.0, 0.5, 0.0, 0.0, 3.0];
        let orig = a;
        wht(&mut a);
        wht(&mut a);
        for (x, y) in a.iter().zip(orig) {
            assert!((x / 8.0 - y).abs() < 1e-12);
        }
    }
}
