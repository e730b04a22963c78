//! Row-major product kernels and the softmax exponential. Short rows are
//! dispatched to fixed-width bodies so they unroll, and on x86-64 with
//! `std` the loops are recompiled for AVX2 when the CPU has it. Every
//! variant performs the same operations in the same order, so results do
//! not depend on which body runs.

use crate::math;

#[cfg(all(feature = "std", target_arch = "x86_64"))]
fn has_avx2() -> bool {
    use core::sync::atomic::{AtomicU8, Ordering};
    static LEVEL: AtomicU8 = AtomicU8::new(0);
    match LEVEL.load(Ordering::Relaxed) {
        1 => false,
        2 => true,
        _ => {
            let yes = std::is_x86_feature_detected!("avx2");
            LEVEL.store(if yes { 2 } else { 1 }, Ordering::Relaxed);
            yes
        }
    }
}

/// Defines `$name` that runs `$body` through an AVX2-compiled copy when
/// available.
macro_rules! accelerated {
    ($(#[$doc:meta])* fn $name:ident / $avx:ident / $base:ident ($($arg:ident : $ty:ty),*)) => {
        $(#[$doc])*
        pub(crate) fn $name($($arg: $ty),*) {
            #[cfg(all(feature = "std", target_arch = "x86_64"))]
            if has_avx2() {
                // SAFETY: the CPU supports AVX2, checked above.
                unsafe { $avx($($arg),*) };
                return;
            }
            $base($($arg),*)
        }

        #[cfg(all(feature = "std", target_arch = "x86_64"))]
        #[target_feature(enable = "avx2")]
        unsafe fn $avx($($arg: $ty),*) {
            $base($($arg),*)
        }
    };
}

accelerated! {
    /// `out[i] = Σ_j w[i, j] · x[j]` with `w` of shape `[out.len(), x.len()]`.
    fn matvec / matvec_avx2 / matvec_base(out: &mut [f64], w: &[f64], x: &[f64])
}

accelerated! {
    /// `dw[i, :] += g[i] · x` (gradient of a product with respect to its matrix).
    fn outer_acc / outer_acc_avx2 / outer_acc_base(dw: &mut [f64], g: &[f64], x: &[f64])
}

accelerated! {
    /// `dx += Σ_i g[i] · w[i, :]` (gradient of a product with respect to its vector).
    fn transpose_acc / transpose_acc_avx2 / transpose_acc_base(dx: &mut [f64], w: &[f64], g: &[f64])
}

accelerated! {
    /// `x ← e^x` elementwise.
    fn exp_in_place / exp_in_place_avx2 / exp_in_place_base(xs: &mut [f64])
}

/// True when no element is infinite or NaN. Tests the exponent bits so the
/// scan vectorizes.
pub(crate) fn all_finite(xs: &[f64]) -> bool {
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    if has_avx2() {
        // SAFETY: the CPU supports AVX2, checked above.
        return unsafe { all_finite_avx2(xs) };
    }
    all_finite_base(xs)
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
#[target_feature(enable = "avx2")]
unsafe fn all_finite_avx2(xs: &[f64]) -> bool {
    all_finite_base(xs)
}

#[inline(always)]
fn all_finite_base(xs: &[f64]) -> bool {
    const EXPONENT: u64 = 0x7ff0_0000_0000_0000;
    xs.iter().fold(0u64, |m, v| {
        m | u64::from(v.to_bits() & EXPONENT == EXPONENT)
    }) == 0
}

#[inline(always)]
fn exp_in_place_base(xs: &mut [f64]) {
    for x in xs.iter_mut() {
        *x = math::exp_branchless(*x);
    }
}

macro_rules! dispatch {
    ($k:expr, $fixed:ident, $dynamic:ident, ($($arg:expr),*)) => {
        match $k {
            2 => $fixed::<2>($($arg),*),
            4 => $fixed::<4>($($arg),*),
            8 => $fixed::<8>($($arg),*),
            10 => $fixed::<10>($($arg),*),
            16 => $fixed::<16>($($arg),*),
            20 => $fixed::<20>($($arg),*),
            32 => $fixed::<32>($($arg),*),
            64 => $fixed::<64>($($arg),*),
            _ => $dynamic($($arg),*),
        }
    };
}

#[inline(always)]
fn matvec_base(out: &mut [f64], w: &[f64], x: &[f64]) {
    match x.len() {
        0 => out.fill(0.0),
        1 => {
            for (o, wv) in out.iter_mut().zip(w) {
                *o = wv * x[0];
            }
        }
        k => dispatch!(k, matvec_fixed, matvec_dyn, (out, w, x)),
    }
}

#[inline(always)]
fn matvec_fixed<const N: usize>(out: &mut [f64], w: &[f64], x: &[f64]) {
    let x: &[f64; N] = x.try_into().expect("width matches");
    for (o, row) in out.iter_mut().zip(w.chunks_exact(N)) {
        let row: &[f64; N] = row.try_into().expect("chunk width");
        let mut s = 0.0;
        for j in 0..N {
            s += row[j] * x[j];
        }
        *o = s;
    }
}

#[inline(always)]
fn matvec_dyn(out: &mut [f64], w: &[f64], x: &[f64]) {
    let k = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(k)) {
        let mut s = 0.0;
        for (a, b) in row.iter().zip(x) {
            s += a * b;
        }
        *o = s;
    }
}

#[inline(always)]
fn outer_acc_base(dw: &mut [f64], g: &[f64], x: &[f64]) {
    match x.len() {
        0 => {}
        1 => {
            for (d, go) in dw.iter_mut().zip(g) {
                *d += go * x[0];
            }
        }
        k => dispatch!(k, outer_fixed, outer_dyn, (dw, g, x)),
    }
}

#[inline(always)]
fn outer_fixed<const N: usize>(dw: &mut [f64], g: &[f64], x: &[f64]) {
    let x: &[f64; N] = x.try_into().expect("width matches");
    for (row, go) in dw.chunks_exact_mut(N).zip(g) {
        let row: &mut [f64; N] = row.try_into().expect("chunk width");
        for j in 0..N {
            row[j] += go * x[j];
        }
    }
}

#[inline(always)]
fn outer_dyn(dw: &mut [f64], g: &[f64], x: &[f64]) {
    let k = x.len();
    for (row, go) in dw.chunks_exact_mut(k).zip(g) {
        for (d, xv) in row.iter_mut().zip(x) {
            *d += go * xv;
        }
    }
}

#[inline(always)]
fn transpose_acc_base(dx: &mut [f64], w: &[f64], g: &[f64]) {
    match dx.len() {
        0 => {}
        1 => {
            for (wv, go) in w.iter().zip(g) {
                dx[0] += go * wv;
            }
        }
        k => dispatch!(k, transpose_fixed, transpose_dyn, (dx, w, g)),
    }
}

#[inline(always)]
fn transpose_fixed<const N: usize>(dx: &mut [f64], w: &[f64], g: &[f64]) {
    let dx: &mut [f64; N] = dx.try_into().expect("width matches");
    let mut acc = *dx;
    for (row, go) in w.chunks_exact(N).zip(g) {
        let row: &[f64; N] = row.try_into().expect("chunk width");
        for j in 0..N {
            acc[j] += go * row[j];
        }
    }
    *dx = acc;
}

#[inline(always)]
fn transpose_dyn(dx: &mut [f64], w: &[f64], g: &[f64]) {
    let k = dx.len();
    for (row, go) in w.chunks_exact(k).zip(g) {
        for (d, wv) in dx.iter_mut().zip(row) {
            *d += go * wv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn data(n: usize, seed: f64) -> Vec<f64> {
        (0..n).map(|i| ((i as f64 + seed) * 0.7548).sin()).collect()
    }

    #[test]
    fn fixed_and_dynamic_bodies_agree_bitwise() {
        for k in [2, 3, 4, 8, 10, 16, 20, 32, 64] {
            let rows = 7;
            let w = data(rows * k, 1.0);
            let x = data(k, 2.0);
            let g = data(rows, 3.0);

            let (mut a, mut b) = (vec![0.0; rows], vec![0.0; rows]);
            matvec(&mut a, &w, &x);
            matvec_dyn(&mut b, &w, &x);
            assert_eq!(a, b, "matvec k={k}");

            let (mut a, mut b) = (data(rows * k, 4.0), data(rows * k, 4.0));
            outer_acc(&mut a, &g, &x);
            outer_dyn(&mut b, &g, &x);
            assert_eq!(a, b, "outer k={k}");

            let (mut a, mut b) = (data(k, 5.0), data(k, 5.0));
            transpose_acc(&mut a, &w, &g);
            transpose_dyn(&mut b, &w, &g);
            assert_eq!(a, b, "transpose k={k}");
        }
    }

    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    #[test]
    fn accelerated_bodies_agree_bitwise() {
        if !has_avx2() {
            return;
        }
        for k in [1, 3, 10, 64] {
            let rows = 33;
            let w = data(rows * k, 1.0);
            let x = data(k, 2.0);
            let g = data(rows, 3.0);
            let (mut a, mut b) = (vec![0.0; rows], vec![0.0; rows]);
            unsafe { matvec_avx2(&mut a, &w, &x) };
            matvec_base(&mut b, &w, &x);
            assert_eq!(a, b);
            let (mut a, mut b) = (data(rows * k, 4.0), data(rows * k, 4.0));
            unsafe { outer_acc_avx2(&mut a, &g, &x) };
            outer_acc_base(&mut b, &g, &x);
            assert_eq!(a, b);
            let (mut a, mut b) = (data(k, 5.0), data(k, 5.0));
            unsafe { transpose_acc_avx2(&mut a, &w, &g) };
            transpose_acc_base(&mut b, &w, &g);
            assert_eq!(a, b);
        }
        let mut a: Vec<f64> = (0..1000).map(|i| -700.0 + 0.7 * i as f64).collect();
        let mut b = a.clone();
        unsafe { exp_in_place_avx2(&mut a) };
        exp_in_place_base(&mut b);
        assert_eq!(a, b);
    }
}
