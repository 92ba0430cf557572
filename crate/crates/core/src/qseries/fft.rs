//! Real convolution by an iterative radix-2 complex FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

fn bit_reverse(a: &mut [Complex64]) {
    let n = a.len();
    let mut j = 0;
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

/// In-place FFT of a power-of-two length; `inverse` uses `e^{+2 pi i / n}`
/// and does not rescale.
pub(crate) fn fft_in_place(a: &mut [Complex64], inverse: bool) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    bit_reverse(a);
    let sign = if inverse { 1.0 } else { -1.0 };
    // Twiddles for the largest stage, each from its own sin/cos call.
    let half = n / 2;
    let twiddles: Vec<Complex64> = (0..half)
        .map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        let h = len / 2;
        for start in (0..n).step_by(len) {
            for j in 0..h {
                let w = twiddles[j * stride];
                let u = a[start + j];
                let v = a[start + j + h] * w;
                a[start + j] = u + v;
                a[start + j + h] = u - v;
            }
        }
        len <<= 1;
    }
}

/// Truncated product of two real sequences, `c[i] = sum a[j] b[i - j]` for
/// `i < out_len`, plus an a-priori bound on the absolute error of each
/// output.
pub(crate) fn convolve(a: &[f64], b: &[f64], out_len: usize) -> (Vec<f64>, f64) {
    if a.is_empty() || b.is_empty() || out_len == 0 {
        return (vec![0.0; out_len], 0.0);
    }
    let a = &a[..a.len().min(out_len)];
    let b = &b[..b.len().min(out_len)];
    let size = (a.len() + b.len() - 1).next_power_of_two();
    // Pack both real inputs into one complex transform.
    let mut z = vec![Complex64::new(0.0, 0.0); size];
    for (i, &x) in a.iter().enumerate() {
        z[i].re = x;
    }
    for (i, &y) in b.iter().enumerate() {
        z[i].im = y;
    }
    fft_in_place(&mut z, false);
    let mut c = vec![Complex64::new(0.0, 0.0); size];
    for k in 0..size {
        let zk = z[k];
        let zmk = z[(size - k) % size].conj();
        let ak = (zk + zmk) * 0.5;
        let bk = (zk - zmk) * Complex64::new(0.0, -0.5);
        c[k] = ak * bk;
    }
    fft_in_place(&mut c, true);
    let scale = 1.0 / size as f64;
    let out: Vec<f64> = (0..out_len)
        .map(|i| if i < size { c[i].re * scale } else { 0.0 })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let levels = size.trailing_zeros().max(1) as f64;
    let bound = 5.0 * f64::EPSILON * levels * norm(a) * norm(b);
    (out, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn transform_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let orig: Vec<Complex64> = (0..64)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut a = orig.clone();
        fft_in_place(&mut a, false);
        fft_in_place(&mut a, true);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x / 64.0 - y).norm() < 1e-14);
        }
    }

    #[test]
    fn small_products() {
        let (c, _) = convolve(&[1.0, 1.0], &[1.0, 1.0], 3);
        for (x, y) in c.iter().zip([1.0, 2.0, 1.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        let (c, _) = convolve(&[1.0, 2.0, 3.0], &[4.0, 5.0], 5);
        for (x, y) in c.iter().zip([4.0, 13.0, 22.0, 15.0, 0.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
