//! Dense-times-sparse truncated products and the `q P(q)^8` ladder for Δ.

use std::sync::atomic::{AtomicBool, Ordering};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::par;

/// Output chunk for parallel dense-times-sparse products.
const CHUNK: usize = 1 << 14;

fn abs_weight(sparse: &[(usize, i64)], out_len: usize) -> f64 {
    sparse
        .iter()
        .filter(|(e, _)| *e < out_len)
        .map(|(_, c)| c.unsigned_abs() as f64)
        .sum()
}

/// `sparse * dense` truncated to `out_len`, in `i128`. Returns `None` on
/// overflow.
pub(crate) fn mul_i128(sparse: &[(usize, i64)], dense: &[i128], out_len: usize) -> Option<Vec<i128>> {
    let max_in = dense.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
    let safe = max_in * abs_weight(sparse, out_len) < 2f64.powi(125);
    let mut out = vec![0i128; out_len];
    let overflow = AtomicBool::new(false);
    par::for_each_chunk_mut(&mut out, CHUNK, |ci, chunk| {
        let lo = ci * CHUNK;
        let hi = lo + chunk.len();
        for &(e, c) in sparse {
            if e >= hi {
                break;
            }
            let c = c as i128;
            let start = lo.max(e);
            let src_end = (hi - e).min(dense.len());
            if start - e >= src_end {
                continue;
            }
            let src = &dense[start - e..src_end];
            let dst = &mut chunk[start - lo..start - lo + src.len()];
            if safe {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            } else {
                for (d, &s) in dst.iter_mut().zip(src) {
                    match c.checked_mul(s).and_then(|t| d.checked_add(t)) {
                        Some(v) => *d = v,
                        None => {
                            overflow.store(true, Ordering::Relaxed);
                            return;
                        }
                    }
                }
            }
        }
    });
    (!overflow.load(Ordering::Relaxed)).then_some(out)
}

/// `sparse * dense` truncated to `out_len`, in `i64`; the caller guarantees
/// `max|dense| * sum|sparse| < 2^63`.
fn mul_i64(sparse: &[(usize, i64)], dense: &[i64], out_len: usize) -> Vec<i64> {
    let mut out = vec![0i64; out_len];
    par::for_each_chunk_mut(&mut out, CHUNK, |ci, chunk| {
        let lo = ci * CHUNK;
        let hi = lo + chunk.len();
        for &(e, c) in sparse {
            if e >= hi {
                break;
            }
            let start = lo.max(e);
            let src_end = (hi - e).min(dense.len());
            if start - e >= src_end {
                continue;
            }
            let src = &dense[start - e..src_end];
            let dst = &mut chunk[start - lo..start - lo + src.len()];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    });
    out
}

/// `sparse * dense` truncated to `out_len`, in `f64`.
pub(crate) fn mul_f64(sparse: &[(usize, i64)], dense: &[f64], out_len: usize) -> Vec<f64> {
    let mut out = vec![0f64; out_len];
    par::for_each_chunk_mut(&mut out, CHUNK, |ci, chunk| {
        let lo = ci * CHUNK;
        let hi = lo + chunk.len();
        for &(e, c) in sparse {
            if e >= hi {
                break;
            }
            let c = c as f64;
            let start = lo.max(e);
            let src_end = (hi - e).min(dense.len());
            if start - e >= src_end {
                continue;
            }
            let src = &dense[start - e..src_end];
            let dst = &mut chunk[start - lo..start - lo + src.len()];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    });
    out
}

/// `sparse * dense` truncated to `out_len`, exactly.
pub(crate) fn mul_big(sparse: &[(usize, i64)], dense: &[BigInt], out_len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); out_len];
    par::for_each_chunk_mut(&mut out, CHUNK, |ci, chunk| {
        let lo = ci * CHUNK;
        for (off, d) in chunk.iter_mut().enumerate() {
            let i = lo + off;
            for &(e, c) in sparse {
                if e > i {
                    break;
                }
                if let Some(s) = dense.get(i - e) {
                    *d += s * c;
                }
            }
        }
    });
    out
}

fn dense_of(sparse: &[(usize, i64)], len: usize) -> Vec<i64> {
    let mut v = vec![0i64; len];
    for &(e, c) in sparse {
        if e < len {
            v[e] = c;
        }
    }
    v
}

/// Δ coefficients `0..=n` from `q P^8`, in `i128`; `None` on overflow.
pub(crate) fn delta_i128(p: &[(usize, i64)], n: usize) -> Option<Vec<i128>> {
    // Early powers of P fit in i64, which multiplies several times faster.
    let weight = abs_weight(p, n);
    let mut small = dense_of(p, n);
    let mut done = 0;
    while done < 7 {
        let max_in = small.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
        if max_in * weight >= 2f64.powi(62) {
            break;
        }
        small = mul_i64(p, &small, n);
        done += 1;
    }
    let mut cur: Vec<i128> = small.into_iter().map(i128::from).collect();
    for _ in done..7 {
        cur = mul_i128(p, &cur, n)?;
    }
    cur.insert(0, 0);
    Some(cur)
}

/// Δ coefficients `0..=n` from `q P^8`, in `f64`.
pub(crate) fn delta_f64(p: &[(usize, i64)], n: usize) -> Vec<f64> {
    let mut cur: Vec<f64> = dense_of(p, n).into_iter().map(|c| c as f64).collect();
    for _ in 0..7 {
        cur = mul_f64(p, &cur, n);
    }
    cur.insert(0, 0.0);
    cur
}

/// Δ coefficients `0..=n` from `q P^8`, exactly.
pub(crate) fn delta_big(p: &[(usize, i64)], n: usize) -> Vec<BigInt> {
    let mut cur: Vec<BigInt> = dense_of(p, n).into_iter().map(BigInt::from).collect();
    for _ in 0..7 {
        cur = mul_big(p, &cur, n);
    }
    cur.insert(0, BigInt::zero());
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_kernels_agree() {
        let sparse = [(0usize, 1i64), (1, -3), (3, 5), (6, -7)];
        let dense: Vec<i128> = (0..40).map(|i| (i * i) as i128 - 300).collect();
        let a = mul_i128(&sparse, &dense, 40).unwrap();
        let b = mul_f64(&sparse, &dense.iter().map(|&x| x as f64).collect::<Vec<_>>(), 40);
        let c = mul_big(&sparse, &dense.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>(), 40);
        for i in 0..40 {
            assert_eq!(a[i] as f64, b[i]);
            assert_eq!(BigInt::from(a[i]), c[i]);
        }
    }

    #[test]
    fn overflow_is_detected() {
        let sparse = [(0usize, 3i64)];
        assert!(mul_i128(&sparse, &[i128::MAX / 2], 1).is_none());
    }
}
