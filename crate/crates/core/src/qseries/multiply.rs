//! Truncated Cauchy products of q-series.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{fft, ladder, ntt, QExpansion, Roundoff, SparseSeries};
use crate::{Error, Result};

/// Largest float truncation that `Auto` multiplies by the schoolbook rule.
pub const DIRECT_FLOAT_MAX: usize = 30_000;

/// Largest exact truncation that `Auto` multiplies by the schoolbook rule.
pub const DIRECT_EXACT_MAX: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Sparse path when a factor is sparse; otherwise schoolbook for small
    /// truncations and NTT (exact) or FFT (float) beyond.
    Auto,
    Direct,
    /// Float FFT; exact inputs are rounded first.
    Fft,
    /// Exact multi-modular NTT; both factors must be exact.
    Ntt,
}

#[derive(Debug, Clone, Copy)]
pub enum Factor<'a> {
    Sparse(&'a SparseSeries),
    Dense(&'a QExpansion),
}

impl Factor<'_> {
    fn n_max(&self) -> usize {
        match self {
            Factor::Sparse(s) => s.n_max(),
            Factor::Dense(q) => q.n_max(),
        }
    }
}

/// `f * g` truncated to `q^n`.
///
/// The weight of the product is the sum of the dense weights (sparse
/// factors count as weight 0). Float results report the kernel roundoff.
pub fn multiply(f: Factor<'_>, g: &QExpansion, n: usize, method: Method) -> Result<QExpansion> {
    for available in [f.n_max(), g.n_max()] {
        if available < n {
            return Err(Error::TruncationMismatch { needed: n, available });
        }
    }
    let len = n + 1;
    match f {
        Factor::Sparse(s) => {
            let id = format!("sparse*{}", g.form_id());
            match method {
                Method::Auto => Ok(sparse_times(s, g, len, id)),
                _ => multiply_dense(&s.to_expansion("sparse"), g, len, method),
            }
        }
        Factor::Dense(a) => multiply_dense(a, g, len, method),
    }
}

fn sparse_times(s: &SparseSeries, g: &QExpansion, len: usize, id: String) -> QExpansion {
    let terms = s.terms();
    let weight = g.weight();
    match g.exact() {
        Some(v) => QExpansion::from_exact(weight, id, ladder::mul_big(terms, v, len)),
        None => {
            let v = g.float_coeffs();
            let max_in = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let w: f64 = terms.iter().map(|(_, c)| c.unsigned_abs() as f64).sum();
            let bound = terms.len() as f64 * f64::EPSILON * w * max_in;
            QExpansion::from_float(weight, id, ladder::mul_f64(terms, &v, len), Roundoff::Absolute(bound))
        }
    }
}

fn multiply_dense(a: &QExpansion, b: &QExpansion, len: usize, method: Method) -> Result<QExpansion> {
    let weight = a.weight() + b.weight();
    let id = format!("{}*{}", a.form_id(), b.form_id());
    let both_exact = a.is_exact() && b.is_exact();
    let method = match method {
        Method::Auto if both_exact && len <= DIRECT_EXACT_MAX + 1 => Method::Direct,
        Method::Auto if both_exact => Method::Ntt,
        Method::Auto if len <= DIRECT_FLOAT_MAX + 1 => Method::Direct,
        Method::Auto => Method::Fft,
        m => m,
    };
    match method {
        Method::Direct if both_exact => {
            let (x, y) = (a.exact().unwrap(), b.exact().unwrap());
            let out = crate::par::map_indices(len, |i| {
                let mut acc = BigInt::zero();
                for j in 0..=i {
                    acc += &x[j] * &y[i - j];
                }
                acc
            });
            Ok(QExpansion::from_exact(weight, id, out))
        }
        Method::Direct => {
            let (x, y) = (a.float_coeffs(), b.float_coeffs());
            let out = crate::par::map_indices(len, |i| (0..=i).map(|j| x[j] * y[i - j]).sum::<f64>());
            let max_x = x[..len].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sum_y: f64 = y[..len].iter().map(|v| v.abs()).sum();
            let bound = len as f64 * f64::EPSILON * max_x * sum_y;
            Ok(QExpansion::from_float(weight, id, out, Roundoff::Absolute(bound)))
        }
        Method::Fft => {
            let (out, bound) = fft::convolve(&a.float_coeffs(), &b.float_coeffs(), len);
            Ok(QExpansion::from_float(weight, id, out, Roundoff::Absolute(bound)))
        }
        Method::Ntt => {
            let (Some(x), Some(y)) = (a.exact(), b.exact()) else {
                return Err(Error::domain("multiply", "NTT needs exact coefficients"));
            };
            let x = &x[..len];
            let y = &y[..len];
            // |c_i| <= max|x| * sum|y|.
            let sum_y_bits = ntt::max_bits(y) + (usize::BITS - len.leading_zeros()) as u64;
            let bits = ntt::max_bits(x) + sum_y_bits;
            let out = ntt::product_exact(
                |m| x.iter().map(|v| m.reduce_big(v)).collect(),
                |m| y.iter().map(|v| m.reduce_big(v)).collect(),
                len,
                bits,
            )
            .ok_or(Error::Overflow("NTT modulus budget"))?;
            Ok(QExpansion::from_exact(weight, id, out))
        }
        Method::Auto => unreachable!("resolved above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::eta_cubed;
    use rand::{Rng, SeedableRng};

    fn ints(v: &[i64]) -> QExpansion {
        QExpansion::from_exact(0, "t", v.iter().map(|&x| BigInt::from(x)).collect())
    }

    #[test]
    fn one_plus_q_squared() {
        let f = ints(&[1, 1, 0, 0]);
        for m in [Method::Auto, Method::Direct, Method::Fft, Method::Ntt] {
            let p = multiply(Factor::Dense(&f), &f, 3, m).unwrap();
            let c = p.float_coeffs();
            for (x, y) in c.iter().zip([1.0, 2.0, 1.0, 0.0]) {
                assert!((x - y).abs() < 1e-12, "{m:?}");
            }
        }
    }

    #[test]
    fn sparse_square_matches_direct() {
        let p = eta_cubed(50);
        let dense = p.to_expansion("eta3");
        let a = multiply(Factor::Sparse(&p), &dense, 50, Method::Auto).unwrap();
        let b = multiply(Factor::Dense(&dense), &dense, 50, Method::Direct).unwrap();
        assert_eq!(a.exact().unwrap(), b.exact().unwrap());
        // (eta^3)^2 = eta^6: 1 - 6q + 9q^2 + 10q^3 - 30q^4 ...
        assert_eq!(a.exact().unwrap()[3], BigInt::from(10));
    }

    #[test]
    fn fft_matches_direct_on_random_integers() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let n = 4095;
        let a: Vec<i64> = (0..=n).map(|_| rng.gen_range(-1000..=1000)).collect();
        let b: Vec<i64> = (0..=n).map(|_| rng.gen_range(-1000..=1000)).collect();
        let (fa, fb) = (ints(&a), ints(&b));
        let exact = multiply(Factor::Dense(&fa), &fb, n, Method::Direct).unwrap();
        let fast = multiply(Factor::Dense(&fa), &fb, n, Method::Fft).unwrap();
        let ntt = multiply(Factor::Dense(&fa), &fb, n, Method::Ntt).unwrap();
        assert_eq!(exact.exact(), ntt.exact());
        let Roundoff::Absolute(bound) = fast.roundoff() else {
            panic!("fft reports an absolute bound")
        };
        let e = exact.float_coeffs();
        let diff = fast
            .float_coeffs()
            .iter()
            .zip(e.iter())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff <= 1e-6, "{diff}");
        assert!(diff <= bound);
    }

    #[test]
    fn truncation_mismatch() {
        let f = ints(&[1, 1]);
        assert!(matches!(
            multiply(Factor::Dense(&f), &f, 3, Method::Auto),
            Err(Error::TruncationMismatch { .. })
        ));
    }

    #[test]
    fn ntt_rejects_float() {
        let f = ints(&[1, 1]).into_float();
        assert!(multiply(Factor::Dense(&f), &f, 1, Method::Ntt).is_err());
    }
}
