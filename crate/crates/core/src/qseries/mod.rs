//! q-expansions of level-1 cusp forms and Eisenstein series.
//!
//! Δ is generated as `q P(q)^8` with `P = η(q)^3 / q^{1/8}` given by the
//! Jacobi triple product, so every step is a dense-times-sparse product.
//! The other one-dimensional cusp spaces (weights 16, 18, 20, 22, 26) are
//! spanned by `Δ E_{k-12}`, computed exactly with a multi-modular NTT.
//!
//! Coefficient vectors are indexed from 0; index 0 holds the constant term,
//! so `coeffs[n] = a(n)` and a cusp form has `coeffs[0] = 0`.

pub mod arith;
mod fft;
mod hecke;
mod ladder;
mod multiply;
mod ntt;

use std::borrow::Cow;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

pub use hecke::{hecke_verify, HeckeReport, HeckeViolation};
pub use multiply::{multiply, Factor, Method, DIRECT_EXACT_MAX, DIRECT_FLOAT_MAX};

/// Largest `N` for the exact (big-integer) path.
pub const EXACT_LIMIT: usize = 100_000;

/// Largest `N` generated at all.
pub const FLOAT_LIMIT: usize = 1 << 24;

/// Cusp-form weights with a one-dimensional space at level 1.
pub const EIGENFORM_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

/// Eisenstein weights used as `E_{k-12}` factors.
pub const EISENSTEIN_WEIGHTS: [u32; 5] = [4, 6, 8, 10, 14];

// (k, numerator, denominator) of B_k.
const BERNOULLI: [(u32, i64, i64); 6] = [
    (4, -1, 30),
    (6, 1, 42),
    (8, -1, 30),
    (10, 5, 66),
    (12, -691, 2730),
    (14, 7, 6),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Exact(Vec<BigInt>),
    Float(Vec<f64>),
}

/// How far float coefficients may be from the true integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Roundoff {
    Exact,
    /// Each value is the exact integer rounded once to `f64`.
    CorrectlyRounded,
    /// Estimated relative error per coefficient.
    Relative(f64),
    /// Estimated absolute error per coefficient.
    Absolute(f64),
}

/// A truncated q-expansion `a(0) + a(1) q + ... + a(N) q^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion {
    weight: u32,
    form_id: String,
    coeffs: Coeffs,
    roundoff: Roundoff,
}

impl QExpansion {
    pub fn from_exact(weight: u32, form_id: impl Into<String>, coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty(), "expansion needs the constant term");
        Self {
            weight,
            form_id: form_id.into(),
            coeffs: Coeffs::Exact(coeffs),
            roundoff: Roundoff::Exact,
        }
    }

    pub fn from_float(weight: u32, form_id: impl Into<String>, coeffs: Vec<f64>, roundoff: Roundoff) -> Self {
        assert!(!coeffs.is_empty(), "expansion needs the constant term");
        Self {
            weight,
            form_id: form_id.into(),
            coeffs: Coeffs::Float(coeffs),
            roundoff,
        }
    }

    /// The zero series of the given weight, exact.
    pub fn zero(weight: u32, n_max: usize) -> Self {
        Self::from_exact(weight, "zero", vec![BigInt::zero(); n_max + 1])
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn form_id(&self) -> &str {
        &self.form_id
    }

    pub fn n_max(&self) -> usize {
        match &self.coeffs {
            Coeffs::Exact(v) => v.len() - 1,
            Coeffs::Float(v) => v.len() - 1,
        }
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn roundoff(&self) -> Roundoff {
        self.roundoff
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coeffs, Coeffs::Exact(_))
    }

    pub fn exact(&self) -> Option<&[BigInt]> {
        match &self.coeffs {
            Coeffs::Exact(v) => Some(v),
            Coeffs::Float(_) => None,
        }
    }

    /// Coefficients `a(0..=N)` as doubles (each exact value rounded once).
    pub fn float_coeffs(&self) -> Cow<'_, [f64]> {
        match &self.coeffs {
            Coeffs::Float(v) => Cow::Borrowed(v),
            Coeffs::Exact(v) => Cow::Owned(big_to_f64(v)),
        }
    }

    /// Converts to the float representation.
    pub fn into_float(self) -> Self {
        match self.coeffs {
            Coeffs::Float(_) => self,
            Coeffs::Exact(v) => Self {
                coeffs: Coeffs::Float(big_to_f64(&v)),
                roundoff: Roundoff::CorrectlyRounded,
                ..self
            },
        }
    }

    /// `a(n)` as a double.
    pub fn coefficient_f64(&self, n: usize) -> Result<f64> {
        let max = self.n_max();
        match &self.coeffs {
            Coeffs::Float(v) => v.get(n).copied(),
            Coeffs::Exact(v) => v.get(n).map(|x| x.to_f64().unwrap_or(f64::NAN)),
        }
        .ok_or(Error::OutOfRange { index: n, max })
    }

    /// Whether the constant term vanishes.
    pub fn is_cusp(&self) -> bool {
        match &self.coeffs {
            Coeffs::Exact(v) => v[0].is_zero(),
            Coeffs::Float(v) => v[0] == 0.0,
        }
    }

    /// The first `n_max + 1` coefficients.
    pub fn truncate(&self, n_max: usize) -> Result<Self> {
        if n_max > self.n_max() {
            return Err(Error::TruncationMismatch {
                needed: n_max,
                available: self.n_max(),
            });
        }
        let coeffs = match &self.coeffs {
            Coeffs::Exact(v) => Coeffs::Exact(v[..=n_max].to_vec()),
            Coeffs::Float(v) => Coeffs::Float(v[..=n_max].to_vec()),
        };
        Ok(Self {
            coeffs,
            form_id: self.form_id.clone(),
            ..*self
        })
    }

    /// `c * f`, exact when `f` is.
    pub fn scaled(&self, c: i64) -> Self {
        let coeffs = match &self.coeffs {
            Coeffs::Exact(v) => Coeffs::Exact(v.iter().map(|x| x * c).collect()),
            Coeffs::Float(v) => Coeffs::Float(v.iter().map(|x| x * c as f64).collect()),
        };
        Self {
            coeffs,
            form_id: format!("{c}*{}", self.form_id),
            ..*self
        }
    }

    /// `f + g` over the common truncation; weights must match.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.weight != other.weight {
            return Err(Error::WeightMismatch(self.weight, other.weight));
        }
        let n = self.n_max().min(other.n_max());
        let form_id = format!("{}+{}", self.form_id, other.form_id);
        Ok(match (&self.coeffs, &other.coeffs) {
            (Coeffs::Exact(a), Coeffs::Exact(b)) => {
                Self::from_exact(self.weight, form_id, (0..=n).map(|i| &a[i] + &b[i]).collect())
            }
            _ => {
                let a = self.float_coeffs();
                let b = other.float_coeffs();
                Self::from_float(
                    self.weight,
                    form_id,
                    (0..=n).map(|i| a[i] + b[i]).collect(),
                    Roundoff::Relative(f64::EPSILON),
                )
            }
        })
    }
}

fn big_to_f64(v: &[BigInt]) -> Vec<f64> {
    crate::par::map_slice(v, |x| x.to_f64().unwrap_or(f64::NAN))
}

/// A sparse integer series, truncated at `n_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSeries {
    terms: Vec<(usize, i64)>,
    n_max: usize,
}

impl SparseSeries {
    /// Terms must have strictly increasing exponents not exceeding `n_max`.
    pub fn new(terms: Vec<(usize, i64)>, n_max: usize) -> Result<Self> {
        if terms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::domain("sparse series", "exponents must increase strictly"));
        }
        if terms.last().is_some_and(|t| t.0 > n_max) {
            return Err(Error::domain("sparse series", "exponent beyond truncation"));
        }
        Ok(Self { terms, n_max })
    }

    pub fn terms(&self) -> &[(usize, i64)] {
        &self.terms
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Dense exact copy, labelled with weight 0.
    pub fn to_expansion(&self, form_id: &str) -> QExpansion {
        let mut v = vec![BigInt::zero(); self.n_max + 1];
        for &(e, c) in &self.terms {
            v[e] = BigInt::from(c);
        }
        QExpansion::from_exact(0, form_id, v)
    }
}

/// `sum_{j>=0} (-1)^j (2j+1) q^{j(j+1)/2}` up to `q^n`.
pub fn eta_cubed(n: usize) -> SparseSeries {
    let terms = (0i64..)
        .map(|j| {
            (
                (j * (j + 1) / 2) as usize,
                if j % 2 == 0 { 2 * j + 1 } else { -(2 * j + 1) },
            )
        })
        .take_while(|&(e, _)| e <= n)
        .collect();
    SparseSeries { terms, n_max: n }
}

fn check_size(n: usize, exact: bool) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("q-expansion", "need N >= 1"));
    }
    if exact && n > EXACT_LIMIT {
        return Err(Error::ResourceLimit {
            what: "exact coefficients",
            requested: n as u64,
            limit: EXACT_LIMIT as u64,
        });
    }
    if n > FLOAT_LIMIT {
        return Err(Error::ResourceLimit {
            what: "coefficients",
            requested: n as u64,
            limit: FLOAT_LIMIT as u64,
        });
    }
    Ok(())
}

/// Exact Δ coefficients `0..=n`: `i128` when it fits, big integers otherwise.
fn delta_exact(n: usize) -> Vec<BigInt> {
    let p = eta_cubed(n);
    match ladder::delta_i128(p.terms(), n) {
        Some(v) => v.into_iter().map(BigInt::from).collect(),
        None => ladder::delta_big(p.terms(), n),
    }
}

/// τ(0..=N) of the weight-12 discriminant form `q prod (1 - q^n)^24`.
///
/// The float path rounds the exact integers once when they fit in `i128`
/// (all `N` up to several million) and otherwise runs the ladder in `f64`.
pub fn delta_qexp(n: usize, exact: bool) -> Result<QExpansion> {
    check_size(n, exact)?;
    if exact {
        return Ok(QExpansion::from_exact(12, "delta", delta_exact(n)));
    }
    let p = eta_cubed(n);
    Ok(match ladder::delta_i128(p.terms(), n) {
        Some(v) => QExpansion::from_float(
            12,
            "delta",
            v.into_iter().map(|x| x as f64).collect(),
            Roundoff::CorrectlyRounded,
        ),
        None => QExpansion::from_float(
            12,
            "delta",
            ladder::delta_f64(p.terms(), n),
            Roundoff::Relative(7.0 * n as f64 * f64::EPSILON),
        ),
    })
}

/// `-2k / B_k`, the normalizing factor of `E_k`.
pub fn eisenstein_factor(k: u32) -> Result<i64> {
    let &(_, num, den) = BERNOULLI
        .iter()
        .find(|(w, _, _)| *w == k)
        .ok_or(Error::UnsupportedWeight {
            weight: k,
            detail: "no Bernoulli number tabulated",
        })?;
    let top = -2 * k as i64 * den;
    debug_assert_eq!(top % num, 0);
    Ok(top / num)
}

/// `E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n` for `k` in 4, 6, 8, 10, 14.
pub fn eisenstein(k: u32, n: usize, exact: bool) -> Result<QExpansion> {
    if !EISENSTEIN_WEIGHTS.contains(&k) {
        return Err(Error::UnsupportedWeight {
            weight: k,
            detail: "Eisenstein factors exist for 4, 6, 8, 10, 14",
        });
    }
    check_size(n, exact)?;
    let factor = eisenstein_factor(k)?;
    let id = format!("E{k}");
    if exact {
        let mut v = arith::divisor_power_sums(n, k - 1);
        for x in v.iter_mut() {
            *x *= factor;
        }
        v[0] = BigInt::from(1);
        Ok(QExpansion::from_exact(k, id, v))
    } else {
        let mut v = arith::divisor_power_sums_f64(n, k - 1);
        for x in v.iter_mut() {
            *x *= factor as f64;
        }
        v[0] = 1.0;
        // sigma is a sum of at most d(n) positive terms, each rounded.
        let d_max = arith::divisor_counts(n).into_iter().max().unwrap_or(1) as f64;
        Ok(QExpansion::from_float(
            k,
            id,
            v,
            Roundoff::Relative((d_max + 2.0) * f64::EPSILON),
        ))
    }
}

/// The normalized eigenform spanning the weight-`k` cusp space, as `Δ E_{k-12}`.
pub fn eigenform(k: u32, n: usize, exact: bool) -> Result<QExpansion> {
    if !EIGENFORM_WEIGHTS.contains(&k) {
        return Err(Error::UnsupportedWeight {
            weight: k,
            detail: "level-1 cusp space is not one-dimensional (supported: 12, 16, 18, 20, 22, 26)",
        });
    }
    if k == 12 {
        return delta_qexp(n, exact);
    }
    check_size(n, exact)?;
    let e = k - 12;
    let factor = eisenstein_factor(e)?;
    let p = eta_cubed(n);
    let delta = ladder::delta_i128(p.terms(), n);
    let delta_big = match &delta {
        Some(_) => None,
        None => Some(ladder::delta_big(p.terms(), n)),
    };

    // |a(m)| <= max|τ| * sum_{j<=n} |e_j| with sigma_{e-1}(j) <= zeta(e-1) j^{e-1}.
    let delta_bits = match (&delta, &delta_big) {
        (Some(v), _) => v
            .iter()
            .map(|x| 128 - x.unsigned_abs().leading_zeros())
            .max()
            .unwrap_or(0) as f64,
        (None, Some(v)) => ntt::max_bits(v) as f64,
        (None, None) => unreachable!(),
    };
    let e_sum = 1.0 + factor.unsigned_abs() as f64 * 1.21 * ((n + 1) as f64).powi(e as i32);
    let bits = (delta_bits + e_sum.log2()).ceil() as u64 + 2;

    let product = ntt::product_exact(
        |m| match (&delta, &delta_big) {
            (Some(v), _) => v.iter().map(|&x| x.rem_euclid(m.p as i128) as u64).collect(),
            (None, Some(v)) => crate::par::map_slice(v, |x| m.reduce_big(x)),
            (None, None) => unreachable!(),
        },
        |m| {
            let p = m.p;
            let f = m.reduce_i64(factor);
            let mut v = arith::divisor_power_sums_mod(n, e - 1, p);
            for x in v.iter_mut() {
                *x = arith::mul_mod(*x, f, p);
            }
            v[0] = 1;
            v
        },
        n + 1,
        bits,
    )
    .ok_or(Error::Overflow("eigenform modulus budget"))?;

    let id = format!("delta*E{e}");
    Ok(if exact {
        QExpansion::from_exact(k, id, product)
    } else {
        QExpansion::from_float(k, id, big_to_f64(&product), Roundoff::CorrectlyRounded)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// τ(0..=n) by expanding `q prod_{m<=n} (1 - q^m)^24` term by term.
    pub(crate) fn tau_oracle(n: usize) -> Vec<i128> {
        let mut e = vec![0i128; n];
        e[0] = 1;
        for m in 1..n {
            for i in (m..n).rev() {
                e[i] -= e[i - m];
            }
        }
        let mut acc = e.clone();
        for _ in 1..24 {
            let mut next = vec![0i128; n];
            for (i, &x) in acc.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in e[..n - i].iter().enumerate() {
                    next[i + j] += x * y;
                }
            }
            acc = next;
        }
        acc.insert(0, 0);
        acc
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn eta_cubed_terms() {
        assert_eq!(eta_cubed(5).terms(), &[(0, 1), (1, -3), (3, 5)]);
        let t = eta_cubed(10);
        assert!(t.terms().contains(&(6, -7)));
        assert!(t.terms().contains(&(10, 9)));
        // j = 0..=1413 satisfy j(j+1)/2 <= 10^6.
        assert_eq!(eta_cubed(1_000_000).terms().len(), 1414);
    }

    #[test]
    fn delta_matches_product_oracle() {
        let n = 400;
        let oracle = tau_oracle(n);
        let d = delta_qexp(n, true).unwrap();
        let got = d.exact().unwrap();
        for i in 0..=n {
            assert_eq!(got[i], BigInt::from(oracle[i]), "tau({i})");
        }
        assert_eq!(&got[1..7], &big(&[1, -24, 252, -1472, 4830, -6048])[..]);
        assert_eq!(&got[2] * &got[3], got[6]);
    }

    #[test]
    fn float_delta_rounds_exact_values() {
        let n = 3000;
        let e = delta_qexp(n, true).unwrap();
        let f = delta_qexp(n, false).unwrap();
        assert_eq!(f.roundoff(), Roundoff::CorrectlyRounded);
        assert_eq!(e.float_coeffs(), f.float_coeffs());
        let f64_ladder = ladder::delta_f64(eta_cubed(n).terms(), n);
        let exact = e.float_coeffs();
        for i in 1..=n {
            let rel = (f64_ladder[i] - exact[i]).abs() / exact[i].abs();
            assert!(rel <= 7.0 * n as f64 * f64::EPSILON, "{i}: {rel}");
        }
    }

    #[test]
    fn exact_policy_limit() {
        assert!(matches!(
            delta_qexp(EXACT_LIMIT + 1, true),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(delta_qexp(0, false).is_err());
    }

    #[test]
    fn eisenstein_leading_coefficients() {
        let expect = [(4, 240), (6, -504), (8, 480), (10, -264), (14, -24)];
        for (k, c) in expect {
            assert_eq!(eisenstein_factor(k).unwrap(), c);
            let e = eisenstein(k, 3, true).unwrap();
            assert_eq!(e.exact().unwrap()[1], BigInt::from(c));
            assert_eq!(e.exact().unwrap()[0], BigInt::from(1));
            assert!(!e.is_cusp());
        }
        let e4 = eisenstein(4, 2, true).unwrap();
        assert_eq!(e4.exact().unwrap()[2], BigInt::from(2160));
        let e4f = eisenstein(4, 2, false).unwrap();
        assert_eq!(e4f.float_coeffs()[2], 2160.0);
        assert!(matches!(eisenstein(12, 5, true), Err(Error::UnsupportedWeight { .. })));
    }

    #[test]
    fn eigenform_weight_sixteen() {
        let f = eigenform(16, 50, true).unwrap();
        let a = f.exact().unwrap();
        assert_eq!(f.form_id(), "delta*E4");
        assert_eq!(a[0], BigInt::from(0));
        assert_eq!(a[1], BigInt::from(1));
        assert_eq!(a[2], BigInt::from(216));
        assert_eq!(&a[2] * &a[3], a[6]);
        assert_eq!(eigenform(12, 50, true).unwrap(), delta_qexp(50, true).unwrap());
        assert!(matches!(eigenform(24, 10, true), Err(Error::UnsupportedWeight { .. })));
        assert!(matches!(eigenform(11, 10, false), Err(Error::UnsupportedWeight { .. })));
    }

    #[test]
    fn eigenforms_match_schoolbook_product() {
        let n = 120;
        let d = delta_qexp(n, true).unwrap();
        for k in [16u32, 18, 20, 22, 26] {
            let e = eisenstein(k - 12, n, true).unwrap();
            let direct = multiply(Factor::Dense(&d), &e, n, Method::Direct).unwrap();
            let f = eigenform(k, n, true).unwrap();
            assert_eq!(f.exact(), direct.exact(), "k={k}");
            let h = hecke_verify(&f, k, n).unwrap();
            assert!(h.holds(), "k={k}: {:?}", h.violations);
        }
    }

    #[test]
    fn hecke_relations_and_perturbation() {
        let d = delta_qexp(300, true).unwrap();
        let r = hecke_verify(&d, 12, 300).unwrap();
        assert!(r.holds());
        assert!(r.multiplicative_checked > 100 && r.prime_power_checked > 10);
        let a = d.exact().unwrap();
        assert_eq!(&a[2] * &a[2], &a[4] + BigInt::from(2048) * &a[1]);

        let mut bad = a.to_vec();
        bad[6] += 1;
        let bad = QExpansion::from_exact(12, "delta-perturbed", bad);
        // Below 30 the coefficient a(6) only enters through (2, 3).
        let r = hecke_verify(&bad, 12, 29).unwrap();
        assert_eq!(r.violations, vec![HeckeViolation::Multiplicative { m: 2, n: 3 }]);
        assert!(hecke_verify(&d.clone().into_float(), 12, 10).is_err());
        assert!(hecke_verify(&d, 12, 301).is_err());
    }

    #[test]
    fn scaling_and_sums() {
        let d = delta_qexp(10, true).unwrap();
        let two = d.scaled(2);
        assert_eq!(two.exact().unwrap()[2], BigInt::from(-48));
        let s = d.sum(&d).unwrap();
        assert_eq!(s.exact(), two.exact());
        let e = eigenform(16, 10, true).unwrap();
        assert!(matches!(d.sum(&e), Err(Error::WeightMismatch(12, 16))));
        assert_eq!(d.truncate(4).unwrap().n_max(), 4);
        assert!(d.truncate(11).is_err());
    }
}
