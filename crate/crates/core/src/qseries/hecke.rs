//! Exact Hecke-relation checks on eigenform coefficients.

use num_bigint::BigInt;
use num_integer::Integer;
use serde::Serialize;

use super::arith::{big_pow, primes_up_to};
use super::QExpansion;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "relation", rename_all = "kebab-case")]
pub enum HeckeViolation {
    /// `a(m) a(n) != a(mn)` for coprime `m < n`.
    Multiplicative { m: usize, n: usize },
    /// `a(p) a(p^r) != a(p^{r+1}) + p^{k-1} a(p^{r-1})`.
    PrimePower { p: usize, r: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeckeReport {
    pub form_id: String,
    pub weight: u32,
    pub bound: usize,
    pub multiplicative_checked: usize,
    pub prime_power_checked: usize,
    pub violations: Vec<HeckeViolation>,
}

impl HeckeReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks multiplicativity for every coprime pair `2 <= m < n` with
/// `mn <= bound`, and the prime-power recursion for every `p^{r+1} <= bound`.
pub fn hecke_verify(f: &QExpansion, k: u32, bound: usize) -> Result<HeckeReport> {
    let a = f
        .exact()
        .ok_or_else(|| Error::domain("hecke_verify", "exact coefficients required"))?;
    if bound > f.n_max() {
        return Err(Error::InsufficientCoefficients {
            needed: bound,
            available: f.n_max(),
        });
    }
    let mut violations = Vec::new();
    let mut multiplicative_checked = 0;
    let mut m = 2;
    while m * (m + 1) <= bound {
        for n in m + 1..=bound / m {
            if m.gcd(&n) == 1 {
                multiplicative_checked += 1;
                if &a[m] * &a[n] != a[m * n] {
                    violations.push(HeckeViolation::Multiplicative { m, n });
                }
            }
        }
        m += 1;
    }

    let mut prime_power_checked = 0;
    for p in primes_up_to(bound / 2) {
        let weight_factor = big_pow(p, k - 1);
        let (mut prev, mut cur) = (1usize, p);
        let mut r = 1;
        while let Some(next) = cur.checked_mul(p).filter(|&x| x <= bound) {
            prime_power_checked += 1;
            let lhs: BigInt = &a[p] * &a[cur];
            let rhs: BigInt = &a[next] + &weight_factor * &a[prev];
            if lhs != rhs {
                violations.push(HeckeViolation::PrimePower { p, r });
            }
            prev = cur;
            cur = next;
            r += 1;
        }
    }
    Ok(HeckeReport {
        form_id: f.form_id().to_string(),
        weight: k,
        bound,
        multiplicative_checked,
        prime_power_checked,
        violations,
    })
}
