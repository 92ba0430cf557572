//! Divisor sieves and small number-theoretic helpers.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// `d(n)` for `n` in `0..=limit` (`d(0) = 0`).
pub fn divisor_counts(limit: usize) -> Vec<u32> {
    let mut d = vec![0u32; limit + 1];
    for i in 1..=limit {
        for m in (i..=limit).step_by(i) {
            d[m] += 1;
        }
    }
    d
}

/// `sigma_e(n)` for `n` in `0..=limit`, exactly.
pub fn divisor_power_sums(limit: usize, e: u32) -> Vec<BigInt> {
    let mut sigma = vec![BigInt::zero(); limit + 1];
    for i in 1..=limit {
        let p = BigInt::from(i).pow(e);
        for m in (i..=limit).step_by(i) {
            sigma[m] += &p;
        }
    }
    sigma
}

/// `sigma_e(n) mod p` for `n` in `0..=limit`.
pub fn divisor_power_sums_mod(limit: usize, e: u32, p: u64) -> Vec<u64> {
    let mut sigma = vec![0u64; limit + 1];
    for i in 1..=limit {
        let pi = pow_mod(i as u64 % p, e as u64, p);
        for m in (i..=limit).step_by(i) {
            sigma[m] = add_mod(sigma[m], pi, p);
        }
    }
    sigma
}

/// `sigma_e(n)` in floating point (each sum of positive terms, so the
/// relative error is at most `d(n)` roundings).
pub fn divisor_power_sums_f64(limit: usize, e: u32) -> Vec<f64> {
    let mut sigma = vec![0.0f64; limit + 1];
    for i in 1..=limit {
        let p = (i as f64).powi(e as i32);
        for m in (i..=limit).step_by(i) {
            sigma[m] += p;
        }
    }
    sigma
}

/// Primes up to `limit` by the sieve of Eratosthenes.
pub fn primes_up_to(limit: usize) -> Vec<usize> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

#[inline]
pub(crate) fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 325, 9375, 28178, 450_775, 9_780_504, 1_795_265_022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `p^e` as a big integer.
pub(crate) fn big_pow(p: usize, e: u32) -> BigInt {
    let mut acc = BigInt::one();
    let b = BigInt::from(p);
    for _ in 0..e {
        acc *= &b;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisor_counts_small() {
        assert_eq!(&divisor_counts(12)[1..], &[1, 2, 2, 3, 2, 4, 2, 4, 3, 4, 2, 6]);
    }

    #[test]
    fn sigma_three_of_two_is_nine() {
        let s = divisor_power_sums(6, 3);
        assert_eq!(s[2], BigInt::from(9));
        assert_eq!(s[6], BigInt::from(1 + 8 + 27 + 216));
        let p = 1_000_000_007;
        let sm = divisor_power_sums_mod(6, 3, p);
        assert_eq!(sm[6], 252);
    }

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let sieve = primes_up_to(10_000);
        let mr: Vec<usize> = (0..=10_000u64)
            .filter(|&n| is_prime_u64(n))
            .map(|n| n as usize)
            .collect();
        assert_eq!(sieve, mr);
        assert!(is_prime_u64((1u64 << 61) - 1));
        assert!(!is_prime_u64((1u64 << 61) + 1));
    }
}
