//! Multi-modular number-theoretic transform for exact integer products.
//!
//! Primes have the form `c * 2^32 + 1 < 2^62`, so every transform length up
//! to `2^32` is available. Residues are recombined with Garner's algorithm.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::arith::{is_prime_u64, mul_mod, pow_mod};

/// A prime modulus with Montgomery constants and a root of unity of order
/// `2^32`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Modulus {
    pub p: u64,
    neg_inv: u64,
    r2: u64,
    root: u64,
}

impl Modulus {
    fn new(p: u64) -> Self {
        // Newton iteration for p^-1 mod 2^64.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = mul_mod(r, r, p);
        let g = primitive_root(p);
        let root = pow_mod(g, (p - 1) >> 32, p);
        Self {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
            root,
        }
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline]
    fn to_mont(&self, a: u64) -> u64 {
        self.mul(a, self.r2)
    }

    #[inline]
    fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    /// Reduces a signed 64-bit value.
    pub fn reduce_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.p as i64);
        r as u64
    }

    /// Reduces a big integer.
    pub fn reduce_big(&self, x: &BigInt) -> u64 {
        let m = BigInt::from(self.p);
        let r = ((x % &m) + &m) % &m;
        let (_, digits) = r.to_u64_digits();
        digits.first().copied().unwrap_or(0)
    }

    fn transform(&self, a: &mut [u64], inverse: bool) {
        let n = a.len();
        debug_assert!(n.is_power_of_two() && n as u64 <= 1u64 << 32);
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
        let mut len = 2;
        while len <= n {
            let mut w_len = pow_mod(self.root, (1u64 << 32) / len as u64, self.p);
            if inverse {
                w_len = pow_mod(w_len, self.p - 2, self.p);
            }
            let w_len = self.to_mont(w_len);
            let h = len / 2;
            let mut ws = Vec::with_capacity(h);
            let mut w = self.to_mont(1);
            for _ in 0..h {
                ws.push(w);
                w = self.mul(w, w_len);
            }
            for start in (0..n).step_by(len) {
                for k in 0..h {
                    let u = a[start + k];
                    let v = self.mul(a[start + k + h], ws[k]);
                    a[start + k] = self.add(u, v);
                    a[start + k + h] = self.sub(u, v);
                }
            }
            len <<= 1;
        }
    }

    /// Cyclic convolution of plain residues, truncated to `out_len`.
    pub fn convolve(&self, a: &[u64], b: &[u64], out_len: usize) -> Vec<u64> {
        let a = &a[..a.len().min(out_len)];
        let b = &b[..b.len().min(out_len)];
        if a.is_empty() || b.is_empty() {
            return vec![0; out_len];
        }
        let size = (a.len() + b.len() - 1).next_power_of_two();
        let mut fa = vec![0u64; size];
        let mut fb = vec![0u64; size];
        for (d, &x) in fa.iter_mut().zip(a) {
            *d = self.to_mont(x);
        }
        for (d, &x) in fb.iter_mut().zip(b) {
            *d = self.to_mont(x);
        }
        self.transform(&mut fa, false);
        self.transform(&mut fb, false);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = self.mul(*x, *y);
        }
        self.transform(&mut fa, true);
        let inv_n = self.to_mont(pow_mod(size as u64 % self.p, self.p - 2, self.p));
        let mut out = vec![0u64; out_len];
        for (d, &x) in out.iter_mut().zip(&fa) {
            *d = self.from_mont(self.mul(x, inv_n));
        }
        out
    }
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("a primitive root exists")
}

/// Number of primes precomputed; bounds products to about 1900 bits.
const MAX_PRIMES: usize = 32;

/// Primes `c * 2^32 + 1 < 2^62` in decreasing order.
pub(crate) fn moduli() -> &'static [Modulus] {
    static CELL: OnceLock<Vec<Modulus>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = Vec::with_capacity(MAX_PRIMES);
        let mut c: u64 = (1 << 30) - 1;
        while out.len() < MAX_PRIMES {
            let p = (c << 32) + 1;
            if is_prime_u64(p) {
                out.push(Modulus::new(p));
            }
            c -= 1;
        }
        out
    })
}

/// Number of primes whose product exceeds `2 * 2^bits`.
pub(crate) fn primes_for_bits(bits: u64) -> Option<usize> {
    // Each modulus exceeds 2^61.
    let k = (bits + 2).div_ceil(61) as usize;
    (k <= MAX_PRIMES).then_some(k)
}

/// Recombines residues (one vector per modulus) into signed integers in
/// `(-M/2, M/2]`.
pub(crate) fn garner(residues: &[Vec<u64>], mods: &[Modulus]) -> Vec<BigInt> {
    let k = mods.len();
    let len = residues.first().map_or(0, Vec::len);
    // inv[i][j] = p_j^-1 mod p_i for j < i.
    let inv: Vec<Vec<u64>> = (0..k)
        .map(|i| {
            (0..i)
                .map(|j| pow_mod(mods[j].p % mods[i].p, mods[i].p - 2, mods[i].p))
                .collect()
        })
        .collect();
    let mut modulus = BigInt::from(1u8);
    for m in mods {
        modulus *= m.p;
    }
    let half = &modulus >> 1;
    let recombine = |idx: usize| {
        let mut digits = vec![0u64; k];
        for i in 0..k {
            let p = mods[i].p;
            let mut x = residues[i][idx];
            for j in 0..i {
                let diff = (x + p - digits[j] % p) % p;
                x = mul_mod(diff, inv[i][j], p);
            }
            digits[i] = x;
        }
        let mut acc = BigInt::zero();
        for i in (0..k).rev() {
            acc = acc * mods[i].p + digits[i];
        }
        if acc > half {
            acc -= &modulus;
        }
        acc
    };
    crate::par::map_indices(len, recombine)
}

/// Exact truncated product of two integer sequences given as residue
/// generators, with an upper bound `2^bits` on every output magnitude.
pub(crate) fn product_exact<FA, FB>(a_mod: FA, b_mod: FB, out_len: usize, bits: u64) -> Option<Vec<BigInt>>
where
    FA: Fn(&Modulus) -> Vec<u64> + Sync,
    FB: Fn(&Modulus) -> Vec<u64> + Sync,
{
    let k = primes_for_bits(bits)?;
    let mods = &moduli()[..k];
    let residues: Vec<Vec<u64>> = mods.iter().map(|m| m.convolve(&a_mod(m), &b_mod(m), out_len)).collect();
    Some(garner(&residues, mods))
}

/// `log2` upper bound of `max_i |x_i|`.
pub(crate) fn max_bits(xs: &[BigInt]) -> u64 {
    xs.iter().map(|x| x.abs().bits()).max().unwrap_or(0)
}
