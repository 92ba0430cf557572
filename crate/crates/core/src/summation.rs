//! Compensated summation and a deterministic chunked reduction.
//!
//! [`Neumaier`] keeps a running compensation term so the error of a long sum
//! stays near one rounding of the result instead of growing with the number
//! of terms. [`chunked_sum`] splits an index range into fixed-size chunks,
//! sums each chunk with its own accumulator (in parallel when enabled) and
//! merges the chunk results in index order. The chunk size, not the thread
//! count, fixes the rounding, so results are reproducible bit for bit.

use num_complex::Complex64;
use serde::Serialize;

use crate::par;

/// Chunk size used by every reduction in the crate unless a caller overrides it.
pub const DEFAULT_CHUNK: usize = 1 << 16;

/// Neumaier (improved Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Rounded total.
    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }

    /// The unrounded pair: `total ~= hi + lo` to roughly twice working precision.
    pub fn parts(&self) -> (f64, f64) {
        let hi = self.sum + self.comp;
        let lo = self.comp - (hi - self.sum);
        (hi, lo)
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Componentwise Neumaier accumulator for complex terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexNeumaier {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexNeumaier {
    pub const fn new() -> Self {
        Self {
            re: Neumaier::new(),
            im: Neumaier::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }

    pub fn merge(&mut self, other: &ComplexNeumaier) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }
}

impl FromIterator<Complex64> for ComplexNeumaier {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = ComplexNeumaier::new();
        for z in iter {
            acc.add(z);
        }
        acc
    }
}

/// Reduction metadata reported alongside chunked sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReductionInfo {
    pub chunk_size: usize,
    pub chunks: usize,
    pub compensated: bool,
}

/// Sums `term(i)` for `i in range` with per-chunk compensation, merging
/// chunk results in ascending order.
pub fn chunked_sum<F>(range: std::ops::Range<usize>, chunk: usize, term: F) -> (f64, ReductionInfo)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let start = range.start;
    let ranges = par::chunk_ranges(range.len(), chunk);
    let partials = par::map_slice(&ranges, |r| {
        (r.start + start..r.end + start).map(&term).collect::<Neumaier>()
    });
    let mut acc = Neumaier::new();
    for p in &partials {
        acc.merge(p);
    }
    let info = ReductionInfo {
        chunk_size: chunk.max(1),
        chunks: ranges.len(),
        compensated: true,
    };
    (acc.total(), info)
}

/// Complex counterpart of [`chunked_sum`].
pub fn chunked_sum_complex<F>(range: std::ops::Range<usize>, chunk: usize, term: F) -> (Complex64, ReductionInfo)
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    let start = range.start;
    let ranges = par::chunk_ranges(range.len(), chunk);
    let partials = par::map_slice(&ranges, |r| {
        (r.start + start..r.end + start).map(&term).collect::<ComplexNeumaier>()
    });
    let mut acc = ComplexNeumaier::new();
    for p in &partials {
        acc.merge(p);
    }
    let info = ReductionInfo {
        chunk_size: chunk.max(1),
        chunks: ranges.len(),
        compensated: true,
    };
    (acc.total(), info)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = xs.iter().sum();
        let comp: Neumaier = xs.iter().copied().collect();
        assert_eq!(naive, 0.0);
        assert_eq!(comp.total(), 2.0);
    }

    #[test]
    fn chunked_sum_is_independent_of_thread_layout() {
        let term = |i: usize| ((i as f64) * 0.37).sin() * 1e3 / (1.0 + i as f64);
        let (a, info) = chunked_sum(0..200_000, 1 << 12, term);
        let (b, _) = chunked_sum(0..200_000, 1 << 12, term);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(info.chunks, 49);
        let serial: Neumaier = (0..200_000).map(term).collect();
        assert!((a - serial.total()).abs() <= 1e-12 * serial.total().abs().max(1.0));
    }

    #[test]
    fn chunked_sum_offset_range() {
        let (s, _) = chunked_sum(10..20, 3, |i| i as f64);
        assert_eq!(s, (10..20).sum::<usize>() as f64);
    }

    #[test]
    fn complex_accumulator() {
        let acc: ComplexNeumaier = (0..10).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        assert_eq!(acc.total(), Complex64::new(45.0, -45.0));
    }
}
