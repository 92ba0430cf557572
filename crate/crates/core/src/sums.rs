//! Partial sums `S_f(n)`, the pointwise statistic and the sharp-cutoff mean square.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use serde::Serialize;

use crate::envelope::{BoundKind, MeanSquareEnvelope};
use crate::qseries::{QExpansion, Roundoff};
use crate::summation::{chunked_sum, Neumaier, ReductionInfo, DEFAULT_CHUNK};
use crate::{Error, Result};

/// Prefix sums `S(0..=N)` with `S(0) = 0`.
///
/// `values[n] + residuals[n]` carries `S(n)` to roughly twice the working
/// precision: exact inputs are summed exactly and rounded once (the residual
/// is the rounding error), float inputs use Neumaier summation (the
/// residual is the running compensation).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumSeries {
    form_id: String,
    weight: u32,
    values: Vec<f64>,
    residuals: Vec<f64>,
    input_roundoff: Roundoff,
}

pub fn partial_sums(f: &QExpansion) -> PartialSumSeries {
    let n = f.n_max();
    let mut values = vec![0.0; n + 1];
    let mut residuals = vec![0.0; n + 1];
    match f.exact() {
        Some(a) => {
            let mut acc = BigInt::zero();
            for i in 1..=n {
                acc += &a[i];
                let v = acc.to_f64().unwrap_or(f64::NAN);
                values[i] = v;
                residuals[i] = BigInt::from_f64(v)
                    .map(|r| (&acc - r).to_f64().unwrap_or(0.0))
                    .unwrap_or(0.0);
            }
        }
        None => {
            let a = f.float_coeffs();
            let mut acc = Neumaier::new();
            for i in 1..=n {
                acc.add(a[i]);
                let (hi, lo) = acc.parts();
                let v = hi + lo;
                values[i] = v;
                residuals[i] = (hi - v) + lo;
            }
        }
    }
    PartialSumSeries {
        form_id: f.form_id().to_string(),
        weight: f.weight(),
        values,
        residuals,
        input_roundoff: f.roundoff(),
    }
}

impl PartialSumSeries {
    pub fn form_id(&self) -> &str {
        &self.form_id
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `S(0..=N)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn input_roundoff(&self) -> Roundoff {
        self.input_roundoff
    }

    /// `S(n)` for `1 <= n <= N`.
    pub fn get(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.n_max() {
            return Err(Error::OutOfRange {
                index: n,
                max: self.n_max(),
            });
        }
        Ok(self.values[n])
    }

    /// Envelope for `|S(n)|^2 / n^(k - 1/2)`, whose mean is bounded.
    pub fn mean_square_envelope(&self) -> MeanSquareEnvelope {
        let p = self.weight as f64 - 0.5;
        let v: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(n, s)| if n == 0 { 0.0 } else { s * s * (n as f64).powf(-p) })
            .collect();
        MeanSquareEnvelope::calibrate(&v)
    }
}

/// `|S(X)| X^(-(k-1)/2 - 1/4)`.
pub fn classical_statistic(s: &PartialSumSeries, x: usize) -> Result<f64> {
    let v = s.get(x)?;
    let e = (s.weight as f64 - 1.0) / 2.0 + 0.25;
    Ok(v.abs() * (x as f64).powf(-e))
}

/// Context for reports: the pointwise Ω-results are not testable at fixed scale.
pub const OMEGA_CONTEXT: &str =
    "S_f(X) is not O(X^{(k-1)/2 + 1/4 - eps}) in general; no finite computation can confirm or refute this";

/// The constant `C = (1/((4k+2) pi^2)) sum |a(n)|^2 n^(-k-1/2)` of the
/// sharp-cutoff mean square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpConstant {
    pub value: f64,
    /// The same quantity as `(1/(2k+1)) (1/(2 pi^2)) sum ...`.
    pub rearranged: f64,
    pub series: f64,
    /// Absolute bound on `|C - value|` from the series tail.
    pub tail_bound: f64,
    pub relative_tail: f64,
    pub n_used: usize,
    pub bound_kind: BoundKind,
    pub envelope: MeanSquareEnvelope,
}

pub fn sharp_constant(f: &QExpansion, n: usize) -> Result<SharpConstant> {
    if n == 0 || n > f.n_max() {
        return Err(Error::InsufficientCoefficients {
            needed: n,
            available: f.n_max(),
        });
    }
    let k = f.weight() as f64;
    let a = f.float_coeffs();
    let lambda2: Vec<f64> = (0..=n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                a[i] * a[i] * (i as f64).powf(1.0 - k)
            }
        })
        .collect();
    let (series, _) = chunked_sum(1..n + 1, DEFAULT_CHUNK, |i| lambda2[i] * (i as f64).powf(-1.5));
    let envelope = MeanSquareEnvelope::calibrate(&lambda2);
    let norm = 1.0 / ((4.0 * k + 2.0) * PI * PI);
    let value = norm * series;
    let tail_bound = norm * envelope.power_tail(n, 1.5);
    Ok(SharpConstant {
        value,
        rearranged: (1.0 / (2.0 * k + 1.0)) * (1.0 / (2.0 * PI * PI)) * series,
        series,
        tail_bound,
        relative_tail: if value != 0.0 { tail_bound / value.abs() } else { 0.0 },
        n_used: n,
        bound_kind: BoundKind::HeuristicEnvelope,
        envelope,
    })
}

/// `sum_{n <= X} |S(n)|^2` against `C X^(k+1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageReport {
    pub x: usize,
    pub lhs: f64,
    pub main: f64,
    pub ratio: f64,
    pub constant: f64,
    pub reduction: ReductionInfo,
    pub context: &'static str,
}

pub fn sharp_average(s: &PartialSumSeries, x: usize, constant: f64) -> Result<AverageReport> {
    if x == 0 || x > s.n_max() {
        return Err(Error::OutOfRange {
            index: x,
            max: s.n_max(),
        });
    }
    let v = &s.values;
    let (lhs, reduction) = chunked_sum(1..x + 1, DEFAULT_CHUNK, |n| v[n] * v[n]);
    let main = constant * (x as f64).powf(s.weight as f64 + 0.5);
    Ok(AverageReport {
        x,
        lhs,
        main,
        ratio: lhs / main,
        constant,
        reduction,
        context: OMEGA_CONTEXT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::delta_qexp;

    #[test]
    fn small_partial_sums() {
        let d = delta_qexp(100, true).unwrap();
        let s = partial_sums(&d);
        assert_eq!(s.get(1).unwrap(), 1.0);
        assert_eq!(s.get(2).unwrap(), -23.0);
        assert_eq!(s.get(3).unwrap(), 229.0);
        assert!(s.get(0).is_err() && s.get(101).is_err());
        let f = partial_sums(&d.clone().into_float());
        assert_eq!(f.values(), s.values());
    }

    #[test]
    fn classical_statistic_values() {
        let s = partial_sums(&delta_qexp(10, true).unwrap());
        assert_eq!(classical_statistic(&s, 1).unwrap(), 1.0);
        let want = 23.0 * 2f64.powf(-5.75);
        assert!((classical_statistic(&s, 2).unwrap() - want).abs() < 1e-15 * want);
        assert!(matches!(classical_statistic(&s, 11), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn telescoping_recovers_coefficients() {
        let d = delta_qexp(5000, false).unwrap();
        let s = partial_sums(&d);
        let a = d.float_coeffs();
        for n in 1..=5000 {
            let diff = s.values()[n] - s.values()[n - 1];
            let scale = s.values()[n].abs().max(s.values()[n - 1].abs());
            assert!((diff - a[n]).abs() <= 2.0 * f64::EPSILON * scale, "{n}");
        }
    }

    #[test]
    fn sharp_constant_rearrangement_and_scaling() {
        let d = delta_qexp(2000, false).unwrap();
        let c = sharp_constant(&d, 2000).unwrap();
        assert!(c.value > 0.0 && c.tail_bound.is_finite() && c.tail_bound > 0.0);
        assert!((c.value - c.rearranged).abs() <= 1e-12 * c.value);
        let c2 = sharp_constant(&d.scaled(2), 2000).unwrap();
        assert!((c2.value - 4.0 * c.value).abs() <= 1e-14 * c2.value);
    }
}
