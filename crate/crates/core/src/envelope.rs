//! Mean-square envelopes and tail bounds for truncated series.
//!
//! Tails of the Dirichlet series in this crate are bounded by extrapolating
//! a mean value beyond the computed range. For a nonnegative sequence
//! `v(n)` (typically `|a(n)|^2 / n^(k-1)` or `|S(n)|^2 / n^(k-1/2)`, both of
//! which have linear mean growth) the envelope is
//!
//! ```text
//! sum_{n <= x} v(n) <= B x   for all x >= sqrt(N),
//! ```
//!
//! with `B` the largest ratio observed on `[sqrt(N), N]`. Partial summation
//! then bounds any tail `sum_{n > N} v(n) g(n)` with `g` decreasing. The
//! linear growth is a theorem but `B` is empirical, so bounds derived here
//! are reported as [`BoundKind::HeuristicEnvelope`].

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// No truncation: the value is a finite computation.
    Exact,
    /// Extrapolated with an empirically calibrated envelope.
    HeuristicEnvelope,
    /// Quadrature estimate (step halving plus decay tail).
    Quadrature,
}

impl BoundKind {
    /// The weaker of two kinds.
    pub fn combine(self, other: Self) -> Self {
        use BoundKind::*;
        match (self, other) {
            (Quadrature, _) | (_, Quadrature) => Quadrature,
            (HeuristicEnvelope, _) | (_, HeuristicEnvelope) => HeuristicEnvelope,
            _ => Exact,
        }
    }
}

/// `sum_{n <= x} v(n) <= constant * x` beyond the calibration start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSquareEnvelope {
    pub constant: f64,
    pub calibrated_from: usize,
    pub calibrated_to: usize,
}

impl MeanSquareEnvelope {
    /// Calibrates from `v[1..=N]` (index 0 ignored).
    pub fn calibrate(v: &[f64]) -> Self {
        let n = v.len().saturating_sub(1);
        let from = ((n as f64).sqrt().ceil() as usize).max(1);
        let mut acc = crate::summation::Neumaier::new();
        let mut constant = 0.0f64;
        for (i, &x) in v.iter().enumerate().skip(1) {
            acc.add(x);
            if i >= from {
                constant = constant.max(acc.total() / i as f64);
            }
        }
        Self {
            constant,
            calibrated_from: from,
            calibrated_to: n,
        }
    }

    /// `sum_{m > n} v(m) m^-p <= B p n^(1-p) / (p-1)` for `p > 1`.
    pub fn power_tail(&self, n: usize, p: f64) -> f64 {
        if self.constant == 0.0 {
            return 0.0;
        }
        if p <= 1.0 {
            return f64::INFINITY;
        }
        let n = (n as f64).max(1.0);
        self.constant * p * n.powf(1.0 - p) / (p - 1.0)
    }

    /// `sum_{m > n} v(m) m^a e^(-m/x) <= B (n^(a+1) e^(-n/x) + x^(a+1) Γ(a+1, n/x))`,
    /// valid when `n > a x` so that the weight decreases.
    pub fn exp_tail(&self, n: usize, a: f64, x: f64) -> f64 {
        if self.constant == 0.0 {
            return 0.0;
        }
        let nf = n as f64;
        if nf <= a * x {
            return f64::INFINITY;
        }
        let head = (nf.ln() * (a + 1.0) - nf / x).exp();
        let gamma = (x.ln() * (a + 1.0)).exp() * upper_gamma_bound(a + 1.0, nf / x);
        self.constant * (head + gamma)
    }
}

/// `sum_{m > n} m^-p <= n^(1-p) / (p-1)`; infinite for `p <= 1`.
pub fn power_tail(n: usize, p: f64) -> f64 {
    if p <= 1.0 {
        return f64::INFINITY;
    }
    let n = (n as f64).max(1.0);
    n.powf(1.0 - p) / (p - 1.0)
}

/// `sum_{m > n} m^-p (1 + ln m)`, bounded by the integral from `n`.
pub fn power_log_tail(n: usize, p: f64) -> f64 {
    if p <= 1.0 {
        return f64::INFINITY;
    }
    let nf = (n as f64).max(1.0);
    let q = p - 1.0;
    nf.powf(-q) * ((1.0 + nf.ln()) / q + 1.0 / (q * q))
}

/// Upper bound on the upper incomplete gamma function `Γ(a, x)` for `x > a - 1`.
pub fn upper_gamma_bound(a: f64, x: f64) -> f64 {
    let lead = x.powf(a - 1.0) * (-x).exp();
    if a <= 1.0 {
        return lead;
    }
    let q = 1.0 - (a - 1.0) / x;
    if q <= 0.0 {
        f64::INFINITY
    } else {
        lead / q
    }
}

/// `sum_{h=1}^{n-1} h^-u` bounded above by an elementary expression.
pub fn harmonic_bound(n: f64, u: f64) -> f64 {
    if u > 1.0 {
        1.0 + 1.0 / (u - 1.0)
    } else if u == 1.0 {
        1.0 + n.max(1.0).ln()
    } else if u > 0.0 {
        1.0 + (n.powf(1.0 - u) - 1.0) / (1.0 - u)
    } else {
        n.powf(1.0 - u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_tail_bounds_direct_sum() {
        for &(n, p) in &[(10usize, 1.5), (100, 2.0), (1000, 3.3)] {
            let direct: f64 = (n + 1..2_000_000).map(|m| (m as f64).powf(-p)).sum();
            assert!(direct <= power_tail(n, p));
            let direct_log: f64 = (n + 1..2_000_000)
                .map(|m| (m as f64).powf(-p) * (1.0 + (m as f64).ln()))
                .sum();
            assert!(direct_log <= power_log_tail(n, p));
        }
        assert!(power_tail(10, 1.0).is_infinite());
    }

    #[test]
    fn upper_gamma_bound_dominates_quadrature() {
        // Γ(5/3, 30) by a fine trapezoid on [30, 80].
        let (a, x) = (5.0 / 3.0, 30.0);
        let h = 1e-4;
        let f = |t: f64| t.powf(a - 1.0) * (-t).exp();
        let steps = ((80.0 - x) / h) as usize;
        let mut q = 0.5 * (f(x) + f(80.0));
        for i in 1..steps {
            q += f(x + i as f64 * h);
        }
        q *= h;
        let b = upper_gamma_bound(a, x);
        assert!(b >= q && b < 1.05 * q, "{b} vs {q}");
    }

    #[test]
    fn harmonic_bound_dominates() {
        for &u in &[-1.0, 0.0, 0.5, 1.0, 2.0] {
            for n in [2usize, 10, 1000] {
                let s: f64 = (1..n).map(|h| (h as f64).powf(-u)).sum();
                assert!(s <= harmonic_bound(n as f64, u) + 1e-12, "u={u} n={n}");
            }
        }
    }

    #[test]
    fn mean_square_tail_bounds_linear_sequence() {
        // v(n) = 1 gives sum_{m > n} m^-2 <= 2/n.
        let v = vec![1.0; 1001];
        let env = MeanSquareEnvelope::calibrate(&v);
        assert!((env.constant - 1.0).abs() < 1e-15);
        let direct: f64 = (1001..2_000_000).map(|m| (m as f64).powi(-2)).sum();
        assert!(direct <= env.power_tail(1000, 2.0));
        let x = 100.0;
        let direct: f64 = (1001..20_000)
            .map(|m| (m as f64).sqrt() * (-(m as f64) / x).exp())
            .sum();
        let b = env.exp_tail(1000, 0.5, x);
        assert!(direct <= b && b < 1e3 * direct, "{direct} {b}");
        assert_eq!(MeanSquareEnvelope::calibrate(&[0.0; 10]).power_tail(3, 2.0), 0.0);
    }
}
