//! Dirichlet series of cusp-form coefficients, evaluated by direct summation
//! inside their regions of absolute convergence.
//!
//! With `β = s + k - 1`:
//!
//! ```text
//! L(s, f x g)  = ζ(2s) sum a(n) b(n) n^-β
//! D(s; h)      = sum_n [a(n) b(n-h) + a(n-h) b(n)] n^-β        (a(m) = 0 for m <= 0)
//! Z(s, w)      = sum_{h >= 1} D(s; h) h^-w
//! W(s)         = L(s, f x g) / ζ(2s) + Z(s, 0)
//! D(s, S_f S_g) = sum S_f(n) S_g(n) n^-β
//! ```
//!
//! Level-1 eigenforms have real (integer) coefficients, so complex
//! conjugation of `b(n)` or `S_g(n)` is the identity and the conjugated and
//! unconjugated conventions coincide.
//!
//! Tail bounds use [`MeanSquareEnvelope`]s of `a(n)^2 / n^(k-1)` and
//! `S(n)^2 / n^(k-1/2)` together with `|xy| <= (x^2 + y^2)/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::complexfn::{gamma_real, zeta, zeta_real};
use crate::envelope::{BoundKind, MeanSquareEnvelope};
use crate::qseries::QExpansion;
use crate::summation::{chunked_sum, chunked_sum_complex, ComplexNeumaier, DEFAULT_CHUNK};
use crate::sums::PartialSumSeries;
use crate::{par, Error, Result};

/// Smallest real part accepted by the shifted sums, `Z`, `W` and `D`.
pub const POLICY_ABSCISSA: f64 = 2.5;

/// A truncated series value with an absolute bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub truncation_bound: f64,
    pub n_used: usize,
    pub bound_kind: BoundKind,
}

/// `sum_{n=1}^{N} c(n) n^-(s + shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPolynomial {
    coeffs: Vec<f64>,
    shift: f64,
}

/// Nodes evaluated from one exact anchor in [`DirichletPolynomial::eval_line`].
const LINE_BLOCK: usize = 32;

impl DirichletPolynomial {
    /// `coeffs[0]` is ignored.
    pub fn new(coeffs: Vec<f64>, shift: f64) -> Self {
        Self { coeffs, shift }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at `s`, by compensated chunked summation.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let beta = s + self.shift;
        let c = &self.coeffs;
        chunked_sum_complex(1..c.len(), DEFAULT_CHUNK, |n| {
            if c[n] == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c[n] * (-beta * (n as f64).ln()).exp()
            }
        })
        .0
    }

    /// Values at `sigma + i (t0 + j dt)` for `j < count`.
    ///
    /// Each block of nodes starts from exact powers and advances the phase of
    /// every `n^-it` by multiplication; sums run in ascending `n` per node, so
    /// the result does not depend on the thread layout.
    pub fn eval_line(&self, sigma: f64, t0: f64, dt: f64, count: usize) -> Vec<Complex64> {
        let blocks = count.div_ceil(LINE_BLOCK);
        let sig = sigma + self.shift;
        let c = &self.coeffs;
        let out = par::map_indices(blocks, |b| {
            let j0 = b * LINE_BLOCK;
            let m = LINE_BLOCK.min(count - j0);
            let t_start = t0 + j0 as f64 * dt;
            let mut acc = vec![ComplexNeumaier::new(); m];
            for (n, &cn) in c.iter().enumerate().skip(1) {
                if cn == 0.0 {
                    continue;
                }
                let ln = (n as f64).ln();
                let mag = cn * (-sig * ln).exp();
                let mut cur = Complex64::from_polar(mag, -t_start * ln);
                let rot = Complex64::from_polar(1.0, -dt * ln);
                for a in acc.iter_mut() {
                    a.add(cur);
                    cur *= rot;
                }
            }
            acc.iter().map(|a| a.total()).collect::<Vec<_>>()
        });
        out.into_iter().flatten().collect()
    }
}

fn check_policy(op: &'static str, s: Complex64, min: f64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::NonFinite(op));
    }
    if s.re < min {
        return Err(Error::domain(
            op,
            format!("Re s = {} below the absolute-convergence policy {min}", s.re),
        ));
    }
    Ok(())
}

/// Coefficients and envelopes of a pair of same-weight forms truncated at `N`.
struct Pair {
    a: Vec<f64>,
    b: Vec<f64>,
    k: f64,
    n: usize,
    env_a: MeanSquareEnvelope,
    env_b: MeanSquareEnvelope,
}

fn lambda_envelope(a: &[f64], k: f64) -> MeanSquareEnvelope {
    let v: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, x)| if i == 0 { 0.0 } else { x * x * (i as f64).powf(1.0 - k) })
        .collect();
    MeanSquareEnvelope::calibrate(&v)
}

impl Pair {
    fn new(f: &QExpansion, g: &QExpansion, n: usize) -> Result<Self> {
        if f.weight() != g.weight() {
            return Err(Error::WeightMismatch(f.weight(), g.weight()));
        }
        let available = f.n_max().min(g.n_max());
        if n == 0 || n > available {
            return Err(Error::InsufficientCoefficients { needed: n, available });
        }
        let k = f.weight() as f64;
        let mut a = f.float_coeffs()[..=n].to_vec();
        let mut b = g.float_coeffs()[..=n].to_vec();
        // Constant terms never enter these series.
        a[0] = 0.0;
        b[0] = 0.0;
        let env_a = lambda_envelope(&a, k);
        let env_b = lambda_envelope(&b, k);
        Ok(Self {
            a,
            b,
            k,
            n,
            env_a,
            env_b,
        })
    }

    /// Bound on `sum_{n > N} |a(n) b(n)| n^-(sigma + k - 1)`.
    fn diagonal_tail(&self, sigma: f64) -> f64 {
        0.5 * (self.env_a.power_tail(self.n, sigma) + self.env_b.power_tail(self.n, sigma))
    }

    /// Bound on the `n > N` part of `Z(s, w)` with `Re s = sigma`, `Re w = u`.
    fn z_tail(&self, sigma: f64, u: f64) -> f64 {
        let p = sigma - 1.0 - (-u).max(0.0);
        if p <= 1.0 {
            return f64::INFINITY;
        }
        let b = self.env_a.constant + self.env_b.constant;
        if b == 0.0 {
            return 0.0;
        }
        0.5 * b * (p + 1.0) * (self.n as f64).powf(1.0 - p) / (p - 1.0)
    }

    fn diagonal(&self, s: Complex64) -> Complex64 {
        let beta = s + (self.k - 1.0);
        let (a, b) = (&self.a, &self.b);
        chunked_sum_complex(1..self.n + 1, DEFAULT_CHUNK, |n| {
            let c = a[n] * b[n];
            if c == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c * (-beta * (n as f64).ln()).exp()
            }
        })
        .0
    }

    /// `c(n) = a(n) S_b(n-1) + S_a(n-1) b(n)`, the coefficients of `Z(s, 0)`.
    fn off_diagonal_coeffs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        let mut sa = crate::summation::Neumaier::new();
        let mut sb = crate::summation::Neumaier::new();
        for n in 1..=self.n {
            out[n] = self.a[n] * sb.total() + sa.total() * self.b[n];
            sa.add(self.a[n]);
            sb.add(self.b[n]);
        }
        out
    }

    fn envelope_kind(&self) -> BoundKind {
        if self.env_a.constant == 0.0 || self.env_b.constant == 0.0 {
            BoundKind::Exact
        } else {
            BoundKind::HeuristicEnvelope
        }
    }
}

/// `L(s, f x g) = ζ(2s) sum_{n <= N} a(n) b(n) n^-(s+k-1)` for `Re s > 1`.
pub fn rankin_l(s: Complex64, f: &QExpansion, g: &QExpansion, n: usize) -> Result<SeriesValue> {
    if !(s.re > 1.0) {
        return Err(Error::domain("rankin_l", format!("need Re s > 1, got {}", s.re)));
    }
    let p = Pair::new(f, g, n)?;
    let z2 = zeta(s * 2.0)?;
    Ok(SeriesValue {
        value: z2 * p.diagonal(s),
        truncation_bound: zeta_real(2.0 * s.re)? * p.diagonal_tail(s.re),
        n_used: n,
        bound_kind: p.envelope_kind(),
    })
}

/// The main-term constant computed by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantPair {
    /// `Γ(3/2)/(4 pi^2) sum a(n) b(n) n^-(k+1/2)`.
    pub c_direct: f64,
    /// `Γ(3/2) L(3/2, f x g) / (4 pi^2 ζ(3))`.
    pub c_lfun: f64,
    pub discrepancy: f64,
    /// Tail bound shared by both routes.
    pub truncation_bound: f64,
    /// `(k - 1/2)/(4 pi^2) L(3/2, f x g)/ζ(3)`, the residue of `W` at `s = 1/2`;
    /// equals `c_lfun (k - 1/2)/Γ(3/2)`.
    pub w_residue: f64,
    pub n_used: usize,
    pub conjugated: bool,
    pub bound_kind: BoundKind,
}

/// Both forms of the main-term constant, from `N >= 1000` coefficients.
pub fn constant_c(f: &QExpansion, g: &QExpansion, n: usize, conjugated: bool) -> Result<ConstantPair> {
    if n < 1000 {
        return Err(Error::domain("constant_c", "need N >= 1000"));
    }
    let p = Pair::new(f, g, n)?;
    let norm = gamma_real(1.5)? / (4.0 * PI * PI);
    let e = -(p.k + 0.5);
    let (a, b) = (&p.a, &p.b);
    let (series, _) = chunked_sum(1..n + 1, DEFAULT_CHUNK, |i| a[i] * b[i] * (i as f64).powf(e));
    let c_direct = norm * series;
    let l = rankin_l(Complex64::new(1.5, 0.0), f, g, n)?;
    let z3 = zeta_real(3.0)?;
    let c_lfun = norm * l.value.re / z3;
    Ok(ConstantPair {
        c_direct,
        c_lfun,
        discrepancy: (c_direct - c_lfun).abs(),
        truncation_bound: norm * p.diagonal_tail(1.5),
        w_residue: (p.k - 0.5) / (4.0 * PI * PI) * l.value.re / z3,
        n_used: n,
        conjugated,
        bound_kind: p.envelope_kind(),
    })
}

/// `D(s; h) = sum_{n <= N} [a(n) b(n-h) + a(n-h) b(n)] n^-(s+k-1)`.
pub fn shifted_d(s: Complex64, h: usize, f: &QExpansion, g: &QExpansion, n: usize) -> Result<SeriesValue> {
    check_policy("shifted_d", s, POLICY_ABSCISSA)?;
    if h == 0 {
        return Err(Error::domain("shifted_d", "shift h must be >= 1"));
    }
    let p = Pair::new(f, g, n)?;
    if h >= n {
        return Ok(SeriesValue {
            value: Complex64::new(0.0, 0.0),
            truncation_bound: shifted_tail(&p, s.re, h),
            n_used: n,
            bound_kind: p.envelope_kind(),
        });
    }
    let beta = s + (p.k - 1.0);
    let (a, b) = (&p.a, &p.b);
    let (value, _) = chunked_sum_complex(h + 1..n + 1, DEFAULT_CHUNK, |m| {
        let c = a[m] * b[m - h] + a[m - h] * b[m];
        if c == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            c * (-beta * (m as f64).ln()).exp()
        }
    });
    Ok(SeriesValue {
        value,
        truncation_bound: shifted_tail(&p, s.re, h),
        n_used: n,
        bound_kind: p.envelope_kind(),
    })
}

fn shifted_tail(p: &Pair, sigma: f64, h: usize) -> f64 {
    let m = p.n.saturating_sub(h).max(1);
    p.env_a.power_tail(m, sigma) + p.env_b.power_tail(m, sigma)
}

fn check_z(s: Complex64, w: Complex64) -> Result<()> {
    check_policy("z_sum", s, POLICY_ABSCISSA)?;
    check_policy("z_sum", s + w, POLICY_ABSCISSA)
}

/// `Z(s, w)` over `n <= N` (all `h < n`).
///
/// For `w = 0` this sums `a(n) S_b(n-1) + S_a(n-1) b(n)` in `O(N)`;
/// otherwise it calls [`z_sum_double`].
pub fn z_sum(s: Complex64, w: Complex64, f: &QExpansion, g: &QExpansion, n: usize) -> Result<SeriesValue> {
    check_z(s, w)?;
    if w != Complex64::new(0.0, 0.0) {
        return z_sum_double(s, w, f, g, n);
    }
    let p = Pair::new(f, g, n)?;
    let c = p.off_diagonal_coeffs();
    let value = DirichletPolynomial::new(c, p.k - 1.0).eval(s);
    Ok(SeriesValue {
        value,
        truncation_bound: p.z_tail(s.re, 0.0),
        n_used: n,
        bound_kind: p.envelope_kind(),
    })
}

/// `Z(s, w)` as the double sum over shifts `h` (outer, ascending) and `n`
/// (inner, ascending), with compensated accumulation. `O(N^2)`.
pub fn z_sum_double(s: Complex64, w: Complex64, f: &QExpansion, g: &QExpansion, n: usize) -> Result<SeriesValue> {
    check_z(s, w)?;
    let p = Pair::new(f, g, n)?;
    let beta = s + (p.k - 1.0);
    let npow: Vec<Complex64> = (0..=n)
        .map(|m| {
            if m == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                (-beta * (m as f64).ln()).exp()
            }
        })
        .collect();
    let (a, b) = (&p.a, &p.b);
    let stripes = par::map_indices(n.saturating_sub(1), |i| {
        let h = i + 1;
        let mut acc = ComplexNeumaier::new();
        for m in h + 1..=n {
            let c = a[m] * b[m - h] + a[m - h] * b[m];
            if c != 0.0 {
                acc.add(c * npow[m]);
            }
        }
        acc.total() * (-w * (h as f64).ln()).exp()
    });
    let value = stripes.into_iter().collect::<ComplexNeumaier>().total();
    Ok(SeriesValue {
        value,
        truncation_bound: p.z_tail(s.re, w.re),
        n_used: n,
        bound_kind: p.envelope_kind(),
    })
}

/// Coefficients `c(n) = a(n) b(n) + a(n) S_b(n-1) + S_a(n-1) b(n)` of
/// `W(s) = sum c(n) n^-(s+k-1)`, with the tail bound as a function of `Re s`.
pub struct WSeries {
    pub poly: DirichletPolynomial,
    pair_tail: (MeanSquareEnvelope, MeanSquareEnvelope, usize),
    pub bound_kind: BoundKind,
}

impl WSeries {
    pub fn new(f: &QExpansion, g: &QExpansion, n: usize) -> Result<Self> {
        let p = Pair::new(f, g, n)?;
        let mut c = p.off_diagonal_coeffs();
        for (m, x) in c.iter_mut().enumerate().skip(1) {
            *x += p.a[m] * p.b[m];
        }
        Ok(Self {
            poly: DirichletPolynomial::new(c, p.k - 1.0),
            pair_tail: (p.env_a, p.env_b, n),
            bound_kind: p.envelope_kind(),
        })
    }

    /// Bound on the omitted `n > N` part at `Re s = sigma`.
    pub fn tail(&self, sigma: f64) -> f64 {
        let (ea, eb, n) = self.pair_tail;
        let diag = 0.5 * (ea.power_tail(n, sigma) + eb.power_tail(n, sigma));
        let p = sigma - 1.0;
        let b = ea.constant + eb.constant;
        let off = if b == 0.0 {
            0.0
        } else if p <= 1.0 {
            f64::INFINITY
        } else {
            0.5 * b * (p + 1.0) * (n as f64).powf(1.0 - p) / (p - 1.0)
        };
        diag + off
    }
}

/// `W(s; f, g) = L(s, f x g)/ζ(2s) + Z(s, 0)`.
pub fn w_eval(s: Complex64, f: &QExpansion, g: &QExpansion, n: usize) -> Result<SeriesValue> {
    check_policy("w_eval", s, POLICY_ABSCISSA)?;
    let p = Pair::new(f, g, n)?;
    let diag = p.diagonal(s);
    let z = z_sum(s, Complex64::new(0.0, 0.0), f, g, n)?;
    Ok(SeriesValue {
        value: diag + z.value,
        truncation_bound: p.diagonal_tail(s.re) + z.truncation_bound,
        n_used: n,
        bound_kind: p.envelope_kind(),
    })
}

/// Coefficients `S_f(n) S_g(n)` of `D(s, S_f x S_g)`, truncated at the
/// shorter series, with the tail envelopes.
pub struct DSeries {
    pub poly: DirichletPolynomial,
    env: (MeanSquareEnvelope, MeanSquareEnvelope, usize),
    pub bound_kind: BoundKind,
}

impl DSeries {
    pub fn new(sf: &PartialSumSeries, sg: &PartialSumSeries) -> Result<Self> {
        if sf.weight() != sg.weight() {
            return Err(Error::WeightMismatch(sf.weight(), sg.weight()));
        }
        let n = sf.n_max().min(sg.n_max());
        let (x, y) = (sf.values(), sg.values());
        let c: Vec<f64> = (0..=n).map(|i| x[i] * y[i]).collect();
        let env_f = sf.mean_square_envelope();
        let env_g = sg.mean_square_envelope();
        let kind = if env_f.constant == 0.0 || env_g.constant == 0.0 {
            BoundKind::Exact
        } else {
            BoundKind::HeuristicEnvelope
        };
        Ok(Self {
            poly: DirichletPolynomial::new(c, sf.weight() as f64 - 1.0),
            env: (env_f, env_g, n),
            bound_kind: kind,
        })
    }

    /// Bound on the omitted `n > N` part at `Re s = sigma`.
    pub fn tail(&self, sigma: f64) -> f64 {
        let (ef, eg, n) = self.env;
        0.5 * (ef.power_tail(n, sigma - 0.5) + eg.power_tail(n, sigma - 0.5))
    }
}

/// `D(s, S_f x S_g) = sum_{n <= N} S_f(n) S_g(n) n^-(s+k-1)`.
pub fn d_series(s: Complex64, sf: &PartialSumSeries, sg: &PartialSumSeries, conjugated: bool) -> Result<SeriesValue> {
    // Real coefficients: the conjugated and plain products coincide.
    let _ = conjugated;
    check_policy("d_series", s, POLICY_ABSCISSA)?;
    let d = DSeries::new(sf, sg)?;
    Ok(SeriesValue {
        value: d.poly.eval(s),
        truncation_bound: d.tail(s.re),
        n_used: d.poly.len(),
        bound_kind: d.bound_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::delta_qexp;
    use crate::sums::partial_sums;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn line_evaluation_matches_pointwise() {
        let d = delta_qexp(3000, false).unwrap();
        let w = WSeries::new(&d, &d, 3000).unwrap();
        let line = w.poly.eval_line(3.0, -20.0, 0.37, 100);
        for (j, v) in line.iter().enumerate() {
            let s = c(3.0, -20.0 + j as f64 * 0.37);
            let direct = w.poly.eval(s);
            assert!((v - direct).norm() <= 1e-12 * direct.norm().max(1e-300), "{j}");
        }
    }

    #[test]
    fn leading_shifted_term() {
        let d = delta_qexp(2, true).unwrap();
        let v = shifted_d(c(6.0, 0.0), 1, &d, &d, 2).unwrap();
        assert!((v.value.re - (-48.0 / 131072.0)).abs() < 1e-18);
        let z = shifted_d(c(6.0, 0.0), 5, &d, &d, 2).unwrap();
        assert_eq!(z.value, c(0.0, 0.0));
    }

    #[test]
    fn z_fast_path_matches_double_sum() {
        let d = delta_qexp(2000, false).unwrap();
        for s in [c(6.0, 0.0), c(3.0, 7.0)] {
            let fast = z_sum(s, c(0.0, 0.0), &d, &d, 2000).unwrap();
            let slow = z_sum_double(s, c(0.0, 0.0), &d, &d, 2000).unwrap();
            assert!((fast.value - slow.value).norm() <= 1e-11 * slow.value.norm());
            assert_eq!(fast.truncation_bound, slow.truncation_bound);
        }
    }

    #[test]
    fn policy_errors() {
        let d = delta_qexp(10, true).unwrap();
        assert!(rankin_l(c(1.0, 0.0), &d, &d, 10).is_err());
        assert!(shifted_d(c(2.4, 0.0), 1, &d, &d, 10).is_err());
        assert!(z_sum(c(3.0, 0.0), c(-1.0, 0.0), &d, &d, 10).is_err());
        let s = partial_sums(&d);
        assert!(d_series(c(2.0, 0.0), &s, &s, true).is_err());
        assert!(matches!(
            rankin_l(c(2.0, 0.0), &d, &d, 11),
            Err(Error::InsufficientCoefficients { .. })
        ));
    }
}
