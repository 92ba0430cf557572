//! Smoothed second moments of partial sums against the `C X^{1/2}` main term.
//!
//! For same-weight forms `f`, `g`:
//!
//! ```text
//! M(X) = (1/X) sum_n S_f(n) S_g(n) n^(1-k) e^(-n/X)  =  C X^{1/2} + r(X),
//! C    = Γ(3/2)/(4 pi^2) sum a(n) b(n) n^-(k+1/2),
//! ```
//!
//! with `r(X) = O(X^{-1/2 + θ + eps})` and `θ = 0` at level 1. The
//! experiment tabulates `M`, the main term and the residual on a geometric
//! grid and fits the slope of `log |r|` against `log X`.

use serde::Serialize;

use crate::complexfn::gamma_real;
use crate::dirichlet::{constant_c, ConstantPair};
use crate::envelope::BoundKind;
use crate::qseries::{eigenform, QExpansion, EIGENFORM_WEIGHTS};
use crate::summation::{chunked_sum, ReductionInfo, DEFAULT_CHUNK};
use crate::sums::{partial_sums, PartialSumSeries};
use crate::{par, Error, Result};

/// Coefficients needed per unit of `X`: `e^{-30}` is below double precision
/// relative to the bulk of the sum.
pub const CUTOFF_MULTIPLIER: f64 = 30.0;

/// Selberg's eigenvalue parameter used in the error exponent.
pub const THETA: f64 = 0.0;

pub const THETA_NOTE: &str =
    "theta = 0: SL2(Z) has no exceptional Laplace eigenvalues (lambda_1 > 1/4), so the error exponent is -1/2 + eps";

/// Beyond this `n/X` every term of the smoothed sum underflows.
const UNDERFLOW_RATIO: f64 = 745.0;

/// A smoothed moment with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentValue {
    pub x: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub n_used: usize,
    pub bound_kind: BoundKind,
    pub reduction: ReductionInfo,
}

/// `(1/X) sum_{n <= N} S_f(n) S_g(n) n^(1-k) e^(-n/X)`, requiring `N >= 30 X`.
///
/// Coefficients are real, so `conjugated` selects between identical sums.
pub fn smoothed_moment(x: f64, sf: &PartialSumSeries, sg: &PartialSumSeries, conjugated: bool) -> Result<MomentValue> {
    let _ = conjugated;
    if sf.weight() != sg.weight() {
        return Err(Error::WeightMismatch(sf.weight(), sg.weight()));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain("smoothed_moment", "need X > 0"));
    }
    let n = sf.n_max().min(sg.n_max());
    let needed = (CUTOFF_MULTIPLIER * x).ceil() as usize;
    if n < needed {
        return Err(Error::InsufficientCoefficients { needed, available: n });
    }
    let k = sf.weight() as f64;
    let (a, b) = (sf.values(), sg.values());
    let last = n.min((UNDERFLOW_RATIO * x).ceil() as usize).max(1);
    let (sum, reduction) = chunked_sum(1..last + 1, DEFAULT_CHUNK, |m| {
        let mf = m as f64;
        a[m] * b[m] * ((1.0 - k) * mf.ln() - mf / x).exp()
    });
    let env_f = sf.mean_square_envelope();
    let env_g = sg.mean_square_envelope();
    let tail = 0.5 * (env_f.exp_tail(n, 0.5, x) + env_g.exp_tail(n, 0.5, x)) / x;
    let kind = if env_f.constant == 0.0 || env_g.constant == 0.0 {
        BoundKind::Exact
    } else {
        BoundKind::HeuristicEnvelope
    };
    Ok(MomentValue {
        x,
        value: sum / x,
        tail_bound: tail,
        n_used: n,
        bound_kind: kind,
        reduction,
    })
}

/// Least-squares fit of `log |r|` against `log X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual standard error of the fit in `log |r|`.
    pub confidence: f64,
    /// Standard error of the slope.
    pub slope_std_error: f64,
    pub used: Vec<f64>,
    /// Grid points with `|r| <= 10 x bound`.
    pub excluded: Vec<f64>,
}

/// Minimum grid size for [`exponent_fit`].
pub const FIT_MIN_POINTS: usize = 6;

/// Minimum span of the grid in decades.
pub const FIT_MIN_DECADES: f64 = 2.0;

/// Fits `(X, r(X), bound(X))` triples, excluding points whose residual is
/// within ten times its bound.
pub fn exponent_fit(points: &[(f64, f64, f64)]) -> Result<ExponentFit> {
    if points.len() < FIT_MIN_POINTS {
        return Err(Error::domain(
            "exponent_fit",
            format!("need at least {FIT_MIN_POINTS} grid points, got {}", points.len()),
        ));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < FIT_MIN_DECADES - 1e-9 {
        return Err(Error::domain("exponent_fit", "grid must span at least two decades"));
    }
    let (used, excluded): (Vec<&(f64, f64, f64)>, Vec<_>) = points
        .iter()
        .partition(|(_, r, bound)| r.abs() > 10.0 * bound && *r != 0.0);
    if used.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} points are within 10x of their noise bound",
            excluded.len(),
            points.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.abs().ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let confidence = if used.len() > 2 { (rss / (m - 2.0)).sqrt() } else { 0.0 };
    Ok(ExponentFit {
        slope,
        intercept,
        confidence,
        slope_std_error: confidence / sxx.sqrt(),
        used: used.iter().map(|p| p.0).collect(),
        excluded: excluded.iter().map(|p| p.0).collect(),
    })
}

/// `count` points `lo (hi/lo)^{j/(count-1)}`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(Error::domain("grid", "need 0 < lo < hi and at least 2 points"));
    }
    let ratio = (hi / lo).ln();
    Ok((0..count)
        .map(|j| {
            if j == count - 1 {
                hi
            } else {
                lo * (ratio * j as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `X = 10^2 .. 10^4`, 7 points, `N = 3 * 10^5`.
    Default,
    /// `X = 10^2 .. 10^5`, 10 points, `N = 3 * 10^6`.
    Large,
}

impl Profile {
    pub fn grid(self) -> Vec<f64> {
        match self {
            Profile::Default => geometric_grid(1e2, 1e4, 7),
            Profile::Large => geometric_grid(1e2, 1e5, 10),
        }
        .expect("static grid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::Large => "large",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Profile::Default),
            "large" => Ok(Profile::Large),
            _ => Err(Error::domain(
                "profile",
                format!("unknown profile {s:?} (default|large)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentConfig {
    pub weight: u32,
    pub grid: Vec<f64>,
    /// Coefficients generated; defaults to `30 max X`.
    pub n_max: usize,
    pub conjugated: bool,
    pub profile: Profile,
}

impl MomentConfig {
    pub fn from_profile(weight: u32, profile: Profile) -> Self {
        let grid = profile.grid();
        let n_max = required_coefficients(&grid);
        Self {
            weight,
            grid,
            n_max,
            conjugated: true,
            profile,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !EIGENFORM_WEIGHTS.contains(&self.weight) {
            return Err(Error::UnsupportedWeight {
                weight: self.weight,
                detail: "level-1 cusp space is not one-dimensional (supported: 12, 16, 18, 20, 22, 26)",
            });
        }
        if self.grid.is_empty() || self.grid.windows(2).any(|w| !(w[0] < w[1])) || !(self.grid[0] > 0.0) {
            return Err(Error::domain("moment grid", "must be positive and strictly increasing"));
        }
        let needed = required_coefficients(&self.grid);
        if self.n_max < needed {
            return Err(Error::InsufficientCoefficients {
                needed,
                available: self.n_max,
            });
        }
        Ok(())
    }
}

pub fn required_coefficients(grid: &[f64]) -> usize {
    let max = grid.iter().copied().fold(0.0, f64::max);
    ((CUTOFF_MULTIPLIER * max).ceil() as usize).max(1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub x: f64,
    pub smoothed: f64,
    pub main: f64,
    pub residual: f64,
    pub ratio: f64,
    pub tail_bound: f64,
    /// `(k-1/2)/(4 pi^2) L(3/2)/ζ(3) Γ(1/2) X^{-1/2}`: the next term of the
    /// expansion, from the residue of `W` at `s = 1/2`.
    pub secondary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub weight: u32,
    pub form_f: String,
    pub form_g: String,
    pub conjugated: bool,
    pub profile: Profile,
    pub n_max: usize,
    pub constant: ConstantPair,
    pub rows: Vec<MomentRow>,
    pub fit: Option<ExponentFit>,
    /// Why the fit is absent, when it is.
    pub fit_error: Option<String>,
    pub theta_used: f64,
    pub theta_note: &'static str,
    pub reduction: ReductionInfo,
}

impl MomentReport {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.x).collect()
    }
}

/// Runs the experiment with `f = g` the weight-`k` eigenform.
pub fn run_experiment(config: &MomentConfig) -> Result<MomentReport> {
    config.validate()?;
    let f = eigenform(config.weight, config.n_max, false)?;
    run_with_forms(config, &f, &f)
}

/// Runs the experiment on given forms (truncated to `config.n_max`).
pub fn run_with_forms(config: &MomentConfig, f: &QExpansion, g: &QExpansion) -> Result<MomentReport> {
    config.validate()?;
    if f.weight() != config.weight {
        return Err(Error::WeightMismatch(config.weight, f.weight()));
    }
    let n = config.n_max;
    let fs = partial_sums(&f.truncate(n)?);
    let gs = if std::ptr::eq(f, g) {
        fs.clone()
    } else {
        partial_sums(&g.truncate(n)?)
    };
    let constant = constant_c(f, g, n, config.conjugated)?;
    let c = constant.c_direct;
    let half = gamma_real(0.5)?;
    let residue = constant.w_residue;
    let values = par::map_slice(&config.grid, |&x| smoothed_moment(x, &fs, &gs, config.conjugated));
    let mut rows = Vec::with_capacity(values.len());
    let mut reduction = None;
    for v in values {
        let v = v?;
        reduction.get_or_insert(v.reduction);
        let main = c * v.x.sqrt();
        rows.push(MomentRow {
            x: v.x,
            smoothed: v.value,
            main,
            residual: v.value - main,
            ratio: v.value / main,
            tail_bound: v.tail_bound,
            secondary: residue * half / v.x.sqrt(),
        });
    }
    let points: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.x, r.residual, r.tail_bound)).collect();
    let (fit, fit_error) = match exponent_fit(&points) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(MomentReport {
        weight: config.weight,
        form_f: f.form_id().to_string(),
        form_g: g.form_id().to_string(),
        conjugated: config.conjugated,
        profile: config.profile,
        n_max: n,
        constant,
        rows,
        fit,
        fit_error,
        theta_used: THETA,
        theta_note: THETA_NOTE,
        reduction: reduction.unwrap_or(ReductionInfo {
            chunk_size: DEFAULT_CHUNK,
            chunks: 0,
            compensated: true,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_law_slope() {
        let grid = Profile::Default.grid();
        let pts: Vec<_> = grid.iter().map(|&x| (x, x.powf(-0.5), 0.0)).collect();
        let fit = exponent_fit(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() <= 1e-12, "{}", fit.slope);
        assert!(fit.excluded.is_empty());
    }

    #[test]
    fn oscillating_power_law_slope() {
        let grid = Profile::Default.grid();
        let pts: Vec<_> = grid
            .iter()
            .map(|&x| (x, x.powf(-0.5) * (2.0 + (5.0 * x.ln()).sin()), 0.0))
            .collect();
        let fit = exponent_fit(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() <= 0.15, "{}", fit.slope);
        // Frozen from an independent least-squares evaluation.
        assert!((fit.slope - (-0.439_641_027_913_930_56)).abs() < 1e-12, "{}", fit.slope);
    }

    #[test]
    fn fit_preconditions() {
        let short: Vec<_> = (0..5).map(|j| (10f64.powi(j), 1.0, 0.0)).collect();
        assert!(exponent_fit(&short).is_err());
        let narrow: Vec<_> = (0..7).map(|j| (100.0 + j as f64, 1.0, 0.0)).collect();
        assert!(exponent_fit(&narrow).is_err());
        let noisy: Vec<_> = Profile::Default.grid().iter().map(|&x| (x, 1e-9, 1e-9)).collect();
        assert!(matches!(exponent_fit(&noisy), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn grids() {
        let g = Profile::Default.grid();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 100.0);
        assert_eq!(g[6], 1e4);
        assert!((g[3] - 1000.0).abs() < 1e-9);
        assert_eq!(Profile::Large.grid().len(), 10);
        assert_eq!(required_coefficients(&g), 300_000);
    }
}
