//! Complex Γ, log Γ and ζ.
//!
//! Γ uses the Lanczos approximation with reflection for `Re z < 1/2`; log Γ
//! is computed independently from the Stirling series after shifting the
//! argument away from the origin, so the two can be cross-checked. ζ uses
//! Euler-Maclaurin summation and is only defined here for `Re z > 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::summation::ComplexNeumaier;
use crate::{Error, Result};

// Lanczos coefficients for g = 7, n = 9 (Godfrey's set, as tabulated in
// Press et al. and reproduced by most numerical libraries).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

// B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174_611.0 / 330.0,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const STIRLING_MIN_ABS: f64 = 15.0;

fn check_finite(z: Complex64, function: &'static str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(function))
    }
}

fn check_gamma_pole(z: Complex64, function: &'static str) -> Result<()> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(Error::Pole {
            function,
            at: format!("{}", z.re),
        });
    }
    Ok(())
}

/// A logarithm of Γ(z) for `Re z >= 1/2` from the Lanczos sum. The imaginary
/// part is not reduced to any particular branch.
fn lanczos_ln(z: Complex64) -> Complex64 {
    let x = z - 1.0;
    let mut a = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (x + 0.5) * t.ln() - t + LN_SQRT_2PI + a.ln()
}

/// `ln sin(pi z)` on the principal branch, stable for large `|Im z|`.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 15.0 {
        return (z * PI).sin().ln();
    }
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    // sin(pi z) = e^{-i pi z} (1 - e^{2 i pi z}) / (-2i), with |e^{2 i pi z}| tiny.
    let e2 = (Complex64::i() * 2.0 * PI * z).exp();
    let rest = (Complex64::new(1.0, 0.0) - e2) / Complex64::new(0.0, -2.0);
    let w = -Complex64::i() * PI * z + rest.ln();
    Complex64::new(w.re, reduce_angle(w.im))
}

fn reduce_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = theta % two_pi;
    if r > PI {
        r -= two_pi;
    } else if r <= -PI {
        r += two_pi;
    }
    r
}

/// Γ(z).
///
/// Relative error stays below 1e-12 for `Re z` in `[-10, 50]` and
/// `|Im z| <= 200`. Returns [`Error::Pole`] at non-positive integers.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    check_finite(z, "gamma")?;
    check_gamma_pole(z, "gamma")?;
    if z.re >= 0.5 {
        return Ok(lanczos_ln(z).exp());
    }
    // Reflection: Γ(z) = π / (sin(πz) Γ(1 - z)), evaluated in log form so
    // that e^{π|Im z|} growth of the sine cannot overflow.
    let ln = PI.ln() - ln_sin_pi(z) - lanczos_ln(Complex64::new(1.0, 0.0) - z);
    Ok(ln.exp())
}

/// Real Γ(x), a convenience for constants.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex64::new(x, 0.0)).map(|z| z.re)
}

/// log Γ(z).
///
/// For `Re z >= 1/2` this is the branch that is analytic in the right half
/// plane (continuous along vertical lines and real on the positive axis);
/// the left half plane uses the reflection formula with principal logarithms.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    check_finite(z, "log_gamma")?;
    check_gamma_pole(z, "log_gamma")?;
    if z.re < 0.5 {
        let one_minus = Complex64::new(1.0, 0.0) - z;
        return Ok(PI.ln() - ln_sin_pi(z) - log_gamma_right(one_minus));
    }
    Ok(log_gamma_right(z))
}

fn log_gamma_right(z: Complex64) -> Complex64 {
    let mut shifted = z;
    let mut correction = Complex64::new(0.0, 0.0);
    while shifted.norm() < STIRLING_MIN_ABS {
        correction += shifted.ln();
        shifted += 1.0;
    }
    stirling(shifted) - correction
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv;
    for (j, &b) in BERNOULLI_EVEN.iter().enumerate() {
        let m = 2.0 * (j + 1) as f64;
        series += power * (b / (m * (m - 1.0)));
        power *= inv2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series
}

/// Number of Bernoulli correction terms used by [`zeta`].
pub const ZETA_CORRECTION_TERMS: usize = 10;

/// Riemann ζ(z) for `Re z > 0`, `z != 1`, by Euler-Maclaurin summation with
/// `max(20, ceil|Im z|)` nodes and ten Bernoulli corrections.
pub fn zeta(z: Complex64) -> Result<Complex64> {
    check_finite(z, "zeta")?;
    if z.re <= 0.0 {
        return Err(Error::UnsupportedRegion {
            function: "zeta",
            at: format!("{z}"),
            detail: "no continuation to Re z <= 0",
        });
    }
    if z == Complex64::new(1.0, 0.0) {
        return Err(Error::Pole {
            function: "zeta",
            at: "1".into(),
        });
    }
    let nodes = 20usize.max(z.im.abs().ceil() as usize);
    Ok(euler_maclaurin(z, nodes, ZETA_CORRECTION_TERMS))
}

/// Real ζ(x) for `x > 0`, `x != 1`.
pub fn zeta_real(x: f64) -> Result<f64> {
    zeta(Complex64::new(x, 0.0)).map(|z| z.re)
}

fn euler_maclaurin(z: Complex64, nodes: usize, terms: usize) -> Complex64 {
    let mut head = ComplexNeumaier::new();
    for n in (1..nodes).rev() {
        head.add((-z * (n as f64).ln()).exp());
    }
    let big_n = nodes as f64;
    let ln_n = big_n.ln();
    let n_pow = (-z * ln_n).exp();
    let mut total = head.total() + n_pow * big_n / (z - 1.0) + n_pow * 0.5;

    // B_{2j}/(2j)! * z (z+1) ... (z+2j-2) * N^{-z-2j+1}
    let mut rising = z;
    let mut factorial = 2.0;
    let mut n_term = n_pow / big_n;
    for (j, &b) in BERNOULLI_EVEN.iter().enumerate().take(terms) {
        total += rising * n_term * (b / factorial);
        let m = 2.0 * (j + 1) as f64;
        rising *= (z + (m - 1.0)) * (z + m);
        factorial *= (m + 1.0) * (m + 2.0);
        n_term /= big_n * big_n;
    }
    total
}
