use std::sync::OnceLock;

use cuspsum::cache;
use cuspsum::complexfn::{gamma, zeta};
use cuspsum::dirichlet::{d_series, rankin_l, shifted_d, w_eval, z_sum};
use cuspsum::moments::{exponent_fit, smoothed_moment};
use cuspsum::qseries::{delta_qexp, multiply, Factor, Method, QExpansion, Roundoff};
use cuspsum::sums::{partial_sums, PartialSumSeries};
use cuspsum::Complex64;
use num_bigint::BigInt;
use proptest::prelude::*;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

struct Fixture {
    half: QExpansion,
    full: QExpansion,
    s_half: PartialSumSeries,
    s_full: PartialSumSeries,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let full = delta_qexp(16_000, false).unwrap();
        let half = full.truncate(8_000).unwrap();
        Fixture {
            s_half: partial_sums(&half),
            s_full: partial_sums(&full),
            half,
            full,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gamma_recurrence(re in -9.7f64..40.0, im in -100.0f64..100.0) {
        let z = Complex64::new(re, im);
        prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3);
        let lhs = gamma(z + 1.0).unwrap();
        let rhs = z * gamma(z).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-11, "{z}: {}", rel(lhs, rhs));
    }

    #[test]
    fn gamma_and_zeta_conjugate_symmetry(re in 0.05f64..20.0, im in -150.0f64..150.0) {
        let z = Complex64::new(re, im);
        let g = gamma(z).unwrap();
        prop_assert!(rel(gamma(z.conj()).unwrap(), g.conj()) <= 1e-14);
        prop_assume!((z - 1.0).norm() > 1e-6);
        let s = zeta(z).unwrap();
        prop_assert!(rel(zeta(z.conj()).unwrap(), s.conj()) <= 1e-14);
    }

    #[test]
    fn gamma_vertical_decay(sigma in 1.0f64..6.0, t in 20.0f64..190.0, dt in 0.01f64..10.0) {
        let a = gamma(Complex64::new(sigma, t)).unwrap().norm();
        let b = gamma(Complex64::new(sigma, t + dt)).unwrap().norm();
        prop_assert!(b < a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multiplication_methods_agree(
        a in prop::collection::vec(-1000i64..1000, 1..300),
        b in prop::collection::vec(-1000i64..1000, 1..300),
    ) {
        let n = a.len().max(b.len()) - 1;
        let pad = |v: &[i64]| {
            let mut v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            v.resize(n + 1, BigInt::from(0));
            QExpansion::from_exact(12, "t", v)
        };
        let (fa, fb) = (pad(&a), pad(&b));
        let direct = multiply(Factor::Dense(&fa), &fb, n, Method::Direct).unwrap();
        let ntt = multiply(Factor::Dense(&fa), &fb, n, Method::Ntt).unwrap();
        prop_assert_eq!(direct.exact().unwrap(), ntt.exact().unwrap());
        let fft = multiply(
            Factor::Dense(&fa.clone().into_float()),
            &fb.clone().into_float(),
            n,
            Method::Fft,
        )
        .unwrap();
        let bound = match fft.roundoff() {
            Roundoff::Absolute(e) => e,
            _ => 1e-6,
        };
        for (x, y) in fft.float_coeffs().iter().zip(direct.float_coeffs().iter()) {
            prop_assert!((x - y).abs() <= bound.max(1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn float_cache_roundtrip(v in prop::collection::vec(-1e300f64..1e300, 1..500)) {
        let f = QExpansion::from_float(16, "prop", v, Roundoff::Relative(1e-15));
        let bytes = {
            let p = std::env::temp_dir().join(format!("cuspsum-prop-{}.qexp", std::process::id()));
            cache::write(&p, &f).unwrap();
            std::fs::read(&p).unwrap()
        };
        let (_, g) = cache::decode(&bytes).unwrap();
        prop_assert_eq!(cache::encode_payload(&g), cache::encode_payload(&f));
    }

    #[test]
    fn exact_cache_roundtrip(v in prop::collection::vec(any::<i64>(), 1..200), shift in 0u32..200) {
        let coeffs: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x) << shift).collect();
        let f = QExpansion::from_exact(12, "prop", coeffs);
        let p = std::env::temp_dir().join(format!("cuspsum-prop-exact-{}.qexp", std::process::id()));
        cache::write(&p, &f).unwrap();
        prop_assert_eq!(cache::read(&p, None).unwrap(), f);
    }

    #[test]
    fn exponent_fit_recovers_power_laws(alpha in -3.0f64..1.0, amp in 1e-6f64..1e6, lo in 1.0f64..1e3) {
        let grid: Vec<f64> = (0..8).map(|j| lo * 10f64.powf(j as f64 * 2.5 / 7.0)).collect();
        let pts: Vec<_> = grid.iter().map(|&x| (x, amp * x.powf(alpha), 0.0)).collect();
        let fit = exponent_fit(&pts).unwrap();
        prop_assert!((fit.slope - alpha).abs() <= 1e-10, "{} vs {alpha}", fit.slope);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// Doubling N moves each series by less than the N-term tail bound.
    #[test]
    fn truncation_honesty(sigma in 2.5f64..8.0, t in -30.0f64..30.0, h in 1usize..20) {
        let fx = fixture();
        let s = Complex64::new(sigma, t);
        let (n, n2) = (fx.half.n_max(), fx.full.n_max());
        let pairs = [
            (rankin_l(s, &fx.half, &fx.half, n).unwrap(), rankin_l(s, &fx.full, &fx.full, n2).unwrap()),
            (w_eval(s, &fx.half, &fx.half, n).unwrap(), w_eval(s, &fx.full, &fx.full, n2).unwrap()),
            (
                z_sum(s, Complex64::new(0.0, 0.0), &fx.half, &fx.half, n).unwrap(),
                z_sum(s, Complex64::new(0.0, 0.0), &fx.full, &fx.full, n2).unwrap(),
            ),
            (shifted_d(s, h, &fx.half, &fx.half, n).unwrap(), shifted_d(s, h, &fx.full, &fx.full, n2).unwrap()),
            (
                d_series(s, &fx.s_half, &fx.s_half, true).unwrap(),
                d_series(s, &fx.s_full, &fx.s_full, true).unwrap(),
            ),
        ];
        for (i, (a, b)) in pairs.iter().enumerate() {
            let moved = (a.value - b.value).norm();
            prop_assert!(moved <= a.truncation_bound, "series {i}: moved {moved:e}, bound {:e}", a.truncation_bound);
        }
    }

    #[test]
    fn d_series_conjugation_and_positivity(sigma in 2.5f64..8.0, t in -30.0f64..30.0) {
        let fx = fixture();
        let s = Complex64::new(sigma, t);
        let a = d_series(s.conj(), &fx.s_half, &fx.s_half, true).unwrap().value;
        let b = d_series(s, &fx.s_half, &fx.s_half, true).unwrap().value.conj();
        prop_assert!((a - b).norm() <= 1e-14 * b.norm());
        let real = d_series(Complex64::new(sigma, 0.0), &fx.s_half, &fx.s_half, true).unwrap().value;
        prop_assert!(real.im == 0.0 && real.re > 0.0);
    }

    /// The moment is bilinear in the partial sums.
    #[test]
    fn moment_linearity(c1 in -5i64..5, c2 in -5i64..5, x in 1.0f64..250.0) {
        let fx = fixture();
        let g1 = fx.half.scaled(c1);
        let g2 = fx.half.scaled(c2);
        let g = g1.sum(&g2).unwrap();
        let sf = &fx.s_half;
        let m = |g: &QExpansion| smoothed_moment(x, sf, &partial_sums(g), true).unwrap().value;
        let (a, b, c) = (m(&g), m(&g1), m(&g2));
        let scale = m(&fx.half).abs() * (c1.abs() + c2.abs()).max(1) as f64;
        prop_assert!((a - (b + c)).abs() <= 1e-13 * scale, "{a} vs {}", b + c);
    }
}
