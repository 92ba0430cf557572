use std::sync::OnceLock;

use cuspsum::moments::{run_experiment, run_with_forms, smoothed_moment, MomentConfig, MomentReport, Profile};
use cuspsum::qseries::{delta_qexp, eigenform};
use cuspsum::sums::partial_sums;

fn default_run() -> &'static MomentReport {
    static REPORT: OnceLock<MomentReport> = OnceLock::new();
    REPORT.get_or_init(|| run_experiment(&MomentConfig::from_profile(12, Profile::Default)).unwrap())
}

#[test]
fn default_run_shape() {
    let r = default_run();
    assert_eq!(r.n_max, 300_000);
    assert_eq!(r.rows.len(), 7);
    assert_eq!(r.theta_used, 0.0);
    assert!(!r.theta_note.is_empty());
    for row in &r.rows {
        assert!(row.smoothed > 0.0, "positivity at X = {}", row.x);
        assert!(row.tail_bound < 1e-10 * row.smoothed.abs(), "tail at X = {}", row.x);
        assert!(row.secondary.is_finite());
    }
    let first = (r.rows[0].ratio - 1.0).abs();
    let last = (r.rows[6].ratio - 1.0).abs();
    assert!(last < first, "{first} -> {last}");
}

#[test]
fn default_run_main_term_and_slope() {
    let r = default_run();
    let at_1000 = r.rows.iter().find(|row| (row.x - 1000.0).abs() < 1e-6).unwrap();
    assert!((at_1000.ratio - 1.0).abs() <= 0.10, "{}", at_1000.ratio);
    let fit = r.fit.as_ref().expect("fit");
    assert!((-0.8..=-0.2).contains(&fit.slope), "{}", fit.slope);
}

#[test]
fn conjugation_is_trivial_for_real_coefficients() {
    let d = delta_qexp(30_000, false).unwrap();
    let s = partial_sums(&d);
    for x in [10.0, 100.0, 1000.0] {
        let a = smoothed_moment(x, &s, &s, true).unwrap();
        let b = smoothed_moment(x, &s, &s, false).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}

#[test]
fn tail_honesty_under_doubling() {
    let d = delta_qexp(60_000, false).unwrap();
    let full = partial_sums(&d);
    let half = partial_sums(&d.truncate(30_000).unwrap());
    for x in [100.0, 300.0, 1000.0] {
        let a = smoothed_moment(x, &half, &half, true).unwrap();
        let b = smoothed_moment(x, &full, &full, true).unwrap();
        assert!((a.value - b.value).abs() <= a.tail_bound, "X = {x}");
    }
}

#[test]
fn single_term_domination() {
    let s = partial_sums(&delta_qexp(100, true).unwrap());
    let m = smoothed_moment(0.01, &s, &s, true).unwrap();
    let want = 100.0 * (-100f64).exp();
    assert!((m.value - want).abs() <= 1e-12 * want + m.tail_bound);
}

#[test]
fn insufficient_coefficients() {
    let s = partial_sums(&delta_qexp(1000, false).unwrap());
    assert!(matches!(
        smoothed_moment(100.0, &s, &s, true),
        Err(cuspsum::Error::InsufficientCoefficients { needed: 3000, .. })
    ));
}

#[test]
fn weight_sixteen_report() {
    let grid = cuspsum::moments::geometric_grid(10.0, 1000.0, 7).unwrap();
    let config = MomentConfig {
        weight: 16,
        n_max: cuspsum::moments::required_coefficients(&grid),
        grid,
        conjugated: true,
        profile: Profile::Default,
    };
    let f = eigenform(16, config.n_max, false).unwrap();
    let r = run_with_forms(&config, &f, &f).unwrap();
    assert_eq!(r.weight, 16);
    assert!(r.constant.c_direct > 0.0);
    assert!(r.rows.iter().all(|row| row.smoothed > 0.0));
    assert!((r.rows[6].ratio - 1.0).abs() < 0.1, "{}", r.rows[6].ratio);
}

#[test]
fn config_validation() {
    let mut c = MomentConfig::from_profile(12, Profile::Default);
    assert!(c.validate().is_ok());
    c.n_max = 1000;
    assert!(c.validate().is_err());
    let mut c = MomentConfig::from_profile(14, Profile::Default);
    assert!(c.validate().is_err());
    c.weight = 12;
    c.grid = vec![100.0, 50.0];
    assert!(c.validate().is_err());
}
