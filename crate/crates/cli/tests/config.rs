use clap::Parser;
use cuspsum_cli::config::{parse_complex, parse_config_file, parse_grid, CommandKind};
use cuspsum_cli::{Cli, RunConfig};

fn resolve(args: &[&str]) -> Result<RunConfig, cuspsum_cli::ConfigError> {
    let cli = Cli::try_parse_from(std::iter::once("cuspsum").chain(args.iter().copied())).unwrap();
    RunConfig::resolve(&cli, None)
}

#[test]
fn parsers() {
    assert_eq!(parse_complex("6,5").unwrap(), [6.0, 5.0]);
    assert_eq!(parse_complex("-1").unwrap(), [-1.0, 0.0]);
    assert!(parse_complex("a,b").is_err());
    let g = parse_grid("geometric:100:10000:7").unwrap();
    assert_eq!(g.len(), 7);
    assert_eq!(g[6], 10000.0);
    assert_eq!(parse_grid("list:1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
    assert!(parse_grid("list:3,2").is_err());
    assert!(parse_grid("linear:1:2:3").is_err());
    let m = parse_config_file("a = 1 # c\n\n b_c=x\n").unwrap();
    assert_eq!(m["a"], "1");
    assert_eq!(m["b-c"], "x");
    assert!(parse_config_file("novalue\n").is_err());
}

#[test]
fn defaults_and_tolerances() {
    let c = resolve(&["verify-decomp"]).unwrap();
    assert_eq!(c.command, CommandKind::VerifyDecomp);
    assert_eq!(c.s, Some([6.0, 0.0]));
    assert_eq!(c.n_max, Some(100_000));
    assert_eq!(c.tolerance, Some(1e-4));
    let contour = c.contour.unwrap();
    assert_eq!((contour.abscissa, contour.height, contour.step), (2.0, 80.0, 0.25));
    let c = resolve(&["moment", "--profile", "large"]).unwrap();
    assert_eq!(c.grid.as_ref().unwrap().len(), 10);
    assert_eq!(c.n_max, Some(3_000_000));
    assert_eq!(resolve(&["barnes"]).unwrap().tolerance, Some(1e-8));
}

#[test]
fn validation_failures() {
    assert!(resolve(&["moment", "--weight", "14"]).is_err());
    assert!(resolve(&["coeffs", "--n", "10"]).is_err());
    assert!(resolve(&["coeffs", "--n", "200000", "--exact", "--out", "x"]).is_err());
    assert!(resolve(&["verify-smoothing", "--x", "1000", "--n", "10000"]).is_err());
    assert!(resolve(&["verify-smoothing", "--sigma", "2"]).is_err());
    assert!(resolve(&["rankin", "--form", "eig16", "--weight", "18", "--s", "3"]).is_err());
    assert!(resolve(&["barnes", "--step", "0"]).is_err());
    assert!(resolve(&["constants", "--n", "500"]).is_err());
    assert!(resolve(&["moment", "--profile", "huge"]).is_err());
}
