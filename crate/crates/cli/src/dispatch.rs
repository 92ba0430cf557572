//! Routes a [`RunConfig`] to the library and builds the result envelope.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use cuspsum::cache;
use cuspsum::dirichlet::{constant_c, d_series, rankin_l};
use cuspsum::mellin::{barnes_check, verify_decomposition, verify_smoothing_transform, IdentityReport};
use cuspsum::moments::{exponent_fit, run_with_forms, MomentConfig, MomentReport};
use cuspsum::qseries::{eigenform, hecke_verify, Coeffs, QExpansion};
use cuspsum::sums::{partial_sums, sharp_average, sharp_constant, OMEGA_CONTEXT};
use cuspsum::{Complex64, Error};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CommandKind, ConfigError, RunConfig};
use crate::output::{lint_bounds, ResultEnvelope, Status, TOOL, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IDENTITY: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Library(Error),
    Io(String),
    /// Numeric output without a bound field.
    Lint(Vec<String>),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "invalid configuration: {e}"),
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
            Failure::Lint(paths) => write!(f, "output values without bounds: {}", paths.join(", ")),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_VALIDATION,
            Failure::Library(e) => match e {
                Error::Pole { .. }
                | Error::UnsupportedRegion { .. }
                | Error::UnsupportedWeight { .. }
                | Error::ResourceLimit { .. }
                | Error::TruncationMismatch { .. }
                | Error::WeightMismatch(..)
                | Error::Domain { .. }
                | Error::OutOfRange { .. }
                | Error::InsufficientCoefficients { .. }
                | Error::InsufficientCache { .. } => EXIT_VALIDATION,
                _ => EXIT_RUNTIME,
            },
            Failure::Io(_) | Failure::Lint(_) => EXIT_RUNTIME,
        }
    }
}

fn io(context: &str, path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Io(format!("{context} {}: {e}", path.display()))
}

pub struct Outcome {
    pub envelope: ResultEnvelope,
    /// Plain-text summary for standard output.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.envelope.status {
            Status::Ok => EXIT_OK,
            Status::IdentityFailed => EXIT_IDENTITY,
        }
    }
}

struct Computed {
    result: Value,
    status: Status,
    provenance: Vec<(&'static str, &'static str)>,
    summary: String,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

/// `delta` for weight 12, `delta*E{k-12}` otherwise.
pub fn form_id(weight: u32) -> String {
    if weight == 12 {
        "delta".into()
    } else {
        format!("delta*E{}", weight - 12)
    }
}

/// The eigenform of the configured weight, through the cache directory
/// when one is set.
fn load_form(c: &RunConfig, exact: bool) -> Result<QExpansion, Failure> {
    let weight = c.weight.expect("validated weight");
    let n = c.n_max.expect("validated n");
    let Some(dir) = &c.cache_dir else {
        return Ok(eigenform(weight, n, exact)?);
    };
    fs::create_dir_all(dir).map_err(|e| io("creating cache directory", dir, e))?;
    let path = dir.join(cache::file_name(&form_id(weight), n, exact));
    if path.exists() {
        let f = cache::read(&path, Some(n))?;
        if f.weight() != weight {
            return Err(Failure::Library(Error::WeightMismatch(weight, f.weight())));
        }
        return Ok(f);
    }
    let f = eigenform(weight, n, exact)?;
    cache::write(&path, &f)?;
    Ok(f)
}

fn identity_status(rel: f64, tolerance: Option<f64>) -> Status {
    match tolerance {
        Some(t) if !(rel <= t) => Status::IdentityFailed,
        _ => Status::Ok,
    }
}

fn identity_summary(name: &str, r: &IdentityReport, tol: Option<f64>) -> String {
    format!(
        "{name}: lhs = {:.15e}{:+.15e}i\n{name}: rhs = {:.15e}{:+.15e}i\nrel_diff = {:.3e} (tolerance {}), quadrature error estimate {:.3e}, truncation bounds {:.3e}, {} nodes",
        r.lhs.re,
        r.lhs.im,
        r.rhs.re,
        r.rhs.im,
        r.rel_diff,
        tol.map_or("none".into(), |t| format!("{t:e}")),
        r.quadrature_error_estimate,
        r.truncation_bounds,
        r.nodes
    )
}

const IDENTITY_PROVENANCE: &[(&str, &str)] = &[
    ("rel_diff", "|lhs - rhs| / max(|lhs|, |rhs|)"),
    (
        "quadrature_error_estimate",
        "step-halving change + height-truncation tail + roundoff of the line integral",
    ),
    (
        "truncation_bounds",
        "tail bounds of the N-term Dirichlet polynomials entering the comparison",
    ),
];

fn run(c: &RunConfig) -> Result<Computed, Failure> {
    let tol = c.tolerance;
    match c.command {
        CommandKind::Coeffs => {
            let weight = c.weight.expect("weight");
            let n = c.n_max.expect("n");
            let f = eigenform(weight, n, c.exact)?;
            let out = c.out.as_ref().expect("out");
            cache::write(out, &f)?;
            let leading: Vec<String> = match f.coeffs() {
                Coeffs::Exact(v) => v.iter().skip(1).take(10).map(|x| x.to_string()).collect(),
                Coeffs::Float(v) => v.iter().skip(1).take(10).map(|x| format!("{x}")).collect(),
            };
            let checksum = cache::fnv1a(&cache::encode_payload(&f));
            Ok(Computed {
                result: json!({
                    "form_id": f.form_id(),
                    "weight": weight,
                    "n_max": n,
                    "exact": f.is_exact(),
                    "roundoff": f.roundoff(),
                    "payload_checksum": format!("{checksum:016x}"),
                    "leading": leading,
                }),
                status: Status::Ok,
                provenance: vec![
                    ("leading", "a(1), ..., a(10) of the q-expansion"),
                    ("roundoff", "distance of stored values from the true integers"),
                ],
                summary: format!(
                    "wrote {} coefficients of {} ({}) to {}\na(1..) = {}",
                    n + 1,
                    f.form_id(),
                    if f.is_exact() { "exact" } else { "float" },
                    out.display(),
                    leading.join(", ")
                ),
            })
        }
        CommandKind::CheckHecke => {
            let f = load_form(c, true)?;
            let weight = c.weight.expect("weight");
            let report = hecke_verify(&f, weight, c.bound.expect("bound"))?;
            let status = if report.holds() {
                Status::Ok
            } else {
                Status::IdentityFailed
            };
            let mut result = to_value(&report);
            result["exact"] = json!(true);
            Ok(Computed {
                summary: format!(
                    "{}: {} multiplicative and {} prime-power relations checked up to {}, {} violations",
                    report.form_id,
                    report.multiplicative_checked,
                    report.prime_power_checked,
                    report.bound,
                    report.violations.len()
                ),
                result,
                status,
                provenance: vec![(
                    "violations",
                    "a(m)a(n) = a(mn) for coprime m, n and a(p)a(p^r) = a(p^{r+1}) + p^{k-1}a(p^{r-1})",
                )],
            })
        }
        CommandKind::Average => {
            let n = c.n_max.expect("n");
            let f = match &c.coeff_cache {
                Some(p) => {
                    let f = cache::read(p, Some(n))?;
                    let w = c.weight.expect("weight");
                    if f.weight() != w {
                        return Err(Failure::Library(Error::WeightMismatch(w, f.weight())));
                    }
                    f
                }
                None => load_form(c, false)?,
            };
            let x = c.x.expect("x") as usize;
            let s = partial_sums(&f);
            let sc = sharp_constant(&f, n)?;
            let rep = sharp_average(&s, x, sc.value)?;
            let power = (x as f64).powf(f.weight() as f64 + 0.5);
            let main_bound = sc.tail_bound * power;
            if let (Some(path), Some((a, b))) = (&c.csv, c.range) {
                let mut w = csv::Writer::from_path(path).map_err(|e| io("writing", path, e))?;
                w.write_record(["n", "S(n)"]).map_err(|e| io("writing", path, e))?;
                for i in a..=b {
                    w.write_record([i.to_string(), format!("{:e}", s.values()[i])])
                        .map_err(|e| io("writing", path, e))?;
                }
                w.flush().map_err(|e| io("writing", path, e))?;
            }
            Ok(Computed {
                summary: format!(
                    "sum_(n<=X) S(n)^2 = {:.12e} at X = {x}\nC X^(k+1/2) = {:.12e} (C = {:.12e}, tail bound {:.2e})\nratio = {:.6}\n{}",
                    rep.lhs, rep.main, sc.value, sc.tail_bound, rep.ratio, OMEGA_CONTEXT
                ),
                result: json!({
                    "average": {
                        "x": x,
                        "lhs": rep.lhs,
                        "lhs_roundoff_bound": 4.0 * f64::EPSILON * rep.lhs.abs(),
                        "main": rep.main,
                        "main_bound": main_bound,
                        "ratio": rep.ratio,
                        "ratio_bound": rep.ratio * main_bound / rep.main.abs(),
                    },
                    "constant": sc,
                    "reduction": rep.reduction,
                    "context": OMEGA_CONTEXT,
                }),
                status: Status::Ok,
                provenance: vec![
                    ("average.lhs", "sum over n <= X of S_f(n)^2"),
                    ("average.main", "C X^{k+1/2}"),
                    ("constant.value", "C = (1/((4k+2) pi^2)) sum |a(n)|^2 n^{-k-1/2}"),
                ],
            })
        }
        CommandKind::Rankin => {
            let f = load_form(c, false)?;
            let s = c.s_complex().expect("s");
            let v = rankin_l(s, &f, &f, c.n_max.expect("n"))?;
            Ok(Computed {
                summary: format!(
                    "L(s, f x f) at s = {s}: {:.15e}{:+.15e}i (truncation bound {:.3e})",
                    v.value.re, v.value.im, v.truncation_bound
                ),
                result: json!({ "l": v, "conjugated": c.conjugated }),
                status: Status::Ok,
                provenance: vec![("l.value", "zeta(2s) sum_{n<=N} a(n) conj(b(n)) n^{-(s+k-1)}")],
            })
        }
        CommandKind::Dseries => {
            let f = load_form(c, false)?;
            let sf = partial_sums(&f);
            let s = c.s_complex().expect("s");
            let v = d_series(s, &sf, &sf, c.conjugated)?;
            Ok(Computed {
                summary: format!(
                    "D(s, S_f x S_f) at s = {s}: {:.15e}{:+.15e}i (truncation bound {:.3e})",
                    v.value.re, v.value.im, v.truncation_bound
                ),
                result: json!({ "d": v, "conjugated": c.conjugated }),
                status: Status::Ok,
                provenance: vec![("d.value", "sum_{n<=N} S_f(n) conj(S_g(n)) n^{-(s+k-1)}")],
            })
        }
        CommandKind::Constants => {
            let f = load_form(c, false)?;
            let n = c.n_max.expect("n");
            let cp = constant_c(&f, &f, n, c.conjugated)?;
            let sc = sharp_constant(&f, n)?;
            let rel = cp.discrepancy / cp.c_direct.abs();
            Ok(Computed {
                summary: format!(
                    "C (series)   = {:.15e}\nC (L-value)  = {:.15e}\nrelative discrepancy {:.3e} (tolerance {}), tail bound {:.3e}\nsharp-cutoff C = {:.15e} (tail bound {:.3e})",
                    cp.c_direct,
                    cp.c_lfun,
                    rel,
                    tol.map_or("none".into(), |t| format!("{t:e}")),
                    cp.truncation_bound,
                    sc.value,
                    sc.tail_bound
                ),
                result: json!({ "smoothed": cp, "relative_discrepancy": rel, "sharp": sc }),
                status: identity_status(rel, tol),
                provenance: vec![
                    ("smoothed.c_direct", "Gamma(3/2)/(4 pi^2) sum a(n) b(n) n^{-k-1/2}"),
                    ("smoothed.c_lfun", "Gamma(3/2) L(3/2, f x g) / (4 pi^2 zeta(3))"),
                    ("smoothed.w_residue", "(k - 1/2)/(4 pi^2) L(3/2, f x g)/zeta(3), residue of W at s = 1/2"),
                    ("sharp.value", "(1/((4k+2) pi^2)) sum |a(n)|^2 n^{-k-1/2}"),
                ],
            })
        }
        CommandKind::Barnes => {
            let [re, im] = c.beta.expect("beta");
            let spec = c.contour.expect("contour");
            let r = barnes_check(Complex64::new(re, im), c.t.expect("t"), &spec)?;
            let mut provenance = vec![
                ("lhs", "(1/2 pi i) int_(gamma) Gamma(-s) Gamma(beta+s) t^s ds"),
                ("rhs", "Gamma(beta) (1+t)^{-beta}"),
            ];
            provenance.extend_from_slice(IDENTITY_PROVENANCE);
            Ok(Computed {
                summary: identity_summary("barnes", &r, tol),
                status: identity_status(r.rel_diff, tol),
                result: to_value(&r),
                provenance,
            })
        }
        CommandKind::VerifyDecomp => {
            let f = load_form(c, false)?;
            let spec = c.contour.expect("contour");
            let r = verify_decomposition(c.s_complex().expect("s"), &f, &f, c.n_max.expect("n"), &spec)?;
            let mut provenance = vec![
                ("lhs", "D(s, S_f x S_g)"),
                (
                    "rhs",
                    "W(s; f, g) + (1/2 pi i) int_(gamma) W(s-z) zeta(z) Gamma(z) Gamma(s-z+k-1)/Gamma(s+k-1) dz",
                ),
                ("contour_value", "the contour integral term alone"),
            ];
            provenance.extend_from_slice(IDENTITY_PROVENANCE);
            Ok(Computed {
                summary: identity_summary("decomposition", &r, tol),
                status: identity_status(r.rel_diff, tol),
                result: to_value(&r),
                provenance,
            })
        }
        CommandKind::VerifySmoothing => {
            let f = load_form(c, false)?;
            let spec = c.contour.expect("contour");
            let r = verify_smoothing_transform(c.x.expect("x"), &f, &f, c.n_max.expect("n"), &spec)?;
            let mut provenance = vec![
                ("lhs", "(1/2 pi i) int_(sigma) D(s, S_f x S_g) X^s Gamma(s) ds"),
                ("rhs", "sum_{n<=N} S_f(n) S_g(n) n^{1-k} e^{-n/X}"),
            ];
            provenance.extend_from_slice(IDENTITY_PROVENANCE);
            Ok(Computed {
                summary: identity_summary("smoothing", &r, tol),
                status: identity_status(r.rel_diff, tol),
                result: to_value(&r),
                provenance,
            })
        }
        CommandKind::Moment => {
            let f = load_form(c, false)?;
            let config = MomentConfig {
                weight: c.weight.expect("weight"),
                grid: c.grid.clone().expect("grid"),
                n_max: c.n_max.expect("n"),
                conjugated: c.conjugated,
                profile: c.profile,
            };
            let report = run_with_forms(&config, &f, &f)?;
            if let Some(path) = &c.csv {
                write_moment_csv(path, &report)?;
            }
            Ok(Computed {
                summary: moment_summary(&report),
                result: to_value(&report),
                status: Status::Ok,
                provenance: vec![
                    ("rows.smoothed", "(1/X) sum_{n<=N} S_f(n) conj(S_g(n)) n^{1-k} e^{-n/X}"),
                    ("rows.main", "C X^{1/2}"),
                    ("rows.residual", "smoothed - main"),
                    (
                        "rows.secondary",
                        "(k - 1/2)/(4 pi^2) L(3/2, f x g)/zeta(3) Gamma(1/2) X^{-1/2}",
                    ),
                    ("fit.slope", "least-squares slope of log|residual| against log X"),
                    (
                        "theta_used",
                        "Selberg eigenvalue parameter in the error exponent -1/2 + theta + eps",
                    ),
                ],
            })
        }
        CommandKind::Fit => {
            let points = match (&c.input, c.synthetic.as_deref()) {
                (Some(path), _) => read_fit_csv(path)?,
                (None, Some(kind)) => synthetic_points(kind, c.grid.as_deref().expect("grid")),
                _ => unreachable!("validated"),
            };
            let fit = exponent_fit(&points)?;
            let rows: Vec<Value> = points
                .iter()
                .map(|&(x, r, b)| json!({ "x": x, "residual": r, "tail_bound": b }))
                .collect();
            Ok(Computed {
                summary: format!(
                    "slope = {:.6} (residual standard error {:.3e}, slope standard error {:.3e}), {} points used, {} excluded",
                    fit.slope,
                    fit.confidence,
                    fit.slope_std_error,
                    fit.used.len(),
                    fit.excluded.len()
                ),
                result: json!({ "fit": fit, "points": rows }),
                status: Status::Ok,
                provenance: vec![("fit.slope", "least-squares slope of log|residual| against log X")],
            })
        }
    }
}

pub fn synthetic_points(kind: &str, grid: &[f64]) -> Vec<(f64, f64, f64)> {
    grid.iter()
        .map(|&x| {
            let r = match kind {
                "pure" => x.powf(-0.5),
                _ => x.powf(-0.5) * (2.0 + (5.0 * x.ln()).sin()),
            };
            (x, r, 0.0)
        })
        .collect()
}

pub const MOMENT_CSV_HEADER: [&str; 6] = ["X", "smoothed", "main", "residual", "ratio", "tail_bound"];

fn write_moment_csv(path: &Path, report: &MomentReport) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io("writing", path, e))?;
    w.write_record(MOMENT_CSV_HEADER).map_err(|e| io("writing", path, e))?;
    for r in &report.rows {
        w.write_record([r.x, r.smoothed, r.main, r.residual, r.ratio, r.tail_bound].map(|v| format!("{v:e}")))
            .map_err(|e| io("writing", path, e))?;
    }
    w.flush().map_err(|e| io("writing", path, e))
}

fn read_fit_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io("reading", path, e))?;
    let headers = r.headers().map_err(|e| io("reading", path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Failure::Config(ConfigError(format!("{}: missing column {name}", path.display()))))
    };
    let (cx, cr, cb) = (col("X")?, col("residual")?, col("tail_bound")?);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io("reading", path, e))?;
        let num = |j: usize| -> Result<f64, Failure> {
            rec.get(j)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Failure::Config(ConfigError(format!("{}: row {}: bad number", path.display(), i + 1))))
        };
        out.push((num(cx)?, num(cr)?, num(cb)?));
    }
    Ok(out)
}

fn moment_summary(r: &MomentReport) -> String {
    let mut s = format!(
        "{} x {}, N = {}, C = {:.12e} (tail bound {:.2e})\n{:>12} {:>20} {:>20} {:>14} {:>10} {:>10}\n",
        r.form_f,
        r.form_g,
        r.n_max,
        r.constant.c_direct,
        r.constant.truncation_bound,
        "X",
        "smoothed",
        "main",
        "residual",
        "ratio",
        "tail"
    );
    for row in &r.rows {
        s.push_str(&format!(
            "{:>12.3} {:>20.12e} {:>20.12e} {:>14.6e} {:>10.6} {:>10.2e}\n",
            row.x, row.smoothed, row.main, row.residual, row.ratio, row.tail_bound
        ));
    }
    match (&r.fit, &r.fit_error) {
        (Some(fit), _) => s.push_str(&format!(
            "slope of log|r| vs log X: {:.4} (standard error {:.3}), {} excluded\n",
            fit.slope,
            fit.slope_std_error,
            fit.excluded.len()
        )),
        (None, Some(e)) => s.push_str(&format!("no fit: {e}\n")),
        _ => {}
    }
    s.push_str(r.theta_note);
    s
}

/// Runs the configured command. Identity failures are reported through the
/// envelope status, not as errors.
pub fn dispatch(config: RunConfig) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let computed = run(&config)?;
    let provenance: BTreeMap<String, String> = computed
        .provenance
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let envelope = ResultEnvelope {
        tool: TOOL,
        version: VERSION,
        command: config.command.name(),
        config,
        timing_seconds: start.elapsed().as_secs_f64(),
        status: computed.status,
        result: computed.result,
        provenance,
    };
    let lint = lint_bounds(&serde_json::to_value(&envelope).expect("envelope serializes"));
    if !lint.is_empty() {
        return Err(Failure::Lint(lint));
    }
    Ok(Outcome {
        envelope,
        summary: computed.summary,
    })
}
