//! Command-line flags, config files and the resolved [`RunConfig`].
//!
//! Precedence: flags, then the `--config` file (`key = value` lines, keys
//! named after the long flags), then profile defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use cuspsum::mellin::{ContourSpec, Rule};
use cuspsum::moments::{geometric_grid, required_coefficients, Profile};
use cuspsum::qseries::{EIGENFORM_WEIGHTS, EXACT_LIMIT, FLOAT_LIMIT};
use cuspsum::Complex64;
use serde::Serialize;

pub const CACHE_ENV: &str = "CUSPSUM_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "cuspsum",
    version,
    about = "Partial sums of cusp form coefficients and their Dirichlet series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// File of `key = value` lines supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Write the JSON result envelope here (`-` for standard output).
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,

    /// Coefficient cache directory (overrides CUSPSUM_CACHE_DIR).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    /// Built-in defaults: `default` or `large`.
    #[arg(long, global = true)]
    pub profile: Option<String>,

    /// Identity-check tolerance on the relative difference.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate q-expansion coefficients and write them to a cache file.
    Coeffs(CoeffsArgs),
    /// Check the Hecke relations exactly up to a bound.
    CheckHecke(HeckeArgs),
    /// Sharp-cutoff mean square of partial sums against C X^{k+1/2}.
    Average(AverageArgs),
    /// Rankin-Selberg L(s, f x f).
    Rankin(SeriesArgs),
    /// Both forms of the smoothed main-term constant and the sharp-cutoff constant.
    Constants(ConstantsArgs),
    /// D(s, S_f x S_f).
    Dseries(SeriesArgs),
    /// Barnes integral against its closed form.
    Barnes(BarnesArgs),
    /// D(s) against W(s) plus the Mellin-Barnes contour integral.
    VerifyDecomp(DecompArgs),
    /// Inverse Mellin transform of D(s) X^s Γ(s) against the smoothed sum.
    VerifySmoothing(SmoothingArgs),
    /// Smoothed second moments on a grid of X with a residual slope fit.
    Moment(MomentArgs),
    /// Log-log slope fit of residuals from a moment CSV or a synthetic fixture.
    Fit(FitArgs),
}

#[derive(Debug, Args, Default)]
pub struct FormArgs {
    /// Weight of the level-1 eigenform (12, 16, 18, 20, 22, 26).
    #[arg(long)]
    pub weight: Option<u32>,
    /// Form name: `delta` or `eig<k>` (alternative to --weight).
    #[arg(long)]
    pub form: Option<String>,
    /// Number of coefficients.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ContourArgs {
    /// Truncation height T of the vertical line.
    #[arg(long)]
    pub height: Option<f64>,
    /// Trapezoid step h.
    #[arg(long)]
    pub step: Option<f64>,
    /// `trapezoid` or `adaptive`.
    #[arg(long)]
    pub rule: Option<String>,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Output cache file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exact big-integer coefficients (N <= 100000).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct HeckeArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Largest index examined.
    #[arg(long)]
    pub bound: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Cutoff X.
    #[arg(long)]
    pub x: Option<usize>,
    /// Read coefficients from this cache file instead of generating them.
    #[arg(long)]
    pub coeff_cache: Option<PathBuf>,
    /// Write (n, S(n)) rows to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Range `A:B` of n for the CSV (default 1:X).
    #[arg(long)]
    pub range: Option<String>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Point `RE,IM` (or `RE`).
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Use the product without conjugation.
    #[arg(long)]
    pub unconjugated: bool,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Pair S_f with S_g instead of its conjugate.
    #[arg(long)]
    pub unconjugated: bool,
}

#[derive(Debug, Args)]
pub struct BarnesArgs {
    /// β as `RE,IM` or `RE`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// t > 0.
    #[arg(long)]
    pub t: Option<f64>,
    /// Abscissa γ with -Re β < γ < 0.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub contour: ContourArgs,
}

#[derive(Debug, Args)]
pub struct DecompArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Point `RE,IM` with RE >= 6.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Abscissa γ of the z-contour.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub contour: ContourArgs,
}

#[derive(Debug, Args)]
pub struct SmoothingArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// Smoothing scale X (1 <= X <= N/30).
    #[arg(long)]
    pub x: Option<f64>,
    /// Abscissa of the s-contour.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub contour: ContourArgs,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub form: FormArgs,
    /// `geometric:LO:HI:COUNT` or `list:X1,X2,...`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Write the per-X table to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Pair S_f with S_g instead of its conjugate.
    #[arg(long)]
    pub unconjugated: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Moment CSV with columns X, residual and tail_bound.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `pure` (r = X^{-1/2}) or `oscillatory` (r = X^{-1/2}(2 + sin(5 ln X))).
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Grid for synthetic fixtures.
    #[arg(long)]
    pub grid: Option<String>,
}

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Coeffs,
    CheckHecke,
    Average,
    Rankin,
    Constants,
    Dseries,
    Barnes,
    VerifyDecomp,
    VerifySmoothing,
    Moment,
    Fit,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Coeffs => "coeffs",
            CommandKind::CheckHecke => "check-hecke",
            CommandKind::Average => "average",
            CommandKind::Rankin => "rankin",
            CommandKind::Constants => "constants",
            CommandKind::Dseries => "dseries",
            CommandKind::Barnes => "barnes",
            CommandKind::VerifyDecomp => "verify-decomp",
            CommandKind::VerifySmoothing => "verify-smoothing",
            CommandKind::Moment => "moment",
            CommandKind::Fit => "fit",
        }
    }

    /// Default identity tolerance on the relative difference.
    pub fn default_tolerance(self) -> Option<f64> {
        match self {
            CommandKind::Barnes => Some(1e-8),
            CommandKind::VerifyDecomp => Some(1e-4),
            CommandKind::VerifySmoothing => Some(1e-6),
            CommandKind::Constants => Some(1e-10),
            _ => None,
        }
    }
}

/// Fully resolved and validated run parameters; echoed in every envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub profile: Profile,
    pub weight: Option<u32>,
    pub n_max: Option<usize>,
    pub exact: bool,
    pub conjugated: bool,
    pub s: Option<[f64; 2]>,
    pub x: Option<f64>,
    pub bound: Option<usize>,
    pub beta: Option<[f64; 2]>,
    pub t: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub contour: Option<ContourSpec>,
    pub tolerance: Option<f64>,
    pub synthetic: Option<String>,
    pub range: Option<(usize, usize)>,
    pub cache_dir: Option<PathBuf>,
    pub coeff_cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl RunConfig {
    pub fn s_complex(&self) -> Option<Complex64> {
        self.s.map(|[re, im]| Complex64::new(re, im))
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("config line {}: expected key = value", i + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: &[&str] = &[
    "beta",
    "bound",
    "cache-dir",
    "coeff-cache",
    "csv",
    "exact",
    "form",
    "gamma",
    "grid",
    "height",
    "input",
    "n",
    "out",
    "profile",
    "range",
    "rule",
    "s",
    "sigma",
    "step",
    "synthetic",
    "t",
    "tolerance",
    "unconjugated",
    "weight",
    "x",
];

struct Layers {
    file: BTreeMap<String, String>,
}

impl Layers {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| bad(format!("config key {key} = {v:?}: {e}"))),
        }
    }

    fn flag(&self, set: bool, key: &str) -> Result<bool, ConfigError> {
        Ok(set || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    /// Keys unknown to every command are rejected; keys for other commands
    /// are ignored so one file can serve several commands.
    fn check_unknown(&self) -> Result<(), ConfigError> {
        match self.file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            Some(k) => Err(bad(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }
}

pub fn parse_complex(s: &str) -> Result<[f64; 2], ConfigError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| bad(format!("not a number: {p:?}")));
    let v = match parts.as_slice() {
        [re] => [num(re)?, 0.0],
        [re, im] => [num(re)?, num(im)?],
        _ => return Err(bad(format!("expected RE,IM, got {s:?}"))),
    };
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(bad(format!("non-finite point {s:?}")))
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, ConfigError> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| bad(format!("grid {s:?}: expected geometric:LO:HI:COUNT or list:...")))?;
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("grid {s:?}: not a number: {p:?}")))
    };
    let grid = match kind {
        "geometric" => {
            let p: Vec<&str> = rest.split(':').collect();
            if p.len() != 3 {
                return Err(bad(format!("grid {s:?}: expected geometric:LO:HI:COUNT")));
            }
            let count: usize = p[2].trim().parse().map_err(|_| bad(format!("grid {s:?}: bad count")))?;
            geometric_grid(num(p[0])?, num(p[1])?, count).map_err(|e| bad(format!("grid {s:?}: {e}")))?
        }
        "list" => rest.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad(format!("grid {s:?}: unknown kind {kind:?}"))),
    };
    if grid.is_empty()
        || !(grid[0] > 0.0)
        || grid.windows(2).any(|w| !(w[0] < w[1]))
        || grid.iter().any(|x| !x.is_finite())
    {
        return Err(bad(format!(
            "grid {s:?}: must be positive, finite and strictly increasing"
        )));
    }
    Ok(grid)
}

fn parse_range(s: &str) -> Result<(usize, usize), ConfigError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| bad(format!("range {s:?}: expected A:B")))?;
    let a: usize = a.trim().parse().map_err(|_| bad(format!("range {s:?}")))?;
    let b: usize = b.trim().parse().map_err(|_| bad(format!("range {s:?}")))?;
    if a == 0 || a > b {
        return Err(bad(format!("range {s:?}: need 1 <= A <= B")));
    }
    Ok((a, b))
}

fn weight_of(layers: &Layers, form: &FormArgs) -> Result<Option<u32>, ConfigError> {
    let weight = layers.pick(form.weight, "weight")?;
    let name = layers.pick(form.form.clone(), "form")?;
    let from_name = match name.as_deref() {
        None => None,
        Some("delta") => Some(12),
        Some(other) => Some(
            other
                .strip_prefix("eig")
                .and_then(|k| k.parse::<u32>().ok())
                .ok_or_else(|| bad(format!("unknown form {other:?} (delta or eig<k>)")))?,
        ),
    };
    match (weight, from_name) {
        (Some(w), Some(v)) if w != v => Err(bad(format!("--weight {w} conflicts with --form (weight {v})"))),
        (w, v) => Ok(w.or(v)),
    }
}

fn check_weight(w: u32) -> Result<u32, ConfigError> {
    if EIGENFORM_WEIGHTS.contains(&w) {
        Ok(w)
    } else {
        Err(bad(format!(
            "unsupported weight {w}: level-1 cusp space is not one-dimensional (supported: 12, 16, 18, 20, 22, 26)"
        )))
    }
}

fn check_n(n: usize, exact: bool) -> Result<usize, ConfigError> {
    let limit = if exact { EXACT_LIMIT } else { FLOAT_LIMIT };
    if n == 0 || n > limit {
        return Err(bad(format!(
            "n = {n} outside 1..={limit} for the {} path",
            if exact { "exact" } else { "float" }
        )));
    }
    Ok(n)
}

fn contour(layers: &Layers, args: &ContourArgs, abscissa: f64) -> Result<ContourSpec, ConfigError> {
    let height = layers
        .pick(args.height, "height")?
        .unwrap_or(ContourSpec::DEFAULT_HEIGHT);
    let step = layers.pick(args.step, "step")?.unwrap_or(ContourSpec::DEFAULT_STEP);
    let rule = match layers.pick(args.rule.clone(), "rule")?.as_deref() {
        None | Some("trapezoid") => Rule::Trapezoid,
        Some("adaptive") => Rule::Adaptive,
        Some(r) => return Err(bad(format!("unknown rule {r:?} (trapezoid|adaptive)"))),
    };
    let spec = ContourSpec::new(abscissa, height, step).map_err(|e| bad(e.to_string()))?;
    Ok(spec.with_rule(rule))
}

impl RunConfig {
    /// Resolves flags over the config file over profile defaults and
    /// validates the result.
    pub fn resolve(cli: &Cli, env_cache_dir: Option<PathBuf>) -> Result<Self, ConfigError> {
        let file = match &cli.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| bad(format!("config {}: {e}", p.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let layers = Layers { file };
        let profile = match layers.pick(cli.profile.clone(), "profile")? {
            Some(p) => p.parse::<Profile>().map_err(|e| bad(e.to_string()))?,
            None => Profile::Default,
        };
        let tolerance = layers.pick(cli.tolerance, "tolerance")?;
        let cache_dir = cli
            .cache_dir
            .clone()
            .or(env_cache_dir)
            .or(layers.pick(None::<PathBuf>, "cache-dir")?);

        let mut c = RunConfig {
            command: CommandKind::Fit,
            profile,
            weight: None,
            n_max: None,
            exact: false,
            conjugated: true,
            s: None,
            x: None,
            bound: None,
            beta: None,
            t: None,
            grid: None,
            contour: None,
            tolerance: None,
            synthetic: None,
            range: None,
            cache_dir,
            coeff_cache: None,
            out: None,
            csv: None,
            input: None,
        };

        let weight =
            |form: &FormArgs| -> Result<u32, ConfigError> { check_weight(weight_of(&layers, form)?.unwrap_or(12)) };
        let point = |flag: &Option<String>, default: Option<&str>| -> Result<[f64; 2], ConfigError> {
            match layers.pick(flag.clone(), "s")?.as_deref().or(default) {
                Some(s) => parse_complex(s),
                None => Err(bad("missing --s")),
            }
        };

        match &cli.command {
            Command::Coeffs(a) => {
                c.command = CommandKind::Coeffs;
                c.weight = Some(weight(&a.form)?);
                c.exact = layers.flag(a.exact, "exact")?;
                c.n_max = Some(check_n(layers.pick(a.form.n, "n")?.unwrap_or(10_000), c.exact)?);
                c.out = Some(
                    layers
                        .pick(a.out.clone(), "out")?
                        .ok_or_else(|| bad("coeffs needs --out PATH"))?,
                );
            }
            Command::CheckHecke(a) => {
                c.command = CommandKind::CheckHecke;
                c.weight = Some(weight(&a.form)?);
                c.exact = true;
                let bound = layers.pick(a.bound, "bound")?.unwrap_or(10_000);
                let bound = check_n(bound, true)?;
                if bound < 2 {
                    return Err(bad("bound must be at least 2"));
                }
                c.bound = Some(bound);
                c.n_max = Some(check_n(layers.pick(a.form.n, "n")?.unwrap_or(bound).max(bound), true)?);
            }
            Command::Average(a) => {
                c.command = CommandKind::Average;
                c.weight = Some(weight(&a.form)?);
                let x = layers.pick(a.x, "x")?.unwrap_or(100_000);
                let n = layers.pick(a.form.n, "n")?.unwrap_or(x);
                if x == 0 || x > n {
                    return Err(bad(format!("need 1 <= x <= n, got x = {x}, n = {n}")));
                }
                c.x = Some(x as f64);
                c.n_max = Some(check_n(n, false)?);
                c.coeff_cache = layers.pick(a.coeff_cache.clone(), "coeff-cache")?;
                c.csv = layers.pick(a.csv.clone(), "csv")?;
                c.range = match layers.pick(a.range.clone(), "range")? {
                    Some(r) => {
                        let r = parse_range(&r)?;
                        if r.1 > n {
                            return Err(bad(format!("range end {} beyond n = {n}", r.1)));
                        }
                        Some(r)
                    }
                    None => c.csv.as_ref().map(|_| (1, x)),
                };
            }
            Command::Rankin(a) | Command::Dseries(a) => {
                c.command = if matches!(cli.command, Command::Rankin(_)) {
                    CommandKind::Rankin
                } else {
                    CommandKind::Dseries
                };
                c.weight = Some(weight(&a.form)?);
                c.n_max = Some(check_n(layers.pick(a.form.n, "n")?.unwrap_or(100_000), false)?);
                c.s = Some(point(&a.s, None)?);
                c.conjugated = !layers.flag(a.unconjugated, "unconjugated")?;
            }
            Command::Constants(a) => {
                c.command = CommandKind::Constants;
                c.weight = Some(weight(&a.form)?);
                let n = check_n(layers.pick(a.form.n, "n")?.unwrap_or(100_000), false)?;
                if n < 1000 {
                    return Err(bad("constants need n >= 1000"));
                }
                c.n_max = Some(n);
                c.conjugated = !layers.flag(a.unconjugated, "unconjugated")?;
            }
            Command::Barnes(a) => {
                c.command = CommandKind::Barnes;
                let beta = parse_complex(&layers.pick(a.beta.clone(), "beta")?.unwrap_or_else(|| "2".into()))?;
                let t = layers.pick(a.t, "t")?.unwrap_or(0.5);
                let gamma = layers.pick(a.gamma, "gamma")?.unwrap_or(-beta[0] / 2.0);
                if !(gamma < 0.0 && gamma > -beta[0]) {
                    return Err(bad(format!(
                        "need -Re beta < gamma < 0, got gamma = {gamma}, Re beta = {}",
                        beta[0]
                    )));
                }
                if !(t > 0.0 && t.is_finite()) {
                    return Err(bad("need t > 0"));
                }
                c.beta = Some(beta);
                c.t = Some(t);
                c.contour = Some(contour(&layers, &a.contour, gamma)?);
            }
            Command::VerifyDecomp(a) => {
                c.command = CommandKind::VerifyDecomp;
                c.weight = Some(weight(&a.form)?);
                c.n_max = Some(check_n(layers.pick(a.form.n, "n")?.unwrap_or(100_000), false)?);
                let s = point(&a.s, Some("6,0"))?;
                let gamma = layers.pick(a.gamma, "gamma")?.unwrap_or(2.0);
                if !(s[0] >= 6.0) {
                    return Err(bad(format!("need Re s >= 6, got {}", s[0])));
                }
                if !(gamma > 1.0 && gamma < s[0] - 1.0 && s[0] - gamma >= 2.5) {
                    return Err(bad(format!(
                        "need 1 < gamma < Re s - 1 and Re s - gamma >= 2.5, got gamma = {gamma}"
                    )));
                }
                c.s = Some(s);
                c.contour = Some(contour(&layers, &a.contour, gamma)?);
            }
            Command::VerifySmoothing(a) => {
                c.command = CommandKind::VerifySmoothing;
                c.weight = Some(weight(&a.form)?);
                let n = check_n(layers.pick(a.form.n, "n")?.unwrap_or(10_000), false)?;
                let x = layers.pick(a.x, "x")?.unwrap_or(100.0);
                if !(x >= 1.0 && x <= n as f64 / 30.0) {
                    return Err(bad(format!("need 1 <= x <= n/30 = {}, got x = {x}", n as f64 / 30.0)));
                }
                let sigma = layers.pick(a.sigma, "sigma")?.unwrap_or(4.0);
                if !(sigma >= 2.5) {
                    return Err(bad(format!("need sigma >= 2.5, got {sigma}")));
                }
                c.n_max = Some(n);
                c.x = Some(x);
                c.contour = Some(contour(&layers, &a.contour, sigma)?);
            }
            Command::Moment(a) => {
                c.command = CommandKind::Moment;
                c.weight = Some(weight(&a.form)?);
                let grid = match layers.pick(a.grid.clone(), "grid")? {
                    Some(g) => parse_grid(&g)?,
                    None => profile.grid(),
                };
                let needed = required_coefficients(&grid);
                let n = layers.pick(a.form.n, "n")?.unwrap_or(needed);
                if n < needed {
                    return Err(bad(format!("grid needs n >= {needed} (30 max X), got {n}")));
                }
                c.n_max = Some(check_n(n, false)?);
                c.grid = Some(grid);
                c.csv = layers.pick(a.csv.clone(), "csv")?;
                c.conjugated = !layers.flag(a.unconjugated, "unconjugated")?;
            }
            Command::Fit(a) => {
                c.command = CommandKind::Fit;
                c.input = layers.pick(a.input.clone(), "input")?;
                c.synthetic = layers.pick(a.synthetic.clone(), "synthetic")?;
                match (&c.input, c.synthetic.as_deref()) {
                    (Some(_), None) => {}
                    (None, Some("pure" | "oscillatory")) => {
                        c.grid = Some(match layers.pick(a.grid.clone(), "grid")? {
                            Some(g) => parse_grid(&g)?,
                            None => profile.grid(),
                        });
                    }
                    (None, Some(other)) => {
                        return Err(bad(format!("unknown synthetic fixture {other:?} (pure|oscillatory)")))
                    }
                    _ => return Err(bad("fit needs exactly one of --input or --synthetic")),
                }
            }
        }
        c.tolerance = tolerance.or(c.command.default_tolerance());
        if let Some(t) = c.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(bad("tolerance must be positive"));
            }
        }
        layers.check_unknown()?;
        Ok(c)
    }
}

/// `CUSPSUM_CACHE_DIR`, if set and non-empty.
pub fn env_cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}
