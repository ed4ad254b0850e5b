//! Batch front end: JSON run configs in, CSV or JSON result files out.
//!
//! Every output file carries [`SCHEMA_VERSION`] and the fully resolved
//! config. CSV files put both in leading `#` comment lines followed by a
//! header row.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dno::{dno_apply, dno_direct, dno_hat_series, dno_series_matrices, DirectOptions, OperatorSeries, SeriesOptions};
use crate::eigen::{analyticity_check, eigen_curve, perturbation_coeffs, steklov_spectrum};
use crate::error::{Error, Result};
use crate::expansion::{empirical_ratio, extension_series, SERIES_NORM_ORDER};
use crate::harmonics::{AngularField, Dimension};
use crate::sensitivity::{optimize_sigma, SeriesConfig};
use crate::shape::{min_radius, random_perturbation, RANDOM_HOLDER_ORDER};

pub const SCHEMA_VERSION: u32 = 1;

/// Default oracle tolerance.
pub const DEFAULT_ORACLE_TOL: f64 = 1e-14;

/// Exit codes of the `steklov` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SPECTRAL_VALIDITY: i32 = 3;
    pub const ORACLE_NONCONVERGENCE: i32 = 4;
}

/// Exit code for an error surfaced by [`run`] or [`load_config`].
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) => exit::CONFIG,
        Error::SpectralValidity { .. } => exit::SPECTRAL_VALIDITY,
        Error::RadiusExceeded { .. } => exit::ORACLE_NONCONVERGENCE,
        _ => exit::FAILURE,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Curves,
    Coeffs,
    Oracle,
    Radius,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Curves => "curves",
            Command::Coeffs => "coeffs",
            Command::Oracle => "oracle",
            Command::Radius => "radius",
            Command::Optimize => "optimize",
        }
    }

    pub fn default_format(self) -> Format {
        match self {
            Command::Coeffs | Command::Optimize => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// One spherical-harmonic or Fourier mode: `k` on the circle, `(l, m)` on
/// the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub bandlimit: usize,
    pub holder_target: f64,
    #[serde(default = "default_holder_order")]
    pub holder_order: u32,
}

fn default_holder_order() -> u32 {
    RANDOM_HOLDER_ORDER
}

/// An angular field given by modes, a constant, or a seeded random draw
/// normalized in a Hölder norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Modes(Vec<ModeSpec>),
    Constant(f64),
    Random(RandomSpec),
}

impl FieldSpec {
    pub fn build(&self, dim: Dimension) -> Result<AngularField> {
        match self {
            FieldSpec::Constant(c) => {
                finite("constant", *c)?;
                Ok(AngularField::constant(dim, *c))
            }
            FieldSpec::Random(r) => {
                finite("holder_target", r.holder_target)?;
                random_perturbation(dim, r.bandlimit, r.seed, r.holder_order, r.holder_target).map_err(config)
            }
            FieldSpec::Modes(modes) => {
                let mut out = AngularField::zeros(dim, 0);
                for mode in modes {
                    finite("amplitude", mode.amplitude)?;
                    let f = match (dim, mode.k, mode.l, mode.m) {
                        (Dimension::Circle, Some(k), None, None) => AngularField::circle_modes(&[(k, mode.amplitude)]),
                        (Dimension::Sphere, None, Some(l), Some(m)) => {
                            AngularField::sphere_modes(&[(l, m, mode.amplitude)]).map_err(config)?
                        }
                        (Dimension::Circle, ..) => return Err(Error::Config("circle modes take only `k`".into())),
                        (Dimension::Sphere, ..) => return Err(Error::Config("sphere modes take `l` and `m`".into())),
                    };
                    out = out.add_scaled(1.0, &f);
                }
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSpec {
    /// Index of the eigenvalue whose degenerate group mean is maximized.
    pub target: usize,
    pub steps: usize,
    pub step_size: f64,
}

/// A single run. Unset optional fields are filled by [`RunConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: Dimension,
    pub rho: FieldSpec,
    /// Angular bandlimit `K` (or `L`) of the truncated operator.
    pub bandlimit: usize,
    /// Series truncation `N`.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_nodes: Option<usize>,
    /// Number of eigenvalues or branches; defaults to all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Boundary data for `oracle` and `radius`; defaults to the first
    /// nonconstant mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<FieldSpec>,
    /// Unperturbed eigenvalues for `coeffs`; defaults to `0..=K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSpec>,
}

fn default_order() -> usize {
    6
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be finite, got {v}")))
    }
}

/// Reads and parses a config; every failure maps to [`Error::Config`].
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// A validated config with every default made explicit.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub rho: AngularField,
    pub xi: Option<AngularField>,
}

impl RunConfig {
    /// Validates the config for `command` and fills its defaults.
    pub fn resolve(&self, command: Command) -> Result<Resolved> {
        let mut cfg = self.clone();
        let dim = cfg.dimension;
        let rho = cfg.rho.build(dim)?;
        let k = cfg.bandlimit;
        let size = dim.coeff_len(k);
        if rho.effective_bandlimit(0.0) > k {
            return Err(Error::Config(format!("bandlimit {k} is below the bandlimit {} of rho", rho.effective_bandlimit(0.0))));
        }
        if cfg.order == 0 {
            return Err(Error::Config("`order` must be at least 1".into()));
        }
        if let Some(e) = cfg.eps {
            finite("eps", e)?;
        }
        if let Some(grid) = &cfg.eps_grid {
            for &e in grid {
                finite("eps_grid", e)?;
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("`eps_grid` must be strictly increasing".into()));
            }
        }
        if let Some(t) = cfg.oracle_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("`oracle_tol` must be positive, got {t}")));
            }
        }
        if matches!(cfg.radial_nodes, Some(r) if r < 4) {
            return Err(Error::Config("`radial_nodes` must be at least 4".into()));
        }
        let need_eps = |c: &RunConfig| c.eps.ok_or_else(|| Error::Config(format!("`{}` needs `eps`", command.name())));
        let need_grid = |c: &RunConfig| {
            c.eps_grid
                .clone()
                .filter(|g| !g.is_empty())
                .ok_or_else(|| Error::Config(format!("`{}` needs a nonempty `eps_grid`", command.name())))
        };

        let mut xi = None;
        let mut largest_eps = 0.0f64;
        match command {
            Command::Spectrum => {
                largest_eps = need_eps(&cfg)?.abs();
                cfg.count = Some(cfg.count.unwrap_or(size));
            }
            Command::Curves => {
                let grid = need_grid(&cfg)?;
                if grid[0] != 0.0 || grid.len() < 2 {
                    return Err(Error::Config("`eps_grid` for curves must start at 0 and have at least 2 samples".into()));
                }
                largest_eps = grid[grid.len() - 1];
                cfg.count = Some(cfg.count.unwrap_or(size));
            }
            Command::Coeffs => {
                if cfg.order < 2 {
                    return Err(Error::Config("`coeffs` needs `order` >= 2".into()));
                }
                let lambda0 = cfg.lambda0.clone().unwrap_or_else(|| (0..=k).map(|l| l as f64).collect());
                for &l in &lambda0 {
                    finite("lambda0", l)?;
                    if l < 0.0 || l.fract() != 0.0 || l > k as f64 {
                        return Err(Error::Config(format!("lambda0 {l} is not an unperturbed eigenvalue for bandlimit {k}")));
                    }
                }
                cfg.lambda0 = Some(lambda0);
            }
            Command::Oracle | Command::Radius => {
                if command == Command::Oracle {
                    let grid = need_grid(&cfg)?;
                    if grid[0] <= 0.0 {
                        return Err(Error::Config("`eps_grid` for oracle must be positive".into()));
                    }
                    largest_eps = grid[grid.len() - 1];
                    cfg.oracle_tol = Some(cfg.oracle_tol.unwrap_or(DEFAULT_ORACLE_TOL));
                }
                let spec = cfg.xi.clone().unwrap_or_else(|| {
                    FieldSpec::Modes(vec![match dim {
                        Dimension::Circle => ModeSpec { k: Some(1), l: None, m: None, amplitude: 1.0 },
                        Dimension::Sphere => ModeSpec { k: None, l: Some(1), m: Some(0), amplitude: 1.0 },
                    }])
                });
                let field = spec.build(dim)?;
                if field.effective_bandlimit(0.0) > k {
                    return Err(Error::Config(format!("xi has bandlimit {} above {k}", field.effective_bandlimit(0.0))));
                }
                xi = Some(field.resized(k));
                cfg.xi = Some(spec);
            }
            Command::Optimize => {
                let eps = need_eps(&cfg)?;
                if eps <= 0.0 {
                    return Err(Error::Config("`optimize` needs eps > 0".into()));
                }
                largest_eps = eps;
                let opt = cfg.optimize.as_ref().ok_or_else(|| Error::Config("`optimize` needs an `optimize` section".into()))?;
                finite("step_size", opt.step_size)?;
                if opt.step_size <= 0.0 {
                    return Err(Error::Config("`step_size` must be positive".into()));
                }
                if opt.target >= size {
                    return Err(Error::Config(format!("target {} exceeds operator size {size}", opt.target)));
                }
            }
        }
        if let Some(c) = cfg.count {
            if c > size {
                return Err(Error::Config(format!("count {c} exceeds operator size {size}")));
            }
        }
        let min = min_radius(&rho, largest_eps).map_err(config)?;
        if min <= 0.0 {
            return Err(Error::Config(format!("1 + eps*rho reaches {min:e} at eps = {largest_eps}")));
        }
        Ok(Resolved { config: cfg, rho, xi })
    }
}

/// A table cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    #[serde(skip)]
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

/// Result of one subcommand before it is written.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: Command,
    pub config: RunConfig,
    pub tables: Vec<Table>,
    /// Structured fields added to JSON output.
    pub extra: Map<String, Value>,
}

/// Runs a subcommand and returns its report.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report> {
    let resolved = cfg.resolve(command)?;
    let mut report = Report { command, config: resolved.config.clone(), tables: Vec::new(), extra: Map::new() };
    let c = &resolved.config;
    let opts = SeriesOptions { k_work: None, radial_nodes: c.radial_nodes };
    let series = || -> Result<OperatorSeries> { dno_series_matrices(&resolved.rho, c.bandlimit, c.order, opts) };
    match command {
        Command::Spectrum => {
            let sp = steklov_spectrum(&series()?, c.eps.unwrap_or(0.0), c.count.unwrap_or(0))?;
            let mut t = Table::new("spectrum", &["branch", "sigma", "im_residual"]);
            for (i, (s, im)) in sp.values.iter().zip(&sp.im_residual).enumerate() {
                t.rows.push(vec![i.into(), (*s).into(), (*im).into()]);
            }
            report.tables.push(t);
        }
        Command::Curves => {
            let grid = c.eps_grid.clone().unwrap_or_default();
            let curves = eigen_curve(&series()?, &grid, c.count.unwrap_or(0))?;
            let mut samples = Table::new("curves", &["branch", "eps", "sigma", "im_residual"]);
            let degree = curves.first().map_or(0, |cv| cv.coeffs.len().saturating_sub(1));
            let mut cols = vec!["branch".to_string(), "residual".into(), "radius".into(), "suspect".into(), "warnings".into()];
            cols.extend((0..=degree).map(|n| format!("c{n}")));
            let mut fits = Table { name: "fits".into(), columns: cols, rows: Vec::new() };
            for cv in &curves {
                for ((e, s), im) in cv.eps.iter().zip(&cv.sigma).zip(&cv.im_residual) {
                    samples.rows.push(vec![cv.branch.into(), (*e).into(), (*s).into(), (*im).into()]);
                }
                let (radius, suspect) = match analyticity_check(cv) {
                    Ok(r) => (r.radius, r.suspect),
                    Err(_) => (f64::NAN, cv.residual > crate::eigen::SUSPECT_RESIDUAL),
                };
                let mut row: Vec<Cell> =
                    vec![cv.branch.into(), cv.residual.into(), radius.into(), suspect.into(), cv.warnings.join(" | ").into()];
                row.extend(cv.coeffs.iter().map(|v| Cell::from(*v)));
                fits.rows.push(row);
            }
            report.tables.push(samples);
            report.tables.push(fits);
        }
        Command::Coeffs => {
            let s = series()?;
            let mut t = Table::new("coeffs", &["lambda0", "branch", "sigma0", "sigma1", "sigma2"]);
            let mut groups = Vec::new();
            for &l in c.lambda0.as_deref().unwrap_or_default() {
                let branches = perturbation_coeffs(&s, l)?;
                for (b, bc) in branches.iter().enumerate() {
                    t.rows.push(vec![l.into(), b.into(), bc.sigma0.into(), bc.sigma1.into(), bc.sigma2.into()]);
                }
                groups.push(json!({
                    "lambda0": l,
                    "branches": branches.iter().map(|b| json!({"sigma0": b.sigma0, "sigma1": b.sigma1, "sigma2": b.sigma2})).collect::<Vec<_>>(),
                }));
            }
            report.tables.push(t);
            report.extra.insert("groups".into(), Value::Array(groups));
        }
        Command::Oracle => {
            let xi = resolved.xi.as_ref().expect("resolved xi");
            let s = series()?;
            let direct = DirectOptions { output_bandlimit: Some(c.bandlimit), ..DirectOptions::default() };
            let mut t = Table::new("oracle", &["eps", "err", "slope"]);
            let mut points = Vec::new();
            for &e in c.eps_grid.as_deref().unwrap_or_default() {
                let approx = dno_apply(&s, e, xi)?;
                let exact = dno_direct(&resolved.rho, e, xi, c.oracle_tol.unwrap_or(DEFAULT_ORACLE_TOL), direct)?;
                let err = relative_error(&approx, &exact);
                let slope = points.last().map_or(f64::NAN, |&(pe, perr): &(f64, f64)| (err / perr).ln() / (e / pe).ln());
                t.rows.push(vec![e.into(), err.into(), slope.into()]);
                points.push((e, err));
            }
            let mut fit = Table::new("oracle_fit", &["order", "slope"]);
            fit.rows.push(vec![c.order.into(), loglog_slope(&points).into()]);
            report.tables.push(t);
            report.tables.push(fit);
        }
        Command::Radius => {
            let xi = resolved.xi.as_ref().expect("resolved xi");
            let ext = extension_series(&resolved.rho, xi, c.order, None, c.radial_nodes)?;
            let hat = dno_hat_series(&resolved.rho, xi, c.order, opts)?;
            // Boundary terms measured one derivative below the interior norm.
            let hat_norms: Vec<f64> = hat.iter().map(|g| g.sobolev_norm(SERIES_NORM_ORDER - 1)).collect();
            let mut t = Table::new("radius", &["n", "u_norm", "g_hat_norm", "u_root_ratio", "g_hat_root_ratio"]);
            for n in 0..=c.order {
                let (ru, rg) = if n == 0 { (f64::NAN, f64::NAN) } else { (root_ratio(&ext.norms, n), root_ratio(&hat_norms, n)) };
                t.rows.push(vec![n.into(), ext.norms[n].into(), hat_norms[n].into(), ru.into(), rg.into()]);
            }
            let mut summary = Table::new("radius_summary", &["b_emp_u", "b_emp_g_hat", "sup_root_u", "sup_root_g_hat"]);
            let b_u = empirical_ratio(&ext.norms).unwrap_or(f64::NAN);
            let b_g = empirical_ratio(&hat_norms).unwrap_or(f64::NAN);
            summary.rows.push(vec![b_u.into(), b_g.into(), sup_root_ratio(&ext.norms, 3).into(), sup_root_ratio(&hat_norms, 3).into()]);
            report.tables.push(t);
            report.tables.push(summary);
        }
        Command::Optimize => {
            let opt = c.optimize.as_ref().expect("resolved optimize section");
            let sc = SeriesConfig { bandlimit: c.bandlimit, order: c.order, options: opts };
            let state = optimize_sigma(&resolved.rho, c.eps.unwrap_or(0.0), opt.target, opt.steps, opt.step_size, &sc)?;
            let mut h = Table::new("history", &["iteration", "objective", "gradient_norm", "volume", "step", "accepted"]);
            for e in &state.history {
                h.rows.push(vec![e.iteration.into(), e.objective.into(), e.gradient_norm.into(), e.volume.into(), e.step.into(), e.accepted.into()]);
            }
            let mut r = Table::new("rho", &["index", "coefficient"]);
            for (i, v) in state.rho.coeffs().iter().enumerate() {
                r.rows.push(vec![i.into(), (*v).into()]);
            }
            report.tables.push(h);
            report.tables.push(r);
            report.extra.insert("state".into(), serde_json::to_value(&state)?);
        }
    }
    Ok(report)
}

/// `(xₙ/x₀)^{1/n}`.
pub fn root_ratio(norms: &[f64], n: usize) -> f64 {
    (norms[n] / norms[0]).powf(1.0 / n as f64)
}

/// Largest root ratio over `n ≥ from`.
pub fn sup_root_ratio(norms: &[f64], from: usize) -> f64 {
    (from..norms.len()).map(|n| root_ratio(norms, n)).fold(f64::NAN, f64::max)
}

/// Least-squares slope of `log err` against `log ε`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(e, r)| (e.ln(), r.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `‖a − b‖ / ‖b‖` in coefficient norm.
pub fn relative_error(a: &AngularField, b: &AngularField) -> f64 {
    let bl = a.bandlimit().max(b.bandlimit());
    let (a, b) = (a.resized(bl), b.resized(bl));
    let diff: f64 = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).powi(2)).sum();
    let base: f64 = b.coeffs().iter().map(|y| y * y).sum();
    (diff / base).sqrt()
}

fn format_float(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_field(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

impl Report {
    /// CSV text of one table, prefixed by the provenance comment lines.
    pub fn csv(&self, table: &Table) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "# schema_version: {SCHEMA_VERSION}").unwrap();
        writeln!(out, "# command: {}", self.command.name()).unwrap();
        writeln!(out, "# config: {}", serde_json::to_string(&self.config)?).unwrap();
        writeln!(out, "{}", table.columns.join(",")).unwrap();
        for row in &table.rows {
            let fields: Vec<String> = row.iter().map(csv_field).collect();
            writeln!(out, "{}", fields.join(",")).unwrap();
        }
        Ok(out)
    }

    /// Single JSON document with every table.
    pub fn json(&self) -> Result<String> {
        let mut doc = Map::new();
        doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
        doc.insert("command".into(), json!(self.command.name()));
        doc.insert("config".into(), serde_json::to_value(&self.config)?);
        let mut tables = Map::new();
        for t in &self.tables {
            tables.insert(t.name.clone(), serde_json::to_value(t)?);
        }
        doc.insert("tables".into(), Value::Object(tables));
        for (k, v) in &self.extra {
            doc.insert(k.clone(), v.clone());
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        Ok(text)
    }

    /// Writes the report into `dir` and returns the files written.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        match format {
            Format::Json => {
                let path = dir.join(format!("{}.json", self.command.name()));
                fs::write(&path, self.json()?)?;
                written.push(path);
            }
            Format::Csv => {
                for t in &self.tables {
                    let path = dir.join(format!("{}.csv", t.name));
                    fs::write(&path, self.csv(t)?)?;
                    written.push(path);
                }
            }
        }
        Ok(written)
    }
}

/// Loads `config`, runs `command` and writes the results into `out`.
pub fn run(command: Command, config: &Path, out: &Path, format: Option<Format>) -> Result<Vec<PathBuf>> {
    let cfg = load_config(config)?;
    let report = execute(command, &cfg)?;
    report.write(out, format.unwrap_or(command.default_format()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    #[test]
    fn spectrum_of_the_disk() {
        let cfg = parse(r#"{"dimension": "2d", "rho": {"constant": 0.0}, "bandlimit": 8, "order": 2, "eps": 0.0}"#).unwrap();
        let report = execute(Command::Spectrum, &cfg).unwrap();
        let sigma: Vec<f64> = report.tables[0]
            .rows
            .iter()
            .map(|r| match r[1] {
                Cell::Float(v) => v,
                _ => panic!("sigma column"),
            })
            .collect();
        assert_eq!(sigma.len(), 17);
        for (i, s) in sigma.iter().enumerate() {
            assert!((s - i.div_ceil(2) as f64).abs() < 1e-12);
        }
        let csv = report.csv(&report.tables[0]).unwrap();
        assert!(csv.starts_with("# schema_version: 1\n# command: spectrum\n# config: {"));
        assert!(csv.contains("\nbranch,sigma,im_residual\n0,"));
        assert!(csv.contains("\"count\":17"));
    }

    #[test]
    fn scaling_family_oracle_is_exact() {
        let cfg =
            parse(r#"{"dimension": "circle", "rho": {"constant": 1.0}, "bandlimit": 4, "order": 16, "eps_grid": [0.05, 0.1, 0.2], "xi": {"modes": [{"k": 3, "amplitude": 1.0}]}}"#)
                .unwrap();
        let report = execute(Command::Oracle, &cfg).unwrap();
        // The truncated geometric tail ε¹⁷ is below 1e-10 on this grid.
        for row in &report.tables[0].rows {
            let (Cell::Float(e), Cell::Float(err)) = (&row[0], &row[1]) else { panic!() };
            assert!(*err <= 1e-10, "{e} {err}");
        }
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let bad = [
            r#"{"dimension": "2d", "rho": {"constant": 0.0}, "bandlimit": 4, "eps": 0.0, "extra": 1}"#,
            r#"{"dimension": "2d", "rho": {"modes": [{"l": 1, "m": 0, "amplitude": 1.0}]}, "bandlimit": 4, "eps": 0.0}"#,
            r#"{"dimension": "2d", "rho": {"modes": [{"k": 5, "amplitude": 1.0}]}, "bandlimit": 4, "eps": 0.0}"#,
            r#"{"dimension": "2d", "rho": {"constant": 0.0}, "bandlimit": 4}"#,
            r#"{"dimension": "2d", "rho": {"constant": 0.0}, "bandlimit": 4, "eps": 0.0, "count": 10}"#,
            r#"{"dimension": "2d", "rho": {"modes": [{"k": 1, "amplitude": 1.0}]}, "bandlimit": 4, "eps": 2.0}"#,
        ];
        for text in bad {
            let err = parse(text).and_then(|c| execute(Command::Spectrum, &c)).unwrap_err();
            assert_eq!(exit_code(&err), exit::CONFIG, "{text}: {err}");
        }
        let unsorted = parse(r#"{"dimension": "2d", "rho": {"constant": 0.0}, "bandlimit": 4, "eps_grid": [0.0, 0.2, 0.1]}"#).unwrap();
        assert_eq!(exit_code(&execute(Command::Curves, &unsorted).unwrap_err()), exit::CONFIG);
        let from_nonzero = parse(r#"{"dimension": "2d", "rho": {"constant": 0.0}, "bandlimit": 4, "eps_grid": [0.1, 0.2]}"#).unwrap();
        assert_eq!(exit_code(&execute(Command::Curves, &from_nonzero).unwrap_err()), exit::CONFIG);
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::SpectralValidity { max_imag: 1.0, tolerance: 1e-8 }), exit::SPECTRAL_VALIDITY);
        assert_eq!(exit_code(&Error::RadiusExceeded { iterations: 200, last_update: 1.0 }), exit::ORACLE_NONCONVERGENCE);
        assert_eq!(exit_code(&Error::Solver("x".into())), exit::FAILURE);
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1.5), "1.5");
        assert_eq!(format_float(1e-12), "1e-12");
        assert_eq!(format_float(f64::NAN), "NaN");
        assert_eq!(csv_field(&Cell::Text("a,b".into())), "\"a,b\"");
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.01, 0.02, 0.04].iter().map(|&e: &f64| (e, 3.0 * e.powi(5))).collect();
        assert!((loglog_slope(&pts) - 5.0).abs() < 1e-12);
    }
}
