//! Parameter-grid engine: cartesian sweeps over rescaled model parameters,
//! figure presets, and CSV / JSON-lines / gnuplot emission.
//!
//! Rows are evaluated on a rayon pool and collected in row-major order, so
//! the emitted tables depend only on the configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::qfi::{evaluate, Method, Parameter, QfiResult, RescaledPoint};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "QFI_DETECTOR_THREADS";
/// Points per swept axis in the figure presets.
pub const FIGURE_POINTS: usize = 201;
/// Largest drift accepted by the non-relativistic closed forms without override.
pub const MAX_NONREL_DRIFT: f64 = 0.2;

pub const FIGURE_IDS: [&str; 12] = [
    "fig1a", "fig1b", "fig2", "fig3", "fig4a", "fig4b", "fig4c", "fig5", "fig6a", "fig6b", "fig7",
    "fig8",
];

/// Coordinates a grid can sweep or pin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    Theta,
    Phi,
    Tau,
    /// rescaled acceleration `ã`
    A,
    /// `2π/ã`
    Beta,
    W,
}

impl Coordinate {
    pub fn as_str(self) -> &'static str {
        match self {
            Coordinate::Theta => "theta",
            Coordinate::Phi => "phi",
            Coordinate::Tau => "tau",
            Coordinate::A => "a",
            Coordinate::Beta => "beta",
            Coordinate::W => "w",
        }
    }

    fn default_value(self) -> f64 {
        match self {
            Coordinate::Theta => PI / 2.0,
            Coordinate::Phi => 0.0,
            Coordinate::Tau => 1.0,
            Coordinate::A => PI,
            Coordinate::Beta => 2.0,
            Coordinate::W => 0.01,
        }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coordinate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "theta" => Coordinate::Theta,
            "phi" => Coordinate::Phi,
            "tau" => Coordinate::Tau,
            "a" => Coordinate::A,
            "beta" => Coordinate::Beta,
            "w" => Coordinate::W,
            other => {
                return Err(Error::InvalidParameter {
                    name: "coordinate",
                    reason: format!("unknown coordinate `{other}`"),
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValues {
    Range {
        start: f64,
        stop: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
    List {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: Coordinate,
    #[serde(flatten)]
    pub values: AxisValues,
}

impl Axis {
    pub fn range(name: Coordinate, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            values: AxisValues::Range {
                start,
                stop,
                count,
                spacing: Spacing::Linear,
            },
        }
    }

    pub fn log_range(name: Coordinate, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            values: AxisValues::Range {
                start,
                stop,
                count,
                spacing: Spacing::Log,
            },
        }
    }

    pub fn list(name: Coordinate, values: &[f64]) -> Self {
        Self {
            name,
            values: AxisValues::List {
                values: values.to_vec(),
            },
        }
    }

    /// Grid points; endpoints are reproduced exactly.
    pub fn points(&self) -> Vec<f64> {
        match &self.values {
            AxisValues::List { values } => values.clone(),
            AxisValues::Range {
                start,
                stop,
                count,
                spacing,
            } => {
                let n = *count;
                if n == 0 {
                    return Vec::new();
                }
                if n == 1 {
                    return vec![*start];
                }
                let last = (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            return *stop;
                        }
                        let t = i as f64 / last;
                        match spacing {
                            Spacing::Linear => start + (stop - start) * t,
                            Spacing::Log => (start.ln() + (stop.ln() - start.ln()) * t).exp(),
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
    Gnuplot,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json" => Ok(OutputFormat::Jsonl),
            "gnuplot" | "dat" => Ok(OutputFormat::Gnuplot),
            other => Err(Error::InvalidParameter {
                name: "format",
                reason: format!("unknown output format `{other}` (csv, jsonl, gnuplot)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_target() -> String {
    "grid".into()
}

fn default_methods() -> Vec<Method> {
    vec![Method::ClosedForm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub schema_version: Option<u32>,
    /// Figure identifier or `grid`.
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub quantities: Vec<Parameter>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Allow `w` beyond the non-relativistic validity bound.
    #[serde(default)]
    pub allow_outside_validity: bool,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl SweepConfig {
    pub fn new(axes: Vec<Axis>, quantities: Vec<Parameter>, methods: Vec<Method>) -> Self {
        Self {
            schema_version: Some(1),
            target: default_target(),
            axes,
            fixed: BTreeMap::new(),
            quantities,
            methods,
            allow_outside_validity: false,
            output: None,
        }
    }

    pub fn fix(mut self, name: Coordinate, value: f64) -> Self {
        self.fixed.insert(name.as_str().into(), value);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::ConfigInvalid(vec![FieldError::new(
                "config",
                format!("malformed JSON: {e}"),
            )])
        })
    }

    /// All field-level problems at once, or the resolved pinned values.
    fn resolve(&self) -> Result<BTreeMap<Coordinate, f64>> {
        let mut problems = Vec::new();
        if let Some(v) = self.schema_version {
            if v != 1 {
                problems.push(FieldError::new(
                    "schema_version",
                    format!("unsupported version {v} (expected 1)"),
                ));
            }
        }
        let mut fixed = BTreeMap::new();
        for (key, &value) in &self.fixed {
            match key.parse::<Coordinate>() {
                Ok(c) => {
                    if !value.is_finite() {
                        problems.push(FieldError::new(format!("fixed.{key}"), "must be finite"));
                    }
                    fixed.insert(c, value);
                }
                Err(_) => problems.push(FieldError::new(
                    format!("fixed.{key}"),
                    "unknown coordinate (theta, phi, tau, a, beta, w)",
                )),
            }
        }
        let mut seen = Vec::new();
        for (i, axis) in self.axes.iter().enumerate() {
            let field = format!("axes[{i}]");
            if seen.contains(&axis.name) {
                problems.push(FieldError::new(
                    &field,
                    format!("duplicate axis `{}`", axis.name),
                ));
            }
            seen.push(axis.name);
            if fixed.contains_key(&axis.name) {
                problems.push(FieldError::new(
                    &field,
                    format!("`{}` is both swept and fixed", axis.name),
                ));
            }
            match &axis.values {
                AxisValues::Range {
                    start,
                    stop,
                    count,
                    spacing,
                } => {
                    if *count < 2 {
                        problems.push(FieldError::new(
                            format!("{field}.count"),
                            format!("must be >= 2, got {count}"),
                        ));
                    }
                    if !start.is_finite() || !stop.is_finite() {
                        problems.push(FieldError::new(&field, "range ends must be finite"));
                    }
                    if *spacing == Spacing::Log && !(*start > 0.0 && *stop > 0.0) {
                        problems.push(FieldError::new(
                            format!("{field}.spacing"),
                            "log spacing needs positive start and stop",
                        ));
                    }
                }
                AxisValues::List { values } => {
                    if values.is_empty() {
                        problems.push(FieldError::new(format!("{field}.values"), "empty list"));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        problems.push(FieldError::new(format!("{field}.values"), "must be finite"));
                    }
                }
            }
        }
        let has = |c: Coordinate| seen.contains(&c) || fixed.contains_key(&c);
        if has(Coordinate::A) && has(Coordinate::Beta) {
            problems.push(FieldError::new(
                "axes",
                "`a` and `beta` are the same coordinate; give one",
            ));
        }
        if !self.allow_outside_validity {
            let too_fast = fixed
                .get(&Coordinate::W)
                .is_some_and(|w| w.abs() > MAX_NONREL_DRIFT)
                || self.axes.iter().any(|ax| {
                    ax.name == Coordinate::W
                        && ax.points().iter().any(|w| w.abs() > MAX_NONREL_DRIFT)
                });
            if too_fast {
                problems.push(FieldError::new(
                    "w",
                    format!(
                        "exceeds the non-relativistic bound {MAX_NONREL_DRIFT}; \
                         set allow_outside_validity to override"
                    ),
                ));
            }
        }
        if self.quantities.is_empty() {
            problems.push(FieldError::new(
                "quantities",
                "at least one of theta, phi, beta",
            ));
        }
        if self.methods.is_empty() {
            problems.push(FieldError::new("methods", "at least one route"));
        }
        if self.quantities.contains(&Parameter::Beta) && self.methods.contains(&Method::ClosedForm)
        {
            problems.push(FieldError::new(
                "methods",
                "closed_form is unavailable for beta; use bloch_derivative or sld_oracle",
            ));
        }
        if problems.is_empty() {
            Ok(fixed)
        } else {
            Err(Error::ConfigInvalid(problems))
        }
    }
}

/// Outcome of one route at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok(QfiResult),
    Error { kind: String, message: String },
}

impl Outcome {
    pub fn fisher(&self) -> Option<f64> {
        match self {
            Outcome::Ok(r) => Some(r.fisher),
            Outcome::Error { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteOutcome {
    pub param: Parameter,
    pub method: Method,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    /// Swept coordinates, in axis order.
    pub coordinates: Vec<(Coordinate, f64)>,
    pub results: Vec<RouteOutcome>,
    /// Evaluation time of this row in seconds; never written to files.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SweepRecord {
    pub fn coordinate(&self, c: Coordinate) -> Option<f64> {
        self.coordinates
            .iter()
            .find(|(k, _)| *k == c)
            .map(|(_, v)| *v)
    }

    pub fn fisher(&self, param: Parameter, method: Method) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.param == param && r.method == method)
            .and_then(|r| r.outcome.fisher())
    }

    /// Max relative spread among the successful routes for `param`.
    pub fn spread(&self, param: Parameter) -> Option<f64> {
        let vals: Vec<f64> = self
            .results
            .iter()
            .filter(|r| r.param == param)
            .filter_map(|r| r.outcome.fisher())
            .collect();
        if vals.len() < 2 {
            return None;
        }
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = hi.abs().max(lo.abs());
        Some(if scale == 0.0 { 0.0 } else { (hi - lo) / scale })
    }

    pub fn errors(&self) -> Vec<String> {
        self.results
            .iter()
            .filter_map(|r| match &r.outcome {
                Outcome::Error { kind, message } => {
                    Some(format!("{}_{}: {kind}: {message}", r.param, r.method))
                }
                Outcome::Ok(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub target: String,
    pub axes: Vec<Coordinate>,
    pub quantities: Vec<Parameter>,
    pub methods: Vec<Method>,
    pub records: Vec<SweepRecord>,
}

fn fmt_num(v: f64) -> String {
    // 17 significant digits
    format!("{v:.16e}")
}

impl SweepTable {
    /// Values of `(param, method)` down the table.
    pub fn column(&self, param: Parameter, method: Method) -> Vec<Option<f64>> {
        self.records
            .iter()
            .map(|r| r.fisher(param, method))
            .collect()
    }

    pub fn axis_column(&self, c: Coordinate) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.coordinate(c).unwrap_or(f64::NAN))
            .collect()
    }

    /// Rows whose coordinate `c` equals `value` (exactly, as stored).
    pub fn slice(&self, c: Coordinate, value: f64) -> Vec<&SweepRecord> {
        self.records
            .iter()
            .filter(|r| r.coordinate(c) == Some(value))
            .collect()
    }

    fn show_spread(&self) -> bool {
        self.methods.len() > 1
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axes.iter().map(|c| c.as_str().to_string()).collect();
        for p in &self.quantities {
            for m in &self.methods {
                h.push(format!("{p}_{m}"));
            }
            if self.show_spread() {
                h.push(format!("{p}_spread"));
            }
        }
        h.push("error".into());
        h
    }

    fn row(&self, rec: &SweepRecord) -> Vec<String> {
        let mut row: Vec<String> = rec.coordinates.iter().map(|(_, v)| fmt_num(*v)).collect();
        for &p in &self.quantities {
            for &m in &self.methods {
                row.push(rec.fisher(p, m).map(fmt_num).unwrap_or_default());
            }
            if self.show_spread() {
                row.push(rec.spread(p).map(fmt_num).unwrap_or_default());
            }
        }
        row.push(rec.errors().join("; "));
        row
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(out);
        w.write_record(self.header())?;
        for rec in &self.records {
            w.write_record(self.row(rec))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in &self.records {
            let coords: serde_json::Map<String, serde_json::Value> = rec
                .coordinates
                .iter()
                .map(|(c, v)| (c.as_str().to_string(), serde_json::json!(v)))
                .collect();
            let line = serde_json::json!({ "coordinates": coords, "results": rec.results });
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Whitespace table; a blank line separates blocks of the outer axis.
    pub fn write_gnuplot<W: Write>(&self, mut out: W) -> Result<()> {
        let header = self.header();
        writeln!(out, "# {}", header[..header.len() - 1].join(" "))?;
        let mut outer: Option<f64> = None;
        for rec in &self.records {
            if self.axes.len() > 1 {
                let v = rec.coordinates[0].1;
                if outer.is_some_and(|o| o != v) {
                    writeln!(out)?;
                }
                outer = Some(v);
            }
            let mut cells = self.row(rec);
            cells.pop();
            let cells: Vec<String> = cells
                .into_iter()
                .map(|c| if c.is_empty() { "NaN".into() } else { c })
                .collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, format: OutputFormat, out: W) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Jsonl => self.write_jsonl(out),
            OutputFormat::Gnuplot => self.write_gnuplot(out),
        }
    }

    pub fn to_bytes(&self, format: OutputFormat) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(buf)
    }

    pub fn write_file(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let bytes = self.to_bytes(format)?;
        std::fs::write(path, bytes)?;
        Ok(())
    }
}

/// Worker cap from the environment, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| Error::InvalidParameter {
                name: "QFI_DETECTOR_THREADS",
                reason: format!("expected a positive integer, got `{raw}`"),
            })?;
            if n == 0 {
                return Err(Error::InvalidParameter {
                    name: "QFI_DETECTOR_THREADS",
                    reason: "must be at least 1".into(),
                });
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))
}

fn evaluate_row(
    cfg: &SweepConfig,
    fixed: &BTreeMap<Coordinate, f64>,
    coordinates: Vec<(Coordinate, f64)>,
) -> SweepRecord {
    let start = Instant::now();
    let get = |c: Coordinate| {
        coordinates
            .iter()
            .find(|(k, _)| *k == c)
            .map(|(_, v)| *v)
            .or_else(|| fixed.get(&c).copied())
    };
    let theta = get(Coordinate::Theta).unwrap_or(Coordinate::Theta.default_value());
    let phi = get(Coordinate::Phi).unwrap_or(Coordinate::Phi.default_value());
    let tau = get(Coordinate::Tau).unwrap_or(Coordinate::Tau.default_value());
    let w = get(Coordinate::W).unwrap_or(Coordinate::W.default_value());
    let point = match (get(Coordinate::A), get(Coordinate::Beta)) {
        (_, Some(beta)) => RescaledPoint::from_beta(theta, phi, tau, beta, w),
        (Some(a), None) => RescaledPoint::new(theta, phi, tau, a, w),
        (None, None) => RescaledPoint::new(theta, phi, tau, Coordinate::A.default_value(), w),
    };
    let mut results = Vec::with_capacity(cfg.quantities.len() * cfg.methods.len());
    for &param in &cfg.quantities {
        for &method in &cfg.methods {
            let r = point.clone().and_then(|p| evaluate(&p, param, method));
            let outcome = match r {
                Ok(q) => Outcome::Ok(q),
                Err(e) => Outcome::Error {
                    kind: e.kind().into(),
                    message: e.to_string(),
                },
            };
            results.push(RouteOutcome {
                param,
                method,
                outcome,
            });
        }
    }
    SweepRecord {
        coordinates,
        results,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Evaluate the cartesian product of the axes, row-major in declaration order.
/// The worker count comes from `QFI_DETECTOR_THREADS` when set.
pub fn run_grid(cfg: &SweepConfig) -> Result<SweepTable> {
    run_grid_with_threads(cfg, threads_from_env()?)
}

/// [`run_grid`] with an explicit worker count (`None`: one per core).
pub fn run_grid_with_threads(cfg: &SweepConfig, threads: Option<usize>) -> Result<SweepTable> {
    let fixed = cfg.resolve()?;
    let axis_points: Vec<Vec<f64>> = cfg.axes.iter().map(Axis::points).collect();
    let total: usize = axis_points.iter().map(Vec::len).product();
    let rows: Vec<Vec<(Coordinate, f64)>> = (0..total)
        .map(|mut idx| {
            let mut coords = vec![(Coordinate::Theta, 0.0); cfg.axes.len()];
            for (k, pts) in axis_points.iter().enumerate().rev() {
                coords[k] = (cfg.axes[k].name, pts[idx % pts.len()]);
                idx /= pts.len();
            }
            coords
        })
        .collect();
    let pool = thread_pool(threads)?;
    let records = pool.install(|| {
        rows.into_par_iter()
            .map(|coords| evaluate_row(cfg, &fixed, coords))
            .collect::<Vec<_>>()
    });
    Ok(SweepTable {
        target: cfg.target.clone(),
        axes: cfg.axes.iter().map(|a| a.name).collect(),
        quantities: cfg.quantities.clone(),
        methods: cfg.methods.clone(),
        records,
    })
}

/// Preset grid of a figure: pinned caption values, 201 points per swept axis.
pub fn figure_config(id: &str) -> Result<SweepConfig> {
    use Coordinate::*;
    let n = FIGURE_POINTS;
    let closed = vec![Method::ClosedForm];
    let chain = vec![Method::BlochDerivative];
    let (axes, quantity, methods, fixed): (
        Vec<Axis>,
        Parameter,
        Vec<Method>,
        Vec<(Coordinate, f64)>,
    ) = match id {
        "fig1a" => (
            vec![
                Axis::list(Tau, &[1.0, 2.0, 3.0]),
                Axis::range(Theta, 0.0, PI, n),
            ],
            Parameter::Phi,
            closed,
            vec![(A, PI), (W, 0.01)],
        ),
        "fig1b" => (
            vec![
                Axis::list(Theta, &[PI / 2.0, PI / 3.0, PI / 6.0]),
                Axis::range(Tau, 0.0, 5.0, n),
            ],
            Parameter::Phi,
            closed,
            vec![(A, PI), (W, 0.01)],
        ),
        "fig2" => (
            vec![
                Axis::list(Tau, &[1.0, 2.0, 3.0]),
                Axis::range(A, 0.5, 50.0, n),
            ],
            Parameter::Phi,
            closed,
            vec![(Theta, PI / 2.0), (W, 0.01)],
        ),
        "fig3" => (
            vec![Axis::range(W, 0.0, 0.1, n)],
            Parameter::Phi,
            closed,
            vec![(Theta, PI / 2.0), (Tau, 1.0), (A, PI)],
        ),
        "fig4a" => (
            vec![
                Axis::list(Tau, &[1.0, 2.0, 3.0]),
                Axis::range(Theta, -PI, PI, n),
            ],
            Parameter::Theta,
            closed,
            vec![(A, PI), (W, 0.01)],
        ),
        "fig4b" => (
            vec![
                Axis::list(Theta, &[0.0, PI / 3.0, PI / 2.0]),
                Axis::range(Tau, 0.0, 5.0, n),
            ],
            Parameter::Theta,
            closed,
            vec![(A, PI), (W, 0.01)],
        ),
        "fig4c" => (
            vec![Axis::range(W, 0.0, 0.1, n)],
            Parameter::Theta,
            closed,
            vec![(Theta, 0.0), (Tau, 1.0), (A, PI)],
        ),
        "fig5" => (
            vec![
                Axis::list(Tau, &[1.0, 2.0, 3.0]),
                Axis::range(A, 0.5, 50.0, n),
            ],
            Parameter::Theta,
            closed,
            vec![(Theta, 0.0), (W, 0.01)],
        ),
        "fig6a" => (
            vec![
                Axis::list(Tau, &[10.0, 5.0, 1.0]),
                Axis::range(Theta, 0.0, 2.0 * PI, n),
            ],
            Parameter::Beta,
            chain,
            vec![(Beta, 10.0), (W, 0.01)],
        ),
        "fig6b" => (
            vec![
                Axis::list(Theta, &[PI, 2.0 * PI / 3.0, PI / 2.0]),
                Axis::range(Tau, 0.0, 50.0, n),
            ],
            Parameter::Beta,
            chain,
            vec![(Beta, 10.0), (W, 0.01)],
        ),
        "fig7" => (
            vec![
                Axis::list(Beta, &[1.0, 2.0, 3.0]),
                Axis::range(Tau, 0.0, 50.0, n),
            ],
            Parameter::Beta,
            chain,
            vec![(Theta, PI), (W, 0.01)],
        ),
        "fig8" => (
            vec![Axis::range(W, 0.0, 0.1, n)],
            Parameter::Beta,
            chain,
            vec![(Theta, PI), (Tau, 1.0), (Beta, 1.0)],
        ),
        other => return Err(Error::UnknownFigure(other.to_string())),
    };
    let mut cfg = SweepConfig::new(axes, vec![quantity], methods);
    cfg.target = id.to_string();
    for (c, v) in fixed {
        cfg = cfg.fix(c, v);
    }
    Ok(cfg)
}

pub fn run_figure(id: &str) -> Result<SweepTable> {
    run_grid(&figure_config(id)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_points_hit_endpoints() {
        let p = Axis::range(Coordinate::Theta, 0.0, PI, 201).points();
        assert_eq!(p.len(), 201);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[200], PI);
        assert_eq!(p[100], PI / 2.0);
        let l = Axis::log_range(Coordinate::A, 0.5, 50.0, 3).points();
        assert_eq!(l[0], 0.5);
        assert!((l[1] - 5.0).abs() < 1e-14);
        assert_eq!(l[2], 50.0);
    }

    #[test]
    fn two_point_grid_has_two_records() {
        let cfg = SweepConfig::new(
            vec![Axis::range(Coordinate::Tau, 0.0, 1.0, 2)],
            vec![Parameter::Phi],
            vec![Method::ClosedForm],
        );
        let t = run_grid(&cfg).unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.column(Parameter::Phi, Method::ClosedForm)[0], Some(1.0));
    }

    #[test]
    fn row_major_order() {
        let cfg = SweepConfig::new(
            vec![
                Axis::list(Coordinate::Tau, &[1.0, 2.0]),
                Axis::list(Coordinate::Theta, &[0.1, 0.2, 0.3]),
            ],
            vec![Parameter::Phi],
            vec![Method::ClosedForm],
        );
        let t = run_grid(&cfg).unwrap();
        let taus = t.axis_column(Coordinate::Tau);
        let thetas = t.axis_column(Coordinate::Theta);
        assert_eq!(taus, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(thetas, vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn failures_are_isolated() {
        let cfg = SweepConfig::new(
            vec![Axis::list(Coordinate::A, &[0.0, 1.0])],
            vec![Parameter::Phi],
            vec![Method::ClosedForm],
        );
        let t = run_grid(&cfg).unwrap();
        assert!(t.records[0].errors()[0].contains("FormulaDomainError"));
        assert!(t.records[1].errors().is_empty());
        assert!(t.records[1]
            .fisher(Parameter::Phi, Method::ClosedForm)
            .is_some());
    }

    #[test]
    fn config_diagnostics() {
        let mut cfg = SweepConfig::new(
            vec![
                Axis::range(Coordinate::Theta, 0.0, 1.0, 1),
                Axis::range(Coordinate::W, 0.0, 0.5, 3),
            ],
            vec![Parameter::Beta],
            vec![Method::ClosedForm],
        );
        cfg.fixed.insert("gamma".into(), 1.0);
        match run_grid(&cfg) {
            Err(Error::ConfigInvalid(fields)) => {
                let names: Vec<&str> = fields.iter().map(|f| f.field.as_str()).collect();
                assert!(names.contains(&"axes[0].count"));
                assert!(names.contains(&"w"));
                assert!(names.contains(&"methods"));
                assert!(names.contains(&"fixed.gamma"));
            }
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
        cfg.allow_outside_validity = true;
        cfg.fixed.clear();
        cfg.methods = vec![Method::BlochDerivative];
        cfg.axes[0] = Axis::range(Coordinate::Theta, 0.0, 1.0, 2);
        assert!(run_grid(&cfg).is_ok());
    }

    #[test]
    fn config_from_json() {
        let cfg = SweepConfig::from_json(
            r#"{"schema_version": 1,
                "axes": [{"name": "tau", "values": [1, 2]},
                         {"name": "a", "start": 0.5, "stop": 50, "count": 5, "spacing": "log"}],
                "fixed": {"theta": 0.5},
                "quantities": ["phi", "theta"],
                "methods": ["closed_form", "sld_oracle"]}"#,
        )
        .unwrap();
        let t = run_grid(&cfg).unwrap();
        assert_eq!(t.records.len(), 10);
        for r in &t.records {
            assert!(r.spread(Parameter::Phi).unwrap() < 1e-6);
            assert!(r.spread(Parameter::Theta).unwrap() < 1e-6);
        }
        assert!(SweepConfig::from_json("{").is_err());
        assert!(SweepConfig::from_json(r#"{"quantities": ["phi"], "bogus": 1}"#).is_err());
    }

    #[test]
    fn csv_header_and_digits() {
        let mut cfg = SweepConfig::new(
            vec![Axis::list(Coordinate::Theta, &[PI / 2.0])],
            vec![Parameter::Phi],
            vec![Method::ClosedForm, Method::BlochDerivative],
        );
        cfg = cfg.fix(Coordinate::Tau, 0.0);
        let bytes = run_grid(&cfg).unwrap().to_bytes(OutputFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "theta,phi_closed_form,phi_bloch_derivative,phi_spread,error"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1.5707963267948966e0,1.0000000000000000e0,"));
    }

    #[test]
    fn gnuplot_blocks() {
        let t = run_grid(&SweepConfig::new(
            vec![
                Axis::list(Coordinate::Tau, &[1.0, 2.0]),
                Axis::list(Coordinate::Theta, &[0.1, 0.2]),
            ],
            vec![Parameter::Phi],
            vec![Method::ClosedForm],
        ))
        .unwrap();
        let text = String::from_utf8(t.to_bytes(OutputFormat::Gnuplot).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 1);
        assert!(text.starts_with("# tau theta phi_closed_form\n"));
    }

    #[test]
    fn unknown_figure() {
        assert!(matches!(run_figure("fig9"), Err(Error::UnknownFigure(_))));
        for id in FIGURE_IDS {
            assert!(figure_config(id).is_ok(), "{id}");
        }
    }

    #[test]
    fn small_grid_is_fast() {
        let cfg = SweepConfig::new(
            vec![
                Axis::range(Coordinate::Theta, 0.0, PI, 11),
                Axis::range(Coordinate::Tau, 0.0, 5.0, 11),
                Axis::range(Coordinate::A, 0.5, 50.0, 11),
            ],
            vec![Parameter::Phi],
            vec![Method::ClosedForm],
        );
        let start = Instant::now();
        let t = run_grid(&cfg).unwrap();
        assert_eq!(t.records.len(), 1331);
        assert!(start.elapsed().as_secs_f64() < 3.0);
    }
}
