//! Command-line front end.
//!
//! Physical inputs are rescaled (`ω₀ = γ₀ = 1`: `ã = a/ω₀`, `τ̃ = γ₀τ`)
//! unless `--raw-units` is given, in which case `--a`/`--tau` are read in
//! the units of `--omega0`/`--mu` and the conversion is printed.
//!
//! Exit codes: 0 success, 1 verification or numerical failure, 2 usage or
//! invalid input.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::dynamics::{evolve_ode, InitialState, StepControl};
use crate::error::{Error, FieldError, Result};
use crate::qfi::{evaluate, qfi_ultrarel, Method, Parameter, RescaledPoint};
use crate::rates::{
    planck_factors, rates_inertial, rates_nonrel, rates_numeric, rates_ultrarel, DetectorParams,
    QuadratureSpec, RateCoefficients, UltraRelDrift,
};
use crate::sweep::{run_figure, run_grid, OutputFormat, SweepConfig, SweepTable};
use crate::trajectory::Trajectory;
use crate::verify::{run_all, run_suite, DEFAULT_SEED};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "udw-qfi",
    version,
    about = "Unruh-DeWitt detector dynamics and quantum Fisher information"
)]
pub struct Cli {
    /// JSON parameter file (`schema_version: 1`); flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Emit results as JSON on stdout and errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    /// Read --a and --tau in raw units of --omega0/--mu and convert.
    #[arg(long, global = true)]
    pub raw_units: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate coefficients A, B and γ± for a trajectory.
    Rates(RatesArgs),
    /// Bloch vector of the evolved detector.
    Evolve(EvolveArgs),
    /// Quantum Fisher information by the requested routes.
    Qfi(QfiArgs),
    /// Reproduce a figure grid.
    Figure(FigureArgs),
    /// Run a parameter grid from a sweep JSON file.
    Sweep(SweepArgs),
    /// Run the acceptance property suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrajectoryArg {
    Inertial,
    Uniform,
    Drifted,
    Nonrel,
    Ultrarel,
}

#[derive(Debug, Args, Default)]
pub struct Physical {
    /// Acceleration (ã = a/ω₀ unless --raw-units).
    #[arg(long)]
    pub a: Option<f64>,
    /// Four-velocity drift component w.
    #[arg(long)]
    pub w: Option<f64>,
    /// Level spacing ω₀ (raw units only).
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Coupling μ (raw units only).
    #[arg(long)]
    pub mu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long, value_enum)]
    pub trajectory: Option<TrajectoryArg>,
    #[command(flatten)]
    pub phys: Physical,
    /// Also evaluate the Wightman-function transform numerically.
    #[arg(long)]
    pub numeric: bool,
    /// Ultra-relativistic limit w → ∞.
    #[arg(long)]
    pub infinite_drift: bool,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Evolution time (τ̃ = γ₀τ unless --raw-units).
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub phys: Physical,
    /// Cross-check against the RK4 integration of the Bloch equations.
    #[arg(long)]
    pub ode: bool,
    /// Ultra-relativistic limit w → ∞ (no dissipation).
    #[arg(long)]
    pub ultrarel: bool,
}

#[derive(Debug, Args)]
pub struct QfiArgs {
    /// Estimated parameter(s).
    #[arg(long, value_delimiter = ',')]
    pub param: Vec<String>,
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub phys: Physical,
    /// β = 2π/ã, alternative to --a.
    #[arg(long, conflicts_with = "a")]
    pub beta: Option<f64>,
    /// Routes: closed-form, bloch-derivative, sld-oracle (default: all applicable).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Ultra-relativistic limit w → ∞.
    #[arg(long)]
    pub ultrarel: bool,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure id (fig1a, fig1b, fig2, fig3, fig4a, fig4b, fig4c, fig5, fig6a, fig6b, fig7, fig8).
    pub id: String,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv, jsonl or gnuplot.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep configuration (JSON).
    pub grid: PathBuf,
    /// Output file, overriding the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run a single suite.
    #[arg(long)]
    pub suite: Option<String>,
    /// Seed of the randomized grids.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Values from `--config`; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schema_version: Option<u32>,
    trajectory: Option<String>,
    theta: Option<f64>,
    phi: Option<f64>,
    tau: Option<f64>,
    a: Option<f64>,
    beta: Option<f64>,
    w: Option<f64>,
    omega0: Option<f64>,
    mu: Option<f64>,
    param: Option<Vec<String>>,
    methods: Option<Vec<String>>,
    format: Option<String>,
    seed: Option<u64>,
}

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let cfg: FileConfig = serde_json::from_str(&text).map_err(|e| {
        Error::ConfigInvalid(vec![FieldError::new(
            "config",
            format!("{}: {e}", path.display()),
        )])
    })?;
    match cfg.schema_version {
        Some(SCHEMA_VERSION) => Ok(cfg),
        Some(v) => Err(Error::ConfigInvalid(vec![FieldError::new(
            "schema_version",
            format!("unsupported version {v} (expected {SCHEMA_VERSION})"),
        )])),
        None => Err(Error::ConfigInvalid(vec![FieldError::new(
            "schema_version",
            "missing (expected 1)",
        )])),
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidRegulator(_)
        | Error::InvalidAcceleration(_)
        | Error::InvalidParameter { .. }
        | Error::FormulaDomainError(_)
        | Error::UnknownFigure(_)
        | Error::ConfigInvalid(_) => 2,
        _ => 1,
    }
}

fn error_json(err: &Error) -> Value {
    let mut body = json!({ "kind": err.kind(), "message": err.to_string() });
    if let Error::ConfigInvalid(fields) = err {
        body["fields"] = fields
            .iter()
            .map(|f| json!({ "field": f.field, "reason": f.reason }))
            .collect();
    }
    json!({ "error": body })
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let json_mode = cli.json;
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            if json_mode {
                let _ = writeln!(err, "{}", error_json(&e));
            } else {
                let _ = writeln!(err, "error: {e}");
            }
            exit_code(&e)
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    file: FileConfig,
}

/// Unit conversion for one invocation.
struct Units {
    params: DetectorParams,
    raw: bool,
}

impl Units {
    fn resolve(ctx: &Ctx, phys: &Physical) -> Result<Self> {
        let omega0 = phys.omega0.or(ctx.file.omega0);
        let mu = phys.mu.or(ctx.file.mu);
        if ctx.cli.raw_units {
            let params = DetectorParams::new(omega0.unwrap_or(1.0), mu.unwrap_or(0.1))?;
            Ok(Self { params, raw: true })
        } else {
            if omega0.is_some() || mu.is_some() {
                return Err(Error::InvalidParameter {
                    name: "omega0",
                    reason: "--omega0/--mu only apply with --raw-units".into(),
                });
            }
            // ω₀ = 1 and μ² = 2π make γ₀ = 1
            Ok(Self {
                params: DetectorParams::new(1.0, (2.0 * PI).sqrt())?,
                raw: false,
            })
        }
    }

    fn accel(&self, a: f64) -> f64 {
        if self.raw {
            a / self.params.omega0()
        } else {
            a
        }
    }

    fn time(&self, tau: f64) -> f64 {
        if self.raw {
            tau * self.params.gamma0()
        } else {
            tau
        }
    }

    fn describe(&self, a: Option<f64>, tau: Option<f64>) -> Option<Value> {
        if !self.raw {
            return None;
        }
        let p = &self.params;
        let mut v = json!({
            "omega0": p.omega0(),
            "mu": p.mu(),
            "gamma0": p.gamma0(),
        });
        if let Some(a) = a {
            v["a"] = json!(a);
            v["a_rescaled"] = json!(self.accel(a));
        }
        if let Some(t) = tau {
            v["tau"] = json!(t);
            v["tau_rescaled"] = json!(self.time(t));
        }
        Some(v)
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx {
        cli,
        file: load_file_config(&cli.config)?,
    };
    let (report, code) = match &cli.command {
        Command::Rates(args) => (cmd_rates(&ctx, args)?, 0),
        Command::Evolve(args) => (cmd_evolve(&ctx, args)?, 0),
        Command::Qfi(args) => cmd_qfi(&ctx, args)?,
        Command::Figure(args) => (cmd_figure(&ctx, args)?, 0),
        Command::Sweep(args) => (cmd_sweep(&ctx, args)?, 0),
        Command::Verify(args) => cmd_verify(&ctx, args)?,
    };
    emit(cli.json, &report, out)?;
    Ok(code)
}

/// Text rendering of a flat-ish JSON report.
fn emit(json_mode: bool, report: &Value, out: &mut dyn Write) -> Result<()> {
    let mut buf = Vec::new();
    if json_mode {
        writeln!(buf, "{}", serde_json::to_string_pretty(report)?)?;
    } else if let Some(text) = report.get("text").and_then(Value::as_str) {
        buf.extend_from_slice(text.as_bytes());
    } else {
        render(report, 0, &mut buf)?;
    }
    // a closed downstream pipe (`| head`) is not an error
    match out.write_all(&buf).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn render(v: &Value, indent: usize, out: &mut dyn Write) -> Result<()> {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) => {
                        writeln!(out, "{pad}{k}:")?;
                        render(val, indent + 1, out)?;
                    }
                    Value::Array(items) if items.iter().any(Value::is_object) => {
                        writeln!(out, "{pad}{k}:")?;
                        for item in items {
                            render(item, indent + 1, out)?;
                            writeln!(out)?;
                        }
                    }
                    _ => writeln!(out, "{pad}{k}: {}", scalar(val))?,
                }
            }
        }
        other => writeln!(out, "{pad}{}", scalar(other))?,
    }
    Ok(())
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn required(name: &'static str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidParameter {
        name,
        reason: "missing (give a flag or a --config value)".into(),
    })
}

fn rates_json(r: &RateCoefficients, gamma0: f64) -> Value {
    json!({
        "gamma_plus": r.gamma_plus(),
        "gamma_minus": r.gamma_minus(),
        "gamma_z": r.gamma_z(),
        "A": r.total_rate(),
        "B": r.net_rate(),
        "A_over_gamma0": r.total_rate() / gamma0,
    })
}

fn parse_trajectory(s: &str) -> Result<TrajectoryArg> {
    TrajectoryArg::from_str(s, true).map_err(|_| Error::InvalidParameter {
        name: "trajectory",
        reason: format!("unknown trajectory `{s}` (inertial, uniform, drifted, nonrel, ultrarel)"),
    })
}

fn cmd_rates(ctx: &Ctx, args: &RatesArgs) -> Result<Value> {
    let units = Units::resolve(ctx, &args.phys)?;
    let p = units.params;
    let kind = match (args.trajectory, ctx.file.trajectory.as_deref()) {
        (Some(k), _) => k,
        (None, Some(s)) => parse_trajectory(s)?,
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "trajectory",
                reason: "missing (inertial, uniform, drifted, nonrel, ultrarel)".into(),
            })
        }
    };
    let raw_a = args.phys.a.or(ctx.file.a);
    let w = args.phys.w.or(ctx.file.w).unwrap_or(0.0);
    // rates take the acceleration in units of ω₀·(ω₀ = 1 when rescaled)
    let a = raw_a.map(|a| units.accel(a) * p.omega0());
    let g0 = p.gamma0();

    let (traj, analytic, label) = match kind {
        TrajectoryArg::Inertial => (
            Trajectory::inertial_drift(w)?,
            rates_inertial(&p),
            "inertial",
        ),
        TrajectoryArg::Uniform => {
            let a = required("a", a)?;
            let (up, down) = planck_factors(&p, a)?;
            let mu2 = p.mu() * p.mu();
            (
                Trajectory::uniform_acceleration(a)?,
                RateCoefficients::from_channels(mu2 * up, mu2 * down),
                "uniform_acceleration",
            )
        }
        TrajectoryArg::Drifted | TrajectoryArg::Nonrel => {
            let a = required("a", a)?;
            let traj = if kind == TrajectoryArg::Drifted {
                Trajectory::drifted_acceleration(a, w)?
            } else {
                Trajectory::drifted_nonrel(a, w)?
            };
            (
                traj,
                rates_nonrel(&p, a, w)?,
                if kind == TrajectoryArg::Drifted {
                    "drifted_acceleration"
                } else {
                    "drifted_acceleration_nonrel_expansion"
                },
            )
        }
        TrajectoryArg::Ultrarel => {
            let a = required("a", a)?;
            if args.infinite_drift {
                let r = rates_ultrarel(&p, a, UltraRelDrift::Infinite)?;
                let mut report = json!({
                    "trajectory": "drifted_acceleration_ultrarel",
                    "a": a / p.omega0(),
                    "w": "infinity",
                    "rates": rates_json(&r, g0),
                });
                if let Some(c) = units.describe(raw_a, None) {
                    report["conversion"] = c;
                }
                return Ok(report);
            }
            (
                Trajectory::drifted_ultrarel(a, w)?,
                rates_ultrarel(&p, a, UltraRelDrift::Finite(w))?,
                "drifted_acceleration_ultrarel",
            )
        }
    };
    if args.infinite_drift && kind != TrajectoryArg::Ultrarel {
        return Err(Error::InvalidParameter {
            name: "infinite_drift",
            reason: "only applies to --trajectory ultrarel".into(),
        });
    }
    let mut report = json!({
        "trajectory": label,
        "a": a.map(|a| a / p.omega0()),
        "w": w,
        "rates": rates_json(&analytic, g0),
    });
    if let Some(c) = units.describe(raw_a, None) {
        report["conversion"] = c;
    }
    if args.numeric {
        let spec = QuadratureSpec::for_trajectory(&traj, &p);
        let n = rates_numeric(&traj, &p, &spec)?;
        let rel = |x: f64, y: f64| {
            if y == 0.0 {
                (x - y).abs()
            } else {
                (x / y - 1.0).abs()
            }
        };
        report["numeric"] = json!({
            "rates": rates_json(&n.rates, g0),
            "error_estimate": n.error_estimate,
            "extrapolation_residual": n.extrapolation_residual,
            "tail_estimate": n.tail_estimate,
            "subdivisions": n.subdivisions,
            "rel_diff_gamma_plus": rel(n.rates.gamma_plus(), analytic.gamma_plus()),
            "rel_diff_gamma_minus": rel(n.rates.gamma_minus(), analytic.gamma_minus()),
        });
    }
    Ok(report)
}

/// Rescaled model point from flags and the config file.
fn model_point(
    ctx: &Ctx,
    state: &StateArgs,
    phys: &Physical,
    beta: Option<f64>,
    need_accel: bool,
) -> Result<(RescaledPoint, Units, Option<Value>)> {
    let f = &ctx.file;
    let units = Units::resolve(ctx, phys)?;
    let theta = required("theta", state.theta.or(f.theta))?;
    let phi = state.phi.or(f.phi).unwrap_or(0.0);
    let raw_tau = required("tau", state.tau.or(f.tau))?;
    let w = phys.w.or(f.w).unwrap_or(0.0);
    let raw_a = phys.a.or(f.a);
    let beta = beta.or(if raw_a.is_none() { f.beta } else { None });
    let tau = units.time(raw_tau);
    let point = match (raw_a, beta) {
        (Some(a), _) => RescaledPoint::new(theta, phi, tau, units.accel(a), w)?,
        (None, Some(b)) => RescaledPoint::from_beta(theta, phi, tau, b, w)?,
        (None, None) if !need_accel => RescaledPoint::new(theta, phi, tau, 1.0, w)?,
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: "missing (give --a or --beta)".into(),
            })
        }
    };
    let conversion = units.describe(raw_a, Some(raw_tau));
    Ok((point, units, conversion))
}

fn cmd_evolve(ctx: &Ctx, args: &EvolveArgs) -> Result<Value> {
    let (point, _units, conversion) =
        model_point(ctx, &args.state, &args.phys, None, !args.ultrarel)?;
    let rates = if args.ultrarel {
        RateCoefficients::from_total_and_net(0.0, 0.0)
    } else {
        point.rates()
    };
    let init = InitialState::new(point.theta, point.phi)?;
    let state = crate::dynamics::evolve_closed_form(&init, &rates, point.level_spacing, point.tau)?;
    let mut report = json!({
        "theta": point.theta,
        "phi": point.phi,
        "tau": point.tau,
        "A": rates.total_rate(),
        "B": rates.net_rate(),
        "bloch": { "x": state.x, "y": state.y, "z": state.z },
        "norm": state.norm(),
    });
    if !args.ultrarel {
        report["a"] = json!(point.accel);
        report["w"] = json!(point.drift);
    } else {
        report["w"] = json!("infinity");
    }
    if args.ode {
        let o = evolve_ode(
            &init,
            &rates,
            point.level_spacing,
            point.tau,
            &StepControl::default(),
        )?;
        report["ode"] = json!({
            "bloch": { "x": o.x, "y": o.y, "z": o.z },
            "max_abs_diff": o.max_abs_diff(&state),
        });
    }
    if let Some(c) = conversion {
        report["conversion"] = c;
    }
    Ok(report)
}

fn cmd_qfi(ctx: &Ctx, args: &QfiArgs) -> Result<(Value, i32)> {
    let f = &ctx.file;
    let names: Vec<String> = if args.param.is_empty() {
        f.param.clone().unwrap_or_default()
    } else {
        args.param.clone()
    };
    if names.is_empty() {
        return Err(Error::InvalidParameter {
            name: "param",
            reason: "missing (theta, phi, beta)".into(),
        });
    }
    let params: Vec<Parameter> = names.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let method_names = if args.methods.is_empty() {
        f.methods.clone().unwrap_or_default()
    } else {
        args.methods.clone()
    };
    let methods: Vec<Method> = method_names
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    if args.ultrarel {
        let theta = required("theta", args.state.theta.or(f.theta))?;
        let (ft, fp) = qfi_ultrarel(theta);
        let results: Vec<Value> = params
            .iter()
            .map(|p| {
                let fisher = match p {
                    Parameter::Theta => ft,
                    Parameter::Phi => fp,
                    // no dissipation: the state carries no trace of the acceleration
                    Parameter::Beta => 0.0,
                };
                json!({ "param": p.as_str(), "method": "ultrarel_limit", "fisher": fisher })
            })
            .collect();
        return Ok((
            json!({ "theta": theta, "w": "infinity", "results": results }),
            0,
        ));
    }

    let need_accel = true;
    let (point, _units, conversion) =
        model_point(ctx, &args.state, &args.phys, args.beta, need_accel)?;
    let mut results = Vec::new();
    let mut code = 0;
    for &param in &params {
        let routes: Vec<Method> = if methods.is_empty() {
            Method::ALL
                .into_iter()
                .filter(|m| !(param == Parameter::Beta && *m == Method::ClosedForm))
                .collect()
        } else {
            methods.clone()
        };
        for method in routes {
            match evaluate(&point, param, method) {
                Ok(r) => results.push(json!({
                    "param": param.as_str(),
                    "value": r.param.value,
                    "method": method.as_str(),
                    "fisher": r.fisher,
                    "derivative_norm": r.derivative_norm,
                    "derivative_gap": r.derivative_gap,
                })),
                Err(e) => {
                    code = code.max(exit_code(&e));
                    results.push(json!({
                        "param": param.as_str(),
                        "method": method.as_str(),
                        "error": error_json(&e)["error"],
                    }));
                }
            }
        }
    }
    let mut report = json!({
        "theta": point.theta,
        "phi": point.phi,
        "tau": point.tau,
        "a": point.accel,
        "beta": point.beta(),
        "w": point.drift,
        "decay_factor": point.decay_factor(),
        "results": results,
    });
    if let Some(c) = conversion {
        report["conversion"] = c;
    }
    Ok((report, code))
}

fn output_format(
    flag: &Option<String>,
    file: &Option<String>,
    fallback: OutputFormat,
) -> Result<OutputFormat> {
    match flag.as_ref().or(file.as_ref()) {
        Some(s) => s.parse(),
        None => Ok(fallback),
    }
}

fn write_table(table: &SweepTable, path: Option<&PathBuf>, format: OutputFormat) -> Result<Value> {
    match path {
        Some(path) => {
            table.write_file(path, format)?;
            let failed = table
                .records
                .iter()
                .filter(|r| !r.errors().is_empty())
                .count();
            Ok(json!({
                "target": table.target,
                "rows": table.records.len(),
                "failed_rows": failed,
                "out": path.display().to_string(),
            }))
        }
        None => {
            let bytes = table.to_bytes(format)?;
            Ok(json!({ "text": String::from_utf8_lossy(&bytes) }))
        }
    }
}

fn cmd_figure(ctx: &Ctx, args: &FigureArgs) -> Result<Value> {
    let format = output_format(&args.format, &ctx.file.format, OutputFormat::Csv)?;
    let table = run_figure(&args.id)?;
    write_table(&table, args.out.as_ref(), format)
}

fn cmd_sweep(ctx: &Ctx, args: &SweepArgs) -> Result<Value> {
    let text = std::fs::read_to_string(&args.grid)
        .map_err(|e| Error::Io(format!("{}: {e}", args.grid.display())))?;
    let cfg = SweepConfig::from_json(&text)?;
    let fallback = cfg.output.as_ref().map(|o| o.format).unwrap_or_default();
    let format = output_format(&args.format, &ctx.file.format, fallback)?;
    let path = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    let table = run_grid(&cfg)?;
    write_table(&table, path.as_ref(), format)
}

fn cmd_verify(ctx: &Ctx, args: &VerifyArgs) -> Result<(Value, i32)> {
    let seed = args.seed.or(ctx.file.seed).unwrap_or(DEFAULT_SEED);
    let reports = match &args.suite {
        Some(name) => vec![run_suite(name, seed)?],
        None => run_all(seed),
    };
    let passed = reports.iter().all(|r| r.passed);
    let code = if passed { 0 } else { 1 };
    if ctx.cli.json {
        return Ok((
            json!({ "seed": seed, "passed": passed, "suites": reports }),
            code,
        ));
    }
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!("{r}\n"));
        for c in r.failures() {
            text.push_str(&format!("    - {}: {}\n", c.label, c.detail));
        }
    }
    let n_pass = reports.iter().filter(|r| r.passed).count();
    text.push_str(&format!(
        "{n_pass} of {} suites passed (seed {seed})\n",
        reports.len()
    ));
    Ok((json!({ "text": text }), code))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("udw-qfi").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_error_is_two() {
        assert_eq!(run_str(&["frobnicate"]).0, 2);
        assert_eq!(run_str(&["qfi", "--theta", "abc"]).0, 2);
    }

    #[test]
    fn help_is_success() {
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("verify"));
    }

    #[test]
    fn invalid_input_is_two_with_json() {
        let (code, _, err) = run_str(&[
            "--json", "qfi", "--param", "phi", "--theta", "1", "--tau", "1", "--a", "0",
        ]);
        assert_eq!(code, 2);
        let v: Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["error"]["kind"], "FormulaDomainError");
    }

    #[test]
    fn omega0_requires_raw_units() {
        assert_eq!(
            run_str(&["rates", "--trajectory", "inertial", "--omega0", "2"]).0,
            2
        );
    }
}
