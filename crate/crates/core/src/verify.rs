//! Acceptance property suites, one per criterion. Shared by `udw-qfi verify`
//! and the `acceptance` test target.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::dynamics::{propagate, propagate_ode, BlochVector, InitialState, StepControl};
use crate::error::{Error, Result};
use crate::qfi::{
    beta_derivative_fd, decay_factor, default_beta_step, evaluate, qfi_beta, qfi_bloch,
    qfi_phi_closed, qfi_sld, qfi_theta_closed, qfi_ultrarel, sld_step, Method, Parameter,
    RescaledPoint,
};
use crate::rates::{
    planck_factors, rates_nonrel, rates_numeric, rates_ultrarel, DetectorParams, QuadratureSpec,
    RateCoefficients, UltraRelDrift,
};
use crate::sweep::{
    figure_config, run_figure, run_grid_with_threads, Coordinate, OutputFormat, SweepTable,
};
use crate::trajectory::Trajectory;

pub const DEFAULT_SEED: u64 = 20_240_917;

pub const SUITES: [&str; 8] = [
    "inertial",
    "thermality",
    "expansion",
    "routes",
    "figures",
    "ultrarel",
    "derivatives",
    "determinism",
];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub criterion: usize,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub elapsed: f64,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let summary = match self.failures().next() {
            Some(c) => format!("{}: {}", c.label, c.detail),
            None => self
                .checks
                .iter()
                .map(|c| c.detail.as_str())
                .filter(|d| !d.is_empty())
                .collect::<Vec<_>>()
                .join("; "),
        };
        write!(
            f,
            "[{status}] criterion {} {:<12} ({} checks, {:.2}s) {summary}",
            self.criterion,
            self.name,
            self.checks.len(),
            self.elapsed
        )
    }
}

#[derive(Default)]
struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Worst-case error check: passes when `worst <= tol`.
    fn bound(&mut self, label: &str, worst: f64, tol: f64) {
        self.check(
            label,
            worst <= tol,
            format!("{label} max err {worst:.2e} (tol {tol:.0e})"),
        );
    }

    fn fail(&mut self, label: impl Into<String>, err: &Error) {
        self.check(label, false, err.to_string());
    }
}

fn rel_err(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(1e-300)
}

/// Relative error measured against `max(|reference|, 10⁻⁶)`: at the 10⁻⁶
/// route tolerance this is an absolute floor of 10⁻¹² for vanishing values.
fn rel_err_floor(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(1e-6)
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let (criterion, name, rec) = match name {
        "inertial" => (1, "inertial", inertial(seed)),
        "thermality" => (2, "thermality", thermality()),
        "expansion" => (3, "expansion", expansion()),
        "routes" => (4, "routes", routes(seed)),
        "figures" => (5, "figures", figures()),
        "ultrarel" => (6, "ultrarel", ultrarel()),
        "derivatives" => (7, "derivatives", derivatives(seed)),
        "determinism" => (8, "determinism", determinism()),
        other => {
            return Err(Error::InvalidParameter {
                name: "suite",
                reason: format!("unknown suite `{other}` ({})", SUITES.join(", ")),
            })
        }
    };
    Ok(SuiteReport {
        criterion,
        name,
        passed: rec.checks.iter().all(|c| c.passed) && !rec.checks.is_empty(),
        checks: rec.checks,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .map(|s| run_suite(s, seed).expect("suite names are known"))
        .collect()
}

// ---------------------------------------------------------------- 1

/// `∂ω(τ)` from the linear part of the flow: the inhomogeneous term does
/// not depend on the initial state.
fn flow_derivative(
    d0: BlochVector,
    rates: &RateCoefficients,
    tau: f64,
    ode: bool,
) -> Result<BlochVector> {
    let homogeneous = RateCoefficients::from_total_and_net(rates.total_rate(), 0.0);
    if ode {
        propagate_ode(d0, &homogeneous, 1.0, tau, &ode_control())
    } else {
        Ok(propagate(d0, &homogeneous, 1.0, tau))
    }
}

fn ode_control() -> StepControl {
    StepControl {
        tolerance: 1e-13,
        ..StepControl::default()
    }
}

fn initial_derivative(theta: f64, phi: f64, param: Parameter) -> BlochVector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    match param {
        Parameter::Theta => BlochVector::new(ct * cp, ct * sp, -st),
        _ => BlochVector::new(-st * sp, st * cp, 0.0),
    }
}

fn inertial(seed: u64) -> Recorder {
    let mut r = Recorder::default();
    // tiny acceleration with w = 0 is inertial: coth(π/ã) rounds to 1
    let a_inertial = 1e-2;
    match decay_factor(a_inertial, 0.0) {
        Ok(h) => r.check("decay factor", h == 1.0, format!("h(ã→0) = {h}")),
        Err(e) => r.fail("decay factor", &e),
    }
    let mut rng = StdRng::seed_from_u64(seed);
    // θ = kπ/12 (seeded φ): random θ would occasionally land within ~0.015 of
    // π, where the state is mixed by less than the pure-branch threshold
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for k in 0..=12 {
        for _ in 0..4 {
            pairs.push((PI * k as f64 / 12.0, rng.gen_range(0.0..2.0 * PI)));
        }
    }
    let taus: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
    let rates = RateCoefficients::from_total_and_net(1.0, -1.0);
    let (mut closed_err, mut ode_err) = (0.0_f64, 0.0_f64);
    for &(theta, phi) in &pairs {
        for &tau in &taus {
            let ft = (-tau).exp();
            let fp = theta.sin().powi(2) * ft;
            match (
                qfi_theta_closed(theta, tau, a_inertial, 0.0),
                qfi_phi_closed(theta, tau, a_inertial, 0.0),
            ) {
                (Ok(ct), Ok(cp)) => {
                    closed_err = closed_err.max(rel_err(ct, ft)).max((cp - fp).abs() / ft);
                }
                (Err(e), _) | (_, Err(e)) => {
                    r.fail(format!("closed form θ={theta:.3} τ̃={tau}"), &e);
                    continue;
                }
            }
            let init = InitialState { theta, phi };
            let state = propagate_ode(init.bloch(), &rates, 1.0, tau, &ode_control());
            for (param, expected) in [(Parameter::Theta, ft), (Parameter::Phi, fp)] {
                let d = flow_derivative(initial_derivative(theta, phi, param), &rates, tau, true);
                match (&state, d) {
                    (Ok(s), Ok(d)) => match qfi_bloch(s, &d) {
                        Ok(f) => ode_err = ode_err.max((f - expected).abs() / ft),
                        Err(e) => r.fail(format!("ode route θ={theta:.3} τ̃={tau}"), &e),
                    },
                    (Err(e), _) => r.fail(format!("ode θ={theta:.3} τ̃={tau}"), e),
                    (_, Err(e)) => r.fail(format!("ode θ={theta:.3} τ̃={tau}"), &e),
                }
            }
        }
    }
    r.bound("closed form vs e^-τ̃", closed_err, 1e-12);
    r.bound("ODE route", ode_err, 1e-8);
    r
}

// ---------------------------------------------------------------- 2

fn thermality() -> Recorder {
    let mut r = Recorder::default();
    let p = DetectorParams::new(1.0, 1.0).expect("valid");
    for &a in &[0.5, 1.0, PI, 10.0] {
        let traj = Trajectory::uniform_acceleration(a).expect("valid");
        let boltzmann = (-2.0 * PI / a).exp();
        let mut spec = QuadratureSpec::for_trajectory(&traj, &p);
        // excitation is Boltzmann-suppressed; resolve it to 1e-4 of its size
        spec.rel_tol = 1e-4 * boltzmann.min(1.0);
        let numeric = match rates_numeric(&traj, &p, &spec) {
            Ok(n) => n,
            Err(e) => {
                r.fail(format!("ã={a:.4}"), &e);
                continue;
            }
        };
        let (planck_up, planck_down) = planck_factors(&p, a).expect("valid");
        let gp = numeric.rates.gamma_plus();
        let gm = numeric.rates.gamma_minus();
        let balance = rel_err(gp / gm, boltzmann);
        let planck = rel_err(gp, planck_up).max(rel_err(gm, planck_down));
        let worst = balance.max(planck);
        r.check(
            format!("ã={a:.4}"),
            worst <= 1e-3,
            format!("ã={a:.3}: balance {balance:.1e}, Planck {planck:.1e}"),
        );
    }
    r
}

// ---------------------------------------------------------------- 3

/// `A_numeric - A_closed` on the exact drifted kernel, in units of `γ₀`.
pub fn expansion_residual(a: f64, w: f64) -> Result<(f64, f64)> {
    let p = DetectorParams::new(1.0, 1.0)?;
    let traj = Trajectory::drifted_acceleration(a, w)?;
    let mut spec = QuadratureSpec::for_trajectory(&traj, &p);
    spec.rel_tol = 1e-11;
    let numeric = rates_numeric(&traj, &p, &spec)?;
    let closed = rates_nonrel(&p, a, w)?;
    Ok((
        (numeric.rates.total_rate() - closed.total_rate()) / p.gamma0(),
        numeric.error_estimate / p.gamma0(),
    ))
}

fn expansion() -> Recorder {
    let mut r = Recorder::default();
    let (w1, w2) = (0.05, 0.025);
    match (expansion_residual(1.0, w1), expansion_residual(1.0, w2)) {
        (Ok((d1, e1)), Ok((d2, e2))) => {
            let k = d1 / w1.powi(4);
            let ratio = d2 / (k * w2.powi(4));
            r.check(
                "w⁴ scaling",
                (0.5..=2.0).contains(&ratio),
                format!("K={k:.4e}, residual(w=0.025)/(K w⁴) = {ratio:.4}"),
            );
            r.check(
                "resolved",
                d2.abs() > 10.0 * e2 && d1.abs() > 10.0 * e1,
                format!(
                    "|ΔA|/err = {:.0}, {:.0}",
                    d1.abs() / e1.max(1e-300),
                    d2.abs() / e2.max(1e-300)
                ),
            );
        }
        (Err(e), _) | (_, Err(e)) => r.fail("numeric rates", &e),
    }
    r
}

// ---------------------------------------------------------------- 4, 7

/// The 5×5×5×3 (θ, τ̃, ã, w) grid, with a seeded φ per point.
fn route_grid(seed: u64) -> Vec<RescaledPoint> {
    let thetas = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
    let taus = [0.1, 0.5, 1.0, 2.0, 5.0];
    let accels = [0.5, 1.0, PI, 5.0, 10.0];
    let drifts = [0.0, 0.05, 0.1];
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(375);
    for &theta in &thetas {
        for &tau in &taus {
            for &a in &accels {
                for &w in &drifts {
                    let phi = rng.gen_range(0.0..2.0 * PI);
                    out.push(RescaledPoint::new(theta, phi, tau, a, w).expect("grid is valid"));
                }
            }
        }
    }
    out
}

fn routes(seed: u64) -> Recorder {
    let mut r = Recorder::default();
    let mut worst = [0.0_f64; 3];
    let mut failures = 0;
    for p in route_grid(seed) {
        for (k, param) in Parameter::ALL.into_iter().enumerate() {
            let values: Result<Vec<f64>> = (|| {
                let reference = match param {
                    Parameter::Beta => {
                        qfi_beta(
                            p.theta,
                            p.phi,
                            p.tau,
                            p.beta(),
                            p.drift,
                            default_beta_step(p.beta()),
                        )?
                        .fisher
                    }
                    _ => evaluate(&p, param, Method::ClosedForm)?.fisher,
                };
                let bloch = match param {
                    // Bloch formula on the finite-difference derivative; a wider
                    // base step than the cross-check keeps roundoff (ε/h) below
                    // 10⁻¹⁴ where ∂_β ω is itself ~10⁻⁶, and Richardson keeps
                    // the truncation negligible
                    Parameter::Beta => {
                        let d = beta_derivative_fd(&p, 1e-3 * p.beta().max(1.0))?;
                        qfi_bloch(&p.state(), &d)?
                    }
                    _ => evaluate(&p, param, Method::BlochDerivative)?.fisher,
                };
                let x = p.value_of(param);
                let sld = qfi_sld(|v| Ok(p.with(param, v)?.density()), x, sld_step(param, x))?;
                Ok(vec![reference, bloch, sld])
            })();
            match values {
                Ok(v) => {
                    let e = rel_err_floor(v[1], v[0]).max(rel_err_floor(v[2], v[0]));
                    worst[k] = worst[k].max(e);
                }
                Err(e) => {
                    failures += 1;
                    if failures <= 3 {
                        r.fail(
                            format!(
                                "{param} at θ={:.3} τ̃={} ã={:.3} w={}",
                                p.theta, p.tau, p.accel, p.drift
                            ),
                            &e,
                        );
                    }
                }
            }
        }
    }
    for (k, param) in Parameter::ALL.into_iter().enumerate() {
        r.bound(&format!("F_{param}"), worst[k], 1e-6);
    }
    r
}

fn derivatives(seed: u64) -> Recorder {
    let mut r = Recorder::default();
    let mut worst = 0.0_f64;
    for p in route_grid(seed) {
        match beta_derivative_fd(&p, default_beta_step(p.beta())) {
            Ok(fd) => worst = worst.max(p.derivative(Parameter::Beta).max_abs_diff(&fd)),
            Err(e) => r.fail(format!("β={:.3}", p.beta()), &e),
        }
    }
    r.bound("∂_β ω max-norm", worst, 1e-6);
    r
}

// ---------------------------------------------------------------- 5

fn curve(
    table: &SweepTable,
    param: Parameter,
    method: Method,
    outer: Option<(Coordinate, f64)>,
) -> Vec<f64> {
    table
        .records
        .iter()
        .filter(|rec| outer.map_or(true, |(c, v)| rec.coordinate(c) == Some(v)))
        .map(|rec| rec.fisher(param, method).unwrap_or(f64::NAN))
        .collect()
}

fn strictly(values: &[f64], increasing: bool) -> bool {
    values
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// Largest `|F(i) - F(n-1-i)|` along a grid symmetric about its midpoint.
fn asymmetry(values: &[f64]) -> f64 {
    let n = values.len();
    (0..n / 2)
        .map(|i| (values[i] - values[n - 1 - i]).abs() / values[i].abs().max(1.0))
        .fold(0.0, f64::max)
}

fn figures() -> Recorder {
    let mut r = Recorder::default();
    let load = |r: &mut Recorder, id: &str| -> Option<SweepTable> {
        match run_figure(id) {
            Ok(t) => {
                let errs: Vec<String> = t.records.iter().flat_map(|x| x.errors()).collect();
                if let Some(e) = errs.first() {
                    r.check(
                        id,
                        false,
                        format!("{} failed points, first: {e}", errs.len()),
                    );
                }
                Some(t)
            }
            Err(e) => {
                r.fail(id, &e);
                None
            }
        }
    };
    let cf = Method::ClosedForm;
    let bd = Method::BlochDerivative;

    // symmetry axes
    for (id, param, method, taus) in [
        ("fig1a", Parameter::Phi, cf, [1.0, 2.0, 3.0]),
        ("fig4a", Parameter::Theta, cf, [1.0, 2.0, 3.0]),
        ("fig6a", Parameter::Beta, bd, [10.0, 5.0, 1.0]),
    ] {
        if let Some(t) = load(&mut r, id) {
            let worst = taus
                .iter()
                .map(|&tau| asymmetry(&curve(&t, param, method, Some((Coordinate::Tau, tau)))))
                .fold(0.0, f64::max);
            r.bound(&format!("{id} symmetry"), worst, 1e-12);
        }
    }
    if let Some(t) = load(&mut r, "fig1a") {
        let c = curve(&t, Parameter::Phi, cf, Some((Coordinate::Tau, 1.0)));
        let argmax = c
            .iter()
            .enumerate()
            .fold(0, |m, (i, v)| if *v > c[m] { i } else { m });
        r.check(
            "fig1a maximum",
            argmax == 100,
            format!("fig1a max at θ index {argmax}"),
        );
    }

    // decay in acceleration
    for (id, param) in [("fig2", Parameter::Phi), ("fig5", Parameter::Theta)] {
        if let Some(t) = load(&mut r, id) {
            let mut ok = true;
            let mut tail = f64::NAN;
            for tau in [1.0, 2.0, 3.0] {
                let c = curve(&t, param, cf, Some((Coordinate::Tau, tau)));
                ok &= strictly(&c, false);
                if tau == 1.0 {
                    tail = *c.last().unwrap_or(&f64::NAN);
                }
            }
            r.check(
                format!("{id} decreasing in ã"),
                ok && tail < 1e-3,
                format!("{id} F(ã=50, τ̃=1) = {tail:.2e}"),
            );
        }
    }

    // enhancement by drift
    for (id, param, method) in [
        ("fig3", Parameter::Phi, cf),
        ("fig4c", Parameter::Theta, cf),
        ("fig8", Parameter::Beta, bd),
    ] {
        if let Some(t) = load(&mut r, id) {
            let c = curve(&t, param, method, None);
            r.check(
                format!("{id} increasing in w"),
                strictly(&c, true),
                format!("{id} F: {:.6} → {:.6}", c[0], c[c.len() - 1]),
            );
        }
    }

    // β = 10 plateau
    if let Some(t) = load(&mut r, "fig6b") {
        let ends: Vec<f64> = [PI, 2.0 * PI / 3.0, PI / 2.0]
            .iter()
            .map(|&th| {
                *curve(&t, Parameter::Beta, bd, Some((Coordinate::Theta, th)))
                    .last()
                    .unwrap()
            })
            .collect();
        let hi = ends.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ends.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (hi - lo) / hi;
        r.check(
            "fig6b plateau",
            spread <= 0.01,
            format!("fig6b plateau {hi:.4e}, spread {spread:.1e}"),
        );
    }

    // β = 1: interior maximum, nonzero plateau
    if let Some(t) = load(&mut r, "fig7") {
        let c = curve(&t, Parameter::Beta, bd, Some((Coordinate::Beta, 1.0)));
        let argmax = c
            .iter()
            .enumerate()
            .fold(0, |m, (i, v)| if *v > c[m] { i } else { m });
        let plateau = c[c.len() - 1];
        let interior = argmax > 0 && argmax < c.len() - 1 && c[argmax] > plateau;
        r.check(
            "fig7 β=1 shape",
            interior && plateau > 0.01,
            format!(
                "fig7 peak {:.4} at τ̃={:.2}, plateau {plateau:.4}",
                c[argmax],
                t.slice(Coordinate::Beta, 1.0)[argmax]
                    .coordinate(Coordinate::Tau)
                    .unwrap_or(f64::NAN)
            ),
        );
    }
    r
}

// ---------------------------------------------------------------- 6

fn ultrarel() -> Recorder {
    let mut r = Recorder::default();
    let p = DetectorParams::new(1.0, 0.1).expect("valid");
    let thetas: Vec<f64> = (0..=24).map(|i| PI * i as f64 / 12.0).collect();

    let mut exact = true;
    for &th in &thetas {
        let (ft, fp) = qfi_ultrarel(th);
        exact &= ft == 1.0 && fp == th.sin().powi(2);
    }
    r.check("limit values", exact, "(F_θ, F_φ) = (1, sin²θ)");

    // w → ∞ switches the dissipator off; evolve and differentiate the flow
    let mut worst = 0.0_f64;
    for &a in &[0.5, PI, 10.0] {
        match rates_ultrarel(&p, a, UltraRelDrift::Infinite) {
            Ok(rates) => {
                r.check(
                    format!("A=B=0 at ã={a:.3}"),
                    rates.total_rate() == 0.0 && rates.net_rate() == 0.0,
                    "",
                );
                for &th in &thetas {
                    let init = InitialState {
                        theta: th,
                        phi: 0.7,
                    };
                    for &tau in &[0.0, 1.0, 10.0, 100.0] {
                        let s = propagate(init.bloch(), &rates, 1.0, tau);
                        for (param, expected) in
                            [(Parameter::Theta, 1.0), (Parameter::Phi, th.sin().powi(2))]
                        {
                            let d = flow_derivative(
                                initial_derivative(th, 0.7, param),
                                &rates,
                                tau,
                                false,
                            )
                            .expect("closed-form flow");
                            match qfi_bloch(&s, &d) {
                                Ok(f) => worst = worst.max((f - expected).abs()),
                                Err(e) => r.fail(format!("θ={th:.3} τ̃={tau}"), &e),
                            }
                        }
                    }
                }
            }
            Err(e) => r.fail(format!("ã={a}"), &e),
        }
    }
    r.bound("τ̃-independence", worst, 1e-14);

    let w = 10.0;
    let mut rate_err = 0.0_f64;
    for &a in &[0.5, 1.0, PI, 10.0, 50.0] {
        match rates_ultrarel(&p, a, UltraRelDrift::Finite(w)) {
            Ok(rates) => {
                let gamma0 = p.gamma0();
                let coth = 1.0 / (PI / a).tanh();
                rate_err = rate_err
                    .max(rel_err(rates.total_rate(), gamma0 * coth / w.powi(4)))
                    .max(rel_err(rates.net_rate(), -gamma0 / w.powi(4)));
            }
            Err(e) => r.fail(format!("ã={a}"), &e),
        }
    }
    r.bound("w⁻⁴ rates at w=10", rate_err, 1e-12);
    r
}

// ---------------------------------------------------------------- 8

fn determinism() -> Recorder {
    let mut r = Recorder::default();
    for id in ["fig1a", "fig6b", "fig7"] {
        let cfg = match figure_config(id) {
            Ok(c) => c,
            Err(e) => {
                r.fail(id, &e);
                continue;
            }
        };
        let runs: Result<Vec<Vec<u8>>> = [Some(1), Some(4), None, None]
            .iter()
            .map(|&threads| run_grid_with_threads(&cfg, threads)?.to_bytes(OutputFormat::Csv))
            .collect();
        match runs {
            Ok(runs) => {
                let same = runs.windows(2).all(|w| w[0] == w[1]);
                r.check(
                    format!("{id} byte-identical"),
                    same,
                    format!("{id}: {} bytes × {}", runs[0].len(), runs.len()),
                );
            }
            Err(e) => r.fail(id, &e),
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", 1).is_err());
    }

    #[test]
    fn symmetry_helper() {
        assert_eq!(asymmetry(&[1.0, 2.0, 3.0, 2.0, 1.0]), 0.0);
        assert!(asymmetry(&[1.0, 2.0, 1.5]) > 0.0);
        assert!(strictly(&[1.0, 2.0, 3.0], true));
        assert!(!strictly(&[1.0, 1.0], true));
    }
}
