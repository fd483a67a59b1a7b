//! Lindblad rate coefficients of the detector.
//!
//! `γ₊` is the excitation (absorption) rate and `γ₋` the de-excitation rate.
//! The Bloch equations only see their sum `A = γ₊ + γ₋` and difference
//! `B = γ₊ - γ₋`, so those are what [`RateCoefficients`] stores.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::quadrature::{extrapolate_to_zero, integrate};
use crate::special::{bose, bose_plus_one, coth_half, drift_correction};
use crate::trajectory::{Epsilon, Trajectory, TrajectoryKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    omega0: f64,
    mu: f64,
}

impl DetectorParams {
    pub fn new(omega0: f64, mu: f64) -> Result<Self> {
        check_finite("omega0", omega0)?;
        check_finite("mu", mu)?;
        if omega0 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega0",
                reason: format!("level spacing must be positive, got {omega0}"),
            });
        }
        if mu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("coupling must be non-negative, got {mu}"),
            });
        }
        Ok(Self { omega0, mu })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Vacuum spontaneous emission rate `μ²ω₀/2π`.
    pub fn gamma0(&self) -> f64 {
        self.mu * self.mu * self.omega0 / (2.0 * PI)
    }

    /// Effective level spacing. The Lamb shift is dropped, so this is `ω₀`.
    pub fn level_spacing(&self) -> f64 {
        self.omega0
    }

    /// `2πω₀/a`, the ratio of the gap to the Unruh temperature.
    pub fn thermal_ratio(&self, a: f64) -> f64 {
        2.0 * PI * self.omega0 / a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCoefficients {
    total: f64,
    net: f64,
}

impl RateCoefficients {
    pub fn from_channels(gamma_plus: f64, gamma_minus: f64) -> Self {
        Self {
            total: gamma_plus + gamma_minus,
            net: gamma_plus - gamma_minus,
        }
    }

    /// Build from `A` and `B` directly.
    pub fn from_total_and_net(total: f64, net: f64) -> Self {
        Self { total, net }
    }

    pub fn gamma_plus(&self) -> f64 {
        0.5 * (self.total + self.net)
    }

    pub fn gamma_minus(&self) -> f64 {
        0.5 * (self.total - self.net)
    }

    /// Dephasing rate; zero for this coupling.
    pub fn gamma_z(&self) -> f64 {
        0.0
    }

    /// `A = γ₊ + γ₋`, the population relaxation rate (transverse decay is `A/2`).
    pub fn total_rate(&self) -> f64 {
        self.total
    }

    /// `B = γ₊ - γ₋`, the drive of the longitudinal component.
    pub fn net_rate(&self) -> f64 {
        self.net
    }

    /// `A ≥ |B|`, i.e. both channel rates non-negative.
    pub fn is_physical(&self) -> bool {
        self.total >= self.net.abs() * (1.0 - 1e-14)
    }
}

/// Inertial motion at any constant velocity: `A = γ₀`, `B = -γ₀`.
pub fn rates_inertial(p: &DetectorParams) -> RateCoefficients {
    let g0 = p.gamma0();
    RateCoefficients::from_total_and_net(g0, -g0)
}

fn check_acceleration(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidAcceleration(a))
    }
}

/// Rates of the drifted accelerated detector to order w²:
/// `A = γ₀[coth(πω₀/a) - (4π/ω₀) f(a) w²]`, `B = -γ₀`.
///
/// Intended for `w ≪ 1`.
pub fn rates_nonrel(p: &DetectorParams, a: f64, w: f64) -> Result<RateCoefficients> {
    check_acceleration(a)?;
    check_finite("w", w)?;
    let x = p.thermal_ratio(a);
    let g0 = p.gamma0();
    let total = g0 * (coth_half(x) - drift_correction(x) * w * w);
    Ok(RateCoefficients::from_total_and_net(total, -g0))
}

/// `γ± / μ²` from the w = 0 Planck factors, `(ω₀/2π)/(e^x-1)` and `(ω₀/2π)e^x/(e^x-1)`.
pub fn planck_factors(p: &DetectorParams, a: f64) -> Result<(f64, f64)> {
    check_acceleration(a)?;
    let x = p.thermal_ratio(a);
    let base = p.omega0 / (2.0 * PI);
    Ok((base * bose(x), base * bose_plus_one(x)))
}

/// The w² coefficient `f(a)` of the non-relativistic correlator transform.
pub fn drift_coefficient(p: &DetectorParams, a: f64) -> Result<f64> {
    check_acceleration(a)?;
    Ok(p.omega0 * drift_correction(p.thermal_ratio(a)) / (4.0 * PI))
}

/// Drift of the ultra-relativistic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UltraRelDrift {
    Finite(f64),
    /// The exact `w → ∞` limit.
    Infinite,
}

/// `A = γ₀ coth(πω₀/a) w⁻⁴`, `B = -γ₀ w⁻⁴`; both vanish for `w → ∞`.
pub fn rates_ultrarel(
    p: &DetectorParams,
    a: f64,
    drift: UltraRelDrift,
) -> Result<RateCoefficients> {
    check_acceleration(a)?;
    match drift {
        UltraRelDrift::Infinite => Ok(RateCoefficients::from_total_and_net(0.0, 0.0)),
        UltraRelDrift::Finite(w) => {
            check_finite("w", w)?;
            if w <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "w",
                    reason: format!("ultra-relativistic rates need w > 0, got {w}"),
                });
            }
            let suppression = w.powi(-4);
            let g0 = p.gamma0();
            Ok(RateCoefficients::from_total_and_net(
                g0 * coth_half(p.thermal_ratio(a)) * suppression,
                -g0 * suppression,
            ))
        }
    }
}

/// Settings of the numerical Fourier transform in [`rates_numeric`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Half-width `T` of the lag window `[-T, T]`.
    pub window: f64,
    /// Strictly decreasing regulators `ε_k`, extrapolated to `ε → 0`.
    pub eps_schedule: Vec<f64>,
    /// Target accuracy of the rates, relative to the dominant rate.
    pub rel_tol: f64,
    /// Panel cap for each of the three sub-intervals (doubled on the central one).
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    /// `T = 40/α` and `ε_k = {1, 0.5, 0.25}·10⁻²/α` for accelerated worldlines;
    /// `T = 10³/ω₀` and `ε_k` scaled by `1/ω₀` for inertial ones.
    pub fn for_trajectory(traj: &Trajectory, p: &DetectorParams) -> Self {
        let (window, scale) = match traj.decay_rate() {
            Some(k) => (40.0 / k, 1.0 / k),
            None => (1e3 / p.omega0, 1.0 / p.omega0),
        };
        Self {
            window,
            eps_schedule: [1e-2, 5e-3, 2.5e-3].iter().map(|e| e * scale).collect(),
            rel_tol: 1e-4,
            max_subdivisions: 4000,
        }
    }

    /// Same window, with `n` regulators halving from `first·scale`.
    pub fn with_halving_schedule(mut self, first: f64, n: usize) -> Self {
        self.eps_schedule = (0..n).map(|k| first * 0.5_f64.powi(k as i32)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidParameter {
                name: "quadrature",
                reason,
            })
        };
        if !(self.window > 0.0) || !self.window.is_finite() {
            return bad(format!("window must be positive, got {}", self.window));
        }
        if self.eps_schedule.is_empty() {
            return bad("eps schedule is empty".into());
        }
        if self.eps_schedule.iter().any(|&e| !(e > 0.0)) {
            return bad("eps schedule must be positive".into());
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps schedule must be strictly decreasing".into());
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if self.max_subdivisions == 0 {
            return bad("max_subdivisions must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericRates {
    pub rates: RateCoefficients,
    /// Absolute error estimate of `γ±` (rate units): extrapolation residual plus quadrature error.
    pub error_estimate: f64,
    pub extrapolation_residual: f64,
    pub tail_estimate: f64,
    pub subdivisions: usize,
}

/// `γ± = μ² Re ∫ e^{∓iω₀Δτ} G⁺(Δτ - iε) dΔτ` by adaptive quadrature on
/// `[-T, T]` at each `ε_k`, extrapolated polynomially to `ε → 0`.
///
/// The `e^{-iω₀Δτ}` transform is the excitation channel `γ₊`; at w = 0 it
/// equals `μ²(ω₀/2π)/(e^{2πω₀/a}-1)` with unit normalisation.
pub fn rates_numeric(
    traj: &Trajectory,
    p: &DetectorParams,
    quad: &QuadratureSpec,
) -> Result<NumericRates> {
    quad.validate()?;
    let omega = p.level_spacing();
    // dominant scale of γ±/μ²; the vacuum de-excitation rate is a lower bound
    let reference = omega / (2.0 * PI)
        * match traj.kind() {
            TrajectoryKind::DriftedAccelerationUltraRel => traj.drift().powi(-4),
            _ => 1.0,
        };
    let tol = quad.rel_tol * reference;
    let window = quad.window;

    let mut plus = Vec::with_capacity(quad.eps_schedule.len());
    let mut minus = Vec::with_capacity(quad.eps_schedule.len());
    let mut quad_error: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let mut subdivisions = 0;

    for &e in &quad.eps_schedule {
        let eps = Epsilon::new(e)?;
        let integrand = |t: f64| {
            let g = traj.wightman(t, eps);
            let (s, c) = (omega * t).sin_cos();
            [g.re * c, g.im * s]
        };
        let delta = (10.0 * e).min(0.5 * window);
        let abs_tol = 1e-3 * tol / 3.0;
        let n = quad.max_subdivisions;
        let panels = [
            integrate(integrand, -window, -delta, 1e-14, abs_tol, n),
            integrate(integrand, -delta, delta, 1e-14, abs_tol, 2 * n),
            integrate(integrand, delta, window, 1e-14, abs_tol, n),
        ];
        let mut cos_part = 0.0;
        let mut sin_part = 0.0;
        let mut err = 0.0;
        for est in &panels {
            cos_part += est.value[0];
            sin_part += est.value[1];
            err += est.error;
            subdivisions += est.subdivisions;
        }
        if panels.iter().any(|est| !est.converged) && err > 1e-2 * tol {
            return Err(Error::NonConvergence {
                residual: err * p.mu * p.mu,
                tolerance: tol * p.mu * p.mu,
            });
        }
        let (correction, remainder) = match traj.decay_rate() {
            Some(k) => (0.0, 2.0 * traj.wightman(window, eps).norm() / k),
            None => inertial_tail(omega, window, e),
        };
        cos_part += correction;
        tail = tail.max(remainder);
        quad_error = quad_error.max(err);
        // the kernel is analytic between Im s = -ε and the real axis, so
        // shifting the contour gives V±(ε) = e^{±ω₀ε} L± exactly; strip it
        // and leave the extrapolation only truncation effects to remove
        plus.push((cos_part + sin_part) * (-omega * e).exp());
        minus.push((cos_part - sin_part) * (omega * e).exp());
    }

    if tail > tol {
        return Err(Error::WindowTooSmall {
            tail: tail * p.mu * p.mu,
            tolerance: tol * p.mu * p.mu,
        });
    }

    let steps = &quad.eps_schedule;
    let plus0 = extrapolate_to_zero(steps, &plus);
    let minus0 = extrapolate_to_zero(steps, &minus);
    let residual = if steps.len() > 1 {
        let fine = &steps[1..];
        (plus0 - extrapolate_to_zero(fine, &plus[1..]))
            .abs()
            .max((minus0 - extrapolate_to_zero(fine, &minus[1..])).abs())
    } else {
        f64::INFINITY
    };
    if residual > tol {
        return Err(Error::NonConvergence {
            residual: residual * p.mu * p.mu,
            tolerance: tol * p.mu * p.mu,
        });
    }

    let mu2 = p.mu * p.mu;
    Ok(NumericRates {
        rates: RateCoefficients::from_channels(mu2 * plus0, mu2 * minus0),
        error_estimate: mu2 * (residual + quad_error + tail),
        extrapolation_residual: mu2 * residual,
        tail_estimate: mu2 * tail,
        subdivisions,
    })
}

/// Correction to the cosine integral for `|Δτ| > T` of the inertial kernel
/// `-1/(4π²Δτ²)`, and a bound on what it leaves out.
fn inertial_tail(omega: f64, window: f64, eps: f64) -> (f64, f64) {
    let (s, c) = (omega * window).sin_cos();
    let t2 = window * window;
    // ∫_T^∞ cos(ωt)/t² dt to two terms of its asymptotic series
    let one_sided = -s / (omega * t2) + 2.0 * c / (omega * omega * t2 * window);
    let correction = -one_sided / (2.0 * PI * PI);
    let remainder =
        6.0 / (2.0 * PI * PI * omega.powi(3) * t2 * t2) + eps / (PI * PI * omega * t2 * window);
    (correction, remainder)
}
