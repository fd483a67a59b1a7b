//! Bloch-vector evolution under the detector's Lindblad generator.
//!
//! In Bloch form the master equation is affine:
//!
//! ```text
//! dω₁/dτ = -(A/2) ω₁ - Ω ω₂
//! dω₂/dτ =  Ω ω₁ - (A/2) ω₂
//! dω₃/dτ = -A ω₃ + B
//! ```
//!
//! [`propagate`] is its exact solution from an arbitrary Bloch vector and
//! [`evolve_closed_form`] the restriction to the `(θ, φ)` initial family.
//! [`evolve_ode`] integrates the same system numerically as an independent check.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::rates::RateCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Pure initial state `sin(θ/2)|0⟩ + e^{-iφ} cos(θ/2)|1⟩`; `θ = 0` is the excited state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub theta: f64,
    pub phi: f64,
}

impl InitialState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        check_finite("theta", theta)?;
        check_finite("phi", phi)?;
        Ok(Self { theta, phi })
    }

    pub fn bloch(&self) -> BlochVector {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        BlochVector::new(st * cp, st * sp, ct)
    }
}

/// `(1 - e^{-Aτ})/A`, continued to `τ(1 - Aτ/2)` when `|A|τ < 10⁻⁸`.
pub fn relaxed_fraction(total: f64, tau: f64) -> f64 {
    if (total * tau).abs() < 1e-8 {
        tau * (1.0 - 0.5 * total * tau)
    } else {
        -(-total * tau).exp_m1() / total
    }
}

/// Exact propagation of any Bloch vector over proper time `tau`.
pub fn propagate(
    state: BlochVector,
    rates: &RateCoefficients,
    level_spacing: f64,
    tau: f64,
) -> BlochVector {
    let a = rates.total_rate();
    let transverse = (-0.5 * a * tau).exp();
    let (s, c) = (level_spacing * tau).sin_cos();
    BlochVector::new(
        (state.x * c - state.y * s) * transverse,
        (state.x * s + state.y * c) * transverse,
        state.z * (-a * tau).exp() + rates.net_rate() * relaxed_fraction(a, tau),
    )
}

fn check_tau(tau: f64) -> Result<()> {
    check_finite("tau", tau)?;
    if tau < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("proper time must be >= 0, got {tau}"),
        });
    }
    Ok(())
}

/// Bloch vector at `tau` for the initial family `(θ, φ)`:
/// `ω₁ = sinθ cos(Ωτ+φ) e^{-Aτ/2}`, `ω₂ = sinθ sin(Ωτ+φ) e^{-Aτ/2}`,
/// `ω₃ = cosθ e^{-Aτ} + (B/A)(1 - e^{-Aτ})`.
pub fn evolve_closed_form(
    init: &InitialState,
    rates: &RateCoefficients,
    level_spacing: f64,
    tau: f64,
) -> Result<BlochVector> {
    check_tau(tau)?;
    let a = rates.total_rate();
    let (st, ct) = init.theta.sin_cos();
    let (sp, cp) = (level_spacing * tau + init.phi).sin_cos();
    let transverse = st * (-0.5 * a * tau).exp();
    Ok(BlochVector::new(
        transverse * cp,
        transverse * sp,
        ct * (-a * tau).exp() + rates.net_rate() * relaxed_fraction(a, tau),
    ))
}

/// Step-size control of the ODE integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub initial_step: f64,
    /// Per-step local error bound (max-norm).
    pub tolerance: f64,
    /// Smallest step the controller may take before giving up.
    pub min_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            tolerance: 1e-10,
            min_step: 1e-9,
        }
    }
}

fn bloch_rhs(y: BlochVector, a: f64, b: f64, omega: f64) -> BlochVector {
    BlochVector::new(
        -0.5 * a * y.x - omega * y.y,
        omega * y.x - 0.5 * a * y.y,
        -a * y.z + b,
    )
}

fn rk4(y: BlochVector, h: f64, a: f64, b: f64, omega: f64) -> BlochVector {
    let k1 = bloch_rhs(y, a, b, omega);
    let k2 = bloch_rhs(y + k1 * (0.5 * h), a, b, omega);
    let k3 = bloch_rhs(y + k2 * (0.5 * h), a, b, omega);
    let k4 = bloch_rhs(y + k3 * h, a, b, omega);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrate the Bloch equations from an arbitrary state with classical RK4
/// and step doubling.
pub fn propagate_ode(
    state: BlochVector,
    rates: &RateCoefficients,
    level_spacing: f64,
    tau: f64,
    ctrl: &StepControl,
) -> Result<BlochVector> {
    check_tau(tau)?;
    if !(ctrl.initial_step > 0.0 && ctrl.tolerance > 0.0 && ctrl.min_step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: "step control values must be positive".into(),
        });
    }
    let (a, b, omega) = (rates.total_rate(), rates.net_rate(), level_spacing);
    let mut y = state;
    let mut t = 0.0;
    let mut h = ctrl.initial_step;
    while t < tau {
        let step = h.min(tau - t);
        let full = rk4(y, step, a, b, omega);
        let half = rk4(rk4(y, 0.5 * step, a, b, omega), 0.5 * step, a, b, omega);
        let err = full.max_abs_diff(&half) / 15.0;
        if err <= ctrl.tolerance {
            // local Richardson extrapolation of the two RK4 estimates
            y = half + (half - full) * (1.0 / 15.0);
            t += step;
            if err < ctrl.tolerance / 64.0 {
                h = (2.0 * h).min(1.0);
            }
        } else {
            h = 0.5 * step;
            if h < ctrl.min_step {
                return Err(Error::StepTooLarge {
                    error: err,
                    tolerance: ctrl.tolerance,
                });
            }
        }
    }
    Ok(y)
}

/// ODE counterpart of [`evolve_closed_form`].
pub fn evolve_ode(
    init: &InitialState,
    rates: &RateCoefficients,
    level_spacing: f64,
    tau: f64,
    ctrl: &StepControl,
) -> Result<BlochVector> {
    propagate_ode(init.bloch(), rates, level_spacing, tau, ctrl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn inertial(g0: f64) -> RateCoefficients {
        RateCoefficients::from_total_and_net(g0, -g0)
    }

    #[test]
    fn identity_at_zero_time() {
        let init = InitialState::new(0.7, 2.1).unwrap();
        let rates = RateCoefficients::from_total_and_net(1.3, -0.4);
        let s = evolve_closed_form(&init, &rates, 1.0, 0.0).unwrap();
        assert!(s.max_abs_diff(&init.bloch()) == 0.0);
    }

    #[test]
    fn unitary_limit() {
        let init = InitialState::new(1.1, 0.3).unwrap();
        let rates = RateCoefficients::from_total_and_net(0.0, 0.0);
        for &tau in &[0.5, 3.0, 40.0] {
            let s = evolve_closed_form(&init, &rates, 1.0, tau).unwrap();
            let expected = BlochVector::new(
                1.1_f64.sin() * (tau + 0.3_f64).cos(),
                1.1_f64.sin() * (tau + 0.3_f64).sin(),
                1.1_f64.cos(),
            );
            assert!(s.max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn excited_state_decay() {
        let g0 = 0.37;
        let init = InitialState::new(0.0, 0.0).unwrap();
        for &tau in &[0.1, 1.0, 5.0] {
            let s = evolve_closed_form(&init, &inertial(g0), 1.0, tau).unwrap();
            assert_relative_eq!(s.z, 2.0 * (-g0 * tau).exp() - 1.0, max_relative = 1e-14);
            let o = evolve_ode(&init, &inertial(g0), 1.0, tau, &StepControl::default()).unwrap();
            assert!((o.z - s.z).abs() < 1e-8);
        }
    }

    #[test]
    fn ground_state_has_no_transverse_part() {
        let rates = RateCoefficients::from_total_and_net(1.7, -0.6);
        let init = InitialState::new(PI, 0.4).unwrap();
        for &tau in &[0.2, 1.0, 4.0] {
            let s = evolve_closed_form(&init, &rates, 1.0, tau).unwrap();
            assert!(s.x.abs() < 1e-15 && s.y.abs() < 1e-15);
            let e = (-1.7 * tau).exp();
            assert_relative_eq!(s.z, -e + (-0.6 / 1.7) * (1.0 - e), max_relative = 1e-13);
            let o = evolve_ode(&init, &rates, 1.0, tau, &StepControl::default()).unwrap();
            assert!(o.x.abs() < 1e-15 && o.y.abs() < 1e-15);
        }
    }

    #[test]
    fn small_total_rate_uses_series() {
        let rates = RateCoefficients::from_total_and_net(1e-15, -1e-15);
        let init = InitialState::new(0.5, 0.0).unwrap();
        let s = evolve_closed_form(&init, &rates, 1.0, 2.0).unwrap();
        assert!(s.z.is_finite());
        assert_relative_eq!(
            s.z,
            0.5_f64.cos() * (-2e-15_f64).exp() - 2e-15,
            max_relative = 1e-15
        );
        assert_eq!(relaxed_fraction(0.0, 3.0), 3.0);
    }

    #[test]
    fn ode_conserves_norm_when_unitary() {
        let init = InitialState::new(1.2, 0.8).unwrap();
        let rates = RateCoefficients::from_total_and_net(0.0, 0.0);
        let ctrl = StepControl {
            tolerance: 1e-13,
            ..StepControl::default()
        };
        let s = evolve_ode(&init, &rates, 1.0, 100.0, &ctrl).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ode_reports_step_too_large() {
        let init = InitialState::new(1.2, 0.8).unwrap();
        let rates = RateCoefficients::from_total_and_net(1.0, -1.0);
        let ctrl = StepControl {
            initial_step: 0.5,
            tolerance: 1e-14,
            min_step: 0.1,
        };
        assert!(matches!(
            evolve_ode(&init, &rates, 50.0, 1.0, &ctrl),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn rejects_negative_time() {
        let init = InitialState::new(0.0, 0.0).unwrap();
        assert!(evolve_closed_form(&init, &inertial(1.0), 1.0, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_ode_on_grid() {
        let rates = RateCoefficients::from_total_and_net(1.31, -1.0);
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    let init =
                        InitialState::new(2.0 * PI * i as f64 / 10.0, 2.0 * PI * j as f64 / 10.0)
                            .unwrap();
                    let tau = 0.5 * k as f64;
                    let cf = evolve_closed_form(&init, &rates, 1.0, tau).unwrap();
                    let ode = evolve_ode(&init, &rates, 1.0, tau, &StepControl::default()).unwrap();
                    worst = worst.max(cf.max_abs_diff(&ode));
                }
            }
        }
        assert!(worst <= 1e-8, "worst = {worst}");
    }

    proptest! {
        #[test]
        fn semigroup(theta in 0.0..2.0 * PI, phi in 0.0..2.0 * PI,
                     t1 in 0.0..5.0_f64, t2 in 0.0..5.0_f64,
                     total in 0.0..3.0_f64, frac in -1.0..=1.0_f64) {
            let rates = RateCoefficients::from_total_and_net(total, frac * total);
            let init = InitialState::new(theta, phi).unwrap();
            let direct = evolve_closed_form(&init, &rates, 1.3, t1 + t2).unwrap();
            let mid = evolve_closed_form(&init, &rates, 1.3, t1).unwrap();
            let composed = propagate(mid, &rates, 1.3, t2);
            prop_assert!(direct.max_abs_diff(&composed) <= 1e-12);
        }

        #[test]
        fn stays_in_bloch_ball(theta in 0.0..2.0 * PI, phi in 0.0..2.0 * PI,
                               tau in 0.0..20.0_f64, total in 0.0..3.0_f64, frac in -1.0..=1.0_f64) {
            let rates = RateCoefficients::from_total_and_net(total, frac * total);
            let s = evolve_closed_form(&InitialState::new(theta, phi).unwrap(), &rates, 1.0, tau).unwrap();
            prop_assert!(s.norm() <= 1.0 + 1e-10);
        }

        #[test]
        fn approaches_fixed_point_monotonically(theta in 0.0..2.0 * PI, tau in 0.0..10.0_f64,
                                                dt in 0.0..2.0_f64, total in 0.01..3.0_f64,
                                                frac in -1.0..=1.0_f64) {
            let rates = RateCoefficients::from_total_and_net(total, frac * total);
            let fixed = frac;
            let init = InitialState::new(theta, 0.2).unwrap();
            let s1 = evolve_closed_form(&init, &rates, 1.0, tau).unwrap();
            let s2 = evolve_closed_form(&init, &rates, 1.0, tau + dt).unwrap();
            let tr = |s: &BlochVector| (s.x * s.x + s.y * s.y).sqrt();
            prop_assert!(tr(&s2) <= tr(&s1) + 1e-15);
            prop_assert!((s2.z - fixed).abs() <= (s1.z - fixed).abs() + 1e-15);
        }
    }
}
