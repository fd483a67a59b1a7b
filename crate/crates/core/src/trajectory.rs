//! Detector worldlines and the massless-scalar Wightman function along them.
//!
//! Every form is evaluated with the single prescription `G⁺(Δτ - iε)`: the lag
//! is shifted to `Δτ - iε` in the final lag-only expression. All
//! quantities are in natural units.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::special::inv_sinh_sq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// Constant velocity, `t = √(1+w²)τ`, `y = wτ`.
    InertialDrift,
    /// Linear uniform acceleration along x (no drift).
    UniformAcceleration,
    /// Acceleration in x combined with a constant four-velocity component `w = dy/dτ`.
    DriftedAcceleration,
    /// The drifted trajectory's correlator truncated at order w².
    DriftedAccelerationNonRelExpansion,
    /// The ultra-relativistic form: the w = 0 correlator suppressed by `w⁻⁴`.
    DriftedAccelerationUltraRel,
}

impl TrajectoryKind {
    pub fn is_accelerated(self) -> bool {
        !matches!(self, TrajectoryKind::InertialDrift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    kind: TrajectoryKind,
    acceleration: Option<f64>,
    drift: f64,
}

impl Trajectory {
    pub fn new(kind: TrajectoryKind, acceleration: Option<f64>, drift: f64) -> Result<Self> {
        check_finite("w", drift)?;
        if drift < 0.0 {
            return Err(Error::InvalidParameter {
                name: "w",
                reason: format!("four-velocity component must be >= 0, got {drift}"),
            });
        }
        let acceleration = if kind.is_accelerated() {
            let a = acceleration.ok_or(Error::InvalidParameter {
                name: "a",
                reason: "accelerated trajectories need an acceleration".into(),
            })?;
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidAcceleration(a));
            }
            Some(a)
        } else {
            None
        };
        let drift = match kind {
            TrajectoryKind::UniformAcceleration => 0.0,
            _ => drift,
        };
        if kind == TrajectoryKind::DriftedAccelerationUltraRel && drift <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "w",
                reason: "the ultra-relativistic form needs w > 0".into(),
            });
        }
        Ok(Self {
            kind,
            acceleration,
            drift,
        })
    }

    pub fn inertial_drift(w: f64) -> Result<Self> {
        Self::new(TrajectoryKind::InertialDrift, None, w)
    }

    pub fn uniform_acceleration(a: f64) -> Result<Self> {
        Self::new(TrajectoryKind::UniformAcceleration, Some(a), 0.0)
    }

    pub fn drifted_acceleration(a: f64, w: f64) -> Result<Self> {
        Self::new(TrajectoryKind::DriftedAcceleration, Some(a), w)
    }

    pub fn drifted_nonrel(a: f64, w: f64) -> Result<Self> {
        Self::new(
            TrajectoryKind::DriftedAccelerationNonRelExpansion,
            Some(a),
            w,
        )
    }

    pub fn drifted_ultrarel(a: f64, w: f64) -> Result<Self> {
        Self::new(TrajectoryKind::DriftedAccelerationUltraRel, Some(a), w)
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn acceleration(&self) -> Option<f64> {
        self.acceleration
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Rotation rate `α = a/√(1+w²)` of the accelerated worldline.
    pub fn alpha(&self) -> Option<f64> {
        self.acceleration
            .map(|a| a / (1.0 + self.drift * self.drift).sqrt())
    }

    /// Exponential decay rate of `|G⁺(Δτ)|` at large lag, if it decays exponentially.
    pub fn decay_rate(&self) -> Option<f64> {
        match self.kind {
            TrajectoryKind::InertialDrift => None,
            TrajectoryKind::DriftedAcceleration => self.alpha(),
            // the truncated and suppressed forms are built on the w = 0 correlator
            _ => self.acceleration,
        }
    }

    pub fn wightman(&self, dtau: f64, eps: Epsilon) -> Complex64 {
        let s = Complex64::new(dtau, -eps.value());
        match self.kind {
            TrajectoryKind::InertialDrift => inertial_kernel(s),
            TrajectoryKind::UniformAcceleration => {
                accelerated_kernel(self.acceleration.unwrap(), s)
            }
            TrajectoryKind::DriftedAcceleration => {
                drifted_kernel(self.acceleration.unwrap(), self.drift, s)
            }
            TrajectoryKind::DriftedAccelerationNonRelExpansion => {
                nonrel_kernel(self.acceleration.unwrap(), self.drift, s)
            }
            TrajectoryKind::DriftedAccelerationUltraRel => {
                accelerated_kernel(self.acceleration.unwrap(), s) / self.drift.powi(4)
            }
        }
    }
}

/// Positive `iε` regulator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidRegulator(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `G⁺(Δτ - iε)` along `traj`.
pub fn wightman(traj: &Trajectory, dtau: f64, eps: f64) -> Result<Complex64> {
    let eps = Epsilon::new(eps)?;
    check_finite("dtau", dtau)?;
    Ok(traj.wightman(dtau, eps))
}

/// The w²-truncated correlator of the drifted trajectory.
///
/// Intended for `w ≲ 0.2`; no bound is enforced.
pub fn wightman_nonrel_expansion(a: f64, w: f64, dtau: f64, eps: f64) -> Result<Complex64> {
    let traj = Trajectory::drifted_nonrel(a, w)?;
    wightman(&traj, dtau, eps)
}

fn inertial_kernel(s: Complex64) -> Complex64 {
    -(s * s).inv() / (4.0 * PI * PI)
}

/// `-a²/(16π² sinh²(as/2))`
fn accelerated_kernel(a: f64, s: Complex64) -> Complex64 {
    -a * a / (16.0 * PI * PI) * inv_sinh_sq(0.5 * a * s)
}

/// `-α⁴/(16π²a²) [sinh²(αs/2) - w²α⁴s²/(4a²)]⁻¹`
fn drifted_kernel(a: f64, w: f64, s: Complex64) -> Complex64 {
    let alpha = a / (1.0 + w * w).sqrt();
    let c = w * w * alpha.powi(4) / (4.0 * a * a);
    let inv = inv_sinh_sq(0.5 * alpha * s);
    // 1/(S - c s²) = (1/S) / (1 - c s²/S) keeps the large-lag tail finite
    let denom_inv = inv / (Complex64::new(1.0, 0.0) - c * s * s * inv);
    -alpha.powi(4) / (16.0 * PI * PI * a * a) * denom_inv
}

fn nonrel_kernel(a: f64, w: f64, s: Complex64) -> Complex64 {
    let base = accelerated_kernel(a, s);
    let z = 0.5 * a * s;
    let inv = inv_sinh_sq(z);
    // sinh(2z)/sinh⁴(z) = 2 coth(z) csch²(z)
    let x = a * s;
    let correction = 0.5 * x * coth(z) * inv + 0.25 * x * x * inv * inv;
    (1.0 - 2.0 * w * w) * base - a * a / (16.0 * PI * PI) * correction * (w * w)
}

fn coth(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if z.re < 0.0 {
        return -coth(-z);
    }
    if z.re < 1.0 {
        return z.cosh() / z.sinh();
    }
    let q = (-2.0 * z).exp();
    (one + q) / (one - q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    #[test]
    fn alpha_invariant() {
        let t = Trajectory::drifted_acceleration(2.0, 0.75).unwrap();
        assert_eq!(t.alpha().unwrap(), 2.0 / (1.0_f64 + 0.75 * 0.75).sqrt());
        let u = Trajectory::uniform_acceleration(3.0).unwrap();
        assert_eq!(u.alpha(), Some(3.0));
        assert_eq!(u.drift(), 0.0);
        let i = Trajectory::inertial_drift(5.0).unwrap();
        assert_eq!(i.acceleration(), None);
        assert_eq!(i.alpha(), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(Epsilon::new(0.0), Err(Error::InvalidRegulator(0.0)));
        assert!(Epsilon::new(-1e-3).is_err());
        assert_eq!(
            Trajectory::uniform_acceleration(0.0),
            Err(Error::InvalidAcceleration(0.0))
        );
        assert!(Trajectory::drifted_acceleration(-1.0, 0.1).is_err());
        assert!(Trajectory::drifted_ultrarel(1.0, 0.0).is_err());
        let t = Trajectory::uniform_acceleration(1.0).unwrap();
        assert!(wightman(&t, 1.0, 0.0).is_err());
        assert!(wightman_nonrel_expansion(0.0, 0.1, 1.0, 1e-3).is_err());
    }

    #[test]
    fn uniform_golden_value() {
        // mpmath: -1/(16π² sinh²((1 - 1e-4 i)/2))
        let g = wightman(&Trajectory::uniform_acceleration(1.0).unwrap(), 1.0, 1e-4).unwrap();
        assert_relative_eq!(
            g.re,
            -0.023_320_933_817_611_002_593_442_789_497_979,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            g.im,
            -5.046_541_497_903_232_311_755_986_209_496e-6,
            max_relative = 1e-10
        );
    }

    #[test]
    fn nonrel_golden_value() {
        let g = wightman_nonrel_expansion(PI, 0.01, 2.0, 1e-4).unwrap();
        assert_relative_eq!(
            g.re,
            -4.686_667_418_763_188_626_262_186_923_740e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            g.im,
            -1.477_804_743_155_410_827_852_001_995_019e-7,
            max_relative = 1e-9
        );
    }

    #[test]
    fn inertial_form_is_independent_of_drift() {
        for &w in &[0.0, 0.3, 5.0, 100.0] {
            let t = Trajectory::inertial_drift(w).unwrap();
            for &dt in &[-3.0, -0.2, 0.01, 1.0, 40.0] {
                let s = Complex64::new(dt, -1e-3);
                let expected = -1.0 / (4.0 * PI * PI * s * s);
                let got = t.wightman(dt, eps(1e-3));
                assert!((got - expected).norm() <= 1e-14 * expected.norm());
            }
        }
    }

    #[test]
    fn drifted_reduces_to_uniform_at_zero_drift() {
        for &a in &[0.3, 1.0, PI, 12.0] {
            let d = Trajectory::drifted_acceleration(a, 0.0).unwrap();
            let u = Trajectory::uniform_acceleration(a).unwrap();
            for i in -50..=50 {
                let dt = 0.173 * i as f64;
                let (gd, gu) = (d.wightman(dt, eps(1e-3)), u.wightman(dt, eps(1e-3)));
                assert!((gd - gu).norm() <= 1e-15 * gu.norm(), "a={a} dt={dt}");
            }
        }
    }

    #[test]
    fn expansion_is_exact_at_zero_drift() {
        let u = Trajectory::uniform_acceleration(1.0).unwrap();
        for &dt in &[-2.0, 0.3, 0.7, 5.0] {
            let g = wightman_nonrel_expansion(1.0, 0.0, dt, 1e-4).unwrap();
            assert_eq!(g, u.wightman(dt, eps(1e-4)));
        }
    }

    #[test]
    fn ultrarel_is_suppressed_by_w4() {
        let u = Trajectory::uniform_acceleration(2.0).unwrap();
        let r = Trajectory::drifted_ultrarel(2.0, 10.0).unwrap();
        let (gu, gr) = (u.wightman(0.8, eps(1e-3)), r.wightman(0.8, eps(1e-3)));
        assert!((gr * 1e4 - gu).norm() <= 1e-14 * gu.norm());
    }

    #[test]
    fn universal_short_distance_limit() {
        // every worldline sees the Minkowski singularity -1/(4π²Δτ²)
        for t in [
            Trajectory::drifted_acceleration(1.5, 0.4).unwrap(),
            Trajectory::drifted_acceleration(0.2, 3.0).unwrap(),
            Trajectory::uniform_acceleration(7.0).unwrap(),
        ] {
            let dt = 1e-4;
            let g = t.wightman(dt, eps(1e-9));
            assert_relative_eq!(g.re * 4.0 * PI * PI * dt * dt, -1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn hermiticity() {
        for t in [
            Trajectory::uniform_acceleration(1.3).unwrap(),
            Trajectory::drifted_acceleration(1.3, 0.0).unwrap(),
            Trajectory::inertial_drift(0.6).unwrap(),
        ] {
            for i in 1..40 {
                let dt = 0.137 * i as f64;
                let e = eps(2e-3);
                let (fwd, back) = (t.wightman(dt, e), t.wightman(-dt, e));
                assert!((back - fwd.conj()).norm() <= 1e-14 * fwd.norm());
            }
        }
    }

    #[test]
    fn exponential_decay_rate() {
        for t in [
            Trajectory::uniform_acceleration(1.0).unwrap(),
            Trajectory::drifted_acceleration(2.0, 0.5).unwrap(),
            Trajectory::drifted_acceleration(0.5, 0.05).unwrap(),
        ] {
            let alpha = t.alpha().unwrap();
            // least-squares slope of ln|G| over |Δτ| ∈ [10/α, 30/α]
            let pts: Vec<(f64, f64)> = (0..=40)
                .map(|i| {
                    let dt = (10.0 + 0.5 * i as f64) / alpha;
                    (dt, t.wightman(dt, eps(1e-3)).norm().ln())
                })
                .collect();
            let n = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
            let (mx, my) = (sx / n, sy / n);
            let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let rate = -num / den;
            assert!(
                (rate - alpha).abs() <= 0.05 * alpha,
                "rate={rate} alpha={alpha}"
            );
            assert!(t.wightman(-1e3 / alpha, eps(1e-3)).is_finite());
        }
    }

    #[test]
    fn uniform_far_tail_vanishes() {
        let t = Trajectory::uniform_acceleration(1.0).unwrap();
        let g = t.wightman(-1e4, eps(1e-3));
        assert_eq!(g.norm(), 0.0);
        let g40 = t.wightman(40.0, eps(1e-3)).norm();
        assert_relative_eq!(
            g40,
            (-40.0_f64).exp() * 4.0 / (16.0 * PI * PI),
            max_relative = 1e-6
        );
    }

    #[test]
    fn expansion_error_is_fourth_order() {
        let a = 1.0;
        let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        let max_rel = |w: f64| {
            let exact = Trajectory::drifted_acceleration(a, w).unwrap();
            grid.iter()
                .map(|&dt| {
                    let g = exact.wightman(dt, eps(1e-4));
                    let e = wightman_nonrel_expansion(a, w, dt, 1e-4).unwrap();
                    (e - g).norm() / g.norm()
                })
                .fold(0.0, f64::max)
        };
        let k = max_rel(0.05) / 0.05_f64.powi(4);
        let at_half = max_rel(0.025);
        assert!(
            at_half <= 2.0 * k * 0.025_f64.powi(4),
            "k={k} at_half={at_half}"
        );
        // and it is genuinely w⁴, not w²
        assert!(at_half >= 0.5 * k * 0.025_f64.powi(4));
        assert!(max_rel(0.05) < 1e-3);
    }
}
