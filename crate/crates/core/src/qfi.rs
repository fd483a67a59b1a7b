//! Quantum Fisher information of the evolved detector state.
//!
//! Three independent routes:
//!
//! - closed forms for `θ` and `φ` in the non-relativistic regime,
//! - the Bloch-vector formula `|∂ω|² + (ω·∂ω)²/(1-|ω|²)` with analytic derivatives,
//! - the symmetric-logarithmic-derivative spectral sum on the 2×2 density
//!   matrix, with a finite-difference `∂ρ`.
//!
//! Everything here is in rescaled units: time in units of `1/γ₀`,
//! acceleration in units of `ω₀`, so `A = h(ã)` and `B = -1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_closed_form, relaxed_fraction, BlochVector, InitialState};
use crate::error::{check_finite, Error, Result};
use crate::rates::RateCoefficients;
use crate::special::{coth_half, csch2_half, drift_correction, drift_correction_derivative};

/// `|ω|` at or above `1 - PURE_THRESHOLD` is treated as a pure state.
pub const PURE_THRESHOLD: f64 = 1e-9;
/// Largest `|ω·∂ω|` tolerated on the pure branch.
pub const PURE_OVERLAP_TOL: f64 = 1e-6;
/// Pairs with `λᵢ + λⱼ` below this are dropped from the SLD sum.
pub const SLD_EIGEN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as numerical noise.
pub const NEGATIVE_EIGEN_TOL: f64 = -1e-10;
/// Largest relative change of a finite-difference result under step halving.
pub const FD_STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Theta,
    Phi,
    Beta,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::Theta, Parameter::Phi, Parameter::Beta];

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Theta => "theta",
            Parameter::Phi => "phi",
            Parameter::Beta => "beta",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Parameter::Theta),
            "phi" => Ok(Parameter::Phi),
            "beta" => Ok(Parameter::Beta),
            other => Err(Error::InvalidParameter {
                name: "param",
                reason: format!("unknown parameter `{other}` (theta, phi, beta)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    BlochDerivative,
    SldOracle,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::ClosedForm,
        Method::BlochDerivative,
        Method::SldOracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::BlochDerivative => "bloch_derivative",
            Method::SldOracle => "sld_oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "closed_form" => Ok(Method::ClosedForm),
            "bloch_derivative" => Ok(Method::BlochDerivative),
            "sld_oracle" => Ok(Method::SldOracle),
            other => Err(Error::InvalidParameter {
                name: "method",
                reason: format!(
                    "unknown method `{other}` (closed-form, bloch-derivative, sld-oracle)"
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationParameter {
    pub label: Parameter,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub param: EstimationParameter,
    pub fisher: f64,
    pub method: Method,
    /// `|∂ω|²`, when the route computes the Bloch derivative.
    pub derivative_norm: Option<f64>,
    /// Max-norm gap between the analytic and finite-difference `∂_β ω`.
    pub derivative_gap: Option<f64>,
}

/// Fisher information from a Bloch vector and its derivative.
pub fn qfi_bloch(omega: &BlochVector, domega: &BlochVector) -> Result<f64> {
    let n2 = omega.norm_sq();
    let d2 = domega.norm_sq();
    if !n2.is_finite() || !d2.is_finite() {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: "Bloch vector or derivative is not finite".into(),
        });
    }
    let norm = n2.sqrt();
    if norm > 1.0 + PURE_THRESHOLD {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("|omega| = {norm} lies outside the Bloch ball"),
        });
    }
    let overlap = omega.dot(domega);
    if norm >= 1.0 - PURE_THRESHOLD {
        // a measurably mixed state inside the band would lose the overlap term
        let defect = 1.0 - n2;
        let dropped = if defect > 0.0 {
            overlap * overlap / defect
        } else {
            0.0
        };
        if overlap.abs() > PURE_OVERLAP_TOL || dropped > PURE_OVERLAP_TOL * d2 {
            return Err(Error::BranchAmbiguity { norm, overlap });
        }
        return Ok(d2);
    }
    Ok(d2 + overlap * overlap / (1.0 - n2))
}

/// Qubit density matrix `(I + ω·σ)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Matrix2<Complex64>);

impl DensityMatrix {
    pub fn from_bloch(w: &BlochVector) -> Self {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Self(Matrix2::new(
            c(0.5 * (1.0 + w.z), 0.0),
            c(0.5 * w.x, -0.5 * w.y),
            c(0.5 * w.x, 0.5 * w.y),
            c(0.5 * (1.0 - w.z), 0.0),
        ))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }
}

fn sld_sum(rho: &DensityMatrix, d: &Matrix2<Complex64>) -> Result<f64> {
    let eig = rho.0.symmetric_eigen();
    let mut fisher = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let s = eig.eigenvalues[i] + eig.eigenvalues[j];
            if s > SLD_EIGEN_TOL {
                let vi = eig.eigenvectors.column(i);
                let vj = eig.eigenvectors.column(j);
                let element = (vi.adjoint() * d * vj)[(0, 0)];
                fisher += 2.0 * element.norm_sqr() / s;
            }
        }
    }
    Ok(fisher)
}

fn check_density(m: &DensityMatrix) -> Result<()> {
    let lo = m.0.symmetric_eigenvalues().min();
    if lo < NEGATIVE_EIGEN_TOL {
        return Err(Error::NonPhysicalDensity { min_eigenvalue: lo });
    }
    Ok(())
}

/// Fourth-order `∂ρ`: central differences at `h` and `h/2`, Richardson-combined.
fn density_derivative<F>(rho_of: &F, x: f64, h: f64) -> Result<Matrix2<Complex64>>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    let central = |step: f64| -> Result<Matrix2<Complex64>> {
        let (up, down) = (rho_of(x + step)?, rho_of(x - step)?);
        check_density(&up)?;
        check_density(&down)?;
        Ok((up.0 - down.0) / Complex64::new(2.0 * step, 0.0))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((fine * Complex64::new(4.0, 0.0) - coarse) / Complex64::new(3.0, 0.0))
}

/// SLD Fisher information of the family `rho_of(X)` at `x`:
/// `Σ 2|⟨i|∂ρ|j⟩|²/(λᵢ+λⱼ)` over the eigenbasis of `ρ(x)`. `∂ρ` is a
/// fourth-order central difference, evaluated at `fd_step` and `fd_step/2`;
/// the two results must agree to [`FD_STABILITY_TOL`].
pub fn qfi_sld<F>(rho_of: F, x: f64, fd_step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    if !(fd_step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fd_step",
            reason: format!("must be positive, got {fd_step}"),
        });
    }
    let rho = rho_of(x)?;
    check_density(&rho)?;
    let coarse = sld_sum(&rho, &density_derivative(&rho_of, x, fd_step)?)?;
    let fine = sld_sum(&rho, &density_derivative(&rho_of, x, 0.5 * fd_step)?)?;
    if (coarse - fine).abs() > FD_STABILITY_TOL * coarse.abs().max(fine.abs()) + 1e-14 {
        return Err(Error::DerivativeUnstable { coarse, fine });
    }
    Ok(fine)
}

fn check_accel(a_resc: f64) -> Result<()> {
    if a_resc > 0.0 && a_resc.is_finite() {
        Ok(())
    } else {
        Err(Error::FormulaDomainError(format!(
            "rescaled acceleration must be positive, got {a_resc}"
        )))
    }
}

/// Effective decay factor `h(ã) = coth(π/ã) - (4π f(ã)) w²`, so the decay
/// rate is `h γ₀`.
pub fn decay_factor(a_resc: f64, w: f64) -> Result<f64> {
    check_accel(a_resc)?;
    check_finite("w", w)?;
    Ok(decay_factor_of_beta(2.0 * PI / a_resc, w))
}

/// `h` as a function of `β = 2π/ã`.
fn decay_factor_of_beta(beta: f64, w: f64) -> f64 {
    coth_half(beta) - drift_correction(beta) * w * w
}

fn decay_factor_beta_derivative(beta: f64, w: f64) -> f64 {
    -0.5 * csch2_half(beta) - drift_correction_derivative(beta) * w * w
}

/// Point of the rescaled non-relativistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledPoint {
    pub theta: f64,
    pub phi: f64,
    /// `τ̃ = γ₀τ`
    pub tau: f64,
    /// `ã = a/ω₀`
    pub accel: f64,
    pub drift: f64,
    /// `Ω/γ₀`; the QFI does not depend on it.
    pub level_spacing: f64,
}

impl RescaledPoint {
    pub fn new(theta: f64, phi: f64, tau: f64, accel: f64, drift: f64) -> Result<Self> {
        check_finite("theta", theta)?;
        check_finite("phi", phi)?;
        check_finite("tau", tau)?;
        check_finite("w", drift)?;
        check_accel(accel)?;
        if tau < 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("effective time must be >= 0, got {tau}"),
            });
        }
        Ok(Self {
            theta,
            phi,
            tau,
            accel,
            drift,
            level_spacing: 1.0,
        })
    }

    pub fn from_beta(theta: f64, phi: f64, tau: f64, beta: f64, drift: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::FormulaDomainError(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Self::new(theta, phi, tau, 2.0 * PI / beta, drift)
    }

    pub fn beta(&self) -> f64 {
        2.0 * PI / self.accel
    }

    pub fn value_of(&self, param: Parameter) -> f64 {
        match param {
            Parameter::Theta => self.theta,
            Parameter::Phi => self.phi,
            Parameter::Beta => self.beta(),
        }
    }

    /// Same point with one estimated parameter replaced.
    pub fn with(&self, param: Parameter, value: f64) -> Result<Self> {
        let mut p = *self;
        match param {
            Parameter::Theta => p.theta = value,
            Parameter::Phi => p.phi = value,
            Parameter::Beta => {
                if !(value > 0.0) {
                    return Err(Error::FormulaDomainError(format!(
                        "beta must be positive, got {value}"
                    )));
                }
                p.accel = 2.0 * PI / value;
            }
        }
        Ok(p)
    }

    pub fn decay_factor(&self) -> f64 {
        decay_factor_of_beta(self.beta(), self.drift)
    }

    pub fn rates(&self) -> RateCoefficients {
        RateCoefficients::from_total_and_net(self.decay_factor(), -1.0)
    }

    pub fn state(&self) -> BlochVector {
        let init = InitialState {
            theta: self.theta,
            phi: self.phi,
        };
        evolve_closed_form(&init, &self.rates(), self.level_spacing, self.tau)
            .expect("tau validated on construction")
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_bloch(&self.state())
    }

    /// Analytic `∂ω/∂X`.
    pub fn derivative(&self, param: Parameter) -> BlochVector {
        let h = self.decay_factor();
        let tau = self.tau;
        let (st, ct) = self.theta.sin_cos();
        let (sr, cr) = (self.level_spacing * tau + self.phi).sin_cos();
        let transverse = (-0.5 * h * tau).exp();
        let longitudinal = (-h * tau).exp();
        match param {
            Parameter::Theta => BlochVector::new(
                ct * cr * transverse,
                ct * sr * transverse,
                -st * longitudinal,
            ),
            Parameter::Phi => BlochVector::new(-st * sr * transverse, st * cr * transverse, 0.0),
            Parameter::Beta => {
                let dh = decay_factor_beta_derivative(self.beta(), self.drift);
                // ω₃ = cosθ e^{-hτ} - (1 - e^{-hτ})/h
                let dfrac = relaxed_fraction_derivative(h, tau);
                BlochVector::new(
                    -0.5 * tau * st * cr * transverse * dh,
                    -0.5 * tau * st * sr * transverse * dh,
                    (-tau * ct * longitudinal - dfrac) * dh,
                )
            }
        }
    }
}

/// `d/dh [(1 - e^{-hτ})/h]`
fn relaxed_fraction_derivative(h: f64, tau: f64) -> f64 {
    let x = h * tau;
    if x.abs() < 1e-4 {
        tau * tau * (-0.5 + x / 3.0 - x * x / 8.0)
    } else {
        (tau * (-x).exp() - relaxed_fraction(h, tau)) / h
    }
}

/// `F_φ = sin²θ e^{-h(ã)τ̃}`.
pub fn qfi_phi_closed(theta: f64, tau: f64, a_resc: f64, w: f64) -> Result<f64> {
    let h = decay_factor(a_resc, w)?;
    check_finite("tau", tau)?;
    let s = theta.sin();
    Ok(s * s * (-h * tau).exp())
}

/// `F_θ = e^{-hτ}{cos²θ + sin²θ e^{-hτ}[1 + (e^{hτ}-1)(1+h cosθ)²/D]}`,
/// `D = (h²-1)e^{hτ} + (1+h cosθ)²`, evaluated with `e^{-hτ}` throughout.
pub fn qfi_theta_closed(theta: f64, tau: f64, a_resc: f64, w: f64) -> Result<f64> {
    let h = decay_factor(a_resc, w)?;
    check_finite("tau", tau)?;
    let q = (-h * tau).exp();
    let (st, ct) = theta.sin_cos();
    let k = (1.0 + h * ct).powi(2);
    let gap = h * h - 1.0;
    let bracket = if gap == 0.0 {
        // D/e^{hτ} = k q and the bracket collapses to e^{hτ}
        1.0 / q
    } else {
        // D e^{-hτ}
        let scaled_d = gap + k * q;
        if !(scaled_d > 0.0) {
            return Err(Error::FormulaDomainError(format!(
                "denominator (h²-1)e^(hτ) + (1+h cosθ)² = {scaled_d:e}·e^(hτ) is not positive \
                 (h = {h}, θ = {theta}, τ = {tau})"
            )));
        }
        1.0 + (-(-h * tau).exp_m1()) * k / scaled_d
    };
    Ok(q * (ct * ct + st * st * q * bracket))
}

/// Default base step of the `β` finite difference, `10⁻⁵·max(1, |β|)`.
pub fn default_beta_step(beta: f64) -> f64 {
    1e-5 * beta.abs().max(1.0)
}

/// Central difference of `∂ω/∂β` at steps `h₀, h₀/2, h₀/4`, Richardson-combined.
pub fn beta_derivative_fd(point: &RescaledPoint, base_step: f64) -> Result<BlochVector> {
    let beta = point.beta();
    if !(base_step > 0.0) || base_step >= beta {
        return Err(Error::InvalidParameter {
            name: "fd_step",
            reason: format!("step must lie in (0, beta), got {base_step}"),
        });
    }
    let central = |h: f64| -> Result<BlochVector> {
        let up = point.with(Parameter::Beta, beta + h)?.state();
        let down = point.with(Parameter::Beta, beta - h)?.state();
        Ok((up - down) * (0.5 / h))
    };
    let d1 = central(base_step)?;
    let d2 = central(0.5 * base_step)?;
    let d4 = central(0.25 * base_step)?;
    let r1 = (d2 * 4.0 - d1) * (1.0 / 3.0);
    let r2 = (d4 * 4.0 - d2) * (1.0 / 3.0);
    Ok((r2 * 16.0 - r1) * (1.0 / 15.0))
}

/// `F_β` for `β = 2π/ã` from the analytic chain-rule derivative, with the
/// finite-difference derivative as a cross-check (`derivative_gap`).
pub fn qfi_beta(
    theta: f64,
    phi: f64,
    tau: f64,
    beta: f64,
    w: f64,
    fd_step: f64,
) -> Result<QfiResult> {
    let point = RescaledPoint::from_beta(theta, phi, tau, beta, w)?;
    beta_at(&point, fd_step)
}

fn beta_at(point: &RescaledPoint, fd_step: f64) -> Result<QfiResult> {
    let omega = point.state();
    let analytic = point.derivative(Parameter::Beta);
    let numeric = beta_derivative_fd(point, fd_step)?;
    let gap = analytic.max_abs_diff(&numeric);
    if gap > FD_STABILITY_TOL {
        return Err(Error::DerivativeUnstable {
            coarse: numeric.norm(),
            fine: analytic.norm(),
        });
    }
    Ok(QfiResult {
        param: EstimationParameter {
            label: Parameter::Beta,
            value: point.beta(),
        },
        fisher: qfi_bloch(&omega, &analytic)?,
        method: Method::BlochDerivative,
        derivative_norm: Some(analytic.norm_sq()),
        derivative_gap: Some(gap),
    })
}

/// Ultra-relativistic limit `w → ∞`: `(F_θ, F_φ) = (1, sin²θ)` at every time.
pub fn qfi_ultrarel(theta: f64) -> (f64, f64) {
    let s = theta.sin();
    (1.0, s * s)
}

/// Step used by the SLD route for parameter `param` at value `x`.
pub fn sld_step(param: Parameter, x: f64) -> f64 {
    match param {
        Parameter::Beta => 1e-3 * x.abs().max(1.0),
        _ => 1e-4,
    }
}

/// Fisher information of `param` at `point` by `method`.
pub fn evaluate(point: &RescaledPoint, param: Parameter, method: Method) -> Result<QfiResult> {
    let value = point.value_of(param);
    let label = EstimationParameter {
        label: param,
        value,
    };
    let plain = |fisher: f64, derivative_norm: Option<f64>| QfiResult {
        param: label,
        fisher,
        method,
        derivative_norm,
        derivative_gap: None,
    };
    match (param, method) {
        (Parameter::Theta, Method::ClosedForm) => Ok(plain(
            qfi_theta_closed(point.theta, point.tau, point.accel, point.drift)?,
            None,
        )),
        (Parameter::Phi, Method::ClosedForm) => Ok(plain(
            qfi_phi_closed(point.theta, point.tau, point.accel, point.drift)?,
            None,
        )),
        (Parameter::Beta, Method::ClosedForm) => Err(Error::FormulaDomainError(
            "no closed form for beta; use bloch-derivative or sld-oracle".into(),
        )),
        (Parameter::Beta, Method::BlochDerivative) => beta_at(point, default_beta_step(value)),
        (_, Method::BlochDerivative) => {
            let d = point.derivative(param);
            Ok(plain(qfi_bloch(&point.state(), &d)?, Some(d.norm_sq())))
        }
        (_, Method::SldOracle) => {
            let fisher = qfi_sld(
                |x| Ok(point.with(param, x)?.density()),
                value,
                sld_step(param, value),
            )?;
            Ok(plain(fisher, None))
        }
    }
}
