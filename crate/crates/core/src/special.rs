//! Overflow-safe elementary functions of the thermal ratio `x = 2πω₀/a`.
//!
//! For small accelerations `x` reaches the thousands and `e^x` overflows, so
//! everything here is written in terms of `e^{-x}`, `expm1` and `tanh`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `coth(x/2) = (e^x + 1)/(e^x - 1)` for `x > 0`.
pub fn coth_half(x: f64) -> f64 {
    1.0 / (0.5 * x).tanh()
}

/// Bose occupation `1/(e^x - 1)`.
pub fn bose(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// `e^x/(e^x - 1) = 1 + bose(x)`, written without forming `e^x`.
pub fn bose_plus_one(x: f64) -> f64 {
    -1.0 / (-x).exp_m1()
}

/// `csch²(x/2) = 4e^{-x}/(1 - e^{-x})²` for `x > 0`.
pub fn csch2_half(x: f64) -> f64 {
    let em1 = (-x).exp_m1();
    4.0 * (-x).exp() / (em1 * em1)
}

/// Bracketed polynomial of the drift correction, with `ω₀²/a² = x²/4π²`.
fn drift_poly(x: f64) -> f64 {
    let r = x * x / (4.0 * PI * PI);
    2.0 + 9.0 * r - x * (1.0 + r) * coth_half(x)
}

fn drift_poly_derivative(x: f64) -> f64 {
    let r = x * x / (4.0 * PI * PI);
    9.0 * x / (2.0 * PI * PI) - (1.0 + 3.0 * r) * coth_half(x) + 0.5 * x * (1.0 + r) * csch2_half(x)
}

/// Dimensionless w² coefficient of the non-relativistic decay rate,
/// `4π f(a)/ω₀` as a function of `x = 2πω₀/a`, so that
/// `A = γ₀ [coth(x/2) - drift_correction(x) w²]`.
///
/// Expanding `f(a)` with `e^x/(e^x-1)² = csch²(x/2)/4` and `a = 2πω₀/x`
/// gives `π² P(x) csch²(x/2) / (3x)`.
pub fn drift_correction(x: f64) -> f64 {
    PI * PI * drift_poly(x) * csch2_half(x) / (3.0 * x)
}

/// `d/dx` of [`drift_correction`].
pub fn drift_correction_derivative(x: f64) -> f64 {
    let p = drift_poly(x);
    let dp = drift_poly_derivative(x);
    let s = csch2_half(x);
    let c = coth_half(x);
    PI * PI / 3.0 * s * (dp / x - p / (x * x) - c * p / x)
}

/// `1/sinh²(z)` for complex `z`, stable for large `|Re z|`.
pub fn inv_sinh_sq(z: Complex64) -> Complex64 {
    // sinh² is even, so fold onto Re z >= 0.
    let z = if z.re < 0.0 { -z } else { z };
    if z.re < 1.0 {
        let s = z.sinh();
        return (s * s).inv();
    }
    let q = (-2.0 * z).exp();
    let d = Complex64::new(1.0, 0.0) - q;
    4.0 * q / (d * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // mpmath, 40 digits
    const DRIFT_AT_2PI: f64 = -0.006_333_874_644_978_487_090_484_683_338_302_27;
    const DRIFT_AT_2: f64 = 0.023_515_177_522_169_425_408_647_538_763_128_9;
    const DRIFT_AT_1: f64 = 0.111_532_010_696_242_761_425_282_076_307_611;

    #[test]
    fn drift_correction_golden_values() {
        assert_relative_eq!(
            drift_correction(2.0 * PI),
            DRIFT_AT_2PI,
            max_relative = 1e-13
        );
        assert_relative_eq!(drift_correction(2.0), DRIFT_AT_2, max_relative = 1e-13);
        assert_relative_eq!(drift_correction(1.0), DRIFT_AT_1, max_relative = 1e-12);
    }

    #[test]
    fn drift_correction_matches_direct_planck_form() {
        // f(a) exactly as written with e^x, valid while e^x is representable
        for &a in &[0.5_f64, 1.0, PI, 7.0, 30.0] {
            let x = 2.0 * PI / a;
            let e = x.exp();
            let f = a * e / (6.0 * (e - 1.0).powi(2))
                * (2.0 + 9.0 / (a * a) - x * (1.0 + 1.0 / (a * a)) * (e + 1.0) / (e - 1.0));
            assert_relative_eq!(drift_correction(x), 4.0 * PI * f, max_relative = 1e-10);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for &x in &[0.3_f64, 1.0, 2.0, 2.0 * PI, 10.0, 25.0] {
            let h = 1e-5 * x;
            let fd = (drift_correction(x + h) - drift_correction(x - h)) / (2.0 * h);
            let scale = drift_correction_derivative(x).abs().max(1e-12);
            assert!(
                (fd - drift_correction_derivative(x)).abs() / scale < 1e-7,
                "x={x} fd={fd} analytic={}",
                drift_correction_derivative(x)
            );
        }
    }

    #[test]
    fn huge_ratio_does_not_overflow() {
        let x = 2.0 * PI * 1e3;
        assert_eq!(coth_half(x), 1.0);
        assert_eq!(bose(x), 0.0);
        assert_eq!(csch2_half(x), 0.0);
        assert_eq!(drift_correction(x), 0.0);
        assert!(drift_correction_derivative(x).is_finite());
        assert_eq!(bose_plus_one(x), 1.0);
    }

    #[test]
    fn coth_identity() {
        for &x in &[0.1_f64, 1.0, 2.0 * PI, 20.0] {
            let e = x.exp();
            assert_relative_eq!(coth_half(x), (e + 1.0) / (e - 1.0), max_relative = 1e-14);
            assert_relative_eq!(bose_plus_one(x), e / (e - 1.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn inv_sinh_sq_agrees_with_direct_form() {
        for &(re, im) in &[
            (0.3, -0.01),
            (-0.3, -0.01),
            (2.5, 0.2),
            (-4.0, -1e-4),
            (12.0, 0.7),
        ] {
            let z = Complex64::new(re, im);
            let direct = (z.sinh() * z.sinh()).inv();
            let stable = inv_sinh_sq(z);
            assert!((direct - stable).norm() <= 1e-13 * direct.norm());
        }
        assert_eq!(inv_sinh_sq(Complex64::new(800.0, 0.1)).norm(), 0.0);
    }
}
