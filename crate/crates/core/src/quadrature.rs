//! Globally adaptive Gauss-Kronrod (7/15) quadrature for small vector-valued
//! integrands, and polynomial extrapolation to zero step.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights on the odd nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    /// Summed absolute error estimate, max-norm over components.
    pub error: f64,
    /// `∫|f|` per component, for relative tolerances.
    pub magnitude: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: f64,
    magnitude: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, lo: f64, hi: f64) -> Panel<N> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let mut mag = 0.0;
    for c in 0..N {
        k[c] = WGK[7] * fc[c];
        g[c] = WG[3] * fc[c];
        mag += WGK[7] * fc[c].abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        for c in 0..N {
            k[c] += WGK[j] * (f1[c] + f2[c]);
            if j % 2 == 1 {
                g[c] += WG[j / 2] * (f1[c] + f2[c]);
            }
            mag += WGK[j] * (f1[c].abs() + f2[c].abs());
        }
    }
    let mut error: f64 = 0.0;
    let mut value = [0.0; N];
    for c in 0..N {
        value[c] = k[c] * half;
        let diff = ((k[c] - g[c]) * half).abs();
        // QUADPACK-style sharpening of the raw Gauss/Kronrod difference
        error = error.max(diff.min((200.0 * diff).powf(1.5)));
    }
    Panel {
        lo,
        hi,
        value,
        error,
        magnitude: mag * half.abs(),
    }
}

/// Integrate `f` over `[lo, hi]` until the error estimate is below
/// `max(abs_tol, rel_tol * ∫|f|)` or `max_subdivisions` panels are used.
pub fn integrate<const N: usize, F>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Estimate<N>
where
    F: Fn(f64) -> [f64; N],
{
    let mut heap = BinaryHeap::new();
    heap.push(kronrod(&f, lo, hi));
    let mut subdivisions = 1;
    loop {
        let (value, error, magnitude) = totals(&heap);
        let target = abs_tol.max(rel_tol * magnitude);
        if error <= target || subdivisions >= max_subdivisions {
            return Estimate {
                value,
                error,
                magnitude,
                subdivisions,
                converged: error <= target,
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // panel can no longer be split in f64
            heap.push(worst);
            let (value, error, magnitude) = totals(&heap);
            return Estimate {
                value,
                error,
                magnitude,
                subdivisions,
                converged: false,
            };
        }
        heap.push(kronrod(&f, worst.lo, mid));
        heap.push(kronrod(&f, mid, worst.hi));
        subdivisions += 1;
    }
}

fn totals<const N: usize>(heap: &BinaryHeap<Panel<N>>) -> ([f64; N], f64, f64) {
    let mut value = [0.0; N];
    let mut error = 0.0;
    let mut magnitude = 0.0;
    for p in heap.iter() {
        for c in 0..N {
            value[c] += p.value[c];
        }
        error += p.error;
        magnitude += p.magnitude;
    }
    (value, error, magnitude)
}

/// Polynomial extrapolation of `values[i] = P(steps[i])` to step zero
/// (Neville's scheme). With `n` points this cancels orders `h¹ … h^{n-1}`.
pub fn extrapolate_to_zero(steps: &[f64], values: &[f64]) -> f64 {
    assert_eq!(steps.len(), values.len());
    assert!(!steps.is_empty());
    let mut p = values.to_vec();
    let n = steps.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (steps[i], steps[i + level]);
            p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let est = integrate(|x| [x.powi(5) - 2.0 * x, 1.0], -1.0, 2.0, 1e-14, 0.0, 50);
        assert_relative_eq!(
            est.value[0],
            64.0 / 6.0 - 1.0 / 6.0 - 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(est.value[1], 3.0, max_relative = 1e-15);
        assert!(est.converged);
    }

    #[test]
    fn lorentzian_peak() {
        // ∫ ε/(x²+ε²) over [-1, 1] = 2 atan(1/ε)
        let eps = 1e-4;
        let est = integrate(|x| [eps / (x * x + eps * eps)], -1.0, 1.0, 1e-13, 0.0, 2000);
        assert!(est.converged);
        assert_relative_eq!(est.value[0], 2.0 * (1.0 / eps).atan(), max_relative = 1e-12);
    }

    #[test]
    fn oscillatory() {
        let est = integrate(|x| [(50.0 * x).cos()], 0.0, PI, 1e-13, 1e-15, 500);
        assert!(est.value[0].abs() < 1e-13);
        let est = integrate(|x: f64| [x.sin() * (-x).exp()], 0.0, 40.0, 1e-13, 0.0, 500);
        assert_relative_eq!(est.value[0], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let est = integrate(
            |x: f64| [1.0 / x.abs().sqrt().max(1e-300)],
            -1.0,
            1.0,
            1e-15,
            0.0,
            5,
        );
        assert!(!est.converged);
        assert_eq!(est.subdivisions, 5);
    }

    #[test]
    fn extrapolation_cancels_polynomial_orders() {
        let f = |h: f64| 2.0 + 3.0 * h - 5.0 * h * h;
        let hs = [0.1, 0.05, 0.025];
        let vals: Vec<f64> = hs.iter().map(|&h| f(h)).collect();
        assert_relative_eq!(extrapolate_to_zero(&hs, &vals), 2.0, max_relative = 1e-13);

        let g = |h: f64| (0.7 * h).exp();
        let hs = [0.04, 0.02, 0.01, 0.005, 0.0025];
        let vals: Vec<f64> = hs.iter().map(|&h| g(h)).collect();
        // remainder ≈ 0.7⁵/5!·Πhᵢ ≈ 1.4e-13
        assert!((extrapolate_to_zero(&hs, &vals) - 1.0).abs() < 5e-13);
    }
}
