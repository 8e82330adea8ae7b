//! 2-periodic orbit solving via the ratio function `h(x) = f'(x) / x`.
//!
//! For a subquadratic scalar landscape the ratio is monotone decreasing on
//! `(0, inf)` with `h(0+) = f''(0)` and `h -> 0` at infinity, so the orbit
//! amplitude is the unique root of `h(x) = 2 / eta`, found by bisection.

use crate::error::PeriodicError;
use crate::landscapes::{norm, OrthonormalBasis, ScalarLandscape, VectorLandscape};

/// Threshold below which the ratio switches to its limit `f''(0)`.
const RATIO_LIMIT_X: f64 = 1e-8;
const BRACKET_CAP: f64 = 1e30;

/// A solved 2-periodic orbit amplitude for one scalar direction.
#[derive(Clone, Debug)]
pub struct OrbitSolution {
    pub amplitude: f64,
    pub eta: f64,
    /// `|eta f'(x_eta) - 2 x_eta|`
    pub residual: f64,
    /// Set when the ratio function was found non-monotone on the bracket
    /// grid; the amplitude is then the smallest root located, uniqueness is
    /// not guaranteed.
    pub h_non_monotone: bool,
}

/// `f'(x) / x`, continued by `f''(0)` near the origin.
pub fn ratio_h(f: &ScalarLandscape, x: f64) -> f64 {
    assert!(x > 0.0, "ratio_h requires x > 0");
    if x < RATIO_LIMIT_X {
        f.d2(0.0)
    } else {
        f.d1(x) / x
    }
}

/// Solve `eta f'(x) = 2 x` for the positive amplitude `x_eta`.
pub fn solve_x_eta(f: &ScalarLandscape, eta: f64) -> Result<OrbitSolution, PeriodicError> {
    let threshold = 2.0 / f.d2(0.0);
    if eta <= threshold {
        return Err(PeriodicError::NoOrbit { eta, threshold });
    }
    let target = 2.0 / eta;

    // grow the upper bracket until the ratio falls below the target
    let lo0 = 1e-12;
    let mut hi = 1.0;
    while ratio_h(f, hi) >= target {
        hi *= 10.0;
        if hi > BRACKET_CAP {
            return Err(PeriodicError::BracketFailure { cap: BRACKET_CAP });
        }
    }

    // monotonicity sanity pass over the bracket
    let mut h_non_monotone = false;
    {
        let mut prev = ratio_h(f, lo0);
        let mut x = lo0;
        while x < hi {
            x *= 10.0;
            let cur = ratio_h(f, x.min(hi));
            if cur > prev * (1.0 + 1e-12) {
                h_non_monotone = true;
                break;
            }
            prev = cur;
        }
    }

    let mut lo = lo0;
    let mut amplitude = 0.5 * (lo + hi);
    for _ in 0..500 {
        amplitude = 0.5 * (lo + hi);
        let residual = (eta * f.d1(amplitude) - 2.0 * amplitude).abs();
        if residual < 1e-10 * amplitude.max(1.0) && (hi - lo) < 1e-9 * amplitude.max(1.0) {
            break;
        }
        if ratio_h(f, amplitude) > target {
            lo = amplitude;
        } else {
            hi = amplitude;
        }
    }
    let residual = (eta * f.d1(amplitude) - 2.0 * amplitude).abs();
    Ok(OrbitSolution {
        amplitude,
        eta,
        residual,
        h_non_monotone,
    })
}

/// Orbit amplitudes over an increasing grid of learning rates.
pub fn x_eta_curve(f: &ScalarLandscape, etas: &[f64]) -> Result<Vec<f64>, PeriodicError> {
    etas.iter().map(|&eta| Ok(solve_x_eta(f, eta)?.amplitude)).collect()
}

/// Max residual of a candidate p-cycle under the one-step GD map:
/// `max_i || x_i - eta grad(x_i) - x_{i+1 mod p} ||`.
pub fn verify_orbit(l: &VectorLandscape, points: &[Vec<f64>], eta: f64) -> f64 {
    assert!(!points.is_empty());
    let p = points.len();
    let mut worst: f64 = 0.0;
    for i in 0..p {
        let g = l.grad(&points[i]);
        let next = &points[(i + 1) % p];
        let diff: Vec<f64> = points[i]
            .iter()
            .zip(&g)
            .zip(next.iter())
            .map(|((x, gi), n)| x - eta * gi - n)
            .collect();
        worst = worst.max(norm(&diff));
    }
    worst
}

/// A componentwise 2-periodic orbit of a separable landscape.
#[derive(Clone, Debug)]
pub struct SeparableOrbit {
    /// Per-component amplitude; 0 where the rate is at or below that
    /// component's threshold.
    pub amplitudes: Vec<f64>,
    /// The two cycle points in ambient coordinates.
    pub points: [Vec<f64>; 2],
    pub residual: f64,
}

/// Assemble the componentwise orbit of `sum_i f_i(p_i^T x)` for one sign
/// pattern (all-positive by default).
pub fn separable_periodic(
    components: &[ScalarLandscape],
    basis: &OrthonormalBasis,
    eta: f64,
    signs: Option<&[i8]>,
) -> Result<SeparableOrbit, PeriodicError> {
    let n = components.len();
    assert_eq!(basis.dim(), n);
    if let Some(s) = signs {
        assert_eq!(s.len(), n);
    }
    let mut amplitudes = Vec::with_capacity(n);
    for f in components {
        let threshold = 2.0 / f.d2(0.0);
        if eta <= threshold {
            amplitudes.push(0.0);
        } else {
            amplitudes.push(solve_x_eta(f, eta)?.amplitude);
        }
    }
    let mut a = vec![0.0; n];
    for i in 0..n {
        let s = signs.map_or(1.0, |s| f64::from(s[i]));
        let coord = s * amplitudes[i];
        for (aj, pj) in a.iter_mut().zip(basis.column(i)) {
            *aj += coord * pj;
        }
    }
    let b: Vec<f64> = a.iter().map(|v| -v).collect();
    let landscape = crate::landscapes::separable_sum(components, basis)
        .expect("dimensions validated above");
    let residual = verify_orbit(&landscape, &[a.clone(), b.clone()], eta);
    Ok(SeparableOrbit {
        amplitudes,
        points: [a, b],
        residual,
    })
}
