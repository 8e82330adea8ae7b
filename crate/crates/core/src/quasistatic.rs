//! Quasistatic approximation of GD bouncing along a minima manifold.
//!
//! While the transverse coordinate oscillates on its 2-periodic orbit, the
//! manifold coordinate performs gradient descent on `log h` with step
//! `2 y_t^2`. The transverse amplitude at each step comes from the orbit
//! equation with the locally rescaled rate `eta h(x)^2`.

use crate::error::{DynamicsError, QuasistaticError};
use crate::landscapes::{FlatnessFn, ScalarLandscape};
use crate::periodic::solve_x_eta;

/// One recorded state of the quasistatic recurrence.
#[derive(Clone, Debug)]
pub struct QuasistaticState {
    pub x: Vec<f64>,
    /// Transverse orbit amplitude (nonnegative; the sign alternates every GD
    /// step by construction of the 2-orbit).
    pub y: f64,
    pub step: usize,
}

#[derive(Clone, Debug)]
pub struct QuasistaticRun {
    pub states: Vec<QuasistaticState>,
    /// Step at which the transverse orbit ceased to exist (the effective
    /// rate fell to or below threshold); GD would converge transversely
    /// from here on. Normal termination, not a failure.
    pub orbit_lost_at: Option<usize>,
}

/// Transverse oscillation amplitude at flatness `h_val`: substituting
/// `u = h y` reduces the orbit equation to the plain one with effective
/// rate `eta h_val^2`, so `y = u* / h_val`.
pub fn transverse_amplitude(
    f: &ScalarLandscape,
    h_val: f64,
    eta: f64,
) -> Result<f64, QuasistaticError> {
    assert!(h_val > 0.0, "flatness must be positive");
    let effective = eta * h_val * h_val;
    let u = solve_x_eta(f, effective)?.amplitude;
    Ok(u / h_val)
}

/// Iterate the quasistatic recurrence: solve `y_t` at the current flatness,
/// then move the manifold coordinate by `-2 y_t^2 grad(log h)`.
pub fn quasistatic_run(
    f: &ScalarLandscape,
    h: &FlatnessFn,
    x0: &[f64],
    eta: f64,
    steps: usize,
) -> QuasistaticRun {
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    for t in 0..=steps {
        let hv = h.eval(&x);
        if hv <= 0.0 {
            return QuasistaticRun { states, orbit_lost_at: Some(t) };
        }
        let y = match transverse_amplitude(f, hv, eta) {
            Ok(y) => y,
            Err(_) => return QuasistaticRun { states, orbit_lost_at: Some(t) },
        };
        states.push(QuasistaticState { x: x.clone(), y, step: t });
        if t == steps {
            break;
        }
        let hg = h.grad(&x);
        for (xi, gi) in x.iter_mut().zip(&hg) {
            *xi -= 2.0 * y * y * gi / hv;
        }
    }
    QuasistaticRun { states, orbit_lost_at: None }
}

/// Per-step discrepancy between a full GD run on the valley landscape and
/// the quasistatic recurrence. The full run's transverse coordinate is
/// sign-rectified with an absolute value.
#[derive(Clone, Debug)]
pub struct QuasistaticComparison {
    /// Per-step `|x_full - x_quasi|` (euclidean over manifold coordinates).
    pub x_abs_err: Vec<f64>,
    /// Per-step `| |y_full| - y_quasi |`.
    pub y_abs_err: Vec<f64>,
    pub max_rel_x: f64,
    pub max_rel_y: f64,
}

pub fn compare_quasistatic(
    full: &crate::dynamics::Trajectory,
    quasi: &QuasistaticRun,
) -> QuasistaticComparison {
    let n = full.len().min(quasi.states.len());
    let mut cmp = QuasistaticComparison {
        x_abs_err: Vec::with_capacity(n),
        y_abs_err: Vec::with_capacity(n),
        max_rel_x: 0.0,
        max_rel_y: 0.0,
    };
    for t in 0..n {
        let state = &quasi.states[t];
        let d = state.x.len();
        let point = &full.points[t];
        let dx: f64 = point[..d]
            .iter()
            .zip(&state.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let xq: f64 = crate::landscapes::norm(&state.x);
        let dy = (point[d].abs() - state.y).abs();
        cmp.x_abs_err.push(dx);
        cmp.y_abs_err.push(dy);
        cmp.max_rel_x = cmp.max_rel_x.max(dx / (xq.abs() + 1e-12));
        cmp.max_rel_y = cmp.max_rel_y.max(dy / (state.y.abs() + 1e-12));
    }
    cmp
}

#[derive(Clone, Debug)]
pub struct DriftPath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Explicit Euler integration of the SGD manifold-drift ODE
/// `dx/dt = -(eta sigma^2 / 4) grad(tr H(x))`.
pub fn sgd_manifold_drift(
    trace_hessian: &FlatnessFn,
    x0: &[f64],
    eta: f64,
    sigma: f64,
    total_time: f64,
    dt: f64,
) -> Result<DriftPath, QuasistaticError> {
    if !(dt > 0.0) || total_time < dt {
        return Err(QuasistaticError::InvalidStep);
    }
    let coeff = eta * sigma * sigma / 4.0;
    let steps = (total_time / dt).round() as usize;
    let mut path = DriftPath {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
    };
    let mut x = x0.to_vec();
    for k in 0..=steps {
        let t = k as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QuasistaticError::Diverged { t });
        }
        path.times.push(t);
        path.states.push(x.clone());
        if k == steps {
            break;
        }
        let g = trace_hessian.grad(&x);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= dt * coeff * gi;
        }
    }
    Ok(path)
}

/// Convenience: run full GD on the valley landscape `F(x, y) = f(h(x) y)`
/// paired with the quasistatic recurrence on the same inputs.
pub fn run_with_full_gd(
    f: &ScalarLandscape,
    h: &FlatnessFn,
    x0: &[f64],
    y0: f64,
    eta: f64,
    steps: usize,
) -> Result<(crate::dynamics::Trajectory, QuasistaticRun), DynamicsError> {
    let landscape = crate::landscapes::valley(f, h, h.dim());
    let mut init = x0.to_vec();
    init.push(y0);
    let full = crate::dynamics::gd_run(
        &landscape,
        &init,
        &crate::dynamics::Schedule::constant(eta),
        steps,
        false,
    )?;
    let quasi = quasistatic_run(f, h, x0, eta, steps);
    Ok((full, quasi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{f1_logquad, fig5_flatness};

    /// Bisection oracle for `ln(1+u)/u = target`, independent of the solver.
    fn oracle_u(target: f64) -> f64 {
        let g = |u: f64| (1.0 + u).ln() / u - target;
        let (mut lo, mut hi) = (1e-9, 1e9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn amplitude_reduces_to_plain_orbit_at_unit_flatness() {
        let f = f1_logquad();
        let y = transverse_amplitude(&f, 1.0, 5.0).unwrap();
        assert!((y - 4.047).abs() < 1e-3);
    }

    #[test]
    fn amplitude_matches_substitution_oracle() {
        let f = f1_logquad();
        let h = 1.0 / 1.01;
        let y = transverse_amplitude(&f, h, 3.0).unwrap();
        let u = oracle_u(2.0 / (3.0 * h * h));
        assert!((y - u / h).abs() < 1e-8);
        assert!((y - 1.081).abs() < 1e-3);
    }

    #[test]
    fn amplitude_threshold_error() {
        let f = f1_logquad();
        // effective rate 3 * 0.25 = 0.75 < 2
        assert!(transverse_amplitude(&f, 0.5, 3.0).is_err());
    }

    #[test]
    fn substitution_identity_randomized() {
        // the solved y satisfies the transverse orbit equation verbatim:
        // -y = y - eta f'(h y) h
        let f = f1_logquad();
        let mut seed = 777u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed as f64 / u64::MAX as f64
        };
        let mut tested = 0;
        while tested < 200 {
            let h = 0.3 + 1.7 * next();
            let eta = 2.0 + 8.0 * next();
            if eta * h * h <= 2.0 + 1e-6 {
                continue;
            }
            let y = transverse_amplitude(&f, h, eta).unwrap();
            let residual = (-y - (y - eta * f.d1(h * y) * h)).abs();
            assert!(residual < 1e-8, "h={h} eta={eta} residual={residual}");
            tested += 1;
        }
    }

    #[test]
    fn constant_flatness_freezes_manifold_coordinate() {
        let f = f1_logquad();
        let h = FlatnessFn::scalar(|_| 1.0, |_| 0.0);
        let run = quasistatic_run(&f, &h, &[1.0], 5.0, 50);
        assert!(run.orbit_lost_at.is_none());
        for s in &run.states {
            assert_eq!(s.x[0], 1.0);
        }
    }

    #[test]
    fn fig5_drifts_toward_flat_and_slows_down() {
        let f = f1_logquad();
        let h = fig5_flatness();
        let run = quasistatic_run(&f, &h, &[1.0], 3.0, 500);
        assert!(run.orbit_lost_at.is_none());
        let states = &run.states;
        for w in states.windows(2) {
            assert!(w[1].x[0] > w[0].x[0], "x not increasing");
            assert!(w[1].y <= w[0].y + 1e-12, "|y| not decreasing");
        }
        // h(x) = 1/(1+0.01x) decreases as x grows
        for w in states.windows(2) {
            assert!(h.eval(&w[1].x) < h.eval(&w[0].x));
        }
        // per-step displacement shrinks
        let disp: Vec<f64> = states.windows(2).map(|w| (w[1].x[0] - w[0].x[0]).abs()).collect();
        for w in disp.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "displacement not decreasing");
        }
    }

    #[test]
    fn fig5_first_step_hand_checked() {
        let f = f1_logquad();
        let h = fig5_flatness();
        let run = quasistatic_run(&f, &h, &[1.0], 3.0, 1);
        let y0 = run.states[0].y;
        assert!((y0 - 1.081).abs() < 1e-3);
        let expect = 1.0 + 2.0 * y0 * y0 * 0.01 / 1.01;
        assert!((run.states[1].x[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn orbit_lost_is_normal_termination() {
        let f = f1_logquad();
        let h = fig5_flatness();
        // eta 1 < 2: no transverse orbit anywhere
        let run = quasistatic_run(&f, &h, &[1.0], 1.0, 100);
        assert_eq!(run.orbit_lost_at, Some(0));
        assert!(run.states.is_empty());
    }

    #[test]
    fn comparison_zero_for_constant_flatness() {
        let f = f1_logquad();
        let h = FlatnessFn::scalar(|_| 1.0, |_| 0.0);
        let (full, quasi) = run_with_full_gd(&f, &h, &[1.0], 1.0, 5.0, 200).unwrap();
        let cmp = compare_quasistatic(&full, &quasi);
        // manifold coordinate never moves in either dynamics
        assert!(cmp.x_abs_err.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn fig5_quasistatic_tracks_full_gd() {
        let f = f1_logquad();
        let h = fig5_flatness();
        let (full, quasi) = run_with_full_gd(&f, &h, &[1.0], 1.0, 3.0, 500).unwrap();
        let cmp = compare_quasistatic(&full, &quasi);
        assert!(cmp.max_rel_x < 0.05, "x rel err {}", cmp.max_rel_x);
        // skip the lock-on transient: the full run starts off-orbit
        let rel_y_after: f64 = (10..cmp.y_abs_err.len())
            .map(|t| cmp.y_abs_err[t] / quasi.states[t].y)
            .fold(0.0, f64::max);
        assert!(rel_y_after < 0.05, "y rel err {rel_y_after}");
    }

    #[test]
    fn drift_constant_trace_is_static() {
        let trace = FlatnessFn::scalar(|_| 3.0, |_| 0.0);
        let path = sgd_manifold_drift(&trace, &[1.5], 0.1, 2.0, 1.0, 1e-2).unwrap();
        for s in &path.states {
            assert_eq!(s[0], 1.5);
        }
    }

    #[test]
    fn drift_matches_closed_form_exponential() {
        // tr H = x^2 gives dx/dt = -(eta sigma^2 / 2) x, x(t) = e^{-0.2 t}
        let trace = FlatnessFn::scalar(|x: f64| x * x, |x: f64| 2.0 * x);
        let path = sgd_manifold_drift(&trace, &[1.0], 0.1, 2.0, 1.0, 1e-3).unwrap();
        let end = path.states.last().unwrap()[0];
        assert!((end - (-0.2f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn drift_scaling_in_eta_and_sigma() {
        let trace = FlatnessFn::scalar(|x: f64| x * x, |x: f64| 2.0 * x);
        let step = |eta: f64, sigma: f64| {
            let p = sgd_manifold_drift(&trace, &[1.0], eta, sigma, 0.01, 0.01).unwrap();
            1.0 - p.states[1][0]
        };
        let base = step(0.1, 1.0);
        assert!((step(0.2, 1.0) / base - 2.0).abs() < 1e-9);
        assert!((step(0.1, 2.0) / base - 4.0).abs() < 1e-9);
    }

    #[test]
    fn drift_rejects_bad_step() {
        let trace = FlatnessFn::scalar(|_| 0.0, |_| 0.0);
        assert!(sgd_manifold_drift(&trace, &[1.0], 0.1, 1.0, 1.0, 0.0).is_err());
        assert!(sgd_manifold_drift(&trace, &[1.0], 0.1, 1.0, 0.5, 1.0).is_err());
    }
}
