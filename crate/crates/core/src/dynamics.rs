//! Gradient descent runs with step-decay schedules, trajectory recording,
//! outcome classification, and sharpness tracking.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DynamicsError;
use crate::landscapes::{norm, VectorLandscape};

/// Norm / loss magnitude beyond which a run is marked diverged. Large enough
/// to separate bounded chaotic oscillation from genuine blowup.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Proximity at which an iterate is considered to have landed on the origin.
const UNSTABLE_HIT_TOL: f64 = 1e-14;

/// Piecewise-constant learning rate: `(start_step, rate)` segments.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    segments: Vec<(usize, f64)>,
}

impl Schedule {
    pub fn new(segments: Vec<(usize, f64)>) -> Result<Self, DynamicsError> {
        if segments.is_empty() || segments[0].0 != 0 {
            return Err(DynamicsError::InvalidSchedule);
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(DynamicsError::InvalidSchedule);
            }
        }
        if segments.iter().any(|&(_, r)| !(r > 0.0) || !r.is_finite()) {
            return Err(DynamicsError::InvalidSchedule);
        }
        Ok(Self { segments })
    }

    pub fn constant(rate: f64) -> Self {
        Self::new(vec![(0, rate)]).expect("constant schedule")
    }

    pub fn rate_at(&self, step: usize) -> f64 {
        let mut rate = self.segments[0].1;
        for &(start, r) in &self.segments {
            if step >= start {
                rate = r;
            } else {
                break;
            }
        }
        rate
    }

    pub fn segments(&self) -> &[(usize, f64)] {
        &self.segments
    }
}

/// Recorded GD trajectory. All series have length `steps + 1` unless the run
/// halted early on divergence.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub rates: Vec<f64>,
    pub sharpness: Option<Vec<f64>>,
    pub diverged_at: Option<usize>,
    /// An iterate landed (numerically) on the unstable fixed point after
    /// approaching from a distance; convergence claims should be treated as
    /// an exceptional-set hit rather than the generic outcome.
    pub hit_unstable_fixed_point: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// CSV with header `step,x0..x{n-1},loss,grad_norm,lr[,sharpness]`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.dim();
        let mut header = String::from("step");
        for i in 0..dim {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",loss,grad_norm,lr");
        if self.sharpness.is_some() {
            header.push_str(",sharpness");
        }
        writeln!(w, "{header}")?;
        for t in 0..self.len() {
            let mut row = format!("{t}");
            for v in &self.points[t] {
                row.push_str(&format!(",{v:.17e}"));
            }
            row.push_str(&format!(
                ",{:.17e},{:.17e},{:.17e}",
                self.losses[t], self.grad_norms[t], self.rates[t]
            ));
            if let Some(s) = &self.sharpness {
                row.push_str(&format!(",{:.17e}", s[t]));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Asymptotic classification of a recorded run.
#[derive(Clone, Debug)]
pub enum RunOutcome {
    Converged { point: Vec<f64>, steps: usize },
    Periodic { period: usize, orbit: Vec<Vec<f64>> },
    Bounded { radius: f64 },
    Diverged { step: usize },
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Converged { point, steps } => {
                let coords: Vec<String> = point.iter().map(|v| format!("{v:.6e}")).collect();
                write!(f, "outcome=converged steps={} point=[{}]", steps, coords.join(","))
            }
            RunOutcome::Periodic { period, orbit } => {
                let pts: Vec<String> = orbit
                    .iter()
                    .map(|p| {
                        let c: Vec<String> = p.iter().map(|v| format!("{v:.6e}")).collect();
                        format!("[{}]", c.join(","))
                    })
                    .collect();
                write!(f, "outcome=periodic period={} orbit={}", period, pts.join(";"))
            }
            RunOutcome::Bounded { radius } => write!(f, "outcome=bounded radius={radius:.6e}"),
            RunOutcome::Diverged { step } => write!(f, "outcome=diverged step={step}"),
        }
    }
}

/// Run `x <- x - eta_t grad(x)` for `steps` updates, recording every state.
pub fn gd_run(
    l: &VectorLandscape,
    x0: &[f64],
    schedule: &Schedule,
    steps: usize,
    record_sharpness: bool,
) -> Result<Trajectory, DynamicsError> {
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFiniteInit);
    }
    if steps == 0 {
        return Err(DynamicsError::NoSteps);
    }
    let mut traj = Trajectory {
        points: Vec::with_capacity(steps + 1),
        losses: Vec::with_capacity(steps + 1),
        grad_norms: Vec::with_capacity(steps + 1),
        rates: Vec::with_capacity(steps + 1),
        sharpness: record_sharpness.then(|| Vec::with_capacity(steps + 1)),
        diverged_at: None,
        hit_unstable_fixed_point: false,
    };
    let mut x = x0.to_vec();
    let mut prev_norm = norm(&x);
    for t in 0..=steps {
        let loss = l.eval(&x);
        let g = l.grad(&x);
        let gn = norm(&g);
        let rate = schedule.rate_at(t);
        let xn = norm(&x);
        traj.points.push(x.clone());
        traj.losses.push(loss);
        traj.grad_norms.push(gn);
        traj.rates.push(rate);
        if let Some(s) = &mut traj.sharpness {
            s.push(sharpness(l, &x, 100, 0).value);
        }
        if !loss.is_finite() || !gn.is_finite() || xn > DIVERGENCE_THRESHOLD || loss > DIVERGENCE_THRESHOLD {
            traj.diverged_at = Some(t);
            break;
        }
        if t > 0 && xn <= UNSTABLE_HIT_TOL && prev_norm > 1e-6 {
            traj.hit_unstable_fixed_point = true;
        }
        prev_norm = xn;
        if t == steps {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= rate * gi;
        }
    }
    Ok(traj)
}

/// Classify the tail of a trajectory: converged, smallest-period cycle,
/// bounded oscillation, or diverged.
pub fn classify(traj: &Trajectory, tail: usize, tol: f64) -> RunOutcome {
    assert!(tol > 0.0);
    if let Some(step) = traj.diverged_at {
        return RunOutcome::Diverged { step };
    }
    let n = traj.len();
    let tail = tail.min(n);
    let start = n - tail;
    if traj.grad_norms[start..].iter().all(|&g| g < tol) {
        return RunOutcome::Converged {
            point: traj.points[n - 1].clone(),
            steps: n - 1,
        };
    }
    let max_period = tail / 4;
    for p in 1..=max_period {
        let mut worst: f64 = 0.0;
        for t in start..n - p {
            let d: f64 = traj.points[t]
                .iter()
                .zip(&traj.points[t + p])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(d);
        }
        if worst < tol {
            return RunOutcome::Periodic {
                period: p,
                orbit: traj.points[n - p..].to_vec(),
            };
        }
    }
    let radius = traj.points[start..].iter().map(|p| norm(p)).fold(0.0, f64::max);
    RunOutcome::Bounded { radius }
}

#[derive(Clone, Copy, Debug)]
pub struct SharpnessEstimate {
    /// Largest-magnitude Hessian eigenvalue (absolute value).
    pub value: f64,
    /// False when power iteration hit the iteration cap before the relative
    /// change dropped below 1e-8.
    pub converged: bool,
}

/// Largest-magnitude Hessian eigenvalue at `point`, by power iteration on
/// Hessian-vector products (analytic when the landscape provides them,
/// finite-difference otherwise). Deterministic given the seed.
pub fn sharpness(l: &VectorLandscape, point: &[f64], iters: usize, seed: u64) -> SharpnessEstimate {
    let dim = l.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let vn = norm(&v);
    for vi in &mut v {
        *vi /= vn;
    }
    let mut lambda = 0.0f64;
    let mut converged = false;
    for _ in 0..iters {
        let hv = l.hvp(point, &v);
        let hv_norm = norm(&hv);
        if hv_norm < 1e-300 {
            // zero Hessian (flat point)
            return SharpnessEstimate { value: 0.0, converged: true };
        }
        let rayleigh: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let new_lambda = rayleigh.abs();
        let rel_change = (new_lambda - lambda).abs() / new_lambda.max(1e-300);
        lambda = new_lambda;
        v = hv.iter().map(|h| h / hv_norm).collect();
        if rel_change < 1e-8 {
            converged = true;
            break;
        }
    }
    SharpnessEstimate { value: lambda, converged }
}

/// Per-step `sharpness * eta / 2` series; values near 1 signal the edge of
/// stability.
pub fn eos_diagnostic(traj: &Trajectory) -> Result<Vec<f64>, DynamicsError> {
    let sharp = traj.sharpness.as_ref().ok_or(DynamicsError::MissingSharpness)?;
    Ok(sharp
        .iter()
        .zip(&traj.rates)
        .map(|(s, eta)| s * eta / 2.0)
        .collect())
}

#[derive(Clone, Debug)]
pub struct BoundedReport {
    pub all_bounded: bool,
    /// Empirical radius of the absorbing ball, from trajectory tails.
    pub radius_estimate: f64,
    /// First step after which each trajectory stays within the radius
    /// estimate; `None` for diverged runs.
    pub entry_steps: Vec<Option<usize>>,
}

/// Run GD from every init and report whether all trajectories end up
/// confined to a common ball.
pub fn bounded_check(
    l: &VectorLandscape,
    inits: &[Vec<f64>],
    eta: f64,
    steps: usize,
) -> Result<BoundedReport, DynamicsError> {
    let schedule = Schedule::constant(eta);
    let mut trajectories = Vec::with_capacity(inits.len());
    let mut all_bounded = true;
    for x0 in inits {
        let traj = gd_run(l, x0, &schedule, steps, false)?;
        if traj.diverged_at.is_some() {
            all_bounded = false;
        }
        trajectories.push(traj);
    }
    // radius from the tail (last 10%) of every non-diverged run
    let mut radius: f64 = 0.0;
    for traj in &trajectories {
        if traj.diverged_at.is_some() {
            continue;
        }
        let n = traj.len();
        let tail_start = n - (n / 10).max(1);
        for p in &traj.points[tail_start..] {
            radius = radius.max(norm(p));
        }
    }
    let entry_steps = trajectories
        .iter()
        .map(|traj| {
            if traj.diverged_at.is_some() {
                return None;
            }
            let mut entry = 0;
            for (t, p) in traj.points.iter().enumerate() {
                if norm(p) > radius + 1e-12 {
                    entry = t + 1;
                }
            }
            Some(entry)
        })
        .collect();
    Ok(BoundedReport {
        all_bounded,
        radius_estimate: radius,
        entry_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{f1_logquad, f2_population, f3_2d, quartic};
    use crate::periodic::solve_x_eta;

    #[test]
    fn schedule_validation_and_lookup() {
        assert!(Schedule::new(vec![]).is_err());
        assert!(Schedule::new(vec![(1, 0.5)]).is_err());
        assert!(Schedule::new(vec![(0, 0.5), (0, 0.1)]).is_err());
        assert!(Schedule::new(vec![(0, -1.0)]).is_err());
        let s = Schedule::new(vec![(0, 5.0), (100, 3.0), (150, 1.0)]).unwrap();
        assert_eq!(s.rate_at(0), 5.0);
        assert_eq!(s.rate_at(99), 5.0);
        assert_eq!(s.rate_at(100), 3.0);
        assert_eq!(s.rate_at(1000), 1.0);
    }

    #[test]
    fn single_step_matches_hand_update() {
        let l = f1_logquad().to_vector();
        let traj = gd_run(&l, &[0.5], &Schedule::constant(1.0), 1, false).unwrap();
        let expect = 0.5 - 1.5f64.ln();
        assert!((traj.points[1][0] - expect).abs() < 1e-15);
        assert!((expect - 0.094535).abs() < 1e-6);
    }

    #[test]
    fn minimum_is_fixed_point() {
        let l = f3_2d();
        let traj = gd_run(&l, &[0.0, 0.0], &Schedule::constant(1.0), 10, false).unwrap();
        for p in &traj.points {
            assert_eq!(p, &vec![0.0, 0.0]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = f1_logquad().to_vector();
        assert!(gd_run(&l, &[f64::NAN], &Schedule::constant(1.0), 10, false).is_err());
        assert!(gd_run(&l, &[1.0], &Schedule::constant(1.0), 0, false).is_err());
    }

    #[test]
    fn classify_converged_below_threshold() {
        let l = f1_logquad().to_vector();
        let traj = gd_run(&l, &[0.5], &Schedule::constant(1.0), 200, false).unwrap();
        match classify(&traj, 50, 1e-8) {
            RunOutcome::Converged { point, .. } => assert!(point[0].abs() < 1e-8),
            other => panic!("expected convergence, got {other}"),
        }
    }

    #[test]
    fn classify_periodic_above_threshold() {
        let f = f1_logquad();
        let l = f.to_vector();
        let traj = gd_run(&l, &[-5.0], &Schedule::constant(5.0), 2000, false).unwrap();
        match classify(&traj, 200, 1e-8) {
            RunOutcome::Periodic { period, orbit } => {
                assert_eq!(period, 2);
                let amp = solve_x_eta(&f, 5.0).unwrap().amplitude;
                for p in &orbit {
                    assert!((p[0].abs() - amp).abs() < 1e-6);
                }
            }
            other => panic!("expected 2-periodic, got {other}"),
        }
    }

    #[test]
    fn classify_chaotic_as_bounded() {
        let l = f2_population(3.0).unwrap().to_vector();
        let traj = gd_run(&l, &[-5.0], &Schedule::constant(2.0), 2000, false).unwrap();
        assert!(traj.diverged_at.is_none());
        match classify(&traj, 200, 1e-8) {
            RunOutcome::Bounded { radius } => assert!(radius < 10.0),
            other => panic!("expected bounded chaos, got {other}"),
        }
    }

    #[test]
    fn quartic_control_diverges() {
        let l = quartic().to_vector();
        let traj = gd_run(&l, &[2.0], &Schedule::constant(1.0), 100, false).unwrap();
        assert!(traj.diverged_at.is_some());
        assert!(matches!(classify(&traj, 20, 1e-8), RunOutcome::Diverged { .. }));
    }

    #[test]
    fn descent_property_below_threshold() {
        let l = f1_logquad().to_vector();
        let traj = gd_run(&l, &[3.0], &Schedule::constant(1.5), 300, false).unwrap();
        for t in 1..traj.len() {
            if traj.grad_norms[t - 1] < 1e-12 {
                break;
            }
            assert!(
                traj.losses[t] < traj.losses[t - 1],
                "loss not strictly decreasing at step {t}"
            );
        }
    }

    #[test]
    fn contraction_outside_core() {
        // wherever ||grad|| < (2c/eta)||x||, one step contracts the norm
        let l = f3_2d();
        for &eta in &[0.5, 1.0, 3.0] {
            let traj = gd_run(&l, &[8.0, -6.0], &Schedule::constant(eta), 500, false).unwrap();
            // inward-component constant estimated from the iterates themselves
            let mut c = f64::INFINITY;
            for (p, &gn) in traj.points.iter().zip(&traj.grad_norms) {
                let xn = norm(p);
                if gn > 1e-9 && xn > 1e-9 {
                    let g = l.grad(p);
                    c = c.min((g[0] * p[0] + g[1] * p[1]) / (gn * xn));
                }
            }
            assert!(c > 0.0, "gradient lost its inward component (c = {c})");
            for t in 0..traj.len() - 1 {
                let xn = norm(&traj.points[t]);
                if xn < 1e-9 {
                    continue;
                }
                if traj.grad_norms[t] < (2.0 * c / eta) * xn {
                    assert!(
                        norm(&traj.points[t + 1]) < xn,
                        "no contraction at step {t} eta {eta}"
                    );
                }
            }
        }
    }

    #[test]
    fn orbit_attraction_monotone() {
        let f = f1_logquad();
        let l = f.to_vector();
        let amp = solve_x_eta(&f, 5.0).unwrap().amplitude;
        let traj = gd_run(&l, &[-5.0], &Schedule::constant(5.0), 500, false).unwrap();
        let dist = |x: f64| (x - amp).abs().min((x + amp).abs());
        // monotone attraction holds until the distance reaches the accuracy
        // of the solved amplitude itself
        for t in 0..traj.len() - 1 {
            if dist(traj.points[t][0]) < 1e-8 {
                break;
            }
            assert!(
                dist(traj.points[t + 1][0]) <= dist(traj.points[t][0]) + 1e-12,
                "orbit distance increased at step {t}"
            );
        }
        let last = traj.points.last().unwrap()[0];
        assert!(dist(last) < 1e-8, "did not settle on the orbit: {last}");
    }

    #[test]
    fn sharpness_constant_hessian() {
        let a = 1.7;
        let q = crate::landscapes::ScalarLandscape::new(
            "ax2",
            move |x: f64| a * x * x,
            move |x: f64| 2.0 * a * x,
            move |_| 2.0 * a,
            vec![],
        );
        let est = sharpness(&q.to_vector(), &[3.0], 100, 42);
        assert!(est.converged);
        assert!((est.value - 2.0 * a).abs() < 1e-10);
    }

    #[test]
    fn sharpness_f1_closed_form() {
        let l = f1_logquad().to_vector();
        let at0 = sharpness(&l, &[0.0], 100, 7);
        assert!((at0.value - 1.0).abs() < 1e-8);
        let at_orbit = sharpness(&l, &[4.047], 100, 7);
        assert!((at_orbit.value - 1.0 / 5.047).abs() < 1e-6);
    }

    #[test]
    fn sharpness_deterministic() {
        let l = f3_2d();
        let a = sharpness(&l, &[1.0, 2.0], 100, 11).value;
        let b = sharpness(&l, &[1.0, 2.0], 100, 11).value;
        assert_eq!(a, b);
    }

    #[test]
    fn eos_ratio_at_critical_rate() {
        let a = 1.0;
        let q = crate::landscapes::ScalarLandscape::new(
            "x2",
            move |x: f64| a * x * x,
            move |x: f64| 2.0 * a * x,
            move |_| 2.0 * a,
            vec![],
        );
        let l = q.to_vector();
        let eta = 2.0 / (2.0 * a);
        let traj = gd_run(&l, &[1.0], &Schedule::constant(eta), 5, true).unwrap();
        for r in eos_diagnostic(&traj).unwrap() {
            assert!((r - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn eos_ratio_stays_stable_below_threshold() {
        let l = f1_logquad().to_vector();
        let traj = gd_run(&l, &[2.0], &Schedule::constant(1.0), 50, true).unwrap();
        for r in eos_diagnostic(&traj).unwrap() {
            assert!(r < 1.0 + 1e-9);
        }
    }

    #[test]
    fn orbit_residual_invariant() {
        // at the orbit amplitude, eta f'(x_eta) = 2 x_eta
        let f = f1_logquad();
        let sol = solve_x_eta(&f, 5.0).unwrap();
        assert!((5.0 * f.d1(sol.amplitude) - 2.0 * sol.amplitude).abs() < 1e-8);
    }

    #[test]
    fn bounded_check_discriminates() {
        let f3 = f3_2d();
        let inits: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![-10.0 + 2.0 * i as f64, 7.0 - 1.5 * i as f64])
            .collect();
        let report = bounded_check(&f3, &inits, 1.0, 2000).unwrap();
        assert!(report.all_bounded);
        assert!(report.radius_estimate > 0.0);
        assert!(report.entry_steps.iter().all(Option::is_some));

        let report = bounded_check(&quartic().to_vector(), &[vec![2.0]], 1.0, 100).unwrap();
        assert!(!report.all_bounded);
        assert_eq!(report.entry_steps[0], None);
    }

    #[test]
    fn deterministic_trajectories() {
        let l = f3_2d();
        let s = Schedule::new(vec![(0, 1.0), (200, 0.3)]).unwrap();
        let a = gd_run(&l, &[-3.0, 3.0], &s, 400, false).unwrap();
        let b = gd_run(&l, &[-3.0, 3.0], &s, 400, false).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.losses, b.losses);
    }

    #[test]
    fn csv_header_and_rows() {
        let l = f1_logquad().to_vector();
        let traj = gd_run(&l, &[0.5], &Schedule::constant(1.0), 3, false).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "step,x0,loss,grad_norm,lr");
        assert_eq!(lines.count(), 4);
    }
}
