//! Comparison and long-time convergence suites. Both advance two solutions
//! in lock step on a shared time grid.

use serde::{Deserialize, Serialize};

use super::{validate_initial, StepControls, Stepper};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSample {
    pub t: f64,
    /// `min_i (u_high - u_low)_i`.
    pub min_difference: f64,
    /// `∫ (u_low - u_high)₊`.
    pub positive_part_low: f64,
    /// `∫ (u_high - u_low)₊`.
    pub positive_part_high: f64,
    /// `∫ |u_high - u_low|`.
    pub l1_difference: f64,
    pub max_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub samples: Vec<ComparisonSample>,
    /// `λ ‖f‖_∞ sup (1/g)'` over the attained range.
    pub b: f64,
    /// `u_low ≤ u_high` at every node and sample.
    pub ordered: bool,
    /// `u_low < u_high` at every node of every sample with `t > 0`.
    pub strictly_ordered: bool,
    /// Largest excess of an L¹ quantity over `e^{bt}` times its initial value.
    pub worst_l1_excess: f64,
    /// The trajectories coincide bitwise.
    pub identical: bool,
    pub touched_down: bool,
}

impl ComparisonReport {
    pub fn l1_estimates_hold(&self, tol: f64) -> bool {
        self.worst_l1_excess <= tol
    }
}

/// Evolves `u_low` and `u_high` together. The difference `d = u_high - u_low`
/// is advanced directly, with the reaction difference written as a divided
/// difference of `1/g` times `d`, so that tiny separations are not lost to
/// rounding.
pub fn comparison_suite(
    problem: &Problem,
    lambda: f64,
    u0_low: &Field,
    u0_high: &Field,
    t_end: f64,
    controls: &StepControls,
) -> Result<ComparisonReport> {
    validate_initial(problem, u0_low, controls.eps_td)?;
    validate_initial(problem, u0_high, controls.eps_td)?;
    let grid = problem.grid();
    let g = problem.gap();
    let f = problem.forcing_values().values();
    let weights = grid.weights();
    let mut stepper = Stepper::new(problem, lambda, controls.clone())?;
    let c = stepper.controls().clone();

    let mut low = u0_low.values().to_vec();
    let mut d: Vec<f64> = u0_high
        .values()
        .iter()
        .zip(&low)
        .map(|(h, l)| h - l)
        .collect();
    let n = low.len();
    let mut next_low = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut next_d = vec![0.0; n];

    let measure = |t: f64, low: &[f64], d: &[f64]| {
        let mut s = ComparisonSample {
            t,
            min_difference: f64::INFINITY,
            positive_part_low: 0.0,
            positive_part_high: 0.0,
            l1_difference: 0.0,
            max_u: f64::NEG_INFINITY,
        };
        for ((&l, &di), &w) in low.iter().zip(d).zip(weights) {
            s.min_difference = s.min_difference.min(di);
            s.positive_part_low += w * (-di).max(0.0);
            s.positive_part_high += w * di.max(0.0);
            s.l1_difference += w * di.abs();
            s.max_u = s.max_u.max(l).max(l + di);
        }
        s
    };

    let mut samples = vec![measure(0.0, &low, &d)];
    let mut ordered = samples[0].min_difference >= 0.0;
    let mut strictly = true;
    let mut identical = d.iter().all(|&x| x == 0.0);
    let mut touched_down = false;
    let mut t = 0.0;
    let mut next_sample = c.sample_interval;

    loop {
        let remaining = t_end - t;
        let m_low = low.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m_high = low
            .iter()
            .zip(&d)
            .map(|(l, di)| l + di)
            .fold(f64::NEG_INFINITY, f64::max);
        let dt = stepper
            .admissible_dt(m_low)?
            .min(stepper.admissible_dt(m_high)?);
        if remaining <= 1e-9 * dt {
            break;
        }
        if dt < c.dt_min {
            return Err(Error::StepFailure {
                t,
                dt_min: c.dt_min,
            });
        }
        let dt = dt.min(remaining);
        stepper.step(&low, dt, &mut next_low)?;
        for i in 0..n {
            let high = low[i] + d[i];
            let slope = if d[i] == 0.0 {
                0.0
            } else {
                g.reciprocal_divided_difference(low[i], high)?
            };
            rhs[i] = d[i] + dt * lambda * f[i] * slope * d[i];
        }
        stepper.implicit_solve(dt, &rhs, &mut next_d);
        std::mem::swap(&mut low, &mut next_low);
        std::mem::swap(&mut d, &mut next_d);
        t += dt;
        identical &= d.iter().all(|&x| x == 0.0);

        let s = measure(t, &low, &d);
        ordered &= s.min_difference >= 0.0;
        strictly &= s.min_difference > 0.0;
        if s.max_u >= 1.0 - c.eps_td {
            touched_down = true;
            samples.push(s);
            break;
        }
        if c.sample_interval == 0.0 || t >= next_sample * (1.0 - 1e-12) {
            samples.push(s);
            while c.sample_interval > 0.0 && next_sample <= t * (1.0 + 1e-12) {
                next_sample += c.sample_interval;
            }
        }
    }
    if samples.last().map(|s| s.t) != Some(t) {
        samples.push(measure(t, &low, &d));
    }

    let attained = samples
        .iter()
        .map(|s| s.max_u)
        .fold(f64::NEG_INFINITY, f64::max);
    let b = lambda * problem.forcing_stats().sup_abs * sup_reciprocal_slope(problem, attained)?;
    let s0 = samples[0];
    let worst_l1_excess = samples
        .iter()
        .flat_map(|s| {
            let growth = (b * s.t).exp();
            [
                s.positive_part_low - growth * s0.positive_part_low,
                s.positive_part_high - growth * s0.positive_part_high,
                s.l1_difference - growth * s0.l1_difference,
            ]
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(ComparisonReport {
        samples,
        b,
        ordered,
        strictly_ordered: strictly && !identical,
        worst_l1_excess,
        identical,
        touched_down,
    })
}

/// `sup_{s ≤ m} (1/g)'(s)`; the right end when `1/g` is convex, a sampled
/// maximum over `[min(0, m) - 1, m]` otherwise.
fn sup_reciprocal_slope(problem: &Problem, m: f64) -> Result<f64> {
    let g = problem.gap();
    if g.reciprocal_is_convex() {
        return Ok(g.reciprocal_slope(m)?.max(0.0));
    }
    let lo = m.min(0.0) - 1.0;
    (0..=1000)
        .map(|k| g.reciprocal_slope(lo + (m - lo) * k as f64 / 1000.0))
        .try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSample {
    pub t: f64,
    /// `‖u - v‖_∞`.
    pub distance: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub converged: bool,
    pub t_exit: f64,
    pub final_distance: f64,
    pub samples: Vec<ConvergenceSample>,
    /// `∫∫ u_t²` accumulated to exit.
    pub dissipation: f64,
    /// Dissipation added over the last sample window.
    pub dissipation_tail: f64,
    /// `max (w - u)` over all steps, `w` the heat flow of `u0`.
    pub sandwich_below: f64,
    /// `max (u - v)` over all steps.
    pub sandwich_above: f64,
    /// Observed decay rate of `‖u - v‖_∞` over the second half of the run.
    pub decay_rate: Option<f64>,
}

impl ConvergenceRecord {
    pub fn sandwich_holds(&self, slack: f64) -> bool {
        self.sandwich_below <= slack && self.sandwich_above <= slack
    }
}

/// Evolves from `u0` toward `v_ref` until `‖u - v_ref‖_∞ < tol` or `t_max`,
/// alongside the pure heat flow `w` of `u0` on the same time steps.
pub fn convergence_to_stationary(
    problem: &Problem,
    lambda: f64,
    u0: &Field,
    v_ref: &Field,
    tol: f64,
    t_max: f64,
    controls: &StepControls,
) -> Result<ConvergenceRecord> {
    validate_initial(problem, u0, controls.eps_td)?;
    if !v_ref.grid().as_ref().eq(problem.grid().as_ref()) {
        return Err(Error::GridMismatch);
    }
    let weights = problem.grid().weights();
    let v = v_ref.values();
    let mut stepper = Stepper::new(problem, lambda, controls.clone())?;
    let mut heat = Stepper::new(problem, 0.0, controls.clone())?;
    let c = stepper.controls().clone();

    let mut u = u0.values().to_vec();
    let mut w = u.clone();
    let n = u.len();
    let mut next_u = vec![0.0; n];
    let mut next_w = vec![0.0; n];
    let sup_dist = |u: &[f64]| {
        u.iter()
            .zip(v)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
    };
    let mut t = 0.0;
    let mut dissipation = 0.0;
    let mut samples = vec![ConvergenceSample {
        t: 0.0,
        distance: sup_dist(&u),
        dissipation: 0.0,
    }];
    let mut next_sample = c.sample_interval;
    let mut below = f64::NEG_INFINITY;
    let mut above = f64::NEG_INFINITY;
    let mut distance = samples[0].distance;

    while distance >= tol && t_max - t > 1e-9 * c.dt_max {
        let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dt = stepper.admissible_dt(m)?;
        if dt < c.dt_min {
            return Err(Error::StepFailure {
                t,
                dt_min: c.dt_min,
            });
        }
        let dt = dt.min(t_max - t);
        stepper.step(&u, dt, &mut next_u)?;
        heat.step(&w, dt, &mut next_w)?;
        dissipation += weights
            .iter()
            .zip(next_u.iter().zip(&u))
            .map(|(wi, (a, b))| wi * (a - b) * (a - b))
            .sum::<f64>()
            / dt;
        std::mem::swap(&mut u, &mut next_u);
        std::mem::swap(&mut w, &mut next_w);
        t += dt;
        for i in 0..n {
            below = below.max(w[i] - u[i]);
            above = above.max(u[i] - v[i]);
        }
        distance = sup_dist(&u);
        if c.sample_interval == 0.0 || t >= next_sample * (1.0 - 1e-12) || distance < tol {
            samples.push(ConvergenceSample {
                t,
                distance,
                dissipation,
            });
            while c.sample_interval > 0.0 && next_sample <= t * (1.0 + 1e-12) {
                next_sample += c.sample_interval;
            }
        }
    }
    if samples.last().map(|s| s.t) != Some(t) {
        samples.push(ConvergenceSample {
            t,
            distance,
            dissipation,
        });
    }

    let window_start = t - c.sample_interval.max(c.dt_max);
    let before = samples
        .iter()
        .rev()
        .find(|s| s.t <= window_start)
        .map_or(0.0, |s| s.dissipation);
    let half = samples.iter().find(|s| s.t >= 0.5 * t);
    let decay_rate = half.and_then(|s| {
        (s.distance > 0.0 && distance > 0.0 && t > s.t)
            .then(|| (s.distance / distance).ln() / (t - s.t))
    });

    Ok(ConvergenceRecord {
        converged: distance < tol,
        t_exit: t,
        final_distance: distance,
        samples,
        dissipation,
        dissipation_tail: dissipation - before,
        sandwich_below: below.max(0.0),
        sandwich_above: above.max(0.0),
        decay_rate,
    })
}
