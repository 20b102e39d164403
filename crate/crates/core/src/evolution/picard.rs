//! Picard iteration for the local solution on `[0, T]`,
//! `T = (1 - a) g((1+a)/2) / (4 λ ‖f‖_∞)`.

use serde::{Deserialize, Serialize};

use super::{evolve, validate_initial, StepControls, Stepper};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::problem::Problem;

const MAX_HALVINGS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub t_local: f64,
    /// `max(0, max u0)`.
    pub a: f64,
    /// `(1 + a) / 2`.
    pub ceiling: f64,
    pub dt: f64,
    pub time_steps: usize,
    /// `sup_{x,t} |u_k - u_{k-1}|` for `k = 1..=K`.
    pub gaps: Vec<f64>,
    /// Largest value reached by any iterate.
    pub max_iterate: f64,
    pub ceiling_respected: bool,
    /// Times the step was halved after a ceiling violation.
    pub halvings: usize,
    /// `sup_x |u_K(T) - evolve(T)|` with the same step sequence.
    pub evolve_distance: f64,
    #[serde(skip)]
    pub final_field: Option<Field>,
}

impl PicardReport {
    pub fn final_gap(&self) -> f64 {
        self.gaps.last().copied().unwrap_or(f64::NAN)
    }

    /// Ratios of consecutive gaps above the round-off floor.
    pub fn gap_ratios(&self) -> Vec<f64> {
        self.gaps
            .windows(2)
            .filter(|w| w[0] > 1e-14)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Runs `k_iter` sweeps of `∂_t u_{k+1} - Δ u_{k+1} = λ f / g(u_k)`,
/// `u_{k+1}(0) = u0`, starting from `u_0(t) ≡ u0`, each on a uniform grid in
/// time with the stepper of [`evolve`].
pub fn picard_local(
    problem: &Problem,
    lambda: f64,
    u0: &Field,
    k_iter: usize,
    controls: &StepControls,
) -> Result<PicardReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "the local existence time needs λ > 0, got {lambda}"
        )));
    }
    if k_iter == 0 {
        return Err(Error::InvalidArgument(
            "need at least one Picard sweep".into(),
        ));
    }
    let a = validate_initial(problem, u0, controls.eps_td)?;
    let ceiling = 0.5 * (1.0 + a);
    let fmax = problem.forcing_stats().sup_abs;
    let t_local = (1.0 - a) * problem.gap().g(ceiling)? / (4.0 * lambda * fmax);

    let mut steps = (t_local / controls.dt_max).ceil().max(1.0) as usize;
    for halvings in 0..=MAX_HALVINGS {
        let dt = t_local / steps as f64;
        let mut report = sweeps(problem, lambda, u0, k_iter, controls, dt, steps, ceiling)?;
        report.t_local = t_local;
        report.a = a;
        report.halvings = halvings;
        if report.ceiling_respected || halvings == MAX_HALVINGS {
            let fixed = StepControls {
                dt_max: dt,
                dt_min: controls.dt_min.min(dt),
                ..controls.clone()
            };
            let reference = evolve(problem, lambda, u0, t_local, &fixed, None)?;
            if let Some(last) = &report.final_field {
                report.evolve_distance = last.sup_distance(&reference.final_field)?;
            }
            return Ok(report);
        }
        steps *= 2;
    }
    unreachable!("the loop returns on its last pass")
}

#[allow(clippy::too_many_arguments)]
fn sweeps(
    problem: &Problem,
    lambda: f64,
    u0: &Field,
    k_iter: usize,
    controls: &StepControls,
    dt: f64,
    steps: usize,
    ceiling: f64,
) -> Result<PicardReport> {
    let mut stepper = Stepper::new(problem, lambda, controls.clone())?;
    // Time levels 0..=steps of the previous iterate.
    let mut prev: Vec<Vec<f64>> = vec![u0.values().to_vec(); steps + 1];
    let mut cur = prev.clone();
    let mut gaps = Vec::with_capacity(k_iter);
    let mut max_iterate = u0.max();
    let mut respected = true;
    for _ in 0..k_iter {
        for n in 0..steps {
            let (done, rest) = cur.split_at_mut(n + 1);
            stepper.step_with_source(&done[n], &prev[n], dt, &mut rest[0])?;
        }
        let mut gap = 0.0f64;
        for (p, c) in prev.iter().zip(&cur) {
            for (x, y) in p.iter().zip(c) {
                gap = gap.max((x - y).abs());
                max_iterate = max_iterate.max(*y);
            }
        }
        respected &= max_iterate < ceiling;
        gaps.push(gap);
        std::mem::swap(&mut prev, &mut cur);
        if !respected {
            break;
        }
    }
    let last = prev.pop().expect("at least one time level");
    Ok(PicardReport {
        t_local: 0.0,
        a: 0.0,
        ceiling,
        dt,
        time_steps: steps,
        gaps,
        max_iterate,
        ceiling_respected: respected,
        halvings: 0,
        evolve_distance: f64::NAN,
        final_field: Some(Field::from_values(problem.grid(), last)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDomain, Shape};
    use crate::model::{ForcingProfile, NonlinearityProfile};

    #[test]
    fn local_time_and_equivalence() {
        let grid = GridDomain::build(Shape::Interval { length: 1.0 }, 100).unwrap();
        let p = Problem::new(
            grid,
            NonlinearityProfile::power_gap(2.0).unwrap(),
            ForcingProfile::constant(1.0),
        )
        .unwrap();
        let u0 = Field::zeros(p.grid());
        let r = picard_local(&p, 1.0, &u0, 8, &StepControls::for_grid(p.grid())).unwrap();
        assert_eq!(r.t_local, 1.0 / 16.0);
        assert!(r.ceiling_respected);
        assert!(r.final_gap() < 1e-6);
        assert!(r.gap_ratios().iter().all(|&q| q < 0.5), "{:?}", r.gaps);
        assert!(r.evolve_distance < 1e-12, "{}", r.evolve_distance);
    }

    #[test]
    fn zero_lambda_rejected() {
        let grid = GridDomain::build(Shape::Interval { length: 1.0 }, 20).unwrap();
        let p = Problem::new(
            grid,
            NonlinearityProfile::power_gap(2.0).unwrap(),
            ForcingProfile::constant(1.0),
        )
        .unwrap();
        let u0 = Field::zeros(p.grid());
        assert!(picard_local(&p, 0.0, &u0, 3, &StepControls::for_grid(p.grid())).is_err());
    }
}
