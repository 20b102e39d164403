//! Time integration of `u_t = Δu + λ f / g(u)` with touchdown detection.
//!
//! Diffusion is implicit and the reaction explicit:
//!
//! ```text
//! (I - dt Δ_h) u^{n+1} = u^n + dt λ f / g(u^n).
//! ```
//!
//! Since `I - dt Δ_h` is an M-matrix and the reaction is nondecreasing in
//! `u`, a step maps ordered data to ordered data.

mod picard;
mod suites;
mod touchdown;

pub use picard::{picard_local, PicardReport};
pub use suites::{
    comparison_suite, convergence_to_stationary, ComparisonReport, ComparisonSample,
    ConvergenceRecord, ConvergenceSample,
};
pub use touchdown::{
    dichotomy_probe, energy_inequality_check, touchdown_bounds, touchdown_report, DichotomyReport,
    EnergyCheck, LevelCrossing, TouchdownBounds, TouchdownReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridDomain};
use crate::linalg::Tridiagonal;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepControls {
    pub dt_max: f64,
    /// Steps are never shorter than this; see `max_floor_steps`.
    pub dt_min: f64,
    /// Fraction of the reaction time scale `g² / (λ‖f‖ |g'|)` allowed per step.
    pub c_r: f64,
    /// Regularizes the reaction time scale when `g' = 0`.
    pub eps: f64,
    /// Touchdown is declared once `max u ≥ 1 - eps_td`.
    pub eps_td: f64,
    /// Spacing of recorded samples; 0 records every step.
    pub sample_interval: f64,
    /// Steps clamped to `dt_min` tolerated before giving up.
    pub max_floor_steps: usize,
}

impl StepControls {
    /// Defaults scaled to the domain size: `dt_max = 1e-3 L²`, samples
    /// every `10 dt_max`.
    pub fn for_grid(grid: &GridDomain) -> Self {
        let dt_max = 1e-3 * grid.shape().extent().powi(2);
        Self {
            dt_max,
            dt_min: 1e-12,
            c_r: 0.2,
            eps: 1e-12,
            eps_td: 1e-6,
            sample_interval: 10.0 * dt_max,
            max_floor_steps: 10_000,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.dt_max > 0.0
            && self.dt_min > 0.0
            && self.dt_min <= self.dt_max
            && self.c_r > 0.0
            && self.eps > 0.0
            && self.eps_td > 0.0
            && self.eps_td < 1.0
            && self.sample_interval >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid step controls {self:?}"
            )))
        }
    }
}

/// One semi-implicit step for a fixed problem and λ.
#[derive(Debug)]
pub struct Stepper<'a> {
    problem: &'a Problem,
    lambda: f64,
    controls: StepControls,
    matrix: Option<(f64, Tridiagonal)>,
    rhs: Vec<f64>,
    reaction: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(problem: &'a Problem, lambda: f64, controls: StepControls) -> Result<Self> {
        controls.validate()?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "λ must be finite and nonnegative, got {lambda}"
            )));
        }
        let n = problem.grid().len();
        Ok(Self {
            problem,
            lambda,
            controls,
            matrix: None,
            rhs: vec![0.0; n],
            reaction: vec![0.0; n],
        })
    }

    pub fn controls(&self) -> &StepControls {
        &self.controls
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Largest step allowed at current maximum `m`, before clamping to
    /// `dt_min`.
    pub fn admissible_dt(&self, m: f64) -> Result<f64> {
        let c = &self.controls;
        if self.lambda == 0.0 {
            return Ok(c.dt_max);
        }
        let g = self.problem.gap();
        let gm = g.g(m)?;
        let rate = self.lambda * self.problem.forcing_stats().sup_abs * g.dg(m)?.abs();
        Ok(c.dt_max.min(c.c_r * gm * gm / (rate + c.eps)))
    }

    /// `(I + dt A) out = rhs` with `A = -Δ_h`.
    pub fn implicit_solve(&mut self, dt: f64, rhs: &[f64], out: &mut [f64]) {
        let stale = !matches!(&self.matrix, Some((d, _)) if *d == dt);
        if stale {
            let m = self.problem.grid().neg_laplacian().affine(1.0, dt);
            self.matrix = Some((dt, m));
        }
        if let Some((_, m)) = &self.matrix {
            m.solve(rhs, out);
        }
    }

    /// `out = (I + dt A)^{-1} (u + dt λ f / g(source))`.
    pub fn step_with_source(
        &mut self,
        u: &[f64],
        source: &[f64],
        dt: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let mut reaction = std::mem::take(&mut self.reaction);
        let mut rhs = std::mem::take(&mut self.rhs);
        let filled = self.problem.reaction(self.lambda, source, &mut reaction);
        if filled.is_ok() {
            for ((r, &ui), &ri) in rhs.iter_mut().zip(u).zip(&reaction) {
                *r = ui + dt * ri;
            }
            self.implicit_solve(dt, &rhs, out);
        }
        self.reaction = reaction;
        self.rhs = rhs;
        filled
    }

    /// One step of the scheme from `u`.
    pub fn step(&mut self, u: &[f64], dt: f64, out: &mut [f64]) -> Result<()> {
        self.step_with_source(u, u, dt, out)
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TerminalStatus {
    Completed,
    /// `max u` crossed `1 - eps_td` during the step from `t_below` to `t_at`.
    Touchdown {
        t_below: f64,
        t_at: f64,
    },
    /// Too many steps were clamped to `dt_min`.
    StepFailure {
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub max_u: f64,
    /// `E = ∫ u φ₁`.
    pub energy: f64,
    pub dist_to_ref: Option<f64>,
    /// Length of the step that ended at `t`; 0 for the initial sample.
    pub dt: f64,
    /// `∫₀ᵗ ∫ u_t²` accumulated step by step.
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub samples: Vec<TraceSample>,
    pub status: TerminalStatus,
    /// Last accepted field.
    pub final_field: Field,
    pub steps: usize,
    pub floor_steps: usize,
    pub controls: StepControls,
}

impl EvolutionTrace {
    pub fn touchdown(&self) -> Option<(f64, f64)> {
        match self.status {
            TerminalStatus::Touchdown { t_below, t_at } => Some((t_below, t_at)),
            _ => None,
        }
    }

    /// CSV with columns `t,max_u,E,dist_to_ref,dt`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::grid::sig17;
        writeln!(w, "t,max_u,E,dist_to_ref,dt")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{}",
                sig17(s.t),
                sig17(s.max_u),
                sig17(s.energy),
                s.dist_to_ref.map(sig17).unwrap_or_default(),
                sig17(s.dt)
            )?;
        }
        Ok(())
    }
}

pub(crate) fn validate_initial(problem: &Problem, u0: &Field, eps_td: f64) -> Result<f64> {
    if !u0.grid().as_ref().eq(problem.grid().as_ref()) {
        return Err(Error::GridMismatch);
    }
    let a = u0.max().max(0.0);
    if !(a < 1.0 - eps_td) || u0.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial data must be finite and below 1 - {eps_td:e}, max is {}",
            u0.max()
        )));
    }
    Ok(a)
}

/// Evolves from `u0` up to `t_end` or touchdown. With a reference field,
/// each sample records the sup distance to it.
pub fn evolve(
    problem: &Problem,
    lambda: f64,
    u0: &Field,
    t_end: f64,
    controls: &StepControls,
    reference: Option<&Field>,
) -> Result<EvolutionTrace> {
    validate_initial(problem, u0, controls.eps_td)?;
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be nonnegative, got {t_end}"
        )));
    }
    let grid = problem.grid();
    let phi = problem.eigen().phi.values();
    let mut stepper = Stepper::new(problem, lambda, controls.clone())?;
    let c = stepper.controls().clone();

    let mut u = u0.values().to_vec();
    let mut next = vec![0.0; u.len()];
    let dist = |u: &[f64]| -> Option<f64> {
        reference.map(|r| {
            u.iter()
                .zip(r.values())
                .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
        })
    };
    let sample = |t: f64, u: &[f64], dt: f64, dissipation: f64| TraceSample {
        t,
        max_u: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        energy: grid.inner_values(u, phi),
        dist_to_ref: dist(u),
        dt,
        dissipation,
    };

    let mut samples = vec![sample(0.0, &u, 0.0, 0.0)];
    let mut t = 0.0;
    let mut next_sample = c.sample_interval;
    let mut dissipation = 0.0;
    let mut steps = 0;
    let mut floor_steps = 0;
    let mut status = TerminalStatus::Completed;

    loop {
        let remaining = t_end - t;
        let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut dt = stepper.admissible_dt(m)?;
        if remaining <= 1e-9 * dt.max(c.dt_min) {
            break;
        }
        if dt < c.dt_min {
            dt = c.dt_min;
            floor_steps += 1;
            if floor_steps > c.max_floor_steps {
                status = TerminalStatus::StepFailure { t };
                break;
            }
        }
        let dt = dt.min(remaining);
        stepper.step(&u, dt, &mut next)?;
        let new_max = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(new_max < 1.0 - c.eps_td) {
            status = TerminalStatus::Touchdown {
                t_below: t,
                t_at: t + dt,
            };
            break;
        }
        dissipation += grid
            .weights()
            .iter()
            .zip(next.iter().zip(&u))
            .map(|(w, (a, b))| w * (a - b) * (a - b))
            .sum::<f64>()
            / dt;
        std::mem::swap(&mut u, &mut next);
        t += dt;
        steps += 1;
        if c.sample_interval == 0.0 || t >= next_sample * (1.0 - 1e-12) {
            samples.push(sample(t, &u, dt, dissipation));
            while next_sample <= t * (1.0 + 1e-12) && c.sample_interval > 0.0 {
                next_sample += c.sample_interval;
            }
        }
    }
    if samples.last().map(|s| s.t) != Some(t) {
        let dt = samples.last().map_or(0.0, |s| s.dt);
        samples.push(sample(t, &u, dt, dissipation));
    }

    Ok(EvolutionTrace {
        samples,
        status,
        final_field: Field::from_values(grid, u)?,
        steps,
        floor_steps,
        controls: c,
    })
}
