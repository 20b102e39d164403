//! The acceptance checks, each reduced to a named pass/fail outcome.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::eigen::principal_eigenpair;
use crate::error::Result;
use crate::evolution::{
    comparison_suite, convergence_to_stationary, dichotomy_probe, energy_inequality_check, evolve,
    picard_local, touchdown_report, StepControls,
};
use crate::grid::{Field, GridDomain, Shape};
use crate::model::{ForcingProfile, NonlinearityProfile};
use crate::problem::Problem;
use crate::special::first_bessel_zero;
use crate::stationary::{
    compare_minimal_solutions, linearized_eigenvalue, minimal_solution, pull_in_voltage,
    IterationOptions, PullInEstimate,
};

/// Energy-check constant, calibrated on the default run.
pub const ENERGY_CONSTANT: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Names of criteria `1..=11`.
pub const CRITERIA: [&str; 11] = [
    "eigen-accuracy",
    "bound-sandwich",
    "pohozaev-bound",
    "monotone-iteration",
    "stability-branch",
    "forcing-monotonicity",
    "comparison",
    "picard-equivalence",
    "global-convergence",
    "touchdown-bounds",
    "dichotomy-probe",
];

/// Shared state: the unit-interval MEMS problem at `N = 400` and its
/// pull-in estimate.
pub struct Context {
    pub problem: Problem,
    pub opts: IterationOptions,
    pullin: Option<PullInEstimate>,
}

impl Context {
    pub fn new() -> Result<Self> {
        Ok(Self {
            problem: mems_problem(Shape::Interval { length: 1.0 }, 400)?,
            opts: IterationOptions::default(),
            pullin: None,
        })
    }

    pub fn pullin(&mut self) -> Result<&PullInEstimate> {
        if self.pullin.is_none() {
            self.pullin = Some(pull_in_voltage(&self.problem, 1e-4, &self.opts)?);
        }
        Ok(self.pullin.as_ref().expect("just filled"))
    }

    fn lambda_star(&mut self) -> Result<f64> {
        Ok(self.pullin()?.midpoint())
    }

    fn controls(&self) -> StepControls {
        StepControls::for_grid(self.problem.grid())
    }
}

/// `g = (1-s)²`, `f ≡ 1`.
pub fn mems_problem(shape: Shape, n: usize) -> Result<Problem> {
    Problem::new(
        GridDomain::build(shape, n)?,
        NonlinearityProfile::power_gap(2.0)?,
        ForcingProfile::constant(1.0),
    )
}

/// Pull-in voltage of `u'' + λ/(1-u)² = 0` on `(0, 1)` from the time map.
///
/// A symmetric solution with maximum `m` exists for `λ(m) = 4 I(m)²` with
/// `I(m) = ∫₀^m du / √(2(1/(1-m) - 1/(1-u)))`. Substituting `u = m - w²`
/// gives the smooth integrand `√(2(1-m)(1-m+w²))` on `[0, √m]`; the
/// pull-in voltage is the maximum of `λ(m)`.
pub fn pull_in_quadrature_oracle() -> f64 {
    let lambda_of = |m: f64| {
        let top = m.sqrt();
        let n = 2000;
        let h = top / n as f64;
        let f = |w: f64| (2.0 * (1.0 - m) * (1.0 - m + w * w)).sqrt();
        let mut s = f(0.0) + f(top);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let i = s * h / 3.0;
        4.0 * i * i
    };
    let (mut a, mut b) = (0.01, 0.99);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-10 {
        if lambda_of(c) > lambda_of(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    lambda_of(0.5 * (a + b))
}

fn outcome(id: u8, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name: CRITERIA[id as usize - 1].into(),
        passed,
        detail,
    }
}

fn failed(id: u8, err: crate::error::Error) -> CriterionOutcome {
    outcome(id, false, format!("error: {err}"))
}

/// Runs one criterion; errors become failures.
pub fn run_criterion(id: u8, ctx: &mut Context) -> CriterionOutcome {
    let result = match id {
        1 => eigen_accuracy(),
        2 => bound_sandwich(ctx),
        3 => pohozaev(),
        4 => monotone_iteration(ctx),
        5 => stability_branch(ctx),
        6 => forcing_monotonicity(ctx),
        7 => comparison(ctx),
        8 => picard(),
        9 => global_convergence(ctx),
        10 => touchdown(ctx),
        11 => dichotomy(ctx),
        _ => {
            return CriterionOutcome {
                id,
                name: "unknown".into(),
                passed: false,
                detail: format!("no criterion {id}; valid ids are 1 to 11"),
            };
        }
    };
    result.unwrap_or_else(|e| failed(id, e))
}

/// Runs criteria `1..=11` in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    match Context::new() {
        Ok(mut ctx) => (1..=11).map(|id| run_criterion(id, &mut ctx)).collect(),
        Err(e) => (1..=11).map(|id| failed(id, e.clone())).collect(),
    }
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn eigen_accuracy() -> Result<CriterionOutcome> {
    let interval = |n| -> Result<f64> {
        let g = GridDomain::build(Shape::Interval { length: 1.0 }, n)?;
        Ok(principal_eigenpair(&g)?.mu)
    };
    let disk = |n| -> Result<f64> {
        let g = GridDomain::build(
            Shape::Ball {
                dim: 2,
                radius: 1.0,
            },
            n,
        )?;
        Ok(principal_eigenpair(&g)?.mu)
    };
    let pi2 = PI * PI;
    let j = first_bessel_zero(0.0);
    let mut e_int = Vec::new();
    let mut e_disk = Vec::new();
    for n in [100, 200, 400] {
        e_int.push((interval(n)? - pi2).abs());
        e_disk.push((disk(n)? - j * j).abs());
    }
    let rel_int = e_int[2] / pi2;
    let rel_disk = e_disk[2] / (j * j);
    let o_int = orders(&e_int);
    let o_disk = orders(&e_disk);
    let in_range = |o: &[f64]| o.iter().all(|&q| (1.8..=2.2).contains(&q));
    let passed = rel_int < 1e-3 && rel_disk < 5e-3 && in_range(&o_int) && in_range(&o_disk);
    Ok(outcome(
        1,
        passed,
        format!(
            "interval rel err {rel_int:.3e} (< 1e-3), disk rel err {rel_disk:.3e} (< 5e-3), \
             orders interval {o_int:.3?} disk {o_disk:.3?} (in [1.8, 2.2])"
        ),
    ))
}

fn bound_sandwich(ctx: &mut Context) -> Result<CriterionOutcome> {
    let opts = ctx.opts.clone();
    let est = ctx.pullin()?.clone();
    let coarse = pull_in_voltage(
        &mems_problem(Shape::Interval { length: 1.0 }, 200)?,
        1e-4,
        &opts,
    )?;
    let lower = est.bounds.lower_dilation.value.unwrap_or(f64::NAN);
    let upper = est.bounds.upper_energy.value.unwrap_or(f64::NAN);
    let oracle = pull_in_quadrature_oracle();
    let mid = est.midpoint();
    let gap = (est.lambda_hi - est.lambda_lo) / est.lambda_hi;
    let refine = (mid - coarse.midpoint()).abs() / mid;
    let vs_oracle = (mid - oracle).abs() / oracle;
    let passed = lower * 0.98 <= est.lambda_lo
        && est.lambda_hi <= upper * 1.02
        && gap <= 1e-4
        && refine < 1e-2
        && vs_oracle < 1e-2;
    Ok(outcome(
        2,
        passed,
        format!(
            "lower {lower:.5} ≤ [{:.6}, {:.6}] ≤ upper {upper:.5}; rel gap {gap:.2e}; \
             N=200 vs 400 {refine:.2e}; oracle {oracle:.6} diff {vs_oracle:.2e}",
            est.lambda_lo, est.lambda_hi
        ),
    ))
}

fn pohozaev() -> Result<CriterionOutcome> {
    let disk = mems_problem(
        Shape::Ball {
            dim: 2,
            radius: 1.0,
        },
        400,
    )?;
    let est = pull_in_voltage(&disk, 1e-4, &IterationOptions::default())?;
    let poh = est.bounds.pohozaev.value.unwrap_or(f64::NAN);
    let energy = est.bounds.upper_energy.value.unwrap_or(f64::NAN);
    let cap = poh.min(energy) * 1.02;
    let passed = (poh - 8.0).abs() <= 1e-12 && est.lambda_hi <= cap;
    Ok(outcome(
        3,
        passed,
        format!(
            "Pohozaev bound {poh} (= 8); disk bracket [{:.6}, {:.6}] ≤ {cap:.5}",
            est.lambda_lo, est.lambda_hi
        ),
    ))
}

fn monotone_iteration(ctx: &mut Context) -> Result<CriterionOutcome> {
    let lstar = ctx.lambda_star()?;
    let p = &ctx.problem;
    let zero = minimal_solution(p, 0.0, None, &ctx.opts)?;
    let zero_ok =
        zero.converged() && zero.iterations == 1 && zero.v.values().iter().all(|&v| v == 0.0);
    let mut worst_step = f64::INFINITY;
    let mut residual_ok = true;
    let mut notes = Vec::new();
    for frac in [0.5, 0.95] {
        let lambda = frac * lstar;
        let r = minimal_solution(p, lambda, None, &ctx.opts)?;
        worst_step = worst_step.min(r.min_step);
        let tol = r.residual_tolerance(p, lambda);
        residual_ok &= r.converged() && r.residual <= tol;
        notes.push(format!(
            "λ={lambda:.4}: {} its, residual {:.2e} ≤ {tol:.2e}",
            r.iterations, r.residual
        ));
    }
    // 0.8 x(1-x) satisfies -Δψ = 1.6 ≥ λ / (1 - 0.2)² for λ ≤ 1.024.
    let psi = Field::from_fn(p.grid(), |x| 0.8 * x * (1.0 - x));
    let certified = minimal_solution(p, 0.5 * lstar, Some(&psi), &ctx.opts);
    let cert_ok = certified.as_ref().map(|r| r.converged()).unwrap_or(false);
    let passed = zero_ok && worst_step >= 0.0 && residual_ok && cert_ok;
    Ok(outcome(
        4,
        passed,
        format!(
            "λ=0 one step: {zero_ok}; min step {worst_step:.3e} (≥ 0); {}; below supersolution: {cert_ok}",
            notes.join("; ")
        ),
    ))
}

fn stability_branch(ctx: &mut Context) -> Result<CriterionOutcome> {
    let lstar = ctx.lambda_star()?;
    let p = &ctx.problem;
    let mut mus = Vec::new();
    let mut sols: Vec<Field> = Vec::new();
    for k in 0..10 {
        let lambda = (0.1 + 0.85 * k as f64 / 9.0) * lstar;
        let r = minimal_solution(p, lambda, None, &ctx.opts)?;
        if !r.converged() {
            return Ok(outcome(
                5,
                false,
                format!("no minimal solution at λ = {lambda}"),
            ));
        }
        mus.push(linearized_eigenvalue(p, lambda, &r.v)?);
        sols.push(r.v);
    }
    let positive = mus.iter().all(|&m| m > 0.0);
    let decreasing = mus.windows(2).all(|w| w[1] < w[0]);
    let increasing = sols
        .windows(2)
        .all(|w| w[0].values().iter().zip(w[1].values()).all(|(a, b)| b > a));
    Ok(outcome(
        5,
        positive && decreasing && increasing,
        format!(
            "linearized eigenvalues {:.4?}; positive {positive}, strictly decreasing {decreasing}, \
             solutions strictly increasing {increasing}",
            mus
        ),
    ))
}

fn forcing_monotonicity(ctx: &mut Context) -> Result<CriterionOutcome> {
    let base = ctx.pullin()?.clone();
    let p = &ctx.problem;
    let doubled = p.with_forcing(ForcingProfile::constant(2.0));
    let lambda = 0.25 * base.midpoint();
    let order = compare_minimal_solutions(p, &doubled, lambda, true, &ctx.opts)?;
    let est2 = pull_in_voltage(&doubled, 1e-4, &ctx.opts)?;
    let weak = est2.lambda_lo <= base.lambda_hi;
    let weaker_gap = p.with_gap(NonlinearityProfile::power_gap(1.0)?);
    let by_gap = compare_minimal_solutions(&weaker_gap, p, lambda, true, &ctx.opts)?;
    Ok(outcome(
        6,
        order.strict && weak && by_gap.strict,
        format!(
            "min v(2f) - v(f) = {:.3e} at λ={lambda:.4}; pull-in {:.6} → {:.6}; \
             min v((1-s)²) - v(1-s) = {:.3e}",
            order.min_gap,
            base.midpoint(),
            est2.midpoint(),
            by_gap.min_gap
        ),
    ))
}

fn comparison(ctx: &mut Context) -> Result<CriterionOutcome> {
    let lambda = 0.5 * ctx.lambda_star()?;
    let c = ctx.controls();
    let p = &ctx.problem;
    let low = Field::zeros(p.grid());
    let high = Field::constant(p.grid(), 0.2);
    let r = comparison_suite(p, lambda, &low, &high, 5.0, &c)?;
    let same = comparison_suite(p, lambda, &high, &high, 5.0, &c)?;
    let a = evolve(p, lambda, &high, 5.0, &c, None)?;
    let b = evolve(p, lambda, &high, 5.0, &c, None)?;
    let bitwise = a == b && same.identical;
    let l1_ok = r.l1_estimates_hold(1e-8);
    let reached = r.samples.last().map_or(0.0, |s| s.t);
    let passed = r.strictly_ordered && l1_ok && bitwise && !r.touched_down && reached >= 5.0;
    Ok(outcome(
        7,
        passed,
        format!(
            "strict ordering to t={reached}: {} (final min gap {:.3e}); b = {:.4}; \
             worst L¹ excess {:.3e} (≤ 1e-8); equal data bitwise identical: {bitwise}",
            r.strictly_ordered,
            r.samples.last().map_or(f64::NAN, |s| s.min_difference),
            r.b,
            r.worst_l1_excess
        ),
    ))
}

fn picard() -> Result<CriterionOutcome> {
    let p = mems_problem(Shape::Interval { length: 1.0 }, 400)?;
    let u0 = Field::zeros(p.grid());
    let r = picard_local(&p, 1.0, &u0, 8, &StepControls::for_grid(p.grid()))?;
    let h2 = p.grid().spacing().powi(2);
    let allowed = 5.0 * (r.dt + h2);
    let ratios = r.gap_ratios();
    let geometric = !ratios.is_empty() && ratios.iter().all(|&q| q < 0.5);
    let passed = r.t_local == 1.0 / 16.0
        && r.ceiling_respected
        && geometric
        && r.final_gap() < 1e-6
        && r.evolve_distance <= allowed;
    Ok(outcome(
        8,
        passed,
        format!(
            "T_local = {} (= 1/16); max iterate {:.4} < {}; gaps [{}]; \
             distance to evolve {:.2e} ≤ {allowed:.2e}",
            r.t_local,
            r.max_iterate,
            r.ceiling,
            r.gaps
                .iter()
                .map(|g| format!("{g:.2e}"))
                .collect::<Vec<_>>()
                .join(", "),
            r.evolve_distance
        ),
    ))
}

fn global_convergence(ctx: &mut Context) -> Result<CriterionOutcome> {
    let lambda = 0.5 * ctx.lambda_star()?;
    let c = ctx.controls();
    let p = &ctx.problem;
    let v = minimal_solution(p, lambda, None, &ctx.opts)?;
    let u0 = Field::zeros(p.grid());
    let r = convergence_to_stationary(p, lambda, &u0, &v.v, 1e-5, 50.0, &c)?;
    let passed = r.converged
        && r.final_distance < 1e-4
        && r.t_exit < 50.0
        && r.sandwich_holds(1e-8)
        && r.dissipation_tail < 1e-8;
    Ok(outcome(
        9,
        passed,
        format!(
            "‖u - v‖ = {:.2e} at t = {:.3}; sandwich excess below {:.1e} above {:.1e}; \
             dissipation {:.4e}, tail {:.2e} (< 1e-8)",
            r.final_distance,
            r.t_exit,
            r.sandwich_below,
            r.sandwich_above,
            r.dissipation,
            r.dissipation_tail
        ),
    ))
}

fn touchdown(ctx: &mut Context) -> Result<CriterionOutcome> {
    let lambda = 6.0;
    let p = &ctx.problem;
    let c = StepControls {
        sample_interval: 0.0,
        ..ctx.controls()
    };
    let u0 = Field::zeros(p.grid());
    let (report, trace) = touchdown_report(p, lambda, &u0, 1.0, &c, 0.05)?;
    let energy = energy_inequality_check(&trace, p, lambda, ENERGY_CONSTANT, c.dt_max)?;
    let Some((_, t_at)) = report.bracket else {
        return Ok(outcome(10, false, "no touchdown observed".into()));
    };
    let b = &report.bounds;
    let eig = b.eigenmode.value.unwrap_or(f64::NAN);
    let gap = b.gap_functional.value.unwrap_or(f64::NAN);
    let loc = b.localized.value.unwrap_or(f64::NAN);
    // Tabulated values for this scenario, checked as stated.
    let tabulated = [0.0614, 0.1230];
    let literal = tabulated.iter().all(|&b| t_at <= b * 1.05);
    let passed = report.dominated()
        && t_at <= eig * 1.05
        && t_at <= gap * 1.05
        && t_at <= loc * 1.05
        && literal
        && energy.passed();
    Ok(outcome(
        10,
        passed,
        format!(
            "touchdown in [{:.6}, {t_at:.6}]; eigenmode bound {eig:.5}, gap bound {gap:.5}, \
             localized bound {loc:.4}; tabulated 0.0614 and 0.1230 dominate: {literal}; \
             energy inequality worst excess {:.2e} over {} samples",
            report.bracket.map_or(f64::NAN, |b| b.0),
            energy.worst_violation,
            energy.samples_checked
        ),
    ))
}

fn dichotomy(ctx: &mut Context) -> Result<CriterionOutcome> {
    let est = ctx.pullin()?.clone();
    let c = ctx.controls();
    let p = &ctx.problem;
    let above = dichotomy_probe(p, 1.05 * est.lambda_hi, 50.0, &[0.9, 0.99], &c, None)?;
    let reached = above.crossings.iter().all(|x| x.time.is_some());
    let lambda_below = 0.9 * est.lambda_lo;
    let v = minimal_solution(p, lambda_below, None, &ctx.opts)?;
    let below = dichotomy_probe(p, lambda_below, 50.0, &[0.9, 0.99], &c, Some(&v.v))?;
    let settled = below.crossings.iter().all(|x| x.time.is_none())
        && below.final_distance.is_some_and(|d| d < 1e-4);
    Ok(outcome(
        11,
        reached && settled,
        format!(
            "λ = {:.5}: level 0.99 reached at t = {:?}; λ = {lambda_below:.5}: \
             ‖u(50) - v‖ = {:.2e}",
            above.lambda,
            above.crossings.last().and_then(|x| x.time),
            below.final_distance.unwrap_or(f64::NAN)
        ),
    ))
}
