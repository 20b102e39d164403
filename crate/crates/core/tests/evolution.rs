use std::f64::consts::PI;

use mems_core::evolution::{
    comparison_suite, convergence_to_stationary, energy_inequality_check, evolve, picard_local,
    touchdown_bounds, touchdown_report, StepControls, TerminalStatus,
};
use mems_core::stationary::{minimal_solution, pull_in_voltage, IterationOptions};
use mems_core::verify::ENERGY_CONSTANT;
use mems_core::{Field, ForcingProfile, GridDomain, NonlinearityProfile, Problem, Shape};

fn unit_interval(n: usize) -> Problem {
    let grid = GridDomain::build(Shape::Interval { length: 1.0 }, n).unwrap();
    Problem::new(
        grid,
        NonlinearityProfile::power_gap(2.0).unwrap(),
        ForcingProfile::constant(1.0),
    )
    .unwrap()
}

fn controls(p: &Problem) -> StepControls {
    StepControls::for_grid(p.grid())
}

fn pull_in(p: &Problem) -> f64 {
    pull_in_voltage(p, 1e-4, &IterationOptions::default())
        .unwrap()
        .lambda_lo
}

#[test]
fn heat_flow_matches_separable_solution_at_first_order_in_time() {
    let p = unit_interval(200);
    let u0 = Field::from_fn(p.grid(), |x| (PI * x).sin());
    let t_end = 0.1;
    let mut errs = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let c = StepControls {
            dt_max: dt,
            ..controls(&p)
        };
        let tr = evolve(&p, 0.0, &u0, t_end, &c, None).unwrap();
        assert_eq!(tr.status, TerminalStatus::Completed);
        let exact = Field::from_fn(p.grid(), |x| (-PI * PI * t_end).exp() * (PI * x).sin());
        let err = tr.final_field.sup_distance(&exact).unwrap();
        assert!(err < 5.0 * (dt + p.grid().spacing().powi(2)), "{err}");
        errs.push(err);
    }
    for w in errs.windows(2) {
        let q = (w[0] / w[1]).log2();
        assert!((0.85..=1.15).contains(&q), "{q}");
    }
}

#[test]
fn half_pull_in_evolution_settles_on_minimal_solution() {
    let p = unit_interval(200);
    let lambda = 0.5 * pull_in(&p);
    let v = minimal_solution(&p, lambda, None, &IterationOptions::default()).unwrap();
    let tr = evolve(
        &p,
        lambda,
        &Field::zeros(p.grid()),
        5.0,
        &controls(&p),
        Some(&v.v),
    )
    .unwrap();
    assert_eq!(tr.status, TerminalStatus::Completed);
    assert!(tr.final_field.sup_distance(&v.v).unwrap() < 1e-4);
    assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    assert!(tr.samples.iter().all(|s| s.energy <= 1.0));
}

#[test]
fn touchdown_far_above_energy_bound_respects_gap_bound() {
    let p = unit_interval(200);
    let u0 = Field::zeros(p.grid());
    let lambda = 2.0 * std::f64::consts::PI.powi(2) / 3.0;
    let (rep, tr) = touchdown_report(&p, lambda, &u0, 1.0, &controls(&p), 0.05).unwrap();
    let (below, at) = rep.bracket.expect("touchdown");
    assert!(below < at);
    assert!(rep.bounds.gap_functional.applicable);
    assert!(at <= rep.bounds.gap_functional.value.unwrap() * 1.05);
    assert!(rep.dominated(), "{:?}", rep.violated);
    assert!(tr.samples.last().unwrap().max_u < 1.0);
}

#[test]
fn touchdown_time_decreases_with_voltage() {
    let p = unit_interval(100);
    let u0 = Field::zeros(p.grid());
    let mut prev = f64::INFINITY;
    for lambda in [4.0, 6.0, 10.0] {
        let tr = evolve(&p, lambda, &u0, 2.0, &controls(&p), None).unwrap();
        let (_, at) = tr.touchdown().expect("touchdown");
        assert!(at < prev);
        prev = at;
    }
}

#[test]
fn evolution_is_deterministic() {
    let p = unit_interval(100);
    let u0 = Field::from_fn(p.grid(), |x| 0.3 * (PI * x).sin());
    let a = evolve(&p, 2.0, &u0, 0.5, &controls(&p), None).unwrap();
    let b = evolve(&p, 2.0, &u0, 0.5, &controls(&p), None).unwrap();
    assert_eq!(a.final_field.values(), b.final_field.values());
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.t.to_bits(), y.t.to_bits());
        assert_eq!(x.max_u.to_bits(), y.max_u.to_bits());
    }
}

#[test]
fn initial_data_at_or_above_one_is_rejected() {
    let p = unit_interval(50);
    let u0 = Field::constant(p.grid(), 1.0);
    assert!(evolve(&p, 1.0, &u0, 0.1, &controls(&p), None).is_err());
}

#[test]
fn picard_local_time_and_agreement_with_evolve() {
    let p = unit_interval(100);
    let u0 = Field::zeros(p.grid());
    assert!(picard_local(&p, 0.0, &u0, 4, &controls(&p)).is_err());
    let r = picard_local(&p, 1.0, &u0, 8, &controls(&p)).unwrap();
    assert!((r.t_local - 1.0 / 16.0).abs() < 1e-15);
    assert!(r.ceiling_respected);
    assert!(r.max_iterate <= r.ceiling);
    assert!(r.final_gap() < 1e-6);
    assert!(r.gaps.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-14));
    assert!(r.gap_ratios().iter().all(|&q| q < 0.5));
    assert!(r.evolve_distance < 1e-5);
}

#[test]
fn touchdown_bounds_at_reference_voltage() {
    let p = unit_interval(400);
    let u0 = Field::zeros(p.grid());
    let b = touchdown_bounds(&p, 6.0, &u0, 0.5).unwrap();
    assert_eq!(b.energy0, 0.0);
    let pi2 = PI * PI;
    assert!((b.lambda_eigenmode - pi2 * 4.0 / 27.0).abs() < 2e-3 * pi2);
    assert!((b.lambda_gap - pi2 / 3.0).abs() < 2e-3 * pi2);
    let eig = 1.0 / (6.0 - pi2 * 4.0 / 27.0) / 3.0;
    let gap = 1.0 / (6.0 - pi2 / 3.0) / 3.0;
    assert!((b.eigenmode.value.unwrap() - eig).abs() < 1e-3 * eig);
    assert!((b.gap_functional.value.unwrap() - gap).abs() < 1e-3 * gap);
    assert!(b.localized.applicable);
    assert!(b.localized.value.unwrap() > b.eigenmode.value.unwrap());
}

#[test]
fn gap_bound_is_inapplicable_below_its_threshold() {
    let p = unit_interval(200);
    let b = touchdown_bounds(&p, 3.0, &Field::zeros(p.grid()), 0.5).unwrap();
    assert!(!b.gap_functional.applicable);
    assert!(b.gap_functional.value.is_none());
    assert!(b.eigenmode.applicable);
    let b = touchdown_bounds(&p, 1.0, &Field::zeros(p.grid()), 0.5).unwrap();
    assert_eq!(b.applicable().count(), 0);
}

#[test]
fn energy_inequality_holds_at_default_step_and_fails_when_coarse() {
    let p = unit_interval(400);
    let u0 = Field::zeros(p.grid());
    let c = StepControls {
        sample_interval: 0.0,
        ..controls(&p)
    };
    let tr = evolve(&p, 6.0, &u0, 1.0, &c, None).unwrap();
    let check = energy_inequality_check(&tr, &p, 6.0, ENERGY_CONSTANT, c.dt_max).unwrap();
    assert!(check.passed(), "{check:?}");
    assert!(check.samples_checked > 10);

    let coarse = StepControls {
        dt_max: 10.0 * c.dt_max,
        ..c.clone()
    };
    let tr = evolve(&p, 6.0, &u0, 1.0, &coarse, None).unwrap();
    let check = energy_inequality_check(&tr, &p, 6.0, ENERGY_CONSTANT, c.dt_max).unwrap();
    assert!(!check.passed(), "{check:?}");
}

#[test]
fn comparison_of_ordered_data() {
    let p = unit_interval(200);
    let low = Field::zeros(p.grid());
    let high = Field::constant(p.grid(), 0.2);
    let c = controls(&p);
    let r = comparison_suite(&p, 0.5, &low, &high, 2.0, &c).unwrap();
    assert!(r.ordered && r.strictly_ordered && !r.touched_down);
    assert!(r.b > 0.0);
    assert!(r.l1_estimates_hold(1e-8));
    assert!(r.samples.iter().all(|s| s.positive_part_low <= 1e-12));

    let same = comparison_suite(&p, 0.5, &high, &high, 2.0, &c).unwrap();
    assert!(same.identical && same.ordered);
}

#[test]
fn heat_flow_decays_at_principal_rate() {
    let p = unit_interval(200);
    let u0 = Field::from_fn(p.grid(), |x| -x * (1.0 - x));
    let zero = Field::zeros(p.grid());
    let r = convergence_to_stationary(&p, 0.0, &u0, &zero, 1e-5, 20.0, &controls(&p)).unwrap();
    assert!(r.converged);
    let rate = r.decay_rate.unwrap();
    let mu = p.eigen().mu;
    assert!((rate - mu).abs() < 2e-2 * mu, "{rate} vs {mu}");
}

#[test]
fn stationary_initial_data_stays_put() {
    let p = unit_interval(200);
    let lambda = 0.5 * pull_in(&p);
    let v = minimal_solution(&p, lambda, None, &IterationOptions::default()).unwrap();
    let tr = evolve(&p, lambda, &v.v, 2.0, &controls(&p), Some(&v.v)).unwrap();
    for s in &tr.samples {
        assert!(s.dist_to_ref.unwrap() < 1e-8);
    }
}

#[test]
fn below_pull_in_converges_with_sandwich() {
    let p = unit_interval(200);
    let star = pull_in(&p);
    for frac in [0.5, 0.9] {
        let lambda = frac * star;
        let v = minimal_solution(&p, lambda, None, &IterationOptions::default()).unwrap();
        let r = convergence_to_stationary(
            &p,
            lambda,
            &Field::zeros(p.grid()),
            &v.v,
            1e-5,
            100.0,
            &controls(&p),
        )
        .unwrap();
        assert!(r.converged, "{frac}: {}", r.final_distance);
        assert!(r.sandwich_holds(1e-8));
        assert!(r.dissipation_tail < 1e-8);
    }
}
