use std::f64::consts::PI;
use std::sync::Arc;

use mems_core::{Field, GridDomain, Shape};
use proptest::prelude::*;

fn interval(n: usize) -> Arc<GridDomain> {
    GridDomain::build(Shape::Interval { length: 1.0 }, n).unwrap()
}

fn ball(dim: usize, n: usize) -> Arc<GridDomain> {
    GridDomain::build(Shape::Ball { dim, radius: 1.0 }, n).unwrap()
}

fn sup_err(u: &Field, exact: impl Fn(f64) -> f64) -> f64 {
    u.grid()
        .nodes()
        .iter()
        .zip(u.values())
        .fold(0.0, |m, (&x, &v)| f64::max(m, (v - exact(x)).abs()))
}

fn order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn laplacian_of_sine_is_second_order() {
    let mut errs = Vec::new();
    for n in [100, 200, 400] {
        let g = interval(n);
        let u = Field::from_fn(&g, |x| (PI * x).sin());
        let lap = g.apply_laplacian(&u).unwrap();
        errs.push(sup_err(&lap, |x| -PI * PI * (PI * x).sin()) / (PI * PI));
    }
    assert!(errs[2] < 1e-4);
    for q in order(&errs) {
        assert!((1.8..=2.2).contains(&q), "{q}");
    }
}

#[test]
fn laplacian_of_three_ball_sinc_is_second_order() {
    let sinc = |r: f64| (PI * r).sin() / (PI * r);
    let mut errs = Vec::new();
    for n in [100, 200, 400] {
        let g = ball(3, n);
        let u = Field::from_fn(&g, sinc);
        let lap = g.apply_laplacian(&u).unwrap();
        errs.push(sup_err(&lap, |r| -PI * PI * sinc(r)));
    }
    for q in order(&errs) {
        assert!((1.8..=2.2).contains(&q), "{q}");
    }
}

#[test]
fn poisson_with_constant_rhs_matches_closed_forms() {
    let g = interval(99);
    let v = g.solve_poisson(&Field::constant(&g, 1.0)).unwrap();
    assert!(sup_err(&v, |x| 0.5 * x * (1.0 - x)) < 1e-12);
    let d = ball(2, 99);
    let v = d.solve_poisson(&Field::constant(&d, 1.0)).unwrap();
    assert!(sup_err(&v, |r| 0.25 * (1.0 - r * r)) < 1e-12);
}

#[test]
fn poisson_converges_at_second_order() {
    let mut errs_interval = Vec::new();
    let mut errs_ball = Vec::new();
    for n in [100, 200, 400] {
        let g = interval(n);
        let rhs = Field::from_fn(&g, |x| PI * PI * (PI * x).sin());
        let v = g.solve_poisson(&rhs).unwrap();
        errs_interval.push(sup_err(&v, |x| (PI * x).sin()));

        let b = ball(3, n);
        let sinc = |r: f64| (PI * r).sin() / (PI * r);
        let rhs = Field::from_fn(&b, |r| PI * PI * sinc(r));
        let v = b.solve_poisson(&rhs).unwrap();
        errs_ball.push(sup_err(&v, sinc));
    }
    for q in order(&errs_interval).into_iter().chain(order(&errs_ball)) {
        assert!((1.8..=2.2).contains(&q), "{q}");
    }
}

fn poisson_residual(g: &Arc<GridDomain>, rhs: &Field) -> (f64, f64) {
    let v = g.solve_poisson(rhs).unwrap();
    let res = g.apply_laplacian(&v).unwrap().add(rhs).unwrap().sup_norm();
    let h = g.spacing();
    // ‖-Δ_h‖_∞ ≤ 4/h² on both shapes away from the origin cell.
    let backward = f64::EPSILON * (4.0 / (h * h) * v.sup_norm() + rhs.sup_norm());
    (res, backward)
}

#[test]
fn poisson_residual_is_at_round_off() {
    for shape in [
        Shape::Interval { length: 1.0 },
        Shape::Ball {
            dim: 3,
            radius: 1.0,
        },
    ] {
        let g = GridDomain::build(shape, 100).unwrap();
        let rhs = Field::from_fn(&g, |r| 1.0 + r.sin());
        let (res, _) = poisson_residual(&g, &rhs);
        assert!(res < 1e-12 * (1.0 + rhs.sup_norm()), "{res}");

        // At N = 400 evaluating Δ_h v in f64 alone costs ‖Δ_h‖‖v‖ε ≈ 1e-11.
        let g = GridDomain::build(shape, 400).unwrap();
        let rhs = Field::from_fn(&g, |r| 1.0 + r.sin());
        let (res, backward) = poisson_residual(&g, &rhs);
        assert!(res < 16.0 * backward, "{res} vs {backward}");
    }
}

#[test]
fn quadrature_of_simple_functions() {
    let g = interval(400);
    assert!((g.integrate(&Field::constant(&g, 1.0)).unwrap() - 1.0).abs() < 3e-3);
    assert!((g.integrate_fn(|x| x) - 0.5).abs() < 1e-3);
    assert!((g.integrate_fn(|_| 1.0) - 1.0).abs() < 1e-14);
    for shape in [
        Shape::Interval { length: 2.5 },
        Shape::Ball {
            dim: 2,
            radius: 1.0,
        },
        Shape::Ball {
            dim: 3,
            radius: 0.7,
        },
    ] {
        let g = GridDomain::build(shape, 400).unwrap();
        assert!((g.total_weight() / shape.volume() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn volumes_and_boundaries() {
    assert!(
        (Shape::Ball {
            dim: 2,
            radius: 2.0
        }
        .volume()
            - 4.0 * PI)
            .abs()
            < 1e-12
    );
    assert!(
        (Shape::Ball {
            dim: 3,
            radius: 1.0
        }
        .boundary_measure()
            - 4.0 * PI)
            .abs()
            < 1e-12
    );
    assert_eq!(Shape::Interval { length: 3.0 }.boundary_measure(), 2.0);
}

fn any_shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|length| Shape::Interval { length }),
        (2usize..=5, 0.2f64..5.0).prop_map(|(dim, radius)| Shape::Ball { dim, radius }),
    ]
}

fn shape_and_fields() -> impl Strategy<Value = (Shape, usize, Vec<f64>, Vec<f64>)> {
    (any_shape(), 4usize..60).prop_flat_map(|(shape, n)| {
        (
            Just(shape),
            Just(n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

proptest! {
    #[test]
    fn green_identity((shape, n, a, b) in shape_and_fields()) {
        let g = GridDomain::build(shape, n).unwrap();
        let u = Field::from_values(&g, a).unwrap();
        let v = Field::from_values(&g, b).unwrap();
        let lu = g.apply_laplacian(&u).unwrap();
        let lv = g.apply_laplacian(&v).unwrap();
        let left = g.inner(&v, &lu).unwrap();
        let right = g.inner(&u, &lv).unwrap();
        let scale = g.inner(&u, &u).unwrap().sqrt() * g.inner(&lv, &lv).unwrap().sqrt()
            + g.inner(&v, &v).unwrap().sqrt() * g.inner(&lu, &lu).unwrap().sqrt();
        prop_assert!((left - right).abs() <= 1e-10 * scale.max(1e-300));
    }

    #[test]
    fn laplacian_is_negative((shape, n, a, _b) in shape_and_fields()) {
        let g = GridDomain::build(shape, n).unwrap();
        let u = Field::from_values(&g, a).unwrap();
        let lu = g.apply_laplacian(&u).unwrap();
        let q = g.inner(&u, &lu).unwrap();
        let energy = g.dirichlet_energy(&u).unwrap();
        if u.sup_norm() > 0.0 {
            prop_assert!(q < 0.0);
        }
        prop_assert!((q + energy).abs() <= 1e-10 * energy.max(1e-300));
    }

    #[test]
    fn poisson_inverts_laplacian((shape, n, a, _b) in shape_and_fields()) {
        let g = GridDomain::build(shape, n).unwrap();
        let rhs = Field::from_values(&g, a).unwrap();
        let v = g.solve_poisson(&rhs).unwrap();
        let back = g.apply_laplacian(&v).unwrap().scale(-1.0);
        let scale = rhs.sup_norm() + back.sup_norm();
        prop_assert!(back.sup_distance(&rhs).unwrap() <= 1e-9 * (1.0 + scale));
    }

    #[test]
    fn poisson_is_monotone((shape, n, a, b) in shape_and_fields()) {
        let g = GridDomain::build(shape, n).unwrap();
        let lo: Vec<f64> = a.iter().map(|x| x.abs()).collect();
        let hi: Vec<f64> = lo.iter().zip(&b).map(|(x, y)| x + y.abs()).collect();
        let vlo = g.solve_poisson(&Field::from_values(&g, lo).unwrap()).unwrap();
        let vhi = g.solve_poisson(&Field::from_values(&g, hi).unwrap()).unwrap();
        for (x, y) in vlo.values().iter().zip(vhi.values()) {
            prop_assert!(*x >= 0.0 && y >= x);
        }
    }
}
