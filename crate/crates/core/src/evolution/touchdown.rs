//! Touchdown-time bounds and the checks that go with them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{evolve, EvolutionTrace, StepControls, TerminalStatus};
use crate::eigen::principal_eigenpair;
use crate::error::Result;
use crate::grid::{Field, GridDomain, Shape};
use crate::model::hypothesis;
use crate::problem::Problem;
use crate::stationary::Bound;

/// Upper bounds on the touchdown time from one initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchdownBounds {
    /// `H(E(0)) / ((λ - λ₁) δ₁)` with `λ₁ = μ₁ sup(s g) / δ₁`.
    pub eigenmode: Bound,
    /// `∫H(u0)φ₁ / ((λ - λ') ∫fφ₁)` with `λ' = μ₁ H(0) / ∫fφ₁`.
    pub gap_functional: Bound,
    /// The eigenmode bound on an inscribed subdomain.
    pub localized: Bound,
    pub lambda_eigenmode: f64,
    pub lambda_gap: f64,
    pub lambda_localized: Option<f64>,
    /// `E(0) = ∫ u0 φ₁`.
    pub energy0: f64,
    /// Extent of the inscribed subdomain (length or radius).
    pub subdomain_extent: Option<f64>,
}

impl TouchdownBounds {
    pub fn applicable(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        [
            ("eigenmode", &self.eigenmode),
            ("gap_functional", &self.gap_functional),
            ("localized", &self.localized),
        ]
        .into_iter()
        .filter_map(|(name, b)| b.value.map(|v| (name, v)))
    }
}

fn gated(
    ok: std::result::Result<(), String>,
    value: impl FnOnce() -> Result<f64>,
    note: &str,
) -> Result<Bound> {
    Ok(match ok {
        Ok(()) => Bound {
            value: Some(value()?),
            applicable: true,
            note: note.into(),
        },
        Err(why) => Bound {
            value: None,
            applicable: false,
            note: why,
        },
    })
}

/// Computes every touchdown bound, flagging the inapplicable ones.
/// `sub_fraction` sets the size of the inscribed subdomain relative to `Ω`.
pub fn touchdown_bounds(
    problem: &Problem,
    lambda: f64,
    u0: &Field,
    sub_fraction: f64,
) -> Result<TouchdownBounds> {
    let grid = problem.grid();
    let g = problem.gap();
    let hyp = problem.hypotheses();
    let stats = problem.forcing_stats();
    let eigen = problem.eigen();
    let sup = g.sup_s_g().value;
    let moment = problem.forcing_moment();
    let energy0 = grid.inner(u0, &eigen.phi)?;
    let h_phi: f64 = u0
        .values()
        .iter()
        .zip(eigen.phi.values())
        .zip(grid.weights())
        .map(|((&u, &p), &w)| Ok(w * p * g.gap_integral(u)?))
        .sum::<Result<f64>>()?;

    let lambda_eigenmode = eigen.mu * sup / stats.inf;
    let lambda_gap = eigen.mu * g.gap_integral(0.0)? / moment;

    let require = |names: &[&'static str]| hyp.require(names).map_err(|e| e.to_string());
    let eigen_ok = require(&[
        hypothesis::FORCING_NONNEGATIVE,
        hypothesis::FORCING_BOUNDED_BELOW,
        hypothesis::GAP_POSITIVE_NONINCREASING,
        hypothesis::RECIPROCAL_CONVEX,
    ])
    .and_then(|_| above(lambda, lambda_eigenmode));
    let eigenmode = gated(
        eigen_ok,
        || Ok(g.gap_integral(energy0)? / ((lambda - lambda_eigenmode) * stats.inf)),
        "eigenmode energy with Jensen",
    )?;

    let gap_ok = require(&[
        hypothesis::FORCING_NONNEGATIVE,
        hypothesis::GAP_POSITIVE_NONINCREASING,
    ])
    .and_then(|_| above(lambda, lambda_gap));
    let gap_functional = gated(
        gap_ok,
        || Ok(h_phi / ((lambda - lambda_gap) * moment)),
        "weighted gap integral",
    )?;

    let sub = inscribed(problem, u0, sub_fraction)?;
    let (localized, lambda_localized, subdomain_extent) = match sub {
        None => (
            Bound {
                value: None,
                applicable: false,
                note: format!("no inscribed subdomain at fraction {sub_fraction}"),
            },
            None,
            None,
        ),
        Some(sub) => {
            let lambda_r = sub.mu * sup / sub.delta;
            let ok = require(&[
                hypothesis::FORCING_NONNEGATIVE,
                hypothesis::GAP_POSITIVE_NONINCREASING,
                hypothesis::RECIPROCAL_CONVEX,
            ])
            .and_then(|_| {
                if sub.delta > 0.0 {
                    Ok(())
                } else {
                    Err(format!("inf f on the subdomain is {:e}", sub.delta))
                }
            })
            .and_then(|_| {
                if u0.min() >= 0.0 {
                    Ok(())
                } else {
                    Err("needs u0 ≥ 0".into())
                }
            })
            .and_then(|_| above(lambda, lambda_r));
            let bound = gated(
                ok,
                || Ok(g.gap_integral(sub.energy0)? / ((lambda - lambda_r) * sub.delta)),
                "eigenmode energy on an inscribed subdomain",
            )?;
            (bound, Some(lambda_r), Some(sub.extent))
        }
    };

    Ok(TouchdownBounds {
        eigenmode,
        gap_functional,
        localized,
        lambda_eigenmode,
        lambda_gap,
        lambda_localized,
        energy0,
        subdomain_extent,
    })
}

fn above(lambda: f64, threshold: f64) -> std::result::Result<(), String> {
    if lambda > threshold {
        Ok(())
    } else {
        Err(format!("needs λ > {threshold:.6e}, got {lambda:.6e}"))
    }
}

struct Subdomain {
    mu: f64,
    delta: f64,
    energy0: f64,
    extent: f64,
}

/// Centered subinterval or concentric ball whose nodes coincide with nodes
/// of the parent grid.
fn inscribed(problem: &Problem, u0: &Field, fraction: f64) -> Result<Option<Subdomain>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Ok(None);
    }
    let grid = problem.grid();
    let n = grid.len();
    let h = grid.spacing();
    let target = fraction * (n + 1) as f64 - 1.0;
    let (n_sub, offset) = match grid.shape() {
        Shape::Interval { .. } => {
            // Keep n - n_sub even so the subinterval is centered on nodes.
            let k = ((n as f64 - target) / 2.0).round() as usize;
            (n.saturating_sub(2 * k), k)
        }
        Shape::Ball { .. } => (target.round().max(0.0) as usize, 0),
    };
    if n_sub < crate::grid::MIN_NODES || n_sub >= n {
        return Ok(None);
    }
    let extent = (n_sub + 1) as f64 * h;
    let shape = match grid.shape() {
        Shape::Interval { .. } => Shape::Interval { length: extent },
        Shape::Ball { dim, .. } => Shape::Ball {
            dim,
            radius: extent,
        },
    };
    let sub: Arc<GridDomain> = GridDomain::build(shape, n_sub)?;
    let pair = principal_eigenpair(&sub)?;
    let f = problem.forcing();
    let x0 = offset as f64 * h;
    let delta = sub
        .nodes()
        .iter()
        .map(|&x| f.value(x + x0))
        .fold(f64::INFINITY, f64::min);
    let energy0 = sub
        .weights()
        .iter()
        .zip(pair.phi.values())
        .zip(&u0.values()[offset..offset + n_sub])
        .map(|((w, p), u)| w * p * u)
        .sum();
    Ok(Some(Subdomain {
        mu: pair.mu,
        delta,
        energy0,
        extent,
    }))
}

/// Observed touchdown together with the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchdownReport {
    pub bounds: TouchdownBounds,
    /// `[t_last_below, t_first_at]`, if touchdown was observed.
    pub bracket: Option<(f64, f64)>,
    pub status: TerminalStatus,
    /// Bounds with `t_first_at > bound (1 + slack)`.
    pub violated: Vec<String>,
    pub slack: f64,
}

impl TouchdownReport {
    pub fn dominated(&self) -> bool {
        self.bracket.is_some() && self.violated.is_empty()
    }
}

/// Evolves from `u0` until touchdown or `t_end` and compares the observed
/// time with each applicable bound.
pub fn touchdown_report(
    problem: &Problem,
    lambda: f64,
    u0: &Field,
    t_end: f64,
    controls: &StepControls,
    slack: f64,
) -> Result<(TouchdownReport, EvolutionTrace)> {
    let bounds = touchdown_bounds(problem, lambda, u0, 0.5)?;
    let trace = evolve(problem, lambda, u0, t_end, controls, None)?;
    let bracket = trace.touchdown();
    let violated = match bracket {
        Some((_, t_at)) => bounds
            .applicable()
            .filter(|(_, b)| t_at > b * (1.0 + slack))
            .map(|(name, _)| name.to_string())
            .collect(),
        None => Vec::new(),
    };
    Ok((
        TouchdownReport {
            bounds,
            bracket,
            status: trace.status,
            violated,
            slack,
        },
        trace,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    /// Largest `RHS - dE/dt - tol` over interior samples; positive means
    /// a violation.
    pub worst_violation: f64,
    /// Largest `RHS - dE/dt` with no tolerance.
    pub worst_raw: f64,
    pub samples_checked: usize,
    pub constant: f64,
    pub dt_ref: f64,
}

impl EnergyCheck {
    pub fn passed(&self) -> bool {
        self.worst_violation <= 0.0
    }
}

/// Checks `dE/dt ≥ -μ₁ E + λ δ₁ / g(E)` along a trace, with `dE/dt` from
/// centered differences on the (possibly nonuniform) sample times and
/// tolerance `C (dt_ref + h²)(1 + |RHS|)` per sample.
pub fn energy_inequality_check(
    trace: &EvolutionTrace,
    problem: &Problem,
    lambda: f64,
    constant: f64,
    dt_ref: f64,
) -> Result<EnergyCheck> {
    let mu = problem.eigen().mu;
    let delta = problem.forcing_stats().inf;
    let h2 = problem.grid().spacing().powi(2);
    let g = problem.gap();
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_raw = f64::NEG_INFINITY;
    let mut checked = 0;
    for w in trace.samples.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let de = (c.energy - a.energy) / (c.t - a.t);
        let rhs = -mu * b.energy + lambda * delta * g.reciprocal(b.energy)?;
        let tol = constant * (dt_ref + h2) * (1.0 + rhs.abs());
        worst_raw = worst_raw.max(rhs - de);
        worst_violation = worst_violation.max(rhs - de - tol);
        checked += 1;
    }
    Ok(EnergyCheck {
        worst_violation,
        worst_raw,
        samples_checked: checked,
        constant,
        dt_ref,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub level: f64,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub lambda: f64,
    pub status: TerminalStatus,
    pub crossings: Vec<LevelCrossing>,
    /// Running window maxima of `max u` never decrease.
    pub window_max_nondecreasing: bool,
    pub final_max: f64,
    /// `‖u(t_max) - v‖_∞` when a reference was given.
    pub final_distance: Option<f64>,
}

/// Evolves from `u ≡ 0` and reports which levels of `max u` are reached.
pub fn dichotomy_probe(
    problem: &Problem,
    lambda: f64,
    t_max: f64,
    levels: &[f64],
    controls: &StepControls,
    reference: Option<&Field>,
) -> Result<DichotomyReport> {
    let u0 = Field::zeros(problem.grid());
    let trace = evolve(problem, lambda, &u0, t_max, controls, reference)?;
    let mut crossings: Vec<LevelCrossing> = levels
        .iter()
        .map(|&level| LevelCrossing {
            level,
            time: trace.samples.iter().find(|s| s.max_u >= level).map(|s| s.t),
        })
        .collect();
    if let Some((_, t_at)) = trace.touchdown() {
        for c in crossings.iter_mut().filter(|c| c.time.is_none()) {
            c.time = Some(t_at);
        }
    }
    let window = 10;
    let maxima: Vec<f64> = trace
        .samples
        .chunks(window)
        .map(|c| c.iter().map(|s| s.max_u).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let last = trace.samples.last().expect("trace has an initial sample");
    Ok(DichotomyReport {
        lambda,
        status: trace.status,
        crossings,
        window_max_nondecreasing: maxima.windows(2).all(|w| w[1] >= w[0]),
        final_max: last.max_u,
        final_distance: last.dist_to_ref,
    })
}
