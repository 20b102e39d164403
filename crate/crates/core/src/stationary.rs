//! Minimal stationary solutions, their stability, the pull-in voltage and
//! its analytic bounds.

use serde::{Deserialize, Serialize};

use crate::eigen::{nu_lower_bound, smallest_eigenpair, DilationScan, NuEstimate};
use crate::error::{Error, Result};
use crate::grid::{Field, Shape};
use crate::model::hypothesis;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    /// Stop once `‖v_k - v_{k-1}‖_∞` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Give up once any node reaches `1 - guard`.
    pub guard: f64,
    /// Iterations after which growing increments count as divergence.
    pub stall_after: usize,
    /// Consecutive growing increments that count as divergence.
    pub stall_run: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            guard: 1e-9,
            stall_after: 100,
            stall_run: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterationStatus {
    Converged,
    /// An iterate reached the guard band below 1.
    ReachedOne,
    /// Increments kept growing.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub increment: f64,
    pub max_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub status: IterationStatus,
    /// Last iterate.
    pub v: Field,
    pub iterations: usize,
    pub increment: f64,
    /// `‖Δ_h v + λ f / g(v)‖_∞`; NaN unless converged.
    pub residual: f64,
    /// Smallest pointwise change `min_i (v_k - v_{k-1})_i` over all steps.
    pub min_step: f64,
    pub supersolution: Option<Field>,
    pub trace: Vec<IterationRecord>,
}

impl StationaryResult {
    pub fn converged(&self) -> bool {
        self.status == IterationStatus::Converged
    }

    /// The residual bound `1e-7 (1 + λ‖f‖/g(max v))`.
    pub fn residual_tolerance(&self, problem: &Problem, lambda: f64) -> f64 {
        let gmax = problem.gap().g(self.v.max()).unwrap_or(f64::NAN);
        1e-7 * (1.0 + lambda * problem.forcing_stats().sup_abs / gmax)
    }
}

/// Monotone iteration `v₀ = 0`, `-Δ_h v_k = λ f / g(v_{k-1})`.
///
/// With a supersolution `ψ`, checks `-Δ_h ψ ≥ λ f / g(ψ)` at every node and
/// `v_k ≤ ψ` after every step.
pub fn minimal_solution(
    problem: &Problem,
    lambda: f64,
    supersolution: Option<&Field>,
    opts: &IterationOptions,
) -> Result<StationaryResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "λ must be finite and nonnegative, got {lambda}"
        )));
    }
    problem.hypotheses().require(&[
        hypothesis::FORCING_NONNEGATIVE,
        hypothesis::GAP_POSITIVE_NONINCREASING,
    ])?;
    let grid = problem.grid();
    if let Some(psi) = supersolution {
        check_supersolution(problem, lambda, psi)?;
    }

    let n = grid.len();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut trace = Vec::new();
    let mut min_step = f64::INFINITY;
    let mut prev_inc = f64::INFINITY;
    let mut growing = 0usize;
    let mut status = IterationStatus::MaxIterations;
    let mut increment = f64::INFINITY;
    let mut iterations = 0;
    let ceiling = 1.0 - opts.guard;

    for k in 1..=opts.max_iter {
        iterations = k;
        problem.reaction(lambda, &v, &mut rhs)?;
        grid.neg_laplacian().solve(&rhs, &mut next);
        increment = 0.0;
        let mut step_min = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for (a, b) in next.iter().zip(&v) {
            let d = a - b;
            increment = increment.max(d.abs());
            step_min = step_min.min(d);
            max_v = max_v.max(*a);
        }
        min_step = min_step.min(step_min);
        std::mem::swap(&mut v, &mut next);
        trace.push(IterationRecord {
            k,
            increment,
            max_v,
        });

        if let Some(psi) = supersolution {
            if let Some((i, (vi, pi))) = v
                .iter()
                .zip(psi.values())
                .enumerate()
                .find(|(_, (vi, pi))| **vi > **pi + 1e-12 * (1.0 + pi.abs()))
            {
                return Err(Error::CertificateViolation {
                    node: i,
                    detail: format!("iterate {k} exceeds the supersolution: {vi} > {pi}"),
                });
            }
        }
        if max_v >= ceiling {
            status = IterationStatus::ReachedOne;
            break;
        }
        if increment < opts.tol {
            status = IterationStatus::Converged;
            break;
        }
        if k > opts.stall_after && increment > prev_inc {
            growing += 1;
            if growing >= opts.stall_run {
                status = IterationStatus::Stalled;
                break;
            }
        } else {
            growing = 0;
        }
        prev_inc = increment;
    }

    let v = Field::from_values(grid, v)?;
    let residual = if status == IterationStatus::Converged {
        stationary_residual(problem, lambda, &v)?
    } else {
        f64::NAN
    };
    Ok(StationaryResult {
        status,
        v,
        iterations,
        increment,
        residual,
        min_step,
        supersolution: supersolution.cloned(),
        trace,
    })
}

/// `‖Δ_h v + λ f / g(v)‖_∞`.
pub fn stationary_residual(problem: &Problem, lambda: f64, v: &Field) -> Result<f64> {
    let lap = problem.grid().apply_laplacian(v)?;
    let mut reaction = vec![0.0; v.len()];
    problem.reaction(lambda, v.values(), &mut reaction)?;
    Ok(lap
        .values()
        .iter()
        .zip(&reaction)
        .fold(0.0, |m, (l, r)| f64::max(m, (l + r).abs())))
}

fn check_supersolution(problem: &Problem, lambda: f64, psi: &Field) -> Result<()> {
    let grid = problem.grid();
    if let Some(i) = psi.values().iter().position(|&p| !(p < 1.0)) {
        return Err(Error::CertificateViolation {
            node: i,
            detail: format!("supersolution reaches {} ≥ 1", psi.values()[i]),
        });
    }
    let lap = grid.apply_laplacian(psi)?;
    let mut reaction = vec![0.0; psi.len()];
    problem.reaction(lambda, psi.values(), &mut reaction)?;
    for (i, (l, r)) in lap.values().iter().zip(&reaction).enumerate() {
        let defect = -l - r;
        if defect < -1e-10 * (1.0 + r.abs()) {
            return Err(Error::CertificateViolation {
                node: i,
                detail: format!("-Δψ - λf/g(ψ) = {defect:e} < 0"),
            });
        }
    }
    Ok(())
}

/// Smallest eigenvalue of `-Δ_h + λ f g'(v) / g(v)²`.
pub fn linearized_eigenvalue(problem: &Problem, lambda: f64, v: &Field) -> Result<f64> {
    let grid = problem.grid();
    if !v.grid().as_ref().eq(grid.as_ref()) {
        return Err(Error::GridMismatch);
    }
    let potential = v
        .values()
        .iter()
        .zip(problem.forcing_values().values())
        .map(|(&vi, &fi)| Ok(-lambda * fi * problem.gap().reciprocal_slope(vi)?))
        .collect::<Result<Vec<f64>>>()?;
    let a = grid.neg_laplacian().with_diagonal(&potential);
    let shift = a.gershgorin_lower() - 1.0;
    let (mu, _, _) = smallest_eigenpair(grid, &a, shift, 1e-10)?;
    Ok(mu)
}

/// An analytic bound with its applicability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: Option<f64>,
    pub applicable: bool,
    pub note: String,
}

impl Bound {
    fn holds(value: f64, note: impl Into<String>) -> Self {
        Self {
            value: Some(value),
            applicable: true,
            note: note.into(),
        }
    }

    fn not_applicable(note: impl Into<String>) -> Self {
        Self {
            value: None,
            applicable: false,
            note: note.into(),
        }
    }
}

/// Analytic bounds on the pull-in voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    /// `ν̂ sup s g(s) / max f`.
    pub lower_dilation: Bound,
    /// `μ₁ g(0) / ∫ f φ₁`.
    pub upper_eigen: Bound,
    /// `μ₁ H(0) / ∫ f φ₁`.
    pub upper_energy: Bound,
    /// Pohozaev bound for balls.
    pub pohozaev: Bound,
    pub nu: NuEstimate,
    pub mu1: f64,
    pub forcing_moment: f64,
    pub sup_s_g: f64,
    pub gap_integral_zero: f64,
}

impl BoundsRecord {
    /// Smallest applicable upper bound.
    pub fn best_upper(&self) -> f64 {
        [&self.upper_eigen, &self.upper_energy, &self.pohozaev]
            .iter()
            .filter_map(|b| b.value)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn lambda_bounds(problem: &Problem, scan: DilationScan) -> Result<BoundsRecord> {
    let g = problem.gap();
    let stats = problem.forcing_stats();
    let grid = problem.grid();
    let shape = grid.shape();
    let mu1 = problem.eigen().mu;
    let moment = problem.forcing_moment();
    let nu = nu_lower_bound(shape, scan)?;
    let sup = g.sup_s_g().value;
    let g0 = g.g(0.0)?;
    let h0 = g.gap_integral(0.0)?;
    let basic = problem.hypotheses().require(&[
        hypothesis::FORCING_NONNEGATIVE,
        hypothesis::GAP_POSITIVE_NONINCREASING,
    ]);

    let (lower_dilation, upper_eigen, upper_energy) = match basic {
        Err(e) => {
            let note = e.to_string();
            (
                Bound::not_applicable(note.clone()),
                Bound::not_applicable(note.clone()),
                Bound::not_applicable(note),
            )
        }
        Ok(()) => (
            Bound::holds(
                nu.nu_hat * sup / stats.max,
                "dilation scan of enclosing domains",
            ),
            Bound::holds(mu1 * g0 / moment, "principal eigenfunction test"),
            Bound::holds(mu1 * h0 / moment, "energy with gap integral"),
        ),
    };

    let pohozaev = match shape {
        Shape::Interval { .. } => Bound::not_applicable("needs a ball in dimension n ≥ 2"),
        Shape::Ball { dim, radius } => {
            if stats.inf <= 0.0 {
                Bound::not_applicable(format!("needs inf f > 0, got {:e}", stats.inf))
            } else {
                // |∂Ω| / (b |Ω|) with b = R on the ball.
                let geometry = shape.boundary_measure() / (radius * shape.volume());
                let value = ((dim as f64 + 2.0) * stats.sup_abs + 2.0 * stats.sup_x_dot_grad)
                    * geometry
                    / (stats.inf * stats.inf)
                    * g0;
                Bound::holds(value, "Pohozaev identity on the ball")
            }
        }
    };

    Ok(BoundsRecord {
        lower_dilation,
        upper_eigen,
        upper_energy,
        pohozaev,
        nu,
        mu1,
        forcing_moment: moment,
        sup_s_g: sup,
        gap_integral_zero: h0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullInEstimate {
    /// Largest λ tried at which the iteration converged.
    pub lambda_lo: f64,
    /// Smallest λ tried at which it did not.
    pub lambda_hi: f64,
    pub bounds: BoundsRecord,
    pub bisections: usize,
    /// Every λ tried, in order, with whether the iteration converged.
    pub trials: Vec<(f64, bool)>,
}

impl PullInEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }
}

/// Bisection for the largest λ at which the monotone iteration converges,
/// started from `[0, 1.05 · upper_energy]`. Stops when the bracket width is
/// below `tol_rel · lambda_hi`.
pub fn pull_in_voltage(
    problem: &Problem,
    tol_rel: f64,
    opts: &IterationOptions,
) -> Result<PullInEstimate> {
    if !(tol_rel > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bisection tolerance must be positive, got {tol_rel}"
        )));
    }
    let bounds = lambda_bounds(problem, DilationScan::default())?;
    let top = bounds.upper_energy.value.ok_or_else(|| Error::Hypothesis {
        name: hypothesis::FORCING_NONNEGATIVE,
        detail: bounds.upper_energy.note.clone(),
    })? * 1.05;
    let solves = |lambda: f64| -> Result<bool> {
        Ok(minimal_solution(problem, lambda, None, opts)?.converged())
    };
    if solves(top)? {
        return Err(Error::BracketInconsistent { lambda: top });
    }
    let mut trials = vec![(top, false)];
    let (mut lo, mut hi) = (0.0, top);
    let mut bisections = 0;
    while hi - lo > tol_rel * hi {
        let mid = 0.5 * (lo + hi);
        let ok = solves(mid)?;
        trials.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
        bisections += 1;
    }
    Ok(PullInEstimate {
        lambda_lo: lo,
        lambda_hi: hi,
        bounds,
        bisections,
        trials,
    })
}

/// Pointwise comparison of two minimal solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    pub lower: Field,
    pub upper: Field,
    /// `min_i (upper_i - lower_i)`.
    pub min_gap: f64,
    pub min_gap_node: usize,
    pub strict: bool,
}

/// Solves for the minimal solutions of two problems expected to be ordered
/// (smaller `f` or larger `g` in `lower`). Fails on any node where the order
/// breaks, and, when `expect_strict`, on any node where it is not strict.
pub fn compare_minimal_solutions(
    lower: &Problem,
    upper: &Problem,
    lambda: f64,
    expect_strict: bool,
    opts: &IterationOptions,
) -> Result<OrderingReport> {
    let a = minimal_solution(lower, lambda, None, opts)?;
    let b = minimal_solution(upper, lambda, None, opts)?;
    for r in [&a, &b] {
        if !r.converged() {
            return Err(Error::NoConvergence {
                what: "minimal solution",
                iterations: r.iterations,
            });
        }
    }
    let (mut min_gap, mut node) = (f64::INFINITY, 0);
    for (i, (x, y)) in a.v.values().iter().zip(b.v.values()).enumerate() {
        let gap = y - x;
        if gap < min_gap {
            min_gap = gap;
            node = i;
        }
    }
    let strict = min_gap > 0.0;
    if min_gap < 0.0 || (expect_strict && !strict) {
        return Err(Error::OrderingViolation {
            node,
            t: 0.0,
            low: a.v.values()[node],
            high: b.v.values()[node],
        });
    }
    Ok(OrderingReport {
        lower: a.v,
        upper: b.v,
        min_gap,
        min_gap_node: node,
        strict,
    })
}
