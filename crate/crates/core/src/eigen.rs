//! Principal Dirichlet eigenpairs and the dilation estimate of `ν_Ω`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridDomain, Shape};
use crate::linalg::Tridiagonal;
use crate::special::{first_bessel_zero, reduced_bessel};

/// Relative eigenvalue tolerance of the inverse iteration.
pub const EIGEN_TOL: f64 = 1e-12;
pub const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `∫ φ = 1`.
    IntegralOne,
    /// `max φ = 1`.
    MaxOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub mu: f64,
    pub phi: Field,
    pub normalization: Normalization,
    pub iterations: usize,
}

impl EigenPair {
    /// `‖Δ_h φ + μ φ‖_∞`.
    pub fn residual(&self) -> f64 {
        let grid = self.phi.grid();
        let lap = grid
            .apply_laplacian(&self.phi)
            .expect("eigenfunction lives on its own grid");
        lap.values()
            .iter()
            .zip(self.phi.values())
            .fold(0.0, |m, (l, p)| f64::max(m, (l + self.mu * p).abs()))
    }
}

/// Smallest eigenvalue of `-Δ_h` with its positive eigenfunction, `∫φ₁ = 1`.
pub fn principal_eigenpair(grid: &Arc<GridDomain>) -> Result<EigenPair> {
    let (mu, vec, iterations) = smallest_eigenpair(grid, grid.neg_laplacian(), 0.0, EIGEN_TOL)?;
    let mut phi = Field::from_values(grid, vec)?;
    let mass = grid.integrate(&phi)?;
    phi.values_mut().iter_mut().for_each(|v| *v /= mass);
    if let Some(i) = phi.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::NoConvergence {
            what: "positive principal eigenfunction",
            iterations: i,
        });
    }
    Ok(EigenPair {
        mu,
        phi,
        normalization: Normalization::IntegralOne,
        iterations,
    })
}

/// Inverse iteration on `A - shift I` for a matrix that is self-adjoint in
/// the grid inner product and whose shifted spectrum is positive. Returns
/// the Rayleigh quotient of `A`, an eigenvector with unit max norm and
/// nonnegative sum, and the iteration count.
pub(crate) fn smallest_eigenpair(
    grid: &GridDomain,
    a: &Tridiagonal,
    shift: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>, usize)> {
    let n = a.len();
    let shifted = a.affine(-shift, 1.0);
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut prev = f64::INFINITY;
    for k in 1..=EIGEN_MAX_ITER {
        shifted.solve(&x, &mut y);
        let norm = y.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let sign = if y.iter().sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = sign * yi / norm;
        }
        a.mul_vec(&x, &mut ax);
        let rq = grid.inner_values(&x, &ax) / grid.inner_values(&x, &x);
        let scale = rq.abs().max(shift.abs()).max(1.0);
        let residual = ax
            .iter()
            .zip(&x)
            .fold(0.0, |m: f64, (l, v)| m.max((l - rq * v).abs()));
        if (rq - prev).abs() <= tol * scale && residual <= 1e-9 * scale {
            return Ok((rq, x, k));
        }
        prev = rq;
    }
    Err(Error::NoConvergence {
        what: "inverse iteration",
        iterations: EIGEN_MAX_ITER,
    })
}

/// Uniform scan `a_min, …, a_max` over dilation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationScan {
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
}

impl Default for DilationScan {
    fn default() -> Self {
        Self {
            a_min: 0.05,
            a_max: 5.0,
            steps: 500,
        }
    }
}

impl DilationScan {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::EmptyScan);
        }
        if !(self.a_min > 0.0 && self.a_max >= self.a_min && self.a_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dilation scan needs 0 < a_min <= a_max, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if self.steps == 1 {
            return Ok(vec![self.a_min]);
        }
        let da = (self.a_max - self.a_min) / (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| self.a_min + k as f64 * da)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub nu_hat: f64,
    pub best_dilation: f64,
}

/// Product `μ_{Ω₁} s_{Ω₁}` for the enclosing domain dilated by `a`.
///
/// The interval `(0, L)` is enlarged symmetrically to `(-aL, (1+a)L)`; a
/// ball `B_R` to `B_{(1+a)R}`. `s_{Ω₁}` is the minimum over the original
/// closed domain of the max-one eigenfunction of the enlarged one, which
/// is attained on the original boundary.
pub fn dilation_product(shape: Shape, a: f64) -> f64 {
    match shape {
        Shape::Interval { length } => {
            let stretch = 1.0 + 2.0 * a;
            let mu = (std::f64::consts::PI / (length * stretch)).powi(2);
            mu * (std::f64::consts::PI * a / stretch).sin()
        }
        Shape::Ball { dim, radius } => {
            let nu = dim as f64 / 2.0 - 1.0;
            let j = first_bessel_zero(nu);
            let mu = (j / (radius * (1.0 + a))).powi(2);
            mu * reduced_bessel(nu, j / (1.0 + a))
        }
    }
}

/// Largest `μ_{Ω₁} s_{Ω₁}` over the scanned dilations; a lower estimate of
/// `ν_Ω`.
pub fn nu_lower_bound(shape: Shape, scan: DilationScan) -> Result<NuEstimate> {
    let mut best = NuEstimate {
        nu_hat: f64::NEG_INFINITY,
        best_dilation: f64::NAN,
    };
    for a in scan.points()? {
        let v = dilation_product(shape, a);
        if v > best.nu_hat {
            best = NuEstimate {
                nu_hat: v,
                best_dilation: a,
            };
        }
    }
    Ok(best)
}
