//! Uniform finite-difference grids on an interval `(0, L)` and on a radially
//! symmetric ball `B_R ⊂ ℝⁿ`.
//!
//! Both shapes share one conservative three-point operator
//!
//! ```text
//! (Δ_h u)_i = [c_{i+1} (u_{i+1} - u_i) - c_i (u_i - u_{i-1})] / w_i
//! ```
//!
//! where `c_k` is the conductance of the face between node `k-1` and node
//! `k` and `w_i` is the measure of the cell around node `i`. On the interval
//! `c = 1/h` and `w = h`, which is the usual `(u_{i-1} - 2u_i + u_{i+1})/h²`.
//! On the ball the face at `r = h/2` carries the `r^{n-1}` Jacobian, the
//! face at the origin has zero area (the symmetry condition `u'(0) = 0`),
//! and `w_i` is the exact shell volume of the cell, so the first cell is the
//! ball of radius `3h/2`. That stencil reproduces `Δ r² = 2n` exactly at
//! every node, including the one next to the origin.
//!
//! Because the matrix of `w_i (Δ_h u)_i` is symmetric, `Δ_h` is self-adjoint
//! in the weighted inner product used by [`GridDomain::integrate`].

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// Minimum number of interior nodes.
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    Interval { length: f64 },
    Ball { dim: usize, radius: f64 },
}

impl Shape {
    /// `L` or `R`.
    pub fn extent(&self) -> f64 {
        match *self {
            Shape::Interval { length } => length,
            Shape::Ball { radius, .. } => radius,
        }
    }

    /// Spatial dimension; 1 for the interval.
    pub fn dim(&self) -> usize {
        match *self {
            Shape::Interval { .. } => 1,
            Shape::Ball { dim, .. } => dim,
        }
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Interval { length } => length,
            Shape::Ball { dim, radius } => {
                unit_sphere_area(dim) * radius.powi(dim as i32) / dim as f64
            }
        }
    }

    /// `|∂Ω|`; two points on the interval.
    pub fn boundary_measure(&self) -> f64 {
        match *self {
            Shape::Interval { .. } => 2.0,
            Shape::Ball { dim, radius } => unit_sphere_area(dim) * radius.powi(dim as i32 - 1),
        }
    }

    /// Center of symmetry.
    pub fn center(&self) -> f64 {
        match *self {
            Shape::Interval { length } => 0.5 * length,
            Shape::Ball { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Shape::Interval { length } if !(length.is_finite() && length > 0.0) => Err(
                Error::InvalidGrid(format!("interval length must be positive, got {length}")),
            ),
            Shape::Ball { radius, .. } if !(radius.is_finite() && radius > 0.0) => Err(
                Error::InvalidGrid(format!("ball radius must be positive, got {radius}")),
            ),
            Shape::Ball { dim, .. } if dim < 2 => Err(Error::InvalidGrid(format!(
                "ball dimension must be at least 2, got {dim}"
            ))),
            _ => Ok(()),
        }
    }
}

/// `ω_{n-1} = 2 π^{n/2} / Γ(n/2)`, the area of the unit sphere in ℝⁿ.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

/// `Γ(n/2)` for a positive integer `n`.
fn gamma_half_integer(n: usize) -> f64 {
    let (mut x, mut acc) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    let target = n as f64 / 2.0;
    while x < target {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// An immutable discretization of `Ω`.
#[derive(Debug, Clone)]
pub struct GridDomain {
    shape: Shape,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    boundary_weight: f64,
    conductance: Vec<f64>,
    neg_laplacian: Tridiagonal,
}

impl PartialEq for GridDomain {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.n == other.n
    }
}

impl GridDomain {
    /// Uniform grid with `n` interior nodes, spacing `extent / (n + 1)`.
    pub fn build(shape: Shape, n: usize) -> Result<Arc<Self>> {
        shape.validate()?;
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} interior nodes, got {n}"
            )));
        }
        let extent = shape.extent();
        let h = extent / (n + 1) as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();

        // Faces k = 0..=n; face k separates node k-1 from node k, with the
        // ghost nodes -1 and n carrying the Dirichlet value (or the origin).
        let (weights, conductance, boundary_weight) = match shape {
            Shape::Interval { .. } => (vec![h; n], vec![1.0 / h; n + 1], h),
            Shape::Ball { dim, .. } => {
                let omega = unit_sphere_area(dim);
                let d = dim as f64;
                let face = |k: usize| -> f64 {
                    if k == 0 {
                        0.0
                    } else {
                        (k as f64 + 0.5) * h
                    }
                };
                let shell = |a: f64, b: f64| omega * (b.powi(dim as i32) - a.powi(dim as i32)) / d;
                let weights = (0..n).map(|i| shell(face(i), face(i + 1))).collect();
                let conductance = (0..=n)
                    .map(|k| {
                        if k == 0 {
                            0.0
                        } else {
                            omega * face(k).powi(dim as i32 - 1) / h
                        }
                    })
                    .collect();
                (weights, conductance, shell(face(n), extent))
            }
        };

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let (cl, cr) = (conductance[i], conductance[i + 1]);
            diag[i] = (cl + cr) / weights[i];
            if i > 0 {
                lower[i] = -cl / weights[i];
            }
            if i + 1 < n {
                upper[i] = -cr / weights[i];
            }
        }

        Ok(Arc::new(Self {
            shape,
            n,
            h,
            nodes,
            weights,
            boundary_weight,
            conductance,
            neg_laplacian: Tridiagonal { lower, diag, upper },
        }))
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Number of interior nodes `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Node coordinates `x_i` (interval) or radii `r_i` (ball).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights of the interior nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Measure of the cells that touch `∂Ω` and carry no unknown.
    pub fn boundary_weight(&self) -> f64 {
        self.boundary_weight
    }

    /// `Σ w_i` plus the boundary cells; equals `|Ω|` up to rounding.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.boundary_weight
    }

    pub fn volume(&self) -> f64 {
        self.shape.volume()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.shape.boundary_measure()
    }

    /// The matrix of `-Δ_h`.
    pub fn neg_laplacian(&self) -> &Tridiagonal {
        &self.neg_laplacian
    }

    fn check(&self, u: &Field) -> Result<()> {
        if self.same_as(&u.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn same_as(&self, other: &GridDomain) -> bool {
        std::ptr::eq(self, other) || self == other
    }

    /// `Δ_h u` with homogeneous Dirichlet data.
    pub fn apply_laplacian(self: &Arc<Self>, u: &Field) -> Result<Field> {
        self.check(u)?;
        let mut out = vec![0.0; self.n];
        self.neg_laplacian.mul_vec(&u.values, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(Field::new_unchecked(self, out))
    }

    /// Solves `-Δ_h v = rhs` with `v = 0` on the boundary.
    pub fn solve_poisson(self: &Arc<Self>, rhs: &Field) -> Result<Field> {
        self.check(rhs)?;
        let mut out = vec![0.0; self.n];
        self.neg_laplacian.solve(&rhs.values, &mut out);
        Ok(Field::new_unchecked(self, out))
    }

    /// `Σ w_i u_i`.
    pub fn integrate(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.integrate_values(&u.values))
    }

    pub(crate) fn integrate_values(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, v)| w * v).sum()
    }

    /// Integral of a function that need not vanish on `∂Ω`, using the
    /// boundary cells as well (trapezoid rule on the interval).
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        let interior: f64 = self
            .weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, &x)| w * f(x))
            .sum();
        let boundary = match self.shape {
            Shape::Interval { length } => 0.5 * self.h * (f(0.0) + f(length)),
            Shape::Ball { radius, .. } => self.boundary_weight * f(radius),
        };
        interior + boundary
    }

    /// `∫ |∇_h u|²` as a sum over faces, including the two boundary faces.
    pub fn dirichlet_energy(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        Ok(self.dirichlet_energy_values(&u.values))
    }

    pub(crate) fn dirichlet_energy_values(&self, u: &[f64]) -> f64 {
        let at = |k: isize| -> f64 {
            if k < 0 || k as usize >= self.n {
                0.0
            } else {
                u[k as usize]
            }
        };
        (0..=self.n)
            .map(|k| {
                let jump = at(k as isize) - at(k as isize - 1);
                self.conductance[k] * jump * jump
            })
            .sum()
    }

    /// `<u, v>` in the quadrature inner product.
    pub fn inner(&self, u: &Field, v: &Field) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.inner_values(&u.values, &v.values))
    }

    pub(crate) fn inner_values(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }
}

/// Nodal values of a function that vanishes on `∂Ω`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<GridDomain>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values
    }
}

impl Field {
    pub(crate) fn new_unchecked(grid: &Arc<GridDomain>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn from_values(grid: &Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self::new_unchecked(grid, values))
    }

    pub fn zeros(grid: &Arc<GridDomain>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Constant interior values; the boundary value stays 0.
    pub fn constant(grid: &Arc<GridDomain>, c: f64) -> Self {
        Self::new_unchecked(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: &Arc<GridDomain>, f: impl Fn(f64) -> f64) -> Self {
        Self::new_unchecked(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::new_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check(other)?;
        Ok(Self::new_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `‖self - other‖_∞`.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// CSV with a `coordinate,value` header and one row per interior node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "coordinate,value")?;
        for (x, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(w, "{},{}", sig17(*x), sig17(*v))?;
        }
        Ok(())
    }
}

/// A float with 17 significant digits in scientific notation.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
