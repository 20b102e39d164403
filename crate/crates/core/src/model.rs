//! Gap nonlinearities `g`, forcing profiles `f`, and the scalar functionals
//! built from them.
//!
//! Every gap family here is analytic, so the sign conditions the solvers rely
//! on are certified per family rather than sampled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridDomain};

/// The gap function `g` of the reaction term `λ f(x) / g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonlinearityProfile {
    /// `g(s) = (1 - s)^p`, `p > 0`.
    PowerGap { p: f64 },
    /// `g(s) = e^{-s}`.
    ExpGap,
    /// `g ≡ 1`; the linear problem.
    ConstantOne,
}

impl NonlinearityProfile {
    pub fn power_gap(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "power-gap exponent must be positive and finite, got {p}"
            )));
        }
        Ok(Self::PowerGap { p })
    }

    fn check(s: f64) -> Result<()> {
        if s < 1.0 {
            Ok(())
        } else {
            Err(Error::GapDomain { s })
        }
    }

    /// `g(s)`; any `s >= 1` (or NaN) is rejected.
    pub fn g(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(match *self {
            Self::PowerGap { p } => pow_gap(1.0 - s, p),
            Self::ExpGap => (-s).exp(),
            Self::ConstantOne => 1.0,
        })
    }

    /// `g'(s)`.
    pub fn dg(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(match *self {
            Self::PowerGap { p } => -p * pow_gap(1.0 - s, p - 1.0),
            Self::ExpGap => -(-s).exp(),
            Self::ConstantOne => 0.0,
        })
    }

    /// `1 / g(s)`.
    pub fn reciprocal(&self, s: f64) -> Result<f64> {
        Ok(1.0 / self.g(s)?)
    }

    /// `(1/g)'(s) = -g'(s) / g(s)^2`, nonnegative for every supported family.
    pub fn reciprocal_slope(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(match *self {
            Self::PowerGap { p } => p / pow_gap(1.0 - s, p + 1.0),
            Self::ExpGap => s.exp(),
            Self::ConstantOne => 0.0,
        })
    }

    /// `(1/g)''(s)`.
    pub fn reciprocal_curvature(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(match *self {
            Self::PowerGap { p } => p * (p + 1.0) / pow_gap(1.0 - s, p + 2.0),
            Self::ExpGap => s.exp(),
            Self::ConstantOne => 0.0,
        })
    }

    /// Divided difference `((1/g)(b) - (1/g)(a)) / (b - a)`, evaluated without
    /// cancellation when `a` and `b` nearly coincide. Never negative.
    pub fn reciprocal_divided_difference(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Self::check(hi)?;
        let width = hi - lo;
        if width <= 1e-6 * (1.0 - hi) {
            // Midpoint slope; error is O(width^2) relative.
            return self.reciprocal_slope(0.5 * (lo + hi));
        }
        let dd = (self.reciprocal(hi)? - self.reciprocal(lo)?) / width;
        Ok(dd.max(0.0))
    }

    /// Positivity and monotonicity of `g` on `s < 1`; holds for every family.
    pub fn is_positive_nonincreasing(&self) -> bool {
        match *self {
            Self::PowerGap { p } => p > 0.0,
            Self::ExpGap | Self::ConstantOne => true,
        }
    }

    /// Analytic certificate for `(1/g)'' >= 0` on `s < 1`.
    ///
    /// Power: `p(p+1)(1-s)^{-p-2} > 0`. Exp: `e^s > 0`. Constant: `0`.
    pub fn reciprocal_is_convex(&self) -> bool {
        match *self {
            Self::PowerGap { p } => p > 0.0,
            Self::ExpGap | Self::ConstantOne => true,
        }
    }

    /// `g(s) -> 0` as `s -> 1`.
    pub fn vanishes_at_one(&self) -> bool {
        matches!(self, Self::PowerGap { .. })
    }

    /// `sup_{s <= a} (1/g)'(s) < ∞` for every `a < 1`.
    pub fn reciprocal_slope_bounded_below_one(&self) -> bool {
        true
    }

    /// `H(v) = ∫_v^1 g(s) ds` in closed form.
    pub fn gap_integral(&self, v: f64) -> Result<f64> {
        Self::check(v)?;
        Ok(match *self {
            Self::PowerGap { p } => pow_gap(1.0 - v, p + 1.0) / (p + 1.0),
            Self::ExpGap => (-v).exp() - (-1.0f64).exp(),
            Self::ConstantOne => 1.0 - v,
        })
    }

    /// `sup_{0 <= s <= 1} s g(s)` and its maximizer.
    pub fn sup_s_g(&self) -> SupPoint {
        match *self {
            Self::PowerGap { p } => {
                let s = 1.0 / (p + 1.0);
                SupPoint {
                    argmax: s,
                    value: s * pow_gap(1.0 - s, p),
                }
            }
            _ => {
                // s g(s) extended continuously to s = 1.
                let h = |s: f64| {
                    if s >= 1.0 {
                        match *self {
                            Self::ExpGap => (-1.0f64).exp(),
                            _ => 1.0,
                        }
                    } else {
                        s * self.g(s).unwrap_or(0.0)
                    }
                };
                let argmax = golden_section_max(h, 0.0, 1.0, 1e-10);
                SupPoint {
                    argmax,
                    value: h(argmax),
                }
            }
        }
    }
}

/// `x^p` for `x >= 0`, using exact products for the common small exponents.
fn pow_gap(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p == 3.0 {
        x * x * x
    } else {
        x.powf(p)
    }
}

/// Maximizer of a unimodal function on `[a, b]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // Endpoints win when the maximum sits on the boundary.
    let mid = 0.5 * (a + b);
    [mid, a, b]
        .into_iter()
        .fold(mid, |best, s| if f(s) > f(best) { s } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupPoint {
    pub argmax: f64,
    pub value: f64,
}

/// Spatial profile `f >= 0` of the applied field.
///
/// Coordinates are `x` on an interval and the radius `r` on a ball, so every
/// profile on a ball is radial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ForcingProfile {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-((x - center) / width)^2)`.
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `Σ_k coeffs[k] * |x - center|^k`.
    Polynomial {
        coeffs: Vec<f64>,
        center: f64,
    },
}

impl ForcingProfile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn bump(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "bump width must be positive, got {width}"
            )));
        }
        Ok(Self::Bump {
            amplitude,
            center,
            width,
        })
    }

    pub fn polynomial(coeffs: Vec<f64>, center: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidProfile(
                "polynomial forcing needs at least one coefficient".into(),
            ));
        }
        Ok(Self::Polynomial { coeffs, center })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Bump {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                amplitude * (-z * z).exp()
            }
            Self::Polynomial { coeffs, center } => {
                let d = (x - center).abs();
                coeffs.iter().rev().fold(0.0, |acc, c| acc * d + c)
            }
        }
    }

    /// `x · ∇f(x)`; on a ball this is `r f'(r)`.
    pub fn x_dot_grad(&self, x: f64) -> f64 {
        let slope = match self {
            Self::Constant { .. } => 0.0,
            Self::Bump {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                -2.0 * z / width * amplitude * (-z * z).exp()
            }
            Self::Polynomial { coeffs, center } => {
                let d = x - center;
                let sign = if d < 0.0 { -1.0 } else { 1.0 };
                let ad = d.abs();
                let deriv = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * ad + k as f64 * c);
                sign * deriv
            }
        };
        x * slope
    }

    /// Nodal samples of `f`.
    pub fn sample(&self, grid: &std::sync::Arc<GridDomain>) -> Field {
        Field::from_fn(grid, |x| self.value(x))
    }

    /// `δ₁ = inf f`, `‖f‖_∞` and `b₁ = sup |x·∇f|`, taken over the grid nodes.
    pub fn stats(&self, grid: &GridDomain) -> ForcingStats {
        let mut stats = ForcingStats {
            inf: f64::INFINITY,
            sup_abs: 0.0,
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
            sup_x_dot_grad: 0.0,
        };
        for &x in grid.nodes() {
            let v = self.value(x);
            stats.inf = stats.inf.min(v);
            stats.min = stats.min.min(v);
            stats.max = stats.max.max(v);
            stats.sup_abs = stats.sup_abs.max(v.abs());
            stats.sup_x_dot_grad = stats.sup_x_dot_grad.max(self.x_dot_grad(x).abs());
        }
        stats
    }
}

/// Grid-level extremes of a forcing profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingStats {
    /// `δ₁`.
    pub inf: f64,
    /// `‖f‖_∞`.
    pub sup_abs: f64,
    pub max: f64,
    pub min: f64,
    /// `b₁`.
    pub sup_x_dot_grad: f64,
}

/// Names of the checked hypotheses.
pub mod hypothesis {
    pub const FORCING_NONNEGATIVE: &str = "forcing-nonnegative-nontrivial";
    pub const GAP_POSITIVE_NONINCREASING: &str = "gap-positive-nonincreasing";
    pub const RECIPROCAL_CONVEX: &str = "reciprocal-gap-convex";
    pub const RECIPROCAL_SLOPE_BOUNDED: &str = "reciprocal-slope-bounded";
    pub const GAP_VANISHES_AT_ONE: &str = "gap-vanishes-at-one";
    pub const FORCING_BOUNDED_BELOW: &str = "forcing-bounded-below";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisItem {
    pub name: String,
    pub passed: bool,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub items: Vec<HypothesisItem>,
}

impl HypothesisReport {
    pub fn passed(&self, name: &str) -> bool {
        self.items.iter().any(|i| i.name == name && i.passed)
    }

    /// Fails with the first listed hypothesis that does not hold.
    pub fn require(&self, names: &[&'static str]) -> Result<()> {
        for &name in names {
            if !self.passed(name) {
                let detail = self
                    .items
                    .iter()
                    .find(|i| i.name == name)
                    .map(|i| i.witness.clone())
                    .unwrap_or_else(|| "not checked".into());
                return Err(Error::Hypothesis { name, detail });
            }
        }
        Ok(())
    }
}

/// Evaluates every structural hypothesis on `g` and on `f` over the grid nodes.
pub fn check_hypotheses(
    g: &NonlinearityProfile,
    f: &ForcingProfile,
    grid: &GridDomain,
) -> HypothesisReport {
    use hypothesis::*;
    let stats = f.stats(grid);
    let mut items = Vec::with_capacity(6);

    let f_ok = stats.min >= 0.0 && stats.max > 0.0;
    let f_witness = if stats.max == 0.0 && stats.min == 0.0 {
        "f ≡ 0".to_string()
    } else {
        format!("min f = {:.6e}, max f = {:.6e}", stats.min, stats.max)
    };
    items.push(HypothesisItem {
        name: FORCING_NONNEGATIVE.into(),
        passed: f_ok,
        witness: f_witness,
    });

    // Witness: smallest g and largest g' on a sample of (-2, 1).
    let (mut min_g, mut max_dg) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=1000 {
        let s = -2.0 + 2.999 * k as f64 / 1000.0;
        if let (Ok(gv), Ok(dgv)) = (g.g(s), g.dg(s)) {
            min_g = min_g.min(gv);
            max_dg = max_dg.max(dgv);
        }
    }
    items.push(HypothesisItem {
        name: GAP_POSITIVE_NONINCREASING.into(),
        passed: g.is_positive_nonincreasing(),
        witness: format!("sampled min g = {min_g:.6e}, max g' = {max_dg:.6e}"),
    });
    items.push(HypothesisItem {
        name: RECIPROCAL_CONVEX.into(),
        passed: g.reciprocal_is_convex(),
        witness: match g {
            NonlinearityProfile::PowerGap { p } => {
                format!("(1/g)'' = {}(1-s)^(-{}) > 0", p * (p + 1.0), p + 2.0)
            }
            NonlinearityProfile::ExpGap => "(1/g)'' = e^s > 0".into(),
            NonlinearityProfile::ConstantOne => "(1/g)'' = 0".into(),
        },
    });
    items.push(HypothesisItem {
        name: RECIPROCAL_SLOPE_BOUNDED.into(),
        passed: g.reciprocal_slope_bounded_below_one(),
        witness: format!(
            "(1/g)'(0.99) = {:.6e}",
            g.reciprocal_slope(0.99).unwrap_or(f64::NAN)
        ),
    });
    let g_near_one = g.g(1.0 - 1e-9).unwrap_or(f64::NAN);
    items.push(HypothesisItem {
        name: GAP_VANISHES_AT_ONE.into(),
        passed: g.vanishes_at_one(),
        witness: format!("g(1 - 1e-9) = {g_near_one:.6e}"),
    });
    items.push(HypothesisItem {
        name: FORCING_BOUNDED_BELOW.into(),
        passed: stats.inf > 0.0,
        witness: format!("inf f = {:.6e}", stats.inf),
    });
    HypothesisReport { items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;

    fn unit() -> std::sync::Arc<GridDomain> {
        GridDomain::build(Shape::Interval { length: 1.0 }, 99).unwrap()
    }

    #[test]
    fn quadratic_gap_constant_forcing_passes_everything() {
        let g = NonlinearityProfile::power_gap(2.0).unwrap();
        let report = check_hypotheses(&g, &ForcingProfile::constant(1.0), &unit());
        assert!(report.items.iter().all(|i| i.passed), "{report:?}");
    }

    #[test]
    fn constant_gap_does_not_vanish_at_one() {
        let report = check_hypotheses(
            &NonlinearityProfile::ConstantOne,
            &ForcingProfile::constant(1.0),
            &unit(),
        );
        assert!(report.passed(hypothesis::GAP_POSITIVE_NONINCREASING));
        assert!(!report.passed(hypothesis::GAP_VANISHES_AT_ONE));
    }

    #[test]
    fn zero_forcing_is_reported_with_witness() {
        let report = check_hypotheses(
            &NonlinearityProfile::power_gap(2.0).unwrap(),
            &ForcingProfile::constant(0.0),
            &unit(),
        );
        let item = &report.items[0];
        assert_eq!(item.name, hypothesis::FORCING_NONNEGATIVE);
        assert!(!item.passed);
        assert_eq!(item.witness, "f ≡ 0");
        assert!(matches!(
            report.require(&[hypothesis::FORCING_NONNEGATIVE]),
            Err(Error::Hypothesis { .. })
        ));
    }

    #[test]
    fn gap_integral_closed_forms() {
        let g2 = NonlinearityProfile::power_gap(2.0).unwrap();
        assert!((g2.gap_integral(0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(g2.gap_integral(1.0 - 1e-12).unwrap() < 1e-30);
        let e = NonlinearityProfile::ExpGap.gap_integral(0.0).unwrap();
        assert!((e - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!(matches!(g2.gap_integral(1.0), Err(Error::GapDomain { .. })));
    }

    #[test]
    fn sup_s_g_examples() {
        let p2 = NonlinearityProfile::power_gap(2.0).unwrap().sup_s_g();
        assert!((p2.value - 4.0 / 27.0).abs() < 1e-15);
        assert!((p2.argmax - 1.0 / 3.0).abs() < 1e-15);
        let p1 = NonlinearityProfile::power_gap(1.0).unwrap().sup_s_g();
        assert!((p1.value - 0.25).abs() < 1e-15 && (p1.argmax - 0.5).abs() < 1e-15);
        let one = NonlinearityProfile::ConstantOne.sup_s_g();
        assert!((one.value - 1.0).abs() < 1e-9 && (one.argmax - 1.0).abs() < 1e-9);
        let ex = NonlinearityProfile::ExpGap.sup_s_g();
        assert!((ex.value - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn evaluation_at_or_above_one_is_an_error() {
        for g in [
            NonlinearityProfile::power_gap(2.0).unwrap(),
            NonlinearityProfile::ExpGap,
            NonlinearityProfile::ConstantOne,
        ] {
            assert!(g.g(1.0).is_err());
            assert!(g.dg(1.5).is_err());
            assert!(g.g(f64::NAN).is_err());
        }
        assert!(NonlinearityProfile::power_gap(0.0).is_err());
    }

    #[test]
    fn divided_difference_matches_slope_for_close_points() {
        let g = NonlinearityProfile::power_gap(2.0).unwrap();
        let a = 0.3;
        let dd = g.reciprocal_divided_difference(a, a + 1e-12).unwrap();
        assert!((dd - g.reciprocal_slope(a).unwrap()).abs() < 1e-9);
        let wide = g.reciprocal_divided_difference(0.1, 0.5).unwrap();
        let exact = (1.0 / 0.25 - 1.0 / 0.81) / 0.4;
        assert!((wide - exact).abs() < 1e-12);
        assert_eq!(g.reciprocal_divided_difference(0.5, 0.1).unwrap(), wide);
    }

    #[test]
    fn forcing_derivatives() {
        let b = ForcingProfile::bump(2.0, 0.0, 0.5).unwrap();
        let x = 0.3;
        let fd = (b.value(x + 1e-6) - b.value(x - 1e-6)) / 2e-6;
        assert!((b.x_dot_grad(x) - x * fd).abs() < 1e-8);
        let p = ForcingProfile::polynomial(vec![1.0, 0.0, -0.5], 0.0).unwrap();
        assert!((p.value(0.4) - (1.0 - 0.08)).abs() < 1e-15);
        assert!((p.x_dot_grad(0.4) - 0.4 * (-0.4)).abs() < 1e-15);
    }
}
