//! Radial eigenfunctions of the Dirichlet Laplacian on a ball.
//!
//! The principal eigenfunction of `B_R ⊂ ℝⁿ` is `F_ν(√μ r)` with
//! `ν = n/2 - 1` and
//!
//! ```text
//! F_ν(z) = Σ_k (-z²/4)^k / (k! (ν+1)_k) = Γ(ν+1) (z/2)^{-ν} J_ν(z),
//! ```
//!
//! normalized so that `F_ν(0) = 1`.

/// `F_ν(z)` by its power series. Accurate for `z` up to about 20.
pub fn reduced_bessel(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (nu + k));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero `j_{ν,1}` of `J_ν`.
pub fn first_bessel_zero(nu: f64) -> f64 {
    // j_{ν,1} > ν and lies below ν + 2√(ν+1) + 1 for the half-integer
    // orders that occur here; scan then bisect.
    let step = 0.05;
    let mut a = step;
    let mut fa = reduced_bessel(nu, a);
    loop {
        let b = a + step;
        let fb = reduced_bessel(nu, b);
        if fa > 0.0 && fb <= 0.0 {
            return bisect(|z| reduced_bessel(nu, z), a, b);
        }
        a = b;
        fa = fb;
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `λ₁(B_R)` in dimension `n ≥ 2`.
pub fn ball_principal_eigenvalue(dim: usize, radius: f64) -> f64 {
    let j = first_bessel_zero(dim as f64 / 2.0 - 1.0);
    j * j / (radius * radius)
}

/// `λ₁((0, L)) = π²/L²`.
pub fn interval_principal_eigenvalue(length: f64) -> f64 {
    (std::f64::consts::PI / length).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zeros_of_known_orders() {
        assert!((first_bessel_zero(0.0) - 2.404825557695773).abs() < 1e-12);
        assert!((first_bessel_zero(0.5) - PI).abs() < 1e-12);
        assert!((first_bessel_zero(1.0) - 3.831705970207512).abs() < 1e-12);
    }

    #[test]
    fn half_order_is_sinc() {
        for &z in &[0.1, 1.0, 2.5, 3.0] {
            assert!((reduced_bessel(0.5, z) - z.sin() / z).abs() < 1e-14);
        }
        assert!((reduced_bessel(-0.5, 1.3) - 1.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues() {
        assert!((interval_principal_eigenvalue(1.0) - PI * PI).abs() < 1e-12);
        assert!((ball_principal_eigenvalue(2, 1.0) - 5.783185962946784).abs() < 1e-10);
        assert!((ball_principal_eigenvalue(3, 2.0) - PI * PI / 4.0).abs() < 1e-10);
    }
}
