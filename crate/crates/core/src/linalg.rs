//! Tridiagonal systems.

/// A tridiagonal matrix stored by diagonals. `lower[0]` and
/// `upper[n - 1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `alpha I + beta self`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|v| beta * v).collect(),
            diag: self.diag.iter().map(|v| alpha + beta * v).collect(),
            upper: self.upper.iter().map(|v| beta * v).collect(),
        }
    }

    /// `self + diag(shift)`.
    pub fn with_diagonal(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (d, s) in out.diag.iter_mut().zip(shift) {
            *d += s;
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Smallest Gershgorin disc edge.
    pub fn gershgorin_lower(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut r = 0.0;
                if i > 0 {
                    r += self.lower[i].abs();
                }
                if i + 1 < n {
                    r += self.upper[i].abs();
                }
                self.diag[i] - r
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Thomas algorithm. For an M-matrix with nonnegative right-hand side
    /// every intermediate quantity is a sum of nonnegative terms, so the
    /// solution is nonnegative and monotone in the data.
    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        debug_assert_eq!(out.len(), n);
        if n == 0 {
            return;
        }
        let mut c = vec![0.0; n];
        let mut beta = self.diag[0];
        out[0] = rhs[0] / beta;
        for i in 1..n {
            c[i - 1] = self.upper[i - 1] / beta;
            beta = self.diag[i] - self.lower[i] * c[i - 1];
            out[i] = (rhs[i] - self.lower[i] * out[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            out[i] -= c[i] * out[i + 1];
        }
    }
}
