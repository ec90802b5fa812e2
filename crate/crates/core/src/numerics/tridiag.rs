//! Thomas algorithm for tridiagonal systems with real coefficients and a
//! real or complex right-hand side.

use std::ops::{Mul, Sub};

/// LU factors of a tridiagonal matrix, computed without pivoting.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    /// Factor the matrix with sub-diagonal `lower[i]` (row `i`, column `i-1`),
    /// diagonal `diag` and super-diagonal `upper[i]` (row `i`, column `i+1`).
    /// Returns `None` when a pivot vanishes.
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut inv_pivot = vec![0.0; n];
        let mut piv = diag[0];
        for i in 0..n {
            if i > 0 {
                piv = diag[i] - lower[i] * upper[i - 1] * inv_pivot[i - 1];
            }
            let scale = diag[i].abs().max(1e-300);
            if !piv.is_finite() || piv.abs() < 1e-14 * scale {
                return None;
            }
            inv_pivot[i] = 1.0 / piv;
        }
        Some(Self {
            lower: lower.to_vec(),
            inv_pivot,
            upper: upper.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solve in place.
    pub fn solve<T>(&self, rhs: &mut [T])
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        for i in 1..n {
            let m = self.lower[i] * self.inv_pivot[i - 1];
            rhs[i] = rhs[i] - rhs[i - 1] * m;
        }
        rhs[n - 1] = rhs[n - 1] * self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - rhs[i + 1] * self.upper[i]) * self.inv_pivot[i];
        }
    }
}
