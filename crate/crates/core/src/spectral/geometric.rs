use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Eigenvalues below this count as zero when extracting null spaces.
pub const NULL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct GeometricBound {
    /// Smaller of the two smallest nonzero eigenvalues.
    pub lambda: f64,
    /// Cosine of the smallest principal angle between the null spaces.
    pub cos_theta: f64,
    pub sin2_half_theta: f64,
    pub bound: f64,
    /// `lambda_min(A1 + A2)` by dense diagonalization.
    pub lambda_min_sum: f64,
}

impl GeometricBound {
    pub fn holds(&self) -> bool {
        self.lambda_min_sum >= self.bound - 1e-9
    }
}

struct Split {
    null: DMatrix<f64>,
    gap: Option<f64>,
}

fn split(a: &DMatrix<f64>) -> Split {
    let eig = SymmetricEigen::new(a.clone());
    let null_cols: Vec<usize> = (0..a.nrows()).filter(|&i| eig.eigenvalues[i].abs() <= NULL_TOL).collect();
    let gap = eig.eigenvalues.iter().copied().filter(|v| *v > NULL_TOL).min_by(f64::total_cmp);
    let mut null = DMatrix::zeros(a.nrows(), null_cols.len());
    for (k, &i) in null_cols.iter().enumerate() {
        null.set_column(k, &eig.eigenvectors.column(i));
    }
    Split { null, gap }
}

/// Lower bound `lambda * sin^2(theta/2)` on the ground energy of `a1 + a2`
/// for positive semidefinite `a1`, `a2`, where `theta` is the angle between
/// their null spaces.
pub fn geometric_bound(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<GeometricBound> {
    if a1.shape() != a2.shape() || a1.nrows() != a1.ncols() {
        return Err(Error::Solver("operands must be square and of equal size".into()));
    }
    let (s1, s2) = (split(a1), split(a2));
    if s1.null.ncols() == 0 || s2.null.ncols() == 0 {
        return Err(Error::Solver("an operand has a trivial null space".into()));
    }
    let lambda = match (s1.gap, s2.gap) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => 0.0,
    };
    let overlap = s1.null.transpose() * &s2.null;
    let cos_theta = overlap.singular_values().iter().copied().fold(0.0, f64::max).min(1.0);
    let sin2_half_theta = (1.0 - cos_theta) / 2.0;
    let sum = a1 + a2;
    let lambda_min_sum = SymmetricEigen::new(sum).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GeometricBound { lambda, cos_theta, sin2_half_theta, bound: lambda * sin2_half_theta, lambda_min_sum })
}
