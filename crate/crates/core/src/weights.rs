//! Spatial weight matrix `W = ω̃ − D` and the `‖ZW‖₂,₁` regularizer.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::units::AdjacencyMatrix;

/// The strictly lower-triangular adjacency, its column degrees and `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    omega_lower: DMatrix<f64>,
    degree: Vec<f64>,
    w: DMatrix<f64>,
}

impl SpatialWeights {
    /// Strictly lower-triangular part of ω.
    pub fn omega_lower(&self) -> &DMatrix<f64> {
        &self.omega_lower
    }

    /// Diagonal of D: `D_jj = Σᵢ ω̃_ij`.
    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.degree))
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Builds `W = ω̃ − D` from a validated adjacency.
pub fn build_weight_matrix(omega: &AdjacencyMatrix) -> SpatialWeights {
    let n = omega.len();
    let m = omega.matrix();
    let omega_lower = DMatrix::from_fn(n, n, |i, j| if i > j { m[(i, j)] } else { 0.0 });
    let degree: Vec<f64> = (0..n).map(|j| omega_lower.column(j).sum()).collect();
    let mut w = omega_lower.clone();
    for (j, d) in degree.iter().enumerate() {
        w[(j, j)] -= d;
    }
    SpatialWeights { omega_lower, degree, w }
}

/// Validates a raw matrix as an adjacency and builds `W` from it.
pub fn build_weight_matrix_from_dense(omega: DMatrix<f64>) -> Result<SpatialWeights> {
    Ok(build_weight_matrix(&AdjacencyMatrix::from_matrix(omega)?))
}

/// Sum of the Euclidean norms of the columns of `m`.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}

/// `‖ZW‖₂,₁`.
pub fn spatial_penalty(z: &DMatrix<f64>, weights: &SpatialWeights) -> Result<f64> {
    if !z.is_square() || z.nrows() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "Z is {}x{}, W is {}x{}",
            z.nrows(),
            z.ncols(),
            weights.len(),
            weights.len()
        )));
    }
    Ok(l21_norm(&(z * weights.w())))
}
