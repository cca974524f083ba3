//! Hermitian eigendecomposition, delegated to nalgebra's symmetric solver.

use nalgebra::{DMatrix, SymmetricEigen};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{PqcError, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, k)]).collect()
    }
}

pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    let defect = m.hermiticity_defect();
    if defect > tol {
        return Err(PqcError::Numeric(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let d = m.rows();
    // Symmetrize so the solver sees an exactly Hermitian input.
    let dm = DMatrix::<C64>::from_fn(d, d, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let eig = SymmetricEigen::try_new(dm, 1e-15, 0)
        .ok_or_else(|| PqcError::Numeric("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigen(m, 1e-9)?.values[0])
}
