//! Linear-solve seam used by the Newton-type solvers.

use nalgebra::{DMatrix, DVector};

/// Solves `A·x = b` for square `A`. Implementations return `None` when
/// the factorization detects singularity.
pub trait LinearSolver: Send + Sync {
    fn solve(&self, a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>>;
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseLu;

impl LinearSolver for DenseLu {
    fn solve(&self, a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
        let x = a.lu().solve(b)?;
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
