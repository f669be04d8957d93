//! Eigendecomposition of real symmetric tridiagonal matrices.
//!
//! * [`eigh_tridiagonal`]: implicit-shift QL, all eigenpairs.
//! * [`lowest_k`]: Sturm-sequence bisection plus inverse iteration.
//! * [`dense_oracle`]: cyclic Jacobi on the dense matrix, for cross-checks.
//!
//! Every returned eigenvector is normalized and gauge-fixed so that its
//! largest-magnitude entry is positive.

mod bisection;
mod jacobi;
mod ql;

use thiserror::Error;

use crate::lattice::TridiagonalMatrix;

pub use bisection::{eigenvalue_count_below, kth_eigenvalue};
pub use ql::{eigenvalues_with_projections, ProjectedSpectrum};

/// Implicit QL sweeps allowed per eigenvalue.
pub const MAX_SWEEPS: usize = 50;

/// Largest dimension accepted by [`dense_oracle`].
pub const ORACLE_MAX_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("eigenvalue {index} did not converge within {MAX_SWEEPS} sweeps")]
    NoConvergence { index: usize },
    #[error("dense oracle limited to L <= {ORACLE_MAX_DIM}, got L = {0}")]
    OracleTooLarge(usize),
    #[error("requested {k} eigenpairs from a {dim}x{dim} matrix")]
    InvalidCount { k: usize, dim: usize },
}

/// Ascending eigenvalues with their orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    /// `states[k]` belongs to `energies[k]`.
    pub states: Vec<Vec<f64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.states[0]
    }

    /// Sorts ascending (stable) and applies the sign gauge.
    fn canonicalize(energies: Vec<f64>, states: Vec<Vec<f64>>) -> Self {
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let energies = order.iter().map(|&k| energies[k]).collect();
        let mut states: Vec<Vec<f64>> = {
            let mut slots: Vec<Option<Vec<f64>>> = states.into_iter().map(Some).collect();
            order.iter().map(|&k| slots[k].take().unwrap()).collect()
        };
        for v in &mut states {
            normalize(v);
            fix_gauge(v);
        }
        Self { energies, states }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Makes the largest-magnitude entry positive. Entries within a relative
/// 1e-10 of the maximum count as ties; the lowest index wins.
pub fn fix_gauge(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-10))
        .unwrap();
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// All eigenpairs via implicit-shift QL.
pub fn eigh_tridiagonal(t: &TridiagonalMatrix) -> Result<Spectrum, EigenError> {
    let (energies, states) = ql::eigh(t)?;
    Ok(Spectrum::canonicalize(energies, states))
}

/// The full spectrum without eigenvectors, ascending.
pub fn eigenvalues_tridiagonal(t: &TridiagonalMatrix) -> Result<Vec<f64>, EigenError> {
    ql::eigenvalues(t)
}

/// The `k` lowest eigenpairs. `k == L` falls through to the full QL solve.
pub fn lowest_k(t: &TridiagonalMatrix, k: usize) -> Result<Spectrum, EigenError> {
    let dim = t.dim();
    if k == 0 || k > dim {
        return Err(EigenError::InvalidCount { k, dim });
    }
    if k == dim {
        return eigh_tridiagonal(t);
    }
    let energies: Vec<f64> = (0..k).map(|j| kth_eigenvalue(t, j)).collect();
    let states = bisection::inverse_iteration(t, &energies)?;
    Ok(Spectrum::canonicalize(energies, states))
}

/// Cyclic Jacobi on the dense matrix; `L <= 64`.
pub fn dense_oracle(t: &TridiagonalMatrix) -> Result<Spectrum, EigenError> {
    if t.dim() > ORACLE_MAX_DIM {
        return Err(EigenError::OracleTooLarge(t.dim()));
    }
    let (energies, states) = jacobi::eigh_dense(t.to_dense())?;
    Ok(Spectrum::canonicalize(energies, states))
}
