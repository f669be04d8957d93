//! Sturm-sequence bisection for selected eigenvalues and inverse iteration
//! for their eigenvectors.

use super::{dot, norm, normalize, EigenError, MAX_SWEEPS};
use crate::lattice::TridiagonalMatrix;

/// Number of eigenvalues strictly below `x`.
pub fn eigenvalue_count_below(t: &TridiagonalMatrix, x: f64) -> usize {
    let d = t.diag();
    let e = t.offdiag();
    let pivmin = pivot_floor(t);
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0.. {
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        if i + 1 == d.len() {
            break;
        }
        q = d[i + 1] - x - e[i] * e[i] / q;
    }
    count
}

fn pivot_floor(t: &TridiagonalMatrix) -> f64 {
    let emax = t.offdiag().iter().fold(1.0f64, |m, x| m.max(x * x));
    f64::MIN_POSITIVE * emax
}

/// The `k`-th smallest eigenvalue (0-based), bisected to full precision.
pub fn kth_eigenvalue(t: &TridiagonalMatrix, k: usize) -> f64 {
    let bound = t.norm_bound();
    let (mut lo, mut hi) = (-bound - f64::EPSILON, bound + f64::EPSILON);
    let tol = 2.0 * f64::EPSILON * bound.max(f64::MIN_POSITIVE);
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if eigenvalue_count_below(t, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// LU factors of `T − σI` with partial pivoting (LAPACK `dgttrf` layout).
struct ShiftedLu {
    /// Diagonal of U.
    d: Vec<f64>,
    /// First superdiagonal of U.
    du: Vec<f64>,
    /// Second superdiagonal of U, nonzero only where rows were swapped.
    du2: Vec<f64>,
    /// Multipliers of L.
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &TridiagonalMatrix, shift: f64, floor: f64) -> Self {
        let n = t.dim();
        let mut d: Vec<f64> = t.diag().iter().map(|x| x - shift).collect();
        let mut dl = t.offdiag().to_vec();
        let mut du = t.offdiag().to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = floor;
                }
                let m = dl[i] / d[i];
                dl[i] = m;
                d[i + 1] -= m * du[i];
            } else {
                let m = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = m;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - m * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -m;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = floor;
        }
        Self { d, du, du2, dl, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.du2[i] * b[i + 2];
            }
            let x = acc / self.d[i];
            b[i] = if x.is_finite() { x } else { acc.signum() * f64::MAX.sqrt() };
        }
    }
}

/// Eigenvectors for ascending `energies` by inverse iteration. Vectors whose
/// eigenvalues lie within `1e-8·‖T‖` of each other are reorthogonalized
/// against the earlier members of their cluster.
pub(super) fn inverse_iteration(
    t: &TridiagonalMatrix,
    energies: &[f64],
) -> Result<Vec<Vec<f64>>, EigenError> {
    let n = t.dim();
    let scale = t.norm_bound().max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-8 * scale;
    let floor = f64::EPSILON * scale;
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(energies.len());
    let mut cluster_start = 0;

    for (j, &energy) in energies.iter().enumerate() {
        if j > 0 && energy - energies[j - 1] > cluster_gap {
            cluster_start = j;
        }
        // nudge repeated shifts apart so cluster members see distinct factorizations
        let shift = energy + (j - cluster_start) as f64 * floor;
        let lu = ShiftedLu::factor(t, shift, floor);
        let mut v: Vec<f64> = start_vector(n, j);
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            lu.solve(&mut v);
            for prev in &states[cluster_start..j] {
                let overlap = dot(&v, prev);
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= overlap * p);
            }
            normalize(&mut v);
            let residual = {
                let hv = t.apply(&v);
                let r: Vec<f64> = hv.iter().zip(&v).map(|(a, b)| a - energy * b).collect();
                norm(&r)
            };
            if residual <= 1e-12 * energy.abs().max(1.0) {
                // one more pass to squeeze out neighbouring components
                lu.solve(&mut v);
                for prev in &states[cluster_start..j] {
                    let overlap = dot(&v, prev);
                    v.iter_mut().zip(prev).for_each(|(x, p)| *x -= overlap * p);
                }
                normalize(&mut v);
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(EigenError::NoConvergence { index: j });
        }
        states.push(v);
    }
    Ok(states)
}

/// Deterministic start vector with no special symmetry.
fn start_vector(n: usize, j: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666 + j as f64 * 0.569_840_29).fract())
        .collect()
}
