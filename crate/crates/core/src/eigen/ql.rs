//! Implicit-shift QL iteration for symmetric tridiagonal matrices, after the
//! EISPACK `tql2` routine.
//!
//! The Givens rotations are handed to a [`RotationSink`], so the same sweep
//! either accumulates full eigenvectors or just tracks the projections
//! `⟨v_n|w⟩` of a few fixed vectors `w` in O(L) per rotation.

use super::{EigenError, MAX_SWEEPS};
use crate::lattice::TridiagonalMatrix;

/// Receives the plane rotation acting on columns `i` and `i + 1`.
trait RotationSink {
    fn rotate(&mut self, i: usize, c: f64, s: f64);
}

/// Column-stored eigenvector matrix, starts as the identity.
struct Columns(Vec<Vec<f64>>);

impl RotationSink for Columns {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        let (left, right) = self.0.split_at_mut(i + 1);
        let zi = &mut left[i];
        let zn = &mut right[0];
        for (a, b) in zi.iter_mut().zip(zn.iter_mut()) {
            let f = *b;
            *b = s * *a + c * f;
            *a = c * *a - s * f;
        }
    }
}

/// `rows[r][n] = ⟨v_n | w_r⟩` for each tracked vector `w_r`.
struct Projections(Vec<Vec<f64>>);

impl RotationSink for Projections {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        for row in &mut self.0 {
            let f = row[i + 1];
            row[i + 1] = s * row[i] + c * f;
            row[i] = c * row[i] - s * f;
        }
    }
}

struct NoVectors;

impl RotationSink for NoVectors {
    fn rotate(&mut self, _: usize, _: f64, _: f64) {}
}

/// Diagonalizes in place. On return `d` holds the (unsorted) eigenvalues.
fn tql<S: RotationSink>(d: &mut [f64], offdiag: &[f64], sink: &mut S) -> Result<(), EigenError> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let mut e: Vec<f64> = offdiag.to_vec();
    e.push(0.0);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(EigenError::NoConvergence { index: l });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                sink.rotate(i, c, s);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Unsorted eigenvalues and eigenvectors.
pub(super) fn eigh(t: &TridiagonalMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    let n = t.dim();
    let mut d = t.diag().to_vec();
    let mut cols = Columns(
        (0..n)
            .map(|j| {
                let mut c = vec![0.0; n];
                c[j] = 1.0;
                c
            })
            .collect(),
    );
    tql(&mut d, t.offdiag(), &mut cols)?;
    Ok((d, cols.0))
}

/// Eigenvalues only, ascending.
pub(super) fn eigenvalues(t: &TridiagonalMatrix) -> Result<Vec<f64>, EigenError> {
    let mut d = t.diag().to_vec();
    tql(&mut d, t.offdiag(), &mut NoVectors)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full spectrum with the overlaps `⟨v_n|w_r⟩` of a few fixed vectors in
/// place of the eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSpectrum {
    /// Ascending.
    pub energies: Vec<f64>,
    /// `overlaps[r][n] = ⟨v_n|w_r⟩`; eigenvector signs are arbitrary.
    pub overlaps: Vec<Vec<f64>>,
}

/// All eigenvalues plus the eigenbasis components of each vector in
/// `probes`, in O(L²·(1 + probes)) instead of the O(L³) full solve.
pub fn eigenvalues_with_projections(
    t: &TridiagonalMatrix,
    probes: &[&[f64]],
) -> Result<ProjectedSpectrum, EigenError> {
    let mut d = t.diag().to_vec();
    let mut proj = Projections(probes.iter().map(|w| w.to_vec()).collect());
    tql(&mut d, t.offdiag(), &mut proj)?;
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(ProjectedSpectrum {
        energies: order.iter().map(|&k| d[k]).collect(),
        overlaps: proj
            .0
            .iter()
            .map(|row| order.iter().map(|&k| row[k]).collect())
            .collect(),
    })
}
