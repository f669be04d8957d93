//! Localization observables and ground-state quantum Fisher information.
//!
//! Site indices run `1..=L` everywhere, matching the Hamiltonian.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{self, dot, norm, EigenError, Spectrum};
use crate::lattice::{build_hamiltonian, LatticeError, ModelParams, TridiagonalMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("state is not normalized (norm = {0})")]
    Unnormalized(f64),
    #[error("probability vector sums to {0}, expected 1")]
    UnnormalizedDensity(f64),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("energy gap needs at least two eigenpairs, got {0}")]
    TooFewEigenpairs(usize),
    #[error("ground state is degenerate (gap {gap:e} below {tol:e}); QFI undefined")]
    DegenerateGround { gap: f64, tol: f64 },
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

const NORM_TOL: f64 = 1e-10;

/// `p_i = ψ_i²`.
pub fn probability_density(state: &[f64]) -> Result<Vec<f64>, ObservableError> {
    let n = norm(state);
    if (n - 1.0).abs() > NORM_TOL {
        return Err(ObservableError::Unnormalized(n));
    }
    Ok(state.iter().map(|x| x * x).collect())
}

fn check_density(p: &[f64]) -> Result<(), ObservableError> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(ObservableError::UnnormalizedDensity(total));
    }
    Ok(())
}

/// Localization center `i_c = Σ i·p_i`.
pub fn localization_center(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum()
}

/// RMS spread `ζ = sqrt(Σ (i − i_c)² p_i)` about the localization center.
pub fn localization_length(p: &[f64]) -> Result<f64, ObservableError> {
    check_density(p)?;
    let center = localization_center(p);
    let var: f64 = p
        .iter()
        .enumerate()
        .map(|(i, w)| ((i + 1) as f64 - center).powi(2) * w)
        .sum();
    Ok(var.max(0.0).sqrt())
}

/// Inverse participation ratio `Σ p_i²`.
pub fn ipr(p: &[f64]) -> Result<f64, ObservableError> {
    check_density(p)?;
    Ok(p.iter().map(|w| w * w).sum())
}

/// `E_1 − E_0`.
pub fn energy_gap(spectrum: &Spectrum) -> Result<f64, ObservableError> {
    match spectrum.energies.as_slice() {
        [e0, e1, ..] => Ok((e1 - e0).max(0.0)),
        other => Err(ObservableError::TooFewEigenpairs(other.len())),
    }
}

/// `|⟨a|b⟩|`.
pub fn fidelity(a: &[f64], b: &[f64]) -> Result<f64, ObservableError> {
    if a.len() != b.len() {
        return Err(ObservableError::LengthMismatch(a.len(), b.len()));
    }
    for v in [a, b] {
        let n = norm(v);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(ObservableError::Unnormalized(n));
        }
    }
    Ok(dot(a, b).abs().min(1.0))
}

fn degeneracy_tol(energies: &[f64]) -> f64 {
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    1e-13 * scale.max(1.0)
}

/// Ground-state QFI with respect to the field, from the full spectrum:
/// `F_Q = 4 Σ_{n>0} |⟨ψ_n|X|ψ_0⟩|² / (E_n − E_0)²` with `X = diag(1..=L)`,
/// the exact `∂H/∂h`.
pub fn qfi_perturbative(spectrum: &Spectrum) -> Result<f64, ObservableError> {
    let gap = energy_gap(spectrum)?;
    let tol = degeneracy_tol(&spectrum.energies);
    if gap <= tol {
        return Err(ObservableError::DegenerateGround { gap, tol });
    }
    let ground = spectrum.ground_state();
    let probe: Vec<f64> = ground
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1) as f64 * c)
        .collect();
    let e0 = spectrum.energies[0];
    let sum: f64 = spectrum
        .energies
        .iter()
        .zip(&spectrum.states)
        .skip(1)
        .map(|(en, state)| (dot(state, &probe) / (en - e0)).powi(2))
        .sum();
    Ok(4.0 * sum)
}

/// Same quantity as [`qfi_perturbative`] without forming eigenvectors: the
/// ground state comes from inverse iteration, and only the eigenbasis
/// components of `X|ψ_0⟩` are tracked through the QL sweep.
pub fn qfi_ground_state(t: &TridiagonalMatrix) -> Result<f64, ObservableError> {
    let ground = eigen::lowest_k(t, 1)?;
    let probe: Vec<f64> = ground.states[0]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1) as f64 * c)
        .collect();
    let proj = eigen::eigenvalues_with_projections(t, &[&probe])?;
    let energies = &proj.energies;
    if energies.len() < 2 {
        return Err(ObservableError::TooFewEigenpairs(energies.len()));
    }
    let gap = energies[1] - energies[0];
    let tol = degeneracy_tol(energies);
    if gap <= tol {
        return Err(ObservableError::DegenerateGround { gap, tol });
    }
    let e0 = energies[0];
    let sum: f64 = energies
        .iter()
        .zip(&proj.overlaps[0])
        .skip(1)
        .map(|(en, c)| (c / (en - e0)).powi(2))
        .sum();
    Ok(4.0 * sum)
}

/// Central-difference QFI from ground states at `h − ε` and `h + ε`.
/// The states are sign-aligned here; the reference state is the normalized
/// midpoint.
pub fn qfi_finite_difference(
    psi_minus: &[f64],
    psi_plus: &[f64],
    eps: f64,
) -> Result<f64, ObservableError> {
    if !(eps > 0.0) {
        return Err(ObservableError::NonPositiveStep(eps));
    }
    if psi_minus.len() != psi_plus.len() {
        return Err(ObservableError::LengthMismatch(psi_minus.len(), psi_plus.len()));
    }
    let sign = if dot(psi_minus, psi_plus) < 0.0 { -1.0 } else { 1.0 };
    let plus: Vec<f64> = psi_plus.iter().map(|x| sign * x).collect();
    let deriv: Vec<f64> = plus
        .iter()
        .zip(psi_minus)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect();
    let mut mid: Vec<f64> = plus.iter().zip(psi_minus).map(|(p, m)| 0.5 * (p + m)).collect();
    let n = norm(&mid);
    if n > 0.0 {
        mid.iter_mut().for_each(|x| *x /= n);
    }
    let overlap = dot(&deriv, &mid);
    Ok((4.0 * (dot(&deriv, &deriv) - overlap * overlap)).max(0.0))
}

/// Default finite-difference step `max(1e-3·h, 1e-12)`.
pub fn default_fd_step(field: f64) -> f64 {
    (1e-3 * field).max(1e-12)
}

/// Ground state of `params` with the field shifted by `shift`; the shifted
/// field may be negative.
fn ground_state_with_field_shift(
    params: &ModelParams,
    shift: f64,
) -> Result<Vec<f64>, ObservableError> {
    let t = build_hamiltonian(params)?;
    let diag: Vec<f64> = t
        .diag()
        .iter()
        .enumerate()
        .map(|(i, d)| d + shift * (i + 1) as f64)
        .collect();
    let shifted = TridiagonalMatrix::new(diag, t.offdiag().to_vec())?;
    Ok(eigen::lowest_k(&shifted, 1)?.states.remove(0))
}

/// [`qfi_finite_difference`] evaluated directly from model parameters.
pub fn qfi_finite_difference_at(params: &ModelParams, eps: f64) -> Result<f64, ObservableError> {
    if !(eps > 0.0) {
        return Err(ObservableError::NonPositiveStep(eps));
    }
    let minus = ground_state_with_field_shift(params, -eps)?;
    let plus = ground_state_with_field_shift(params, eps)?;
    qfi_finite_difference(&minus, &plus, eps)
}

/// Which optional observables to evaluate per sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Selection {
    pub qfi: bool,
    /// δ of the reference state for the fidelity (pure Stark: `−2J`).
    pub fidelity_reference_delta: Option<f64>,
}

/// Observables of one Hamiltonian instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub params: ModelParams,
    pub zeta: f64,
    pub ipr: f64,
    pub gap: f64,
    pub qfi: Option<f64>,
    pub fidelity_vs_stark: Option<f64>,
}

/// Solves one instance and evaluates the selected observables.
pub fn measure(
    params: &ModelParams,
    selection: &Selection,
) -> Result<ObservableRecord, ObservableError> {
    let t = build_hamiltonian(params)?;
    let spectrum = eigen::lowest_k(&t, 2.min(t.dim()))?;
    let p = probability_density(spectrum.ground_state())?;
    let qfi = if selection.qfi {
        Some(qfi_ground_state(&t)?)
    } else {
        None
    };
    let fidelity_vs_stark = match selection.fidelity_reference_delta {
        Some(delta) => {
            let reference = reference_ground_state(params, delta)?;
            Some(fidelity(spectrum.ground_state(), &reference)?)
        }
        None => None,
    };
    Ok(ObservableRecord {
        params: *params,
        zeta: localization_length(&p)?,
        ipr: ipr(&p)?,
        gap: energy_gap(&spectrum)?,
        qfi,
        fidelity_vs_stark,
    })
}

/// Ground state at the same `(L, J, h, ω, φ)` but with `δ` replaced.
pub fn reference_ground_state(
    params: &ModelParams,
    reference_delta: f64,
) -> Result<Vec<f64>, ObservableError> {
    let reference = ModelParams {
        delta: reference_delta,
        ..*params
    };
    let t = build_hamiltonian(&reference)?;
    Ok(eigen::lowest_k(&t, 1)?.states.remove(0))
}
