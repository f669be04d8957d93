//! Aubry-André-Stark chain on `L` sites with open boundaries.
//!
//! The single-particle Hamiltonian is a real symmetric tridiagonal matrix:
//! hopping `-J` on every bond, and on-site energy
//! `h·i + (2J + δ)·cos(2π(iω + φ))` at site `i = 1..=L`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// (√5 − 1)/2, the limit of `F_n / F_{n+1}`.
pub const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("fibonacci index {0} overflows u64")]
    FibonacciOverflow(usize),
    #[error("L = {size} is not a Fibonacci number (nearest admissible sizes: {below} and {above})")]
    NotFibonacci { size: usize, below: u64, above: u64 },
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),
}

/// `F_n` with `F_0 = F_1 = 1`.
pub fn fibonacci(n: usize) -> Result<u64, LatticeError> {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 0..n {
        let next = a.checked_add(b).ok_or(LatticeError::FibonacciOverflow(n))?;
        a = b;
        b = next;
    }
    Ok(a)
}

/// Index `n` such that `F_n == value`, for `value >= 2`. `F_0 = F_1 = 1` is
/// ambiguous, so 1 maps to `None` along with every non-Fibonacci value.
pub fn fibonacci_index(value: u64) -> Option<usize> {
    if value < 2 {
        return None;
    }
    let (mut a, mut b, mut n) = (1u64, 2u64, 2usize);
    while b < value {
        let next = a.checked_add(b)?;
        a = b;
        b = next;
        n += 1;
    }
    (b == value).then_some(n)
}

pub fn is_fibonacci_size(size: usize) -> bool {
    fibonacci_index(size as u64).is_some()
}

fn nearest_fibonacci(size: usize) -> (u64, u64) {
    let (mut a, mut b) = (1u64, 2u64);
    while b < size as u64 {
        let next = a.saturating_add(b);
        a = b;
        b = next;
    }
    (a.max(2), b)
}

/// Numerator and denominator of the rational approximant `F_n / F_{n+1}` for
/// a system of `L = F_{n+1}` sites.
pub fn rational_frequency_parts(size: usize) -> Result<(u64, u64), LatticeError> {
    match fibonacci_index(size as u64) {
        Some(n) => Ok((fibonacci(n - 1)?, size as u64)),
        None => {
            let (below, above) = nearest_fibonacci(size);
            Err(LatticeError::NotFibonacci { size, below, above })
        }
    }
}

/// `F_n / F_{n+1}` for `L = F_{n+1}`.
pub fn rational_frequency(size: usize) -> Result<f64, LatticeError> {
    let (num, den) = rational_frequency_parts(size)?;
    Ok(num as f64 / den as f64)
}

/// Spatial frequency of the quasiperiodic potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value", deny_unknown_fields)]
pub enum Frequency {
    /// `F_n / F_{n+1}` tied to `L = F_{n+1}`.
    #[default]
    Fibonacci,
    /// Exact rational `num / den`.
    Rational(u64, u64),
    /// `(√5 − 1)/2` regardless of `L`.
    Golden,
}

/// A fully specified Hamiltonian instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub size: usize,
    pub hopping: f64,
    pub delta: f64,
    pub field: f64,
    pub frequency: Frequency,
    pub phase: f64,
}

impl ModelParams {
    /// `J = 1`, Fibonacci frequency, `φ = 0`.
    pub fn new(size: usize, delta: f64, field: f64) -> Self {
        Self {
            size,
            hopping: 1.0,
            delta,
            field,
            frequency: Frequency::Fibonacci,
            phase: 0.0,
        }
    }

    /// Pure Stark chain (`δ = −2J`).
    pub fn pure_stark(size: usize, field: f64) -> Self {
        Self::new(size, -2.0, field)
    }

    pub fn with_hopping(mut self, hopping: f64) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn with_frequency(mut self, frequency: Frequency) -> Self {
        self.frequency = frequency;
        self
    }

    /// Sets the phase, folded into `[0, 1)`.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = fold_unit(phase);
        self
    }

    /// AA modulation amplitude `2J + δ`.
    pub fn aa_amplitude(&self) -> f64 {
        2.0 * self.hopping + self.delta
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |msg: String| Err(LatticeError::InvalidParams(msg));
        if self.size < 2 {
            return bad(format!("L must be at least 2, got {}", self.size));
        }
        if !(self.hopping > 0.0) || !self.hopping.is_finite() {
            return bad(format!("J must be positive, got {}", self.hopping));
        }
        if !self.delta.is_finite() || self.aa_amplitude() < 0.0 {
            return bad(format!("2J + δ must be non-negative, got δ = {}", self.delta));
        }
        if !(self.field >= 0.0) || !self.field.is_finite() {
            return bad(format!("h must be non-negative, got {}", self.field));
        }
        if !(0.0..1.0).contains(&self.phase) {
            return bad(format!("φ must lie in [0, 1), got {}", self.phase));
        }
        match self.frequency {
            Frequency::Fibonacci => {
                rational_frequency_parts(self.size)?;
            }
            Frequency::Rational(_, 0) => return bad("frequency denominator is zero".into()),
            _ => {}
        }
        Ok(())
    }
}

fn fold_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self, LatticeError> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(LatticeError::InvalidParams(format!(
                "tridiagonal shape mismatch: {} diagonal vs {} off-diagonal entries",
                diag.len(),
                offdiag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(LatticeError::InvalidParams("non-finite matrix entry".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// `y = T·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for b in 0..n - 1 {
            y[b] += self.offdiag[b] * x[b + 1];
            y[b + 1] += self.offdiag[b] * x[b];
        }
        y
    }

    /// Gershgorin bound on the spectral radius, used as the matrix scale.
    pub fn norm_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.offdiag[i];
                a[i + 1][i] = self.offdiag[i];
            }
        }
        a
    }
}

/// `iω + φ` reduced modulo 1. Rational frequencies are reduced exactly in
/// integer arithmetic before the phase is added.
fn modulation_argument(site: u64, frequency: Frequency, size: usize, phase: f64) -> f64 {
    let reduced = match frequency {
        Frequency::Fibonacci => {
            // validated upstream
            let (num, den) = rational_frequency_parts(size).expect("Fibonacci size");
            ((site as u128 * num as u128) % den as u128) as f64 / den as f64
        }
        Frequency::Rational(num, den) => {
            ((site as u128 * num as u128) % den as u128) as f64 / den as f64
        }
        Frequency::Golden => fold_unit(site as f64 * GOLDEN_RATIO),
    };
    fold_unit(reduced + fold_unit(phase))
}

/// On-site energies `h·i + (2J+δ)·cos(2π(iω+φ))`, `i = 1..=L`.
pub fn onsite_energies(params: &ModelParams) -> Vec<f64> {
    let amplitude = params.aa_amplitude();
    (1..=params.size as u64)
        .map(|i| {
            let stark = params.field * i as f64;
            if amplitude == 0.0 {
                return stark;
            }
            let arg = modulation_argument(i, params.frequency, params.size, params.phase);
            stark + amplitude * (std::f64::consts::TAU * arg).cos()
        })
        .collect()
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<TridiagonalMatrix, LatticeError> {
    params.validate()?;
    let diag = onsite_energies(params);
    let offdiag = vec![-params.hopping; params.size - 1];
    TridiagonalMatrix::new(diag, offdiag)
}
