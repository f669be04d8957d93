use serde::{Deserialize, Serialize};

use super::ScalingError;

/// Upper field cutoff for automatic fit windows.
pub const DEFAULT_FIT_H_MAX: f64 = 1e-2;
/// Agreement threshold, in combined standard errors, for the two largest sizes.
pub const DEFAULT_FIT_N_SIGMA: f64 = 2.0;

/// Slope of `log y` against `log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub stderr: f64,
    pub r_squared: f64,
    /// `(x_min, x_max)` of the data that entered the fit.
    pub window: (f64, f64),
    pub n_points: usize,
    /// Intercept of the log-log line.
    pub log_prefactor: f64,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult, ScalingError> {
    if xs.len() != ys.len() {
        return Err(ScalingError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(ScalingError::TooFewPoints { needed: 3, got: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(ScalingError::NonFinite);
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return Err(ScalingError::NonPositive);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(ScalingError::TooFewPoints { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (n - 2) as f64 / sxx).sqrt();
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(FitResult {
        exponent: slope,
        stderr,
        r_squared,
        window: (xmin, xmax),
        n_points: n,
        log_prefactor: intercept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub field: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// One observable against `h` at fixed `(L, δ)`, ascending in `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub size: usize,
    pub delta: f64,
    pub points: Vec<CurvePoint>,
}

/// Field window where the two largest sizes agree within `n_sigma`
/// combined standard errors at every sampled `h` from the window start up to
/// `h_max`. Returns `(h_lo, h_hi)` over the fields common to both curves.
pub fn size_independent_window(
    curves: &[Curve],
    n_sigma: f64,
    h_max: Option<f64>,
) -> Result<(f64, f64), ScalingError> {
    let mut sorted: Vec<&Curve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.size);
    let [.., smaller, larger] = sorted.as_slice() else {
        return Err(ScalingError::TooFewCurves {
            what: "system sizes",
            needed: 2,
            got: curves.len(),
        });
    };
    let cap = h_max.unwrap_or(f64::INFINITY);
    let mut pairs: Vec<(f64, bool)> = Vec::new();
    for p in &larger.points {
        if p.field > cap {
            continue;
        }
        if let Some(q) = smaller
            .points
            .iter()
            .find(|q| (q.field - p.field).abs() <= 1e-12 * p.field.abs())
        {
            let tol = n_sigma * (p.stderr.powi(2) + q.stderr.powi(2)).sqrt();
            pairs.push((p.field, (p.mean - q.mean).abs() <= tol));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let start = pairs
        .iter()
        .rposition(|(_, agree)| !agree)
        .map_or(0, |i| i + 1);
    let tail = &pairs[start..];
    if tail.len() < 3 {
        return Err(ScalingError::NoWindow(format!(
            "only {} agreeing fields at the top of the range",
            tail.len()
        )));
    }
    Ok((tail[0].0, tail[tail.len() - 1].0))
}

/// QFI system-size exponent with the `2/ν` comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiScaling {
    pub fit: FitResult,
    /// `2/(dν)` with `d = 1`, when `ν` was supplied.
    pub predicted_beta: Option<f64>,
}

/// Fits `F_Q ∝ L^β` from `(L, F_Q)` pairs taken inside the plateau.
pub fn qfi_scaling(sizes: &[usize], qfi: &[f64], nu: Option<f64>) -> Result<QfiScaling, ScalingError> {
    let xs: Vec<f64> = sizes.iter().map(|&l| l as f64).collect();
    Ok(QfiScaling {
        fit: fit_power_law(&xs, qfi)?,
        predicted_beta: nu.map(|v| 2.0 / v),
    })
}
