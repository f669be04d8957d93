use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::cost_function;
use super::ScalingError;

pub const DEFAULT_FLAT_TOL: f64 = 0.01;
pub const DEFAULT_FINE_STEP: f64 = 0.001;
pub const DEFAULT_HALF_SPAN: f64 = 0.1;
/// Field range pooled into collapses unless overridden.
pub const DEFAULT_COLLAPSE_FIELDS: (f64, f64) = (1e-10, 1e-3);
/// Absolute slack on the flat-window test so rounding noise around an exact
/// zero-cost collapse does not split the window.
const COST_FLOOR: f64 = 1e-12;

/// One disorder-averaged observable value at `(L, δ, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub size: usize,
    pub delta: f64,
    pub field: f64,
    pub value: f64,
}

/// Which rescaling is applied to each point for a trial exponent `x`.
///
/// | kind | searched | key | Q |
/// |---|---|---|---|
/// | `Zeta` | ν | `h L^{1/ν}` | `ζ/L` |
/// | `Ipr` | s | `h L^{1/ν}` | `IPR L^{s/ν}` |
/// | `Gap` | z | `h L^{1/ν}` | `ΔE L^{z}` |
/// | `Kappa` | κ | `h L^{1/ν_c} (|δ| L^{1/ν_δ})^κ` | `ζ/L` |
///
/// The two-parameter kinds use the same transforms on data where
/// `δ L^{1/ν_δ} = c` is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalingAnsatz {
    Zeta {},
    Ipr { nu: f64 },
    Gap { nu: f64 },
    ZetaTwoParam { nu_delta: f64, c: f64 },
    IprTwoParam { nu: f64, nu_delta: f64, c: f64 },
    GapTwoParam { nu: f64, nu_delta: f64, c: f64 },
    Kappa { nu_c: f64, nu_delta: f64 },
}

impl ScalingAnsatz {
    /// Name of the exponent searched over.
    pub fn searched_exponent(&self) -> &'static str {
        match self {
            Self::Zeta {} | Self::ZetaTwoParam { .. } => "nu",
            Self::Ipr { .. } | Self::IprTwoParam { .. } => "s",
            Self::Gap { .. } | Self::GapTwoParam { .. } => "z",
            Self::Kappa { .. } => "kappa",
        }
    }

    fn fixed_exponents(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Self::Zeta {} => vec![],
            Self::Ipr { nu } | Self::Gap { nu } => vec![("nu", nu)],
            Self::ZetaTwoParam { nu_delta, .. } => vec![("nu_delta", nu_delta)],
            Self::IprTwoParam { nu, nu_delta, .. } | Self::GapTwoParam { nu, nu_delta, .. } => {
                vec![("nu", nu), ("nu_delta", nu_delta)]
            }
            Self::Kappa { nu_c, nu_delta } => vec![("nu_c", nu_c), ("nu_delta", nu_delta)],
        }
    }

    fn validate(&self) -> Result<(), ScalingError> {
        for (name, v) in self.fixed_exponents() {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScalingError::AnsatzMismatch(format!(
                    "fixed exponent {name} must be positive and finite, got {v}"
                )));
            }
        }
        if let Self::ZetaTwoParam { c, .. } | Self::IprTwoParam { c, .. } | Self::GapTwoParam { c, .. } = *self {
            if !c.is_finite() {
                return Err(ScalingError::AnsatzMismatch("c must be finite".into()));
            }
        }
        Ok(())
    }

    /// Single-parameter kind with the same transform.
    fn base(&self) -> Self {
        match *self {
            Self::ZetaTwoParam { .. } => Self::Zeta {},
            Self::IprTwoParam { nu, .. } => Self::Ipr { nu },
            Self::GapTwoParam { nu, .. } => Self::Gap { nu },
            other => other,
        }
    }

    /// `(order key, Q)` for `p` at trial exponent `x`.
    pub fn transform(&self, x: f64, p: &ScalingPoint) -> (f64, f64) {
        let l = p.size as f64;
        match self.base() {
            Self::Zeta {} => (p.field * l.powf(1.0 / x), p.value / l),
            Self::Ipr { nu } => (p.field * l.powf(1.0 / nu), p.value * l.powf(x / nu)),
            Self::Gap { nu } => (p.field * l.powf(1.0 / nu), p.value * l.powf(x)),
            Self::Kappa { nu_c, nu_delta } => {
                let u = p.delta.abs() * l.powf(1.0 / nu_delta);
                (p.field * l.powf(1.0 / nu_c) * u.powf(x), p.value / l)
            }
            _ => unreachable!("base() returns single-parameter kinds"),
        }
    }
}

/// Uniform trial grid `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ExponentGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, ScalingError> {
        let g = Self { lo, hi, step };
        g.validate()?;
        Ok(g)
    }

    /// Fine grid of half-width `half_span` around `center`, clipped to `bounds`.
    pub fn around(center: f64, half_span: f64, step: f64, bounds: &ExponentGrid) -> Result<Self, ScalingError> {
        Self::new(
            (center - half_span).max(bounds.lo),
            (center + half_span).min(bounds.hi),
            step,
        )
    }

    fn validate(&self) -> Result<(), ScalingError> {
        let bad = |reason| ScalingError::BadGrid {
            lo: self.lo,
            hi: self.hi,
            step: self.step,
            reason,
        };
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(bad("non-finite bound"));
        }
        if !(self.step > 0.0) {
            return Err(bad("step must be positive"));
        }
        if !(self.hi > self.lo) {
            return Err(bad("hi must exceed lo"));
        }
        if self.len() < 3 {
            return Err(bad("fewer than 3 grid points"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub ansatz: ScalingAnsatz,
    pub exponent_name: String,
    pub best_exponent: f64,
    pub min_cost: f64,
    pub flat_window: (f64, f64),
    pub reported: f64,
    pub uncertainty: f64,
    pub flat_tol: f64,
    pub curve: Vec<(f64, f64)>,
}

fn check_points(points: &[ScalingPoint]) -> Result<(), ScalingError> {
    if points.len() < 2 {
        return Err(ScalingError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if points
        .iter()
        .any(|p| !(p.field.is_finite() && p.value.is_finite() && p.delta.is_finite()))
    {
        return Err(ScalingError::NonFinite);
    }
    if points.iter().any(|p| p.size == 0 || p.field < 0.0) {
        return Err(ScalingError::AnsatzMismatch(
            "sizes must be positive and fields non-negative".into(),
        ));
    }
    Ok(())
}

fn distinct_sizes(points: &[ScalingPoint]) -> usize {
    let mut s: Vec<usize> = points.iter().map(|p| p.size).collect();
    s.sort_unstable();
    s.dedup();
    s.len()
}

fn search(
    points: &[ScalingPoint],
    ansatz: ScalingAnsatz,
    grid: &ExponentGrid,
    flat_tol: f64,
) -> Result<CollapseResult, ScalingError> {
    grid.validate()?;
    if !(flat_tol >= 0.0 && flat_tol.is_finite()) {
        return Err(ScalingError::AnsatzMismatch(format!("flat_tol must be ≥ 0, got {flat_tol}")));
    }
    let xs = grid.values();
    let costs: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            let (keys, qs): (Vec<f64>, Vec<f64>) = points.iter().map(|p| ansatz.transform(x, p)).unzip();
            cost_function(&qs, &keys)
        })
        .collect::<Result<_, _>>()?;
    let best = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let min_cost = costs[best];
    let limit = ((1.0 + flat_tol) * min_cost).max(min_cost + COST_FLOOR);
    let mut lo = best;
    while lo > 0 && costs[lo - 1] <= limit {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < costs.len() && costs[hi + 1] <= limit {
        hi += 1;
    }
    if lo == 0 || hi == costs.len() - 1 {
        return Err(ScalingError::GridEdge {
            at: xs[best],
            lo: grid.lo,
            hi: grid.hi,
        });
    }
    let window = &xs[lo..=hi];
    let reported = window.iter().sum::<f64>() / window.len() as f64;
    Ok(CollapseResult {
        ansatz,
        exponent_name: ansatz.searched_exponent().to_string(),
        best_exponent: xs[best],
        min_cost,
        flat_window: (xs[lo], xs[hi]),
        reported,
        uncertainty: 0.5 * (xs[hi] - xs[lo]),
        flat_tol,
        curve: xs.into_iter().zip(costs).collect(),
    })
}

/// Grid search of the collapse cost over one exponent, pooling all sizes.
pub fn collapse_search(
    points: &[ScalingPoint],
    ansatz: ScalingAnsatz,
    grid: &ExponentGrid,
    flat_tol: f64,
) -> Result<CollapseResult, ScalingError> {
    check_points(points)?;
    ansatz.validate()?;
    if matches!(ansatz, ScalingAnsatz::Kappa { .. }) {
        return Err(ScalingError::AnsatzMismatch("use kappa_collapse for the κ ansatz".into()));
    }
    let n = distinct_sizes(points);
    if n < 3 {
        return Err(ScalingError::TooFewCurves {
            what: "system sizes",
            needed: 3,
            got: n,
        });
    }
    if grid.hi - grid.lo < 0.1 - 1e-12 {
        return Err(ScalingError::BadGrid {
            lo: grid.lo,
            hi: grid.hi,
            step: grid.step,
            reason: "span must be at least 0.1",
        });
    }
    search(points, ansatz, grid, flat_tol)
}

/// Dispatches on the ansatz kind: plain, two-parameter or κ collapse.
pub fn collapse(
    points: &[ScalingPoint],
    ansatz: ScalingAnsatz,
    grid: &ExponentGrid,
    flat_tol: f64,
) -> Result<CollapseResult, ScalingError> {
    match ansatz {
        ScalingAnsatz::Kappa { nu_c, nu_delta } => kappa_collapse(points, nu_c, nu_delta, grid, flat_tol),
        ScalingAnsatz::ZetaTwoParam { .. }
        | ScalingAnsatz::IprTwoParam { .. }
        | ScalingAnsatz::GapTwoParam { .. } => two_param_collapse(points, ansatz, grid, flat_tol),
        _ => collapse_search(points, ansatz, grid, flat_tol),
    }
}

/// Coarse pass over `coarse`, then a fine pass of step
/// [`DEFAULT_FINE_STEP`] within ±[`DEFAULT_HALF_SPAN`] of the coarse best.
pub fn collapse_search_refined(
    points: &[ScalingPoint],
    ansatz: ScalingAnsatz,
    coarse: &ExponentGrid,
    flat_tol: f64,
) -> Result<CollapseResult, ScalingError> {
    let first = collapse(points, ansatz, coarse, flat_tol)?;
    let fine = ExponentGrid::around(first.best_exponent, DEFAULT_HALF_SPAN, DEFAULT_FINE_STEP, coarse)?;
    collapse(points, ansatz, &fine, flat_tol)
}

/// Collapse on data where `δ L^{1/ν_δ} = c` for every point.
pub fn two_param_collapse(
    points: &[ScalingPoint],
    ansatz: ScalingAnsatz,
    grid: &ExponentGrid,
    flat_tol: f64,
) -> Result<CollapseResult, ScalingError> {
    let (nu_delta, c) = match ansatz {
        ScalingAnsatz::ZetaTwoParam { nu_delta, c }
        | ScalingAnsatz::IprTwoParam { nu_delta, c, .. }
        | ScalingAnsatz::GapTwoParam { nu_delta, c, .. } => (nu_delta, c),
        other => {
            return Err(ScalingError::AnsatzMismatch(format!(
                "two_param_collapse needs a two-parameter ansatz, got {other:?}"
            )))
        }
    };
    ansatz.validate()?;
    for p in points {
        let u = p.delta * (p.size as f64).powf(1.0 / nu_delta);
        if (u - c).abs() > 1e-9 * (1.0 + c.abs()) {
            return Err(ScalingError::AnsatzMismatch(format!(
                "point at L={} has δL^(1/ν_δ) = {u}, expected {c}",
                p.size
            )));
        }
    }
    let mut result = collapse_search(points, ansatz.base(), grid, flat_tol)?;
    result.ansatz = ansatz;
    Ok(result)
}

/// Search over κ at a single size across several `δ < 0`.
pub fn kappa_collapse(
    points: &[ScalingPoint],
    nu_c: f64,
    nu_delta: f64,
    grid: &ExponentGrid,
    flat_tol: f64,
) -> Result<CollapseResult, ScalingError> {
    check_points(points)?;
    let ansatz = ScalingAnsatz::Kappa { nu_c, nu_delta };
    ansatz.validate()?;
    if distinct_sizes(points) != 1 {
        return Err(ScalingError::AnsatzMismatch("κ collapse needs a single system size".into()));
    }
    if points.iter().any(|p| !(p.delta < 0.0)) {
        return Err(ScalingError::AnsatzMismatch("κ collapse needs δ < 0 throughout".into()));
    }
    let mut deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    if deltas.len() < 4 {
        return Err(ScalingError::TooFewCurves {
            what: "δ values",
            needed: 4,
            got: deltas.len(),
        });
    }
    search(points, ansatz, grid, flat_tol)
}
