//! Critical-exponent extraction: log-log power-law fits and cost-function
//! data collapse.

mod collapse;
mod cost;
mod fit;

use thiserror::Error;

pub use collapse::{
    collapse, collapse_search, collapse_search_refined, kappa_collapse, two_param_collapse,
    CollapseResult, ExponentGrid, ScalingAnsatz, ScalingPoint, DEFAULT_COLLAPSE_FIELDS,
    DEFAULT_FINE_STEP, DEFAULT_FLAT_TOL, DEFAULT_HALF_SPAN,
};
pub use cost::cost_function;
pub use fit::{
    fit_power_law, qfi_scaling, size_independent_window, Curve, CurvePoint, FitResult,
    QfiScaling, DEFAULT_FIT_H_MAX, DEFAULT_FIT_N_SIGMA,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("power-law fit requires strictly positive data")]
    NonPositive,
    #[error("x and y lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in scaling data")]
    NonFinite,
    #[error("collapse data is constant (max Q == min Q)")]
    ConstantData,
    #[error("collapse needs at least {needed} {what}, got {got}")]
    TooFewCurves {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("exponent grid [{lo}, {hi}] step {step} is invalid: {reason}")]
    BadGrid {
        lo: f64,
        hi: f64,
        step: f64,
        reason: &'static str,
    },
    #[error("cost minimum at exponent {at} touches the grid edge [{lo}, {hi}]; widen the grid")]
    GridEdge { at: f64, lo: f64, hi: f64 },
    #[error("ansatz mismatch: {0}")]
    AnsatzMismatch(String),
    #[error("no size-independent window: {0}")]
    NoWindow(String),
}
