//! JSON run configurations, one per subcommand. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::ensemble::{DeltaSpec, FieldSpec, SweepGrid};
use crate::lattice::Frequency;
use crate::scaling::{
    ExponentGrid, ScalingAnsatz, DEFAULT_COLLAPSE_FIELDS, DEFAULT_FIT_H_MAX, DEFAULT_FIT_N_SIGMA,
    DEFAULT_FLAT_TOL,
};

pub const DEFAULT_SAMPLES: usize = 500;
pub const FIGURE_FAITHFUL_SAMPLES: usize = 5000;
pub const DEFAULT_MAP_SIZE: usize = 610;
pub const DEFAULT_MAP_SAMPLES: usize = 100;
pub const DEFAULT_HIGH_FIDELITY: f64 = 0.9;
pub const DEFAULT_QFI_FIELD: f64 = 1e-9;
pub const DEFAULT_QFI_SIZES: [usize; 7] = [21, 34, 55, 89, 144, 233, 377];

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_hopping() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_flat_tol() -> f64 {
    DEFAULT_FLAT_TOL
}
fn default_collapse_fields() -> (f64, f64) {
    DEFAULT_COLLAPSE_FIELDS
}
fn default_h_max() -> f64 {
    DEFAULT_FIT_H_MAX
}
fn default_n_sigma() -> f64 {
    DEFAULT_FIT_N_SIGMA
}
fn default_map_size() -> usize {
    DEFAULT_MAP_SIZE
}
fn default_map_samples() -> usize {
    DEFAULT_MAP_SAMPLES
}
fn default_map_deltas() -> Vec<f64> {
    (0..=10).map(|i| -1.0 + 0.1 * i as f64).collect()
}
fn default_map_fields() -> FieldSpec {
    FieldSpec::LogSpaced {
        lo_decade: -9,
        hi_decade: 0,
        per_decade: 2,
    }
}
fn default_high_fidelity() -> f64 {
    DEFAULT_HIGH_FIDELITY
}
fn default_qfi_sizes() -> Vec<usize> {
    DEFAULT_QFI_SIZES.to_vec()
}
fn default_qfi_field() -> f64 {
    DEFAULT_QFI_FIELD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub deltas: DeltaSpec,
    pub fields: FieldSpec,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub frequency: Frequency,
    /// Adds the `qfi_mean,qfi_stderr` columns.
    #[serde(default)]
    pub qfi: bool,
}

impl SweepConfig {
    pub fn grid(&self) -> SweepGrid {
        SweepGrid {
            sizes: self.sizes.clone(),
            deltas: self.deltas.clone(),
            fields: self.fields.clone(),
            n_samples: self.n_samples,
            master_seed: self.master_seed,
            hopping: self.hopping,
            frequency: self.frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Zeta,
    Ipr,
    Gap,
    Qfi,
}

impl Column {
    pub fn mean_header(self) -> &'static str {
        match self {
            Column::Zeta => "zeta_mean",
            Column::Ipr => "ipr_mean",
            Column::Gap => "gap_mean",
            Column::Qfi => "qfi_mean",
        }
    }

    pub fn stderr_header(self) -> &'static str {
        match self {
            Column::Zeta => "zeta_stderr",
            Column::Ipr => "ipr_stderr",
            Column::Gap => "gap_stderr",
            Column::Qfi => "qfi_stderr",
        }
    }

    /// Observable an ansatz is written for.
    pub fn for_ansatz(a: &ScalingAnsatz) -> Self {
        match a {
            ScalingAnsatz::Ipr { .. } | ScalingAnsatz::IprTwoParam { .. } => Column::Ipr,
            ScalingAnsatz::Gap { .. } | ScalingAnsatz::GapTwoParam { .. } => Column::Gap,
            _ => Column::Zeta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseConfig {
    /// Sweep CSV to read.
    pub input: PathBuf,
    pub ansatz: ScalingAnsatz,
    /// Coarse grid; with `refine` a fine pass follows around its best value.
    pub grid: ExponentGrid,
    #[serde(default = "default_true")]
    pub refine: bool,
    #[serde(default = "default_flat_tol")]
    pub flat_tol: f64,
    /// Inclusive `[h_lo, h_hi]` of rows pooled into the collapse.
    #[serde(default = "default_collapse_fields")]
    pub field_window: (f64, f64),
    /// Keep only these sizes.
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    /// Keep only these δ values.
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub input: PathBuf,
    pub column: Column,
    /// Size whose curve is fitted; the largest in the file by default.
    #[serde(default)]
    pub size: Option<usize>,
    /// Needed when a size carries more than one δ.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Explicit `[h_lo, h_hi]`; otherwise the size-independent tail is used.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    #[serde(default = "default_n_sigma")]
    pub n_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityMapConfig {
    #[serde(default = "default_map_size")]
    pub size: usize,
    #[serde(default = "default_map_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_map_fields")]
    pub fields: FieldSpec,
    #[serde(default = "default_map_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub frequency: Frequency,
    /// Reference δ; `−2J` (pure Stark) when absent.
    #[serde(default)]
    pub reference_delta: Option<f64>,
    #[serde(default = "default_high_fidelity")]
    pub high_fidelity_threshold: f64,
}

impl FidelityMapConfig {
    pub fn reference(&self) -> f64 {
        self.reference_delta.unwrap_or(-2.0 * self.hopping)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiConfig {
    #[serde(default = "default_qfi_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_qfi_field")]
    pub field: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub frequency: Frequency,
    /// Localization exponent for the `2/ν` comparison.
    #[serde(default)]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavefunctionConfig {
    pub size: usize,
    pub delta: f64,
    pub field: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub frequency: Frequency,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let ok = r#"{"sizes":[55],"deltas":{"values":[0.0]},"fields":{"values":[1e-3]}}"#;
        let c: SweepConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(c.n_samples, DEFAULT_SAMPLES);
        assert_eq!(c.hopping, 1.0);
        assert!(!c.qfi);
        let bad = r#"{"sizes":[55],"deltas":{"values":[0.0]},"fields":{"values":[1e-3]},"typo":1}"#;
        assert!(serde_json::from_str::<SweepConfig>(bad).is_err());
        let nested = r#"{"sizes":[55],"deltas":{"fixed_scaling":{"c":1,"nu_delta":1,"x":2}},"fields":{"values":[1e-3]}}"#;
        assert!(serde_json::from_str::<SweepConfig>(nested).is_err());
    }

    #[test]
    fn collapse_defaults() {
        let c: CollapseConfig = serde_json::from_str(
            r#"{"input":"a.csv","ansatz":{"kind":"ipr","nu":0.29},"grid":{"lo":0.0,"hi":0.3,"step":0.01}}"#,
        )
        .unwrap();
        assert!(c.refine);
        assert_eq!(c.field_window, DEFAULT_COLLAPSE_FIELDS);
        assert_eq!(Column::for_ansatz(&c.ansatz), Column::Ipr);
        assert!(serde_json::from_str::<CollapseConfig>(
            r#"{"input":"a.csv","ansatz":{"kind":"zeta","nu":0.29},"grid":{"lo":0.0,"hi":0.3,"step":0.01}}"#
        )
        .is_err());
    }

    #[test]
    fn map_defaults() {
        let c: FidelityMapConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c.size, 610);
        assert_eq!(c.n_samples, 100);
        assert_eq!(c.reference(), -2.0);
        assert_eq!(c.deltas.len(), 11);
        let q: QfiConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(q.sizes, DEFAULT_QFI_SIZES.to_vec());
        assert_eq!(q.field, 1e-9);
    }
}
