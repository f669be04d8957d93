use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{
    CollapseConfig, Column, FidelityMapConfig, FitConfig, QfiConfig, SweepConfig,
    WavefunctionConfig,
};
use super::io::{companion_path, fmt_f64, write_csv, write_json, Sidecar, Table};
use super::CliError;
use crate::eigen::lowest_k;
use crate::ensemble::{run_sweep, DeltaSpec, EnsembleRecord, FieldSpec, SweepGrid, SweepOutput};
use crate::lattice::{build_hamiltonian, ModelParams};
use crate::observables::Selection;
use crate::scaling::{
    collapse, collapse_search_refined, fit_power_law, qfi_scaling, size_independent_window,
    CollapseResult, Curve, CurvePoint, FitResult, QfiScaling, ScalingPoint,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SWEEP_HEADER: [&str; 10] = [
    "L",
    "delta",
    "h",
    "phi_samples",
    "zeta_mean",
    "zeta_stderr",
    "ipr_mean",
    "ipr_stderr",
    "gap_mean",
    "gap_stderr",
];

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn sidecar<C: Serialize>(out: &Path, command: &str, seed: Option<u64>, config: &C) -> Result<PathBuf, CliError> {
    let path = companion_path(out, "meta.json");
    write_json(
        &path,
        &Sidecar {
            command,
            version: VERSION,
            master_seed: seed,
            config,
        },
    )?;
    Ok(path)
}

fn fail_on_partial(out: &SweepOutput) -> Result<(), CliError> {
    match out.failures.first() {
        None => Ok(()),
        Some(first) => Err(CliError::Numerical(format!(
            "{} of {} points failed; first: {first}",
            out.failures.len(),
            out.failures.len() + out.records.len()
        ))),
    }
}

pub fn sweep_rows(records: &[EnsembleRecord], with_qfi: bool) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.point.size.to_string(),
                fmt_f64(r.point.delta),
                fmt_f64(r.point.field),
                r.zeta.n.to_string(),
                fmt_f64(r.zeta.mean),
                fmt_f64(r.zeta.stderr),
                fmt_f64(r.ipr.mean),
                fmt_f64(r.ipr.stderr),
                fmt_f64(r.gap.mean),
                fmt_f64(r.gap.stderr),
            ];
            if with_qfi {
                let q = r.qfi.expect("qfi requested");
                row.push(fmt_f64(q.mean));
                row.push(fmt_f64(q.stderr));
            }
            row
        })
        .collect()
}

pub fn sweep(cfg: &SweepConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let selection = Selection {
        qfi: cfg.qfi,
        fidelity_reference_delta: None,
    };
    let result = run_sweep(&cfg.grid(), &selection)?;
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if cfg.qfi {
        header.extend(["qfi_mean", "qfi_stderr"]);
    }
    write_csv(out, &header, &sweep_rows(&result.records, cfg.qfi))?;
    let meta = sidecar(out, "sweep", Some(cfg.master_seed), cfg)?;
    fail_on_partial(&result)?;
    Ok(vec![out.to_path_buf(), meta])
}

/// Rows of a sweep CSV as scaling points for one observable.
pub fn read_points(path: &Path, column: Column) -> Result<Vec<ScalingPoint>, CliError> {
    let t = Table::read(path)?;
    let (l, d, h, v) = (
        t.column("L")?,
        t.column("delta")?,
        t.column("h")?,
        t.column(column.mean_header())?,
    );
    t.rows
        .iter()
        .map(|r| {
            let size = r[l];
            if !(size >= 1.0 && size.fract() == 0.0) {
                return Err(CliError::Config(format!("{}: bad L value {size}", path.display())));
            }
            Ok(ScalingPoint {
                size: size as usize,
                delta: r[d],
                field: r[h],
                value: r[v],
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct CollapseReport<'a> {
    pub version: &'a str,
    pub config: &'a CollapseConfig,
    pub observable: Column,
    pub n_points: usize,
    pub result: CollapseResult,
}

pub fn select_collapse_points(cfg: &CollapseConfig, points: Vec<ScalingPoint>) -> Vec<ScalingPoint> {
    let (lo, hi) = cfg.field_window;
    points
        .into_iter()
        .filter(|p| p.field >= lo * (1.0 - 1e-12) && p.field <= hi * (1.0 + 1e-12))
        .filter(|p| cfg.sizes.as_ref().map_or(true, |s| s.contains(&p.size)))
        .filter(|p| {
            cfg.deltas
                .as_ref()
                .map_or(true, |ds| ds.iter().any(|&d| same(d, p.delta)))
        })
        .collect()
}

pub fn run_collapse(cfg: &CollapseConfig) -> Result<(usize, CollapseResult), CliError> {
    let column = Column::for_ansatz(&cfg.ansatz);
    let points = select_collapse_points(cfg, read_points(&cfg.input, column)?);
    let result = if cfg.refine {
        collapse_search_refined(&points, cfg.ansatz, &cfg.grid, cfg.flat_tol)?
    } else {
        collapse(&points, cfg.ansatz, &cfg.grid, cfg.flat_tol)?
    };
    Ok((points.len(), result))
}

pub fn collapse_cmd(cfg: &CollapseConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let (n_points, result) = run_collapse(cfg)?;
    write_json(
        out,
        &CollapseReport {
            version: VERSION,
            config: cfg,
            observable: Column::for_ansatz(&cfg.ansatz),
            n_points,
            result,
        },
    )?;
    Ok(vec![out.to_path_buf()])
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport<'a> {
    pub version: &'a str,
    pub config: &'a FitConfig,
    pub size: usize,
    pub delta: f64,
    /// `"override"` or `"size_independent_tail"`.
    pub window_source: &'static str,
    pub fit: FitResult,
}

fn curves_for(t: &Table, cfg: &FitConfig) -> Result<Vec<Curve>, CliError> {
    let (l, d, h) = (t.column("L")?, t.column("delta")?, t.column("h")?);
    let (m, s) = (t.column(cfg.column.mean_header())?, t.column(cfg.column.stderr_header())?);
    let mut by_size: BTreeMap<usize, Vec<&Vec<f64>>> = BTreeMap::new();
    for r in &t.rows {
        if cfg.delta.map_or(true, |want| same(want, r[d])) {
            by_size.entry(r[l] as usize).or_default().push(r);
        }
    }
    let mut curves = Vec::new();
    for (size, rows) in by_size {
        let delta = rows[0][d];
        if rows.iter().any(|r| !same(r[d], delta)) {
            return Err(CliError::Config(format!(
                "L={size} has several δ values; set `delta` in the fit config"
            )));
        }
        let mut points: Vec<CurvePoint> = rows
            .iter()
            .map(|r| CurvePoint {
                field: r[h],
                mean: r[m],
                stderr: r[s],
            })
            .collect();
        points.sort_by(|a, b| a.field.total_cmp(&b.field));
        curves.push(Curve { size, delta, points });
    }
    if curves.is_empty() {
        return Err(CliError::Config("no rows match the fit selection".into()));
    }
    Ok(curves)
}

pub fn run_fit(cfg: &FitConfig) -> Result<(usize, f64, &'static str, FitResult), CliError> {
    let t = Table::read(&cfg.input)?;
    let curves = curves_for(&t, cfg)?;
    let target = match cfg.size {
        Some(s) => curves
            .iter()
            .find(|c| c.size == s)
            .ok_or_else(|| CliError::Config(format!("no rows for L={s}")))?,
        None => curves.last().expect("non-empty"),
    };
    let (window, source) = match cfg.window {
        Some(w) => (w, "override"),
        None => (
            size_independent_window(&curves, cfg.n_sigma, Some(cfg.h_max))?,
            "size_independent_tail",
        ),
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = target
        .points
        .iter()
        .filter(|p| p.field >= window.0 * (1.0 - 1e-12) && p.field <= window.1 * (1.0 + 1e-12))
        .map(|p| (p.field, p.mean))
        .unzip();
    let fit = fit_power_law(&xs, &ys)?;
    Ok((target.size, target.delta, source, fit))
}

pub fn fit_cmd(cfg: &FitConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let (size, delta, window_source, fit) = run_fit(cfg)?;
    write_json(
        out,
        &FitReport {
            version: VERSION,
            config: cfg,
            size,
            delta,
            window_source,
            fit,
        },
    )?;
    Ok(vec![out.to_path_buf()])
}

pub fn fidelity_records(cfg: &FidelityMapConfig) -> Result<Vec<EnsembleRecord>, CliError> {
    if !(0.0..=1.0).contains(&cfg.high_fidelity_threshold) {
        return Err(CliError::Config("high_fidelity_threshold must lie in [0, 1]".into()));
    }
    let grid = SweepGrid {
        sizes: vec![cfg.size],
        deltas: DeltaSpec::Values(cfg.deltas.clone()),
        fields: cfg.fields.clone(),
        n_samples: cfg.n_samples,
        master_seed: cfg.master_seed,
        hopping: cfg.hopping,
        frequency: cfg.frequency,
    };
    let selection = Selection {
        qfi: false,
        fidelity_reference_delta: Some(cfg.reference()),
    };
    let out = run_sweep(&grid, &selection)?;
    fail_on_partial(&out)?;
    Ok(out.records)
}

pub fn fidelity_map(cfg: &FidelityMapConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let records = fidelity_records(cfg)?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let f = r.fidelity.expect("fidelity requested");
            vec![
                fmt_f64(r.point.delta),
                fmt_f64(r.point.field),
                fmt_f64(f.mean),
                fmt_f64(f.stderr),
                u8::from(f.mean >= cfg.high_fidelity_threshold).to_string(),
            ]
        })
        .collect();
    write_csv(
        out,
        &["delta", "h", "fidelity_mean", "fidelity_stderr", "high_fidelity"],
        &rows,
    )?;
    let meta = sidecar(out, "fidelity-map", Some(cfg.master_seed), cfg)?;
    Ok(vec![out.to_path_buf(), meta])
}

#[derive(Debug, Serialize)]
pub struct QfiReport<'a> {
    pub version: &'a str,
    pub config: &'a QfiConfig,
    pub scaling: QfiScaling,
}

pub fn qfi_records(cfg: &QfiConfig) -> Result<Vec<EnsembleRecord>, CliError> {
    let grid = SweepGrid {
        sizes: cfg.sizes.clone(),
        deltas: DeltaSpec::Values(vec![cfg.delta]),
        fields: FieldSpec::Values(vec![cfg.field]),
        n_samples: cfg.n_samples,
        master_seed: cfg.master_seed,
        hopping: cfg.hopping,
        frequency: cfg.frequency,
    };
    let selection = Selection {
        qfi: true,
        fidelity_reference_delta: None,
    };
    let out = run_sweep(&grid, &selection)?;
    fail_on_partial(&out)?;
    Ok(out.records)
}

pub fn qfi_cmd(cfg: &QfiConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let records = qfi_records(cfg)?;
    let sizes: Vec<usize> = records.iter().map(|r| r.point.size).collect();
    let means: Vec<f64> = records.iter().map(|r| r.qfi.expect("qfi requested").mean).collect();
    let scaling = qfi_scaling(&sizes, &means, cfg.nu)?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let q = r.qfi.expect("qfi requested");
            vec![r.point.size.to_string(), fmt_f64(q.mean), fmt_f64(q.stderr)]
        })
        .collect();
    write_csv(out, &["L", "qfi_mean", "qfi_stderr"], &rows)?;
    let fit_path = companion_path(out, "fit.json");
    write_json(
        &fit_path,
        &QfiReport {
            version: VERSION,
            config: cfg,
            scaling,
        },
    )?;
    let meta = sidecar(out, "qfi", Some(cfg.master_seed), cfg)?;
    Ok(vec![out.to_path_buf(), fit_path, meta])
}

/// Gauge-fixed ground state at a single `(L, δ, h, φ)`.
pub fn ground_state(cfg: &WavefunctionConfig) -> Result<Vec<f64>, CliError> {
    let params = ModelParams::new(cfg.size, cfg.delta, cfg.field)
        .with_hopping(cfg.hopping)
        .with_frequency(cfg.frequency)
        .with_phase(cfg.phase);
    let h = build_hamiltonian(&params)?;
    let spectrum = lowest_k(&h, 1)?;
    Ok(spectrum.ground_state().to_vec())
}

pub fn wavefunction(cfg: &WavefunctionConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let psi = ground_state(cfg)?;
    let rows: Vec<Vec<String>> = psi
        .iter()
        .enumerate()
        .map(|(i, &a)| vec![(i + 1).to_string(), fmt_f64(a), fmt_f64(a * a)])
        .collect();
    write_csv(out, &["site", "amplitude", "probability"], &rows)?;
    let meta = sidecar(out, "wavefunction", None, cfg)?;
    Ok(vec![out.to_path_buf(), meta])
}
