//! Phase-averaged observables over grids of `(L, δ, h)`.
//!
//! Every random phase is a pure function of `(master_seed, point_id,
//! sample_index)`, and per-point reductions run in sample order after the
//! parallel solve, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{is_fibonacci_size, Frequency, ModelParams};
use crate::observables::{measure, ObservableError, ObservableRecord, Selection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("point {point} (L={size}, δ={delta}, h={field}), sample {sample}: {source}")]
    Sample {
        point: usize,
        sample: usize,
        size: usize,
        delta: f64,
        field: f64,
        #[source]
        source: ObservableError,
    },
}

/// Uniform phase in `[0, 1)` keyed on `(master_seed, point_id, sample_index)`.
///
/// ChaCha20 keyed by the seed, with the point as the stream id and the sample
/// index as the block position.
pub fn sample_phase(master_seed: u64, point_id: u64, sample_index: u64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(point_id);
    rng.set_word_pos(u128::from(sample_index) * 16);
    rng.gen::<f64>()
}

/// Mean, standard error of the mean and sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStat {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl EnsembleStat {
    /// Reduces in slice order. Identical samples give exactly their value and
    /// a zero error.
    pub fn from_samples(xs: &[f64]) -> Self {
        assert!(!xs.is_empty(), "EnsembleStat needs at least one sample");
        let n = xs.len();
        let pivot = xs[0];
        let shift: f64 = xs.iter().map(|x| x - pivot).sum::<f64>() / n as f64;
        let mean = pivot + shift;
        let stderr = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / ((n - 1) as f64 * n as f64)).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }
}

/// One grid point without its phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub size: usize,
    pub delta: f64,
    pub field: f64,
    pub hopping: f64,
    pub frequency: Frequency,
}

impl PointSpec {
    pub fn new(size: usize, delta: f64, field: f64) -> Self {
        Self {
            size,
            delta,
            field,
            hopping: 1.0,
            frequency: Frequency::Fibonacci,
        }
    }

    pub fn params(&self, phase: f64) -> ModelParams {
        ModelParams::new(self.size, self.delta, self.field)
            .with_hopping(self.hopping)
            .with_frequency(self.frequency)
            .with_phase(phase)
    }

    /// Without the AA term the phase has no effect.
    fn phase_independent(&self) -> bool {
        2.0 * self.hopping + self.delta == 0.0
    }
}

/// Phase-averaged observables at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub point: PointSpec,
    pub zeta: EnsembleStat,
    pub ipr: EnsembleStat,
    pub gap: EnsembleStat,
    pub qfi: Option<EnsembleStat>,
    pub fidelity: Option<EnsembleStat>,
}

impl EnsembleRecord {
    fn reduce(point: PointSpec, samples: &[ObservableRecord]) -> Self {
        let stat = |f: &dyn Fn(&ObservableRecord) -> f64| {
            EnsembleStat::from_samples(&samples.iter().map(f).collect::<Vec<_>>())
        };
        let optional = |f: &dyn Fn(&ObservableRecord) -> Option<f64>| {
            samples
                .iter()
                .map(f)
                .collect::<Option<Vec<f64>>>()
                .map(|v| EnsembleStat::from_samples(&v))
        };
        Self {
            point,
            zeta: stat(&|r| r.zeta),
            ipr: stat(&|r| r.ipr),
            gap: stat(&|r| r.gap),
            qfi: optional(&|r| r.qfi),
            fidelity: optional(&|r| r.fidelity_vs_stark),
        }
    }
}

/// Phase averaging at a single point. Samples are solved in parallel and
/// reduced in index order.
pub fn average_point(
    point: &PointSpec,
    n_samples: usize,
    master_seed: u64,
    point_id: u64,
    selection: &Selection,
) -> Result<EnsembleRecord, EnsembleError> {
    if n_samples == 0 {
        return Err(EnsembleError::InvalidGrid("n_samples must be at least 1".into()));
    }
    let samples = solve_samples(point, n_samples, master_seed, point_id, selection)?;
    Ok(EnsembleRecord::reduce(*point, &samples))
}

fn solve_sample(
    point: &PointSpec,
    master_seed: u64,
    point_id: u64,
    sample: usize,
    selection: &Selection,
) -> Result<ObservableRecord, EnsembleError> {
    let phase = sample_phase(master_seed, point_id, sample as u64);
    measure(&point.params(phase), selection).map_err(|source| EnsembleError::Sample {
        point: point_id as usize,
        sample,
        size: point.size,
        delta: point.delta,
        field: point.field,
        source,
    })
}

fn solve_samples(
    point: &PointSpec,
    n_samples: usize,
    master_seed: u64,
    point_id: u64,
    selection: &Selection,
) -> Result<Vec<ObservableRecord>, EnsembleError> {
    if point.phase_independent() {
        let one = solve_sample(point, master_seed, point_id, 0, selection)?;
        return Ok(vec![one; n_samples]);
    }
    (0..n_samples)
        .into_par_iter()
        .map(|k| solve_sample(point, master_seed, point_id, k, selection))
        .collect()
}

/// How δ is chosen for each system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaSpec {
    /// The same list for every size.
    Values(Vec<f64>),
    /// `δ = c·L^(−1/ν_δ)`, i.e. fixed `δL^(1/ν_δ) = c`.
    FixedScaling { c: f64, nu_delta: f64 },
}

impl DeltaSpec {
    pub fn deltas_for(&self, size: usize) -> Vec<f64> {
        match self {
            DeltaSpec::Values(v) => v.clone(),
            DeltaSpec::FixedScaling { c, nu_delta } => {
                vec![c * (size as f64).powf(-1.0 / nu_delta)]
            }
        }
    }
}

/// Field values: an explicit list or a log-spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Values(Vec<f64>),
    /// `10^(lo + k/per_decade)` for `k = 0..=(hi − lo)·per_decade`.
    LogSpaced {
        lo_decade: i32,
        hi_decade: i32,
        per_decade: usize,
    },
}

impl FieldSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            FieldSpec::Values(v) => v.clone(),
            FieldSpec::LogSpaced {
                lo_decade,
                hi_decade,
                per_decade,
            } => {
                let steps = (hi_decade - lo_decade).max(0) as usize * per_decade;
                (0..=steps)
                    .map(|k| {
                        let exponent = *lo_decade as f64 + k as f64 / *per_decade as f64;
                        10f64.powf(exponent)
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub sizes: Vec<usize>,
    pub deltas: DeltaSpec,
    pub fields: FieldSpec,
    pub n_samples: usize,
    pub master_seed: u64,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default)]
    pub frequency: Frequency,
}

fn default_hopping() -> f64 {
    1.0
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: String| Err(EnsembleError::InvalidGrid(m));
        if self.sizes.is_empty() {
            return bad("no system sizes".into());
        }
        if self.frequency == Frequency::Fibonacci {
            if let Some(l) = self.sizes.iter().find(|&&l| !is_fibonacci_size(l)) {
                return bad(format!("size {l} is not a Fibonacci number"));
            }
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        let fields = self.fields.values();
        if fields.is_empty() {
            return bad("no field values".into());
        }
        if fields.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return bad("field values must be strictly positive".into());
        }
        if fields.windows(2).any(|w| w[0] >= w[1]) {
            return bad("field values must be strictly ascending".into());
        }
        if let DeltaSpec::Values(v) = &self.deltas {
            if v.is_empty() {
                return bad("no δ values".into());
            }
        }
        if let DeltaSpec::FixedScaling { nu_delta, .. } = &self.deltas {
            if !(*nu_delta > 0.0) {
                return bad("ν_δ must be positive".into());
            }
        }
        for l in &self.sizes {
            for d in self.deltas.deltas_for(*l) {
                if let Err(e) = PointSpec::new(*l, d, fields[0]).params(0.0).validate() {
                    return bad(e.to_string());
                }
            }
        }
        Ok(())
    }

    /// Grid points ordered by `(L, δ, h)`; the position is the point id.
    pub fn points(&self) -> Vec<PointSpec> {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        sizes.dedup();
        let fields = self.fields.values();
        let mut out = Vec::new();
        for l in sizes {
            let mut deltas = self.deltas.deltas_for(l);
            deltas.sort_by(f64::total_cmp);
            deltas.dedup();
            for d in deltas {
                for &h in &fields {
                    out.push(PointSpec {
                        size: l,
                        delta: d,
                        field: h,
                        hopping: self.hopping,
                        frequency: self.frequency,
                    });
                }
            }
        }
        out
    }
}

/// Completed records plus the points that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<EnsembleRecord>,
    pub failures: Vec<EnsembleError>,
}

impl SweepOutput {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every `(point, sample)` work item concurrently and reduces per point
/// in sample order.
pub fn run_sweep(grid: &SweepGrid, selection: &Selection) -> Result<SweepOutput, EnsembleError> {
    grid.validate()?;
    let points = grid.points();
    let n = grid.n_samples;
    let seed = grid.master_seed;

    let items: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, spec)| {
            let count = if spec.phase_independent() { 1 } else { n };
            (0..count).map(move |k| (p, k))
        })
        .collect();

    let solved: Vec<Result<ObservableRecord, EnsembleError>> = items
        .par_iter()
        .map(|&(p, k)| solve_sample(&points[p], seed, p as u64, k, selection))
        .collect();

    let mut records = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    let mut cursor = solved.into_iter();
    for spec in &points {
        let count = if spec.phase_independent() { 1 } else { n };
        let chunk: Result<Vec<ObservableRecord>, EnsembleError> =
            cursor.by_ref().take(count).collect();
        match chunk {
            Ok(mut samples) => {
                if samples.len() == 1 && n > 1 {
                    samples = vec![samples[0]; n];
                }
                records.push(EnsembleRecord::reduce(*spec, &samples));
            }
            Err(e) => failures.push(e),
        }
    }
    Ok(SweepOutput { records, failures })
}

/// Runs `f` on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(n: usize) -> SweepGrid {
        SweepGrid {
            sizes: vec![21],
            deltas: DeltaSpec::Values(vec![0.0]),
            fields: FieldSpec::Values(vec![1e-3, 1e-2, 1e-1]),
            n_samples: n,
            master_seed: 7,
            hopping: 1.0,
            frequency: Frequency::Fibonacci,
        }
    }

    #[test]
    fn phase_deterministic_and_distinct() {
        let a = sample_phase(42, 3, 9);
        assert_eq!(a, sample_phase(42, 3, 9));
        assert_ne!(a, sample_phase(42, 3, 10));
        assert_ne!(a, sample_phase(42, 4, 9));
        assert_ne!(a, sample_phase(43, 3, 9));
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn phase_is_uniform() {
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|k| sample_phase(2024, 17, k)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let lo = (x - i as f64 / n as f64).abs();
                let hi = ((i + 1) as f64 / n as f64 - x).abs();
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn stat_reduction() {
        let s = EnsembleStat::from_samples(&[2.0]);
        assert_eq!((s.mean, s.stderr, s.n), (2.0, 0.0, 1));
        let x = 0.1 + 0.2;
        let s = EnsembleStat::from_samples(&[x; 7]);
        assert_eq!((s.mean, s.stderr), (x, 0.0));
        let s = EnsembleStat::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-15);
        // sample sd sqrt(5/3), over sqrt(4)
        assert!((s.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_sample_point() {
        let p = PointSpec::new(34, 0.0, 1e-2);
        let rec = average_point(&p, 1, 5, 0, &Selection::default()).unwrap();
        let direct = measure(&p.params(sample_phase(5, 0, 0)), &Selection::default()).unwrap();
        assert_eq!(rec.zeta.mean, direct.zeta);
        assert_eq!(rec.zeta.stderr, 0.0);
        assert_eq!(rec.gap.mean, direct.gap);
    }

    #[test]
    fn pure_stark_has_no_spread() {
        let p = PointSpec::new(34, -2.0, 1e-2);
        let rec = average_point(&p, 20, 5, 0, &Selection { qfi: true, ..Default::default() })
            .unwrap();
        assert_eq!(rec.zeta.stderr, 0.0);
        assert_eq!(rec.ipr.stderr, 0.0);
        assert_eq!(rec.qfi.unwrap().stderr, 0.0);
        assert_eq!(rec.zeta.n, 20);
    }

    #[test]
    fn sweep_shape_and_order() {
        let out = run_sweep(&small_grid(1), &Selection::default()).unwrap();
        assert!(out.is_complete());
        assert_eq!(out.records.len(), 3);
        let hs: Vec<f64> = out.records.iter().map(|r| r.point.field).collect();
        assert_eq!(hs, vec![1e-3, 1e-2, 1e-1]);
    }

    #[test]
    fn sweep_independent_of_thread_count() {
        let grid = SweepGrid {
            sizes: vec![34, 21],
            deltas: DeltaSpec::Values(vec![0.0, -0.1]),
            n_samples: 16,
            ..small_grid(16)
        };
        let sel = Selection { qfi: true, ..Default::default() };
        let one = with_threads(Some(1), || run_sweep(&grid, &sel).unwrap());
        let four = with_threads(Some(4), || run_sweep(&grid, &sel).unwrap());
        assert_eq!(one, four);
        let keys: Vec<(usize, f64)> = one.records.iter().map(|r| (r.point.size, r.point.delta)).collect();
        assert_eq!(keys[0], (21, -0.1));
        assert_eq!(keys.last().copied(), Some((34, 0.0)));
    }

    #[test]
    fn fixed_scaling_rule() {
        let rule = DeltaSpec::FixedScaling { c: 1.0, nu_delta: 0.29 };
        for l in [144usize, 233, 377] {
            let d = rule.deltas_for(l);
            assert_eq!(d.len(), 1);
            assert!((d[0] - (l as f64).powf(-1.0 / 0.29)).abs() <= 1e-15 * d[0]);
        }
        let neg = DeltaSpec::FixedScaling { c: -1.0, nu_delta: 1.0 };
        assert_eq!(neg.deltas_for(377), vec![-1.0 / 377.0]);
    }

    #[test]
    fn log_grid() {
        let h = FieldSpec::LogSpaced { lo_decade: -6, hi_decade: 0, per_decade: 20 }.values();
        assert_eq!(h.len(), 121);
        assert!((h[0] - 1e-6).abs() < 1e-21);
        assert!((h[120] - 1.0).abs() < 1e-15);
        assert!(h.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_validation() {
        let mut g = small_grid(1);
        g.sizes = vec![20];
        assert!(run_sweep(&g, &Selection::default()).is_err());
        let mut g = small_grid(0);
        assert!(g.validate().is_err());
        g.n_samples = 1;
        g.fields = FieldSpec::Values(vec![0.1, 0.01]);
        assert!(g.validate().is_err());
        g.fields = FieldSpec::Values(vec![0.0, 0.01]);
        assert!(g.validate().is_err());
    }

    #[test]
    fn stderr_scaling_with_samples() {
        let p = PointSpec::new(55, 0.0, 1e-3);
        let mut ratios = Vec::new();
        for seed in 0..4 {
            let small = average_point(&p, 100, seed, 0, &Selection::default()).unwrap();
            let large = average_point(&p, 400, seed + 100, 0, &Selection::default()).unwrap();
            ratios.push(small.zeta.stderr / large.zeta.stderr);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((1.6..=2.4).contains(&mean), "ratio {mean}");
    }
}
