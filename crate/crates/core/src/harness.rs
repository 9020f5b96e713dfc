//! Monte-Carlo experiment drivers and their CSV / JSON output.
//!
//! Every repetition `k` of an experiment runs with a seed derived from the
//! master seed and `k` alone, so a repetition's result does not depend on how
//! many others run, and all sweep points share the same repetition seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, RunRecord};
use crate::environment::Arena;
use crate::error::{Error, Result};
use crate::metrics::decision_time;
use crate::params::{Patch, SimParams, SwitchMode};

pub const SCHEMA_VERSION: u32 = 1;

/// `git describe` of the build, when available.
pub const BUILD_DESCRIPTION: &str = match option_env!("COLLEST_GIT_DESCRIBE") {
    Some(d) => d,
    None => env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArenaPoint {
    pub arena: Arena,
    pub patch: Patch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    None,
    SwitchTime {
        values: Vec<u64>,
    },
    DeltaPrec {
        values: Vec<f64>,
        /// Total durations to run every value under; empty means `base.t_f`.
        #[serde(default)]
        horizons: Vec<u64>,
    },
    ArenaSize {
        arenas: Vec<ArenaPoint>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub base: SimParams,
    pub repetitions: usize,
    pub sweep: Sweep,
    /// When set, CSV files and a manifest are written here.
    pub out_dir: Option<PathBuf>,
    pub record_stride: u64,
    /// Adds square-root columns of the three errors to the CSV output.
    pub sqrt_errors: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            base: SimParams::default(),
            repetitions: 40,
            sweep: Sweep::None,
            out_dir: None,
            record_stride: 10,
            sqrt_errors: false,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        let empty = match &self.sweep {
            Sweep::None => false,
            Sweep::SwitchTime { values } => values.is_empty(),
            Sweep::DeltaPrec { values, .. } => values.is_empty(),
            Sweep::ArenaSize { arenas } => arenas.is_empty(),
        };
        if empty {
            return Err(Error::Config("sweep lists must not be empty".into()));
        }
        for p in self.sweep_params()? {
            p.validate()?;
        }
        Ok(())
    }

    /// Parameter set of every sweep point, in output order.
    fn sweep_params(&self) -> Result<Vec<SimParams>> {
        let base = &self.base;
        Ok(match &self.sweep {
            Sweep::None => vec![base.clone()],
            Sweep::SwitchTime { values } => values
                .iter()
                .map(|&t_sw| SimParams {
                    switch_mode: SwitchMode::Fixed { t_sw },
                    ..base.clone()
                })
                .collect(),
            Sweep::DeltaPrec { values, horizons } => {
                let horizons = if horizons.is_empty() {
                    vec![base.t_f]
                } else {
                    horizons.clone()
                };
                horizons
                    .iter()
                    .flat_map(|&t_f| {
                        values.iter().map(move |&delta_prec| SimParams {
                            t_f,
                            delta_prec,
                            ..base.clone()
                        })
                    })
                    .collect()
            }
            Sweep::ArenaSize { arenas } => arenas
                .iter()
                .map(|a| SimParams {
                    arena: a.arena,
                    patch: a.patch,
                    ..base.clone()
                })
                .collect(),
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `k` under `master`.
pub fn repetition_seed(master: u64, k: usize) -> u64 {
    splitmix64(master ^ splitmix64(k as u64))
}

/// Runs `reps` independent repetitions of `params`; the result is ordered by
/// repetition index.
pub fn run_repetitions(params: &SimParams, reps: usize, stride: u64) -> Result<Vec<RunRecord>> {
    let master = params.seed;
    (0..reps)
        .into_par_iter()
        .map(|k| {
            let p = SimParams {
                seed: repetition_seed(master, k),
                ..params.clone()
            };
            run(&p, stride)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std, n })
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

/// Repetition-averaged metrics at one recorded timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: u64,
    pub e_t: f64,
    pub e_p: f64,
    pub e_a: f64,
    pub frac_switched: f64,
    pub collective_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub repetitions: usize,
    pub rows: Vec<SeriesRow>,
}

impl TimeSeries {
    pub fn from_records(records: &[RunRecord]) -> Result<TimeSeries> {
        let first = records
            .first()
            .ok_or_else(|| Error::Domain("time series needs at least one run".into()))?;
        let reps = records.len() as f64;
        let rows = (0..first.samples.len())
            .map(|k| {
                let mut row = SeriesRow {
                    t: first.samples[k].t,
                    e_t: 0.0,
                    e_p: 0.0,
                    e_a: 0.0,
                    frac_switched: 0.0,
                    collective_mean: 0.0,
                };
                for r in records {
                    let s = &r.samples[k];
                    debug_assert_eq!(s.t, row.t);
                    row.e_t += s.e_t / reps;
                    row.e_p += s.e_p / reps;
                    row.e_a += s.e_a / reps;
                    row.frac_switched += s.frac_switched / reps;
                    row.collective_mean += s.collective_mean / reps;
                }
                row
            })
            .collect();
        Ok(TimeSeries {
            repetitions: records.len(),
            rows,
        })
    }

    pub fn at(&self, t: u64) -> Option<&SeriesRow> {
        self.rows.iter().find(|r| r.t == t)
    }
}

/// Aggregates of one sweep point over its repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_sw: Option<u64>,
    pub delta_prec: Option<f64>,
    pub t_f: u64,
    pub arena_width: f64,
    pub arena_height: f64,
    pub final_e_t: Stat,
    pub final_e_p: Stat,
    pub final_e_a: Stat,
    /// Over runs in which at least one agent switched.
    pub decision_time: Option<Stat>,
    /// Summed over repetitions.
    pub never_switched: usize,
    /// Repetitions whose decision time covers only part of the swarm.
    pub incomplete_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
}

fn summarize(params: &SimParams, records: &[RunRecord]) -> Result<SweepPoint> {
    let finals: Vec<_> = records.iter().map(|r| *r.final_sample()).collect();
    let stat = |f: fn(&crate::metrics::MetricsSample) -> f64| {
        let xs: Vec<f64> = finals.iter().map(f).collect();
        Stat::of(&xs).ok_or_else(|| Error::Domain("sweep point without runs".into()))
    };
    let times: Vec<_> = records.iter().map(decision_time).collect();
    let means: Vec<f64> = times.iter().filter_map(|d| d.mean).collect();
    Ok(SweepPoint {
        t_sw: match params.switch_mode {
            SwitchMode::Fixed { t_sw } => Some(t_sw),
            SwitchMode::Adaptive => None,
        },
        delta_prec: matches!(params.switch_mode, SwitchMode::Adaptive).then_some(params.delta_prec),
        t_f: params.t_f,
        arena_width: params.arena.width(),
        arena_height: params.arena.height(),
        final_e_t: stat(|s| s.e_t)?,
        final_e_p: stat(|s| s.e_p)?,
        final_e_a: stat(|s| s.e_a)?,
        decision_time: Stat::of(&means),
        never_switched: times.iter().map(|d| d.never_switched).sum(),
        incomplete_runs: times.iter().filter(|d| d.incomplete()).count(),
    })
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(what.to_string()))
    }
}

/// Repetition-averaged time series under the base parameters, any switch mode.
pub fn run_timeseries(spec: &ExperimentSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let records = run_repetitions(&spec.base, spec.repetitions, spec.record_stride)?;
    let series = TimeSeries::from_records(&records)?;
    if let Some(dir) = &spec.out_dir {
        let table = series_table(&series, None, spec.sqrt_errors);
        write_outputs(dir, "timeseries", spec, &[("timeseries.csv", &table)])?;
    }
    Ok(series)
}

/// Time series of the errors for a globally fixed switching time.
pub fn run_fixed_switch_timeseries(spec: &ExperimentSpec) -> Result<TimeSeries> {
    require(
        matches!(spec.base.switch_mode, SwitchMode::Fixed { .. }),
        "fixed-switch time series needs switch_mode fixed",
    )?;
    run_timeseries(spec)
}

fn run_sweep(spec: &ExperimentSpec) -> Result<(SweepSummary, Vec<Vec<RunRecord>>)> {
    spec.validate()?;
    let mut points = Vec::new();
    let mut all = Vec::new();
    for p in spec.sweep_params()? {
        let records = run_repetitions(&p, spec.repetitions, spec.record_stride)?;
        points.push(summarize(&p, &records)?);
        all.push(records);
    }
    Ok((SweepSummary { points }, all))
}

/// Final errors as a function of a fixed switching time.
pub fn sweep_switch_time(spec: &ExperimentSpec) -> Result<SweepSummary> {
    require(
        matches!(spec.sweep, Sweep::SwitchTime { .. }),
        "sweep-switch needs a switch_time sweep",
    )?;
    let (summary, _) = run_sweep(spec)?;
    if let Some(dir) = &spec.out_dir {
        let table = summary_table(&summary, spec.sqrt_errors);
        write_outputs(dir, "sweep_switch", spec, &[("sweep_switch.csv", &table)])?;
    }
    Ok(summary)
}

/// Decision time and final errors across precision thresholds and horizons.
pub fn sweep_adaptive(spec: &ExperimentSpec) -> Result<SweepSummary> {
    require(
        spec.base.switch_mode == SwitchMode::Adaptive,
        "sweep-adaptive needs switch_mode adaptive",
    )?;
    require(
        matches!(spec.sweep, Sweep::DeltaPrec { .. }),
        "sweep-adaptive needs a delta_prec sweep",
    )?;
    let (summary, _) = run_sweep(spec)?;
    if let Some(dir) = &spec.out_dir {
        let table = summary_table(&summary, spec.sqrt_errors);
        write_outputs(
            dir,
            "sweep_adaptive",
            spec,
            &[("sweep_adaptive.csv", &table)],
        )?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArenaSweep {
    pub summary: SweepSummary,
    /// One averaged time series per arena, in sweep order.
    pub series: Vec<TimeSeries>,
}

/// Adaptive switching across arena sizes.
pub fn sweep_arena(spec: &ExperimentSpec) -> Result<ArenaSweep> {
    require(
        spec.base.switch_mode == SwitchMode::Adaptive,
        "sweep-arena needs switch_mode adaptive",
    )?;
    require(
        matches!(spec.sweep, Sweep::ArenaSize { .. }),
        "sweep-arena needs an arena_size sweep",
    )?;
    let (summary, records) = run_sweep(spec)?;
    let series = records
        .iter()
        .map(|r| TimeSeries::from_records(r))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &spec.out_dir {
        let summary_csv = summary_table(&summary, spec.sqrt_errors);
        let mut series_csv = Table::new(series_columns(true, spec.sqrt_errors));
        for (k, s) in series.iter().enumerate() {
            series_table(s, Some(k), spec.sqrt_errors).append_rows_to(&mut series_csv);
        }
        write_outputs(
            dir,
            "sweep_arena",
            spec,
            &[
                ("sweep_arena.csv", &summary_csv),
                ("sweep_arena_timeseries.csv", &series_csv),
            ],
        )?;
    }
    Ok(ArenaSweep { summary, series })
}

/// Writes initial and final agent positions together with the ground truth.
pub fn emit_positions_snapshot(record: &RunRecord, path: &Path) -> Result<()> {
    let table = snapshot_table(record);
    fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn snapshot_table(record: &RunRecord) -> Table {
    let mut table = Table::new(
        ["agent", "x0", "y0", "xf", "yf", "z_gt"]
            .map(String::from)
            .to_vec(),
    );
    for (i, (p0, pf)) in record
        .initial_positions
        .iter()
        .zip(&record.final_positions)
        .enumerate()
    {
        table.push(vec![
            Cell::Int(i as u64),
            Cell::Float(p0.x),
            Cell::Float(p0.y),
            Cell::Float(pf.x),
            Cell::Float(pf.y),
            Cell::Float(record.z_gt),
        ]);
    }
    table
}

/// Runs the base parameters once and writes the position snapshot (and the
/// full run record) into `spec.out_dir`.
pub fn run_snapshot(spec: &ExperimentSpec) -> Result<RunRecord> {
    spec.base.validate()?;
    let record = run(&spec.base, spec.record_stride)?;
    if let Some(dir) = &spec.out_dir {
        let table = snapshot_table(&record);
        write_outputs(dir, "snapshot", spec, &[("snapshot.csv", &table)])?;
        let path = dir.join("run_record.json");
        fs::write(&path, record.to_json()?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Missing,
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            // 17 significant digits
            Cell::Float(v) => write!(out, "{v:.16e}").unwrap(),
            Cell::Missing => {}
        }
    }
}

/// A CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    fn append_rows_to(self, other: &mut Table) {
        for row in self.rows {
            other.push(row);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

fn error_columns(sqrt: bool, prefix: &str) -> Vec<String> {
    let mut cols: Vec<String> = ["e_t", "e_p", "e_a"]
        .iter()
        .map(|c| format!("{prefix}{c}"))
        .collect();
    if sqrt {
        cols.extend(
            ["e_t", "e_p", "e_a"]
                .iter()
                .map(|c| format!("sqrt_{prefix}{c}")),
        );
    }
    cols
}

fn series_columns(with_point: bool, sqrt: bool) -> Vec<String> {
    let mut cols = Vec::new();
    if with_point {
        cols.push("point".to_string());
    }
    cols.push("t".to_string());
    cols.extend(error_columns(sqrt, ""));
    cols.push("frac_switched".to_string());
    cols.push("collective_mean".to_string());
    cols
}

fn series_table(series: &TimeSeries, point: Option<usize>, sqrt: bool) -> Table {
    let mut table = Table::new(series_columns(point.is_some(), sqrt));
    for r in &series.rows {
        let mut row = Vec::new();
        if let Some(k) = point {
            row.push(Cell::Int(k as u64));
        }
        row.push(Cell::Int(r.t));
        row.extend([r.e_t, r.e_p, r.e_a].map(Cell::Float));
        if sqrt {
            row.extend([r.e_t, r.e_p, r.e_a].map(|v| Cell::Float(v.sqrt())));
        }
        row.push(Cell::Float(r.frac_switched));
        row.push(Cell::Float(r.collective_mean));
        table.push(row);
    }
    table
}

fn summary_table(summary: &SweepSummary, sqrt: bool) -> Table {
    let mut cols: Vec<String> = [
        "point",
        "t_sw",
        "delta_prec",
        "t_f",
        "arena_width",
        "arena_height",
        "reps",
    ]
    .map(String::from)
    .to_vec();
    for name in ["final_e_t", "final_e_p", "final_e_a"] {
        cols.push(format!("{name}_mean"));
        cols.push(format!("{name}_std"));
    }
    if sqrt {
        cols.extend(
            [
                "sqrt_final_e_t_mean",
                "sqrt_final_e_p_mean",
                "sqrt_final_e_a_mean",
            ]
            .map(String::from),
        );
    }
    cols.extend(
        [
            "decision_time_mean",
            "decision_time_std",
            "never_switched",
            "incomplete_runs",
        ]
        .map(String::from),
    );
    let mut table = Table::new(cols);
    for (k, p) in summary.points.iter().enumerate() {
        let mut row = vec![
            Cell::Int(k as u64),
            p.t_sw.map_or(Cell::Missing, Cell::Int),
            p.delta_prec.map_or(Cell::Missing, Cell::Float),
            Cell::Int(p.t_f),
            Cell::Float(p.arena_width),
            Cell::Float(p.arena_height),
            Cell::Int(p.final_e_a.n as u64),
        ];
        for s in [p.final_e_t, p.final_e_p, p.final_e_a] {
            row.push(Cell::Float(s.mean));
            row.push(Cell::Float(s.std));
        }
        if sqrt {
            row.extend([p.final_e_t, p.final_e_p, p.final_e_a].map(|s| Cell::Float(s.mean.sqrt())));
        }
        row.push(
            p.decision_time
                .map_or(Cell::Missing, |d| Cell::Float(d.mean)),
        );
        row.push(
            p.decision_time
                .map_or(Cell::Missing, |d| Cell::Float(d.std)),
        );
        row.push(Cell::Int(p.never_switched as u64));
        row.push(Cell::Int(p.incomplete_runs as u64));
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub build: String,
    pub master_seed: u64,
    pub spec: ExperimentSpec,
    pub files: Vec<FileEntry>,
}

fn write_outputs(
    dir: &Path,
    experiment: &str,
    spec: &ExperimentSpec,
    tables: &[(&str, &Table)],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for (name, table) in tables {
        let path = dir.join(name);
        fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
        files.push(FileEntry {
            name: name.to_string(),
            columns: table.columns.clone(),
            rows: table.rows.len(),
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.to_string(),
        build: BUILD_DESCRIPTION.to_string(),
        master_seed: spec.base.seed,
        spec: spec.clone(),
        files,
    };
    let path = dir.join(format!("{experiment}.manifest.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

/// Default switching-time grid: `points` evenly spaced values over `[0, t_f]`.
pub fn default_switch_grid(t_f: u64, points: usize) -> Vec<u64> {
    match points {
        0 => Vec::new(),
        1 => vec![0],
        _ => (0..points)
            .map(|k| ((k as f64) * t_f as f64 / (points - 1) as f64).round() as u64)
            .collect(),
    }
}

/// Default precision-threshold grid: one value per decade from 1e-8 to 1e-3.
pub fn default_delta_prec_grid() -> Vec<f64> {
    (3..=8).rev().map(|e| 10f64.powi(-e)).collect()
}

/// Small, medium and large square arenas with the default placement patch.
pub fn default_arena_points() -> Vec<ArenaPoint> {
    [1.0, 1.4, 1.73]
        .into_iter()
        .map(|side| ArenaPoint {
            arena: Arena::square(side).expect("positive side"),
            patch: Patch::anchored(0.7, 0.7),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimParams {
        SimParams {
            n_agents: 12,
            t_f: 120,
            switch_mode: SwitchMode::Fixed { t_sw: 60 },
            seed: 42,
            ..Default::default()
        }
    }

    #[test]
    fn repetition_seeds_are_stable_and_distinct() {
        let seeds: Vec<u64> = (0..100).map(|k| repetition_seed(7, k)).collect();
        let mut dedup = seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);
        assert_eq!(repetition_seed(7, 3), seeds[3]);
        assert_ne!(repetition_seed(8, 3), seeds[3]);
    }

    #[test]
    fn repetition_independent_of_count() {
        let a = run_repetitions(&tiny(), 2, 30).unwrap();
        let b = run_repetitions(&tiny(), 5, 30).unwrap();
        assert_eq!(a[..], b[..2]);
    }

    #[test]
    fn single_rep_series_equals_raw_run() {
        let spec = ExperimentSpec {
            base: tiny(),
            repetitions: 1,
            record_stride: 20,
            ..Default::default()
        };
        let series = run_fixed_switch_timeseries(&spec).unwrap();
        let raw = run_repetitions(&spec.base, 1, 20).unwrap().remove(0);
        assert_eq!(series.rows.len(), raw.samples.len());
        for (row, s) in series.rows.iter().zip(&raw.samples) {
            assert_eq!(
                (row.t, row.e_t, row.e_p, row.e_a),
                (s.t, s.e_t, s.e_p, s.e_a)
            );
        }
    }

    #[test]
    fn preconditions_are_enforced() {
        let adaptive = ExperimentSpec {
            base: SimParams {
                switch_mode: SwitchMode::Adaptive,
                ..tiny()
            },
            repetitions: 1,
            ..Default::default()
        };
        assert!(matches!(
            run_fixed_switch_timeseries(&adaptive),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            sweep_switch_time(&adaptive),
            Err(Error::Config(_))
        ));
        assert!(matches!(sweep_adaptive(&adaptive), Err(Error::Config(_))));
        let empty = ExperimentSpec {
            sweep: Sweep::SwitchTime { values: vec![] },
            ..adaptive.clone()
        };
        assert!(matches!(sweep_switch_time(&empty), Err(Error::Config(_))));
        let zero = ExperimentSpec {
            repetitions: 0,
            ..adaptive
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn fixed_mode_decision_time_is_switch_time() {
        let spec = ExperimentSpec {
            base: tiny(),
            repetitions: 2,
            sweep: Sweep::SwitchTime {
                values: vec![0, 60, 120],
            },
            ..Default::default()
        };
        let s = sweep_switch_time(&spec).unwrap();
        assert_eq!(s.points[0].decision_time.unwrap().mean, 0.0);
        assert_eq!(s.points[1].decision_time.unwrap().mean, 60.0);
        // t_sw = t_f: nobody switches within the run.
        assert!(s.points[2].decision_time.is_none());
        assert_eq!(s.points[2].never_switched, 24);
    }

    #[test]
    fn default_grids() {
        let g = default_switch_grid(5000, 21);
        assert_eq!(g.len(), 21);
        assert_eq!((g[0], g[1], g[20]), (0, 250, 5000));
        let d = default_delta_prec_grid();
        assert_eq!(d.len(), 6);
        assert!((d[0] - 1e-8).abs() < 1e-20 && (d[5] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let mut t = Table::new(vec!["a".into(), "b".into(), "c".into()]);
        t.push(vec![Cell::Int(3), Cell::Float(0.1), Cell::Missing]);
        assert_eq!(t.to_csv(), "a,b,c\n3,1.0000000000000001e-1,\n");
        let parsed: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn spec_json_roundtrip_with_partial_fields() {
        let json = r#"{
            "base": {"n_agents": 10, "switch_mode": "adaptive"},
            "repetitions": 3,
            "sweep": {"delta_prec": {"values": [1e-6, 1e-4], "horizons": [100, 200]}}
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.repetitions, 3);
        assert_eq!(spec.record_stride, 10);
        assert_eq!(spec.sweep_params().unwrap().len(), 4);
        let back: ExperimentSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
