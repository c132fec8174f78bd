//! Coupling sweeps, correlation matrices between indices, timing tables and
//! CSV persistence of sweep records.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::{apply_perturbation, PerturbationSpec};
use crate::registry::{Preset, Registry, OUTPUTS};
use crate::rng::derive_seed;
use crate::series::{Direction, IndexEstimate, SeriesPair, Status};
use crate::simulate::{Coupling, SystemKind};

pub const CSV_HEADER: [&str; 9] = [
    "simulation",
    "lambda_xy",
    "lambda_yx",
    "run",
    "index",
    "direction",
    "value",
    "elapsed_seconds",
    "status",
];

/// Token written for values that are not finite.
pub const NA: &str = "NA";

pub const DESK_STEP: f64 = 0.05;
pub const DESK_RUNS: usize = 3;
pub const FULL_STEP: f64 = 0.01;
pub const FULL_RUNS: usize = 10;

/// Coupling windows where the Ulam lattice synchronises.
pub const ULAM_SYNC_WINDOWS: [(f64, f64); 2] = [(0.17, 0.19), (0.81, 0.83)];

pub fn in_sync_window(system: SystemKind, c: Coupling) -> bool {
    let l = system.scalar_coupling(c);
    system == SystemKind::Ulam
        && ULAM_SYNC_WINDOWS
            .iter()
            .any(|(lo, hi)| l >= lo - 1e-9 && l <= hi + 1e-9)
}

/// Evenly spaced values `0, step, ..., max`, rounded to suppress drift.
pub fn lambda_values(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad coupling grid: max {max}, step {step}"
        )));
    }
    let n = (max / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// Full coupling grid of a system: a line for one-way systems, a square for
/// the bidirectional maps.
pub fn coupling_grid(system: SystemKind, step: f64) -> Result<Vec<Coupling>> {
    let values = lambda_values(system.max_coupling(), step)?;
    Ok(if system.is_bidirectional() {
        values
            .iter()
            .flat_map(|&a| values.iter().map(move |&b| Coupling { xy: a, yx: b }))
            .collect()
    } else {
        values.into_iter().map(|l| system.coupling(l)).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub preset: Preset,
    pub grid: Vec<Coupling>,
    pub runs: usize,
    /// Estimator or output names; empty selects every index.
    pub indices: Vec<String>,
    pub base_seed: u64,
    pub perturbation: Option<PerturbationSpec>,
    /// Record Ulam synchrony windows as skipped rather than estimating.
    pub skip_synchrony: bool,
}

impl SweepConfig {
    /// Coupling step 0.05 with 3 runs.
    pub fn desk(preset: Preset) -> Result<Self> {
        Self::with_grid(preset, DESK_STEP, DESK_RUNS)
    }

    /// Coupling step 0.01 with 10 runs.
    pub fn full(preset: Preset) -> Result<Self> {
        Self::with_grid(preset, FULL_STEP, FULL_RUNS)
    }

    pub fn with_grid(preset: Preset, step: f64, runs: usize) -> Result<Self> {
        Ok(SweepConfig {
            grid: coupling_grid(preset.system, step)?,
            preset,
            runs,
            indices: Vec::new(),
            base_seed: 0,
            perturbation: None,
            skip_synchrony: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("empty coupling grid".into()));
        }
        let max = self.preset.system.max_coupling();
        for c in &self.grid {
            if !(0.0..=max).contains(&c.xy) || !(0.0..=max).contains(&c.yx) {
                return Err(Error::InvalidParameter(format!(
                    "coupling ({}, {}) outside [0, {max}] for {}",
                    c.xy,
                    c.yx,
                    self.preset.system.name()
                )));
            }
            if !self.preset.system.is_bidirectional()
                && self
                    .preset
                    .system
                    .coupling(self.preset.system.scalar_coupling(*c))
                    != *c
            {
                return Err(Error::InvalidParameter(format!(
                    "{} couples in one direction only",
                    self.preset.system.name()
                )));
            }
        }
        if let Some(p) = &self.perturbation {
            p.validate()?;
        }
        Registry::from_preset(&self.preset, &self.indices).map(|_| ())
    }

    /// Simulator seed of run `run`.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub simulation: String,
    pub lambda_xy: f64,
    pub lambda_yx: f64,
    pub run: usize,
    pub index: String,
    pub direction: Direction,
    pub value: f64,
    pub elapsed_seconds: f64,
    pub status: Status,
}

impl SweepRecord {
    fn key_cmp(&self, other: &Self) -> Ordering {
        let idx = |s: &str| OUTPUTS.iter().position(|o| *o == s).unwrap_or(usize::MAX);
        self.simulation
            .cmp(&other.simulation)
            .then(self.lambda_xy.total_cmp(&other.lambda_xy))
            .then(self.lambda_yx.total_cmp(&other.lambda_yx))
            .then(self.run.cmp(&other.run))
            .then(idx(&self.index).cmp(&idx(&other.index)))
            .then(self.index.cmp(&other.index))
            .then(self.direction.cmp(&other.direction))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

fn records_for(
    sim: &str,
    c: Coupling,
    run: usize,
    est: &IndexEstimate,
    status: Status,
) -> Vec<SweepRecord> {
    Direction::BOTH
        .into_iter()
        .map(|dir| SweepRecord {
            simulation: sim.to_string(),
            lambda_xy: c.xy,
            lambda_yx: c.yx,
            run,
            index: est.index.clone(),
            direction: dir,
            value: if status == Status::Ok || status == Status::Degenerate {
                est.value(dir)
            } else {
                f64::NAN
            },
            elapsed_seconds: est.elapsed(dir).max(0.0),
            status,
        })
        .collect()
}

fn run_unit(
    cfg: &SweepConfig,
    registry: &Registry,
    c: Coupling,
    run: usize,
) -> Result<Vec<SweepRecord>> {
    let sim = cfg.preset.name.as_str();
    let outputs = registry.outputs();
    let blank = |status: Status| -> Vec<SweepRecord> {
        outputs
            .iter()
            .flat_map(|o| records_for(sim, c, run, &IndexEstimate::degenerate(*o), status))
            .collect()
    };
    if cfg.skip_synchrony && in_sync_window(cfg.preset.system, c) {
        return Ok(blank(Status::SkippedSynchrony));
    }
    let seed = cfg.run_seed(run);
    let simulated = cfg
        .preset
        .system
        .simulate(c, cfg.preset.len, seed)
        .and_then(|pair| match &cfg.perturbation {
            Some(p) => apply_perturbation(&pair, &p.reseeded(derive_seed(seed, "perturb"))),
            None => Ok(pair),
        });
    let pair = match simulated {
        Ok(p) => p,
        Err(e) if e.is_numerical() => {
            log::warn!("{sim} ({}, {}) run {run}: {e}", c.xy, c.yx);
            return Ok(blank(Status::Degenerate));
        }
        Err(e) => return Err(e),
    };
    let est = registry.estimate_all(&pair, derive_seed(seed, "indices"))?;
    Ok(est
        .iter()
        .flat_map(|e| records_for(sim, c, run, e, e.status))
        .collect())
}

/// Simulates every (grid point, run), optionally perturbs, and estimates every
/// selected index in both directions. Degenerate outcomes are recorded, never
/// fatal.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let registry = Registry::from_preset(&cfg.preset, &cfg.indices)?;
    let units: Vec<(Coupling, usize)> = cfg
        .grid
        .iter()
        .flat_map(|&c| (0..cfg.runs).map(move |r| (c, r)))
        .collect();
    let chunks: Vec<Result<Vec<SweepRecord>>> = units
        .par_iter()
        .map(|&(c, run)| run_unit(cfg, &registry, c, run))
        .collect();
    let mut records = Vec::new();
    for c in chunks {
        records.extend(c?);
    }
    records.sort_by(SweepRecord::key_cmp);
    Ok(SweepResult { records })
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        NA.to_string()
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    if s == NA {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| Error::InvalidParameter(format!("line {line}: cannot parse number '{s}'")))
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.simulation.clone(),
                fmt_f64(r.lambda_xy),
                fmt_f64(r.lambda_yx),
                r.run.to_string(),
                r.index.clone(),
                r.direction.as_str().to_string(),
                fmt_f64(r.value),
                fmt_f64(r.elapsed_seconds),
                r.status.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::InvalidParameter(format!(
                "unexpected header {header:?}"
            )));
        }
        let mut records = Vec::new();
        for (i, row) in rd.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let bad = |what: &str| Error::InvalidParameter(format!("line {line}: bad {what}"));
            records.push(SweepRecord {
                simulation: row[0].to_string(),
                lambda_xy: parse_f64(&row[1], line)?,
                lambda_yx: parse_f64(&row[2], line)?,
                run: row[3].parse().map_err(|_| bad("run"))?,
                index: row[4].to_string(),
                direction: Direction::parse(&row[5]).ok_or_else(|| bad("direction"))?,
                value: parse_f64(&row[6], line)?,
                elapsed_seconds: parse_f64(&row[7], line)?,
                status: Status::parse(&row[8]).ok_or_else(|| bad("status"))?,
            });
        }
        Ok(SweepResult { records })
    }

    /// Index names in canonical order.
    pub fn index_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.records.iter().map(|r| r.index.clone()).collect();
        names.sort_by_key(|n| {
            (
                OUTPUTS.iter().position(|o| o == n).unwrap_or(usize::MAX),
                n.clone(),
            )
        });
        names.dedup();
        names
    }

    pub fn simulations(&self) -> Vec<String> {
        let mut s: Vec<String> = self.records.iter().map(|r| r.simulation.clone()).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Records of one simulation.
    pub fn filter_simulation(&self, sim: &str) -> SweepResult {
        SweepResult {
            records: self
                .records
                .iter()
                .filter(|r| r.simulation == sim)
                .cloned()
                .collect(),
        }
    }

    /// Per (λ_xy, λ_yx, run): the chosen statistic of `index`.
    pub fn statistic(&self, index: &str, stat: Statistic) -> BTreeMap<GridKey, f64> {
        let mut xy: BTreeMap<GridKey, f64> = BTreeMap::new();
        let mut yx: BTreeMap<GridKey, f64> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.index == index) {
            let key = GridKey::new(r.lambda_xy, r.lambda_yx, r.run);
            let v = if r.status == Status::SkippedSynchrony {
                f64::NAN
            } else {
                r.value
            };
            match r.direction {
                Direction::XtoY => xy.insert(key, v),
                Direction::YtoX => yx.insert(key, v),
            };
        }
        match stat {
            Statistic::Value(Direction::XtoY) => xy,
            Statistic::Value(Direction::YtoX) => yx,
            Statistic::Directed => xy
                .into_iter()
                .filter_map(|(k, a)| yx.get(&k).map(|b| (k, a - b)))
                .collect(),
        }
    }
}

/// Grid point and run, ordered; couplings compared by bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridKey {
    pub lambda_xy: OrderedF64,
    pub lambda_yx: OrderedF64,
    pub run: usize,
}

impl GridKey {
    pub fn new(lambda_xy: f64, lambda_yx: f64, run: usize) -> Self {
        GridKey {
            lambda_xy: OrderedF64(lambda_xy),
            lambda_yx: OrderedF64(lambda_yx),
            run,
        }
    }

    pub fn coupling(&self) -> Coupling {
        Coupling {
            xy: self.lambda_xy.0,
            yx: self.lambda_yx.0,
        }
    }
}

/// Total-order wrapper used only for map keys.
#[derive(Debug, Clone, Copy)]
pub struct OrderedF64(pub f64);

impl PartialEq for OrderedF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for OrderedF64 {}
impl PartialOrd for OrderedF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl std::hash::Hash for OrderedF64 {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// Which number of a record pair feeds a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Value(Direction),
    Directed,
}

impl Statistic {
    /// Directed index for the Hénon families; the one-way systems are
    /// compared direction by direction.
    pub fn defaults_for(system: SystemKind) -> Vec<Statistic> {
        match system {
            SystemKind::LinearProcess | SystemKind::Ulam => {
                vec![
                    Statistic::Value(Direction::XtoY),
                    Statistic::Value(Direction::YtoX),
                ]
            }
            _ => vec![Statistic::Directed],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Statistic::Value(Direction::XtoY) => "X->Y",
            Statistic::Value(Direction::YtoX) => "Y->X",
            Statistic::Directed => "D",
        }
    }

    pub fn parse(s: &str) -> Option<Statistic> {
        match s.to_ascii_lowercase().as_str() {
            "d" | "directed" => Some(Statistic::Directed),
            "xy" | "x->y" => Some(Statistic::Value(Direction::XtoY)),
            "yx" | "y->x" => Some(Statistic::Value(Direction::YtoX)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrKind {
    Pearson,
    Spearman,
}

impl CorrKind {
    pub fn parse(s: &str) -> Option<CorrKind> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Some(CorrKind::Pearson),
            "spearman" => Some(CorrKind::Spearman),
            _ => None,
        }
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return f64::NAN;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn correlation(a: &[f64], b: &[f64], kind: CorrKind) -> f64 {
    match kind {
        CorrKind::Pearson => pearson(a, b),
        CorrKind::Spearman => pearson(&ranks(a), &ranks(b)),
    }
}

/// Square correlation table labelled by index name; undefined entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::from("index")];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (n, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![n.clone()];
            rec.extend(row.iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Correlation of every index pair across all (grid point, run) keys where
/// both statistics are finite.
pub fn corr_matrix(res: &SweepResult, kind: CorrKind, stat: Statistic) -> Result<CorrMatrix> {
    let names = res.index_names();
    if names.len() < 2 {
        return Err(Error::InsufficientData {
            have: names.len(),
            need: 2,
        });
    }
    let columns: Vec<BTreeMap<GridKey, f64>> =
        names.iter().map(|n| res.statistic(n, stat)).collect();
    if columns.iter().any(|c| c.len() < 3) {
        return Err(Error::InsufficientData {
            have: columns.iter().map(BTreeMap::len).min().unwrap_or(0),
            need: 3,
        });
    }
    let k = names.len();
    let mut values = vec![vec![f64::NAN; k]; k];
    for i in 0..k {
        for j in i..k {
            let (a, b): (Vec<f64>, Vec<f64>) = columns[i]
                .iter()
                .filter_map(|(key, &va)| columns[j].get(key).map(|&vb| (va, vb)))
                .filter(|(va, vb)| va.is_finite() && vb.is_finite())
                .unzip();
            let r = if a.len() >= 3 {
                correlation(&a, &b, kind)
            } else {
                f64::NAN
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrMatrix { names, values })
}

/// Equal-weight average of several matrices over their shared index names,
/// skipping undefined entries.
pub fn average_matrices(ms: &[CorrMatrix]) -> Option<CorrMatrix> {
    let first = ms.first()?;
    let names: Vec<String> = first
        .names
        .iter()
        .filter(|n| ms.iter().all(|m| m.names.contains(n)))
        .cloned()
        .collect();
    let values = names
        .iter()
        .map(|a| {
            names
                .iter()
                .map(|b| {
                    let v: Vec<f64> = ms
                        .iter()
                        .filter_map(|m| m.get(a, b))
                        .filter(|v| v.is_finite())
                        .collect();
                    if v.is_empty() {
                        f64::NAN
                    } else {
                        v.iter().sum::<f64>() / v.len() as f64
                    }
                })
                .collect()
        })
        .collect();
    Some(CorrMatrix { names, values })
}

/// Reads a headered `t,x,y` or `x,y` CSV; empty cells are missing samples.
pub fn read_pair_csv<R: Read>(input: R) -> Result<SeriesPair> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rd
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (xi, yi) = match (col("x"), col("y")) {
        (Some(x), Some(y)) => (x, y),
        _ if header.len() == 2 => (0, 1),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "expected columns x and y, found {header:?}"
            )))
        }
    };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let cell = |j: usize| -> Result<Option<f64>> {
            match row.get(j).unwrap_or("") {
                "" | "NA" => Ok(None),
                s => s.parse().map(Some).map_err(|_| {
                    Error::InvalidParameter(format!("line {line}: cannot parse number '{s}'"))
                }),
            }
        };
        x.push(cell(xi)?);
        y.push(cell(yi)?);
    }
    SeriesPair::from_options(&x, &y)
}

/// Writes `t,x,y` with empty cells for missing samples.
pub fn write_pair_csv<W: Write>(pair: &SeriesPair, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y"])?;
    let cell = |v: f64, m: bool| if m { String::new() } else { format!("{v}") };
    for t in 0..pair.len() {
        w.write_record([
            t.to_string(),
            cell(pair.x()[t], pair.x_missing()[t]),
            cell(pair.y()[t], pair.y_missing()[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `f` and returns its output with the wall-clock seconds it took.
pub fn time_index<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub simulation: String,
    pub index: String,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub samples: usize,
}

/// Mean and sample standard deviation of per-call time (both directions
/// summed) for every (simulation, index).
pub fn timing_table(res: &SweepResult) -> Vec<TimingRow> {
    let mut per_call: BTreeMap<(String, String, GridKey), f64> = BTreeMap::new();
    for r in res
        .records
        .iter()
        .filter(|r| r.status != Status::SkippedSynchrony)
    {
        *per_call
            .entry((
                r.simulation.clone(),
                r.index.clone(),
                GridKey::new(r.lambda_xy, r.lambda_yx, r.run),
            ))
            .or_default() += r.elapsed_seconds;
    }
    let mut grouped: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for ((sim, idx, _), t) in per_call {
        grouped.entry((sim, idx)).or_default().push(t);
    }
    let mut rows: Vec<TimingRow> = grouped
        .into_iter()
        .map(|((simulation, index), t)| {
            let (mean, sd) = mean_sd(&t);
            TimingRow {
                simulation,
                index,
                mean_seconds: mean,
                std_seconds: sd,
                samples: t.len(),
            }
        })
        .collect();
    let idx = |s: &str| OUTPUTS.iter().position(|o| *o == s).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        a.simulation
            .cmp(&b.simulation)
            .then(idx(&a.index).cmp(&idx(&b.index)))
    });
    rows
}

pub fn write_timing_csv<W: Write>(rows: &[TimingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "simulation",
        "index",
        "mean_seconds",
        "std_seconds",
        "samples",
    ])?;
    for r in rows {
        w.write_record([
            r.simulation.clone(),
            r.index.clone(),
            fmt_f64(r.mean_seconds),
            fmt_f64(r.std_seconds),
            r.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    (
        mean,
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
    )
}

/// Everything needed to reproduce a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub prng: String,
    pub preset_version: String,
    pub base_seed: u64,
    pub run_seeds: Vec<u64>,
    pub config: SweepConfig,
}

impl Manifest {
    pub fn new(cfg: &SweepConfig) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            prng: crate::rng::PRNG_ALGORITHM.to_string(),
            preset_version: crate::registry::PRESET_VERSION.to_string(),
            base_seed: cfg.base_seed,
            run_seeds: (0..cfg.runs).map(|r| cfg.run_seed(r)).collect(),
            config: cfg.clone(),
        }
    }
}
