//! Aligned bivariate series, delay embedding and the directed index.
//!
//! Missing samples are stored as `NaN` together with an explicit mask. They are
//! never imputed: the embedding step drops every row that touches one.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel stored in the sample vectors at missing positions.
pub const MISSING: f64 = f64::NAN;

/// Direction of a causal influence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "X->Y")]
    XtoY,
    #[serde(rename = "Y->X")]
    YtoX,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::XtoY, Direction::YtoX];

    pub fn reverse(self) -> Direction {
        match self {
            Direction::XtoY => Direction::YtoX,
            Direction::YtoX => Direction::XtoY,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::XtoY => "X->Y",
            Direction::YtoX => "Y->X",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "X->Y" | "xy" => Some(Direction::XtoY),
            "Y->X" | "yx" => Some(Direction::YtoX),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two aligned scalar series of identical length with per-sample missing masks.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    x: Vec<f64>,
    y: Vec<f64>,
    x_missing: Vec<bool>,
    y_missing: Vec<bool>,
}

impl SeriesPair {
    /// Builds a fully observed pair.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let x_missing = vec![false; x.len()];
        let y_missing = vec![false; y.len()];
        Self::from_parts(x, y, x_missing, y_missing)
    }

    /// Builds a pair where `None` marks a missing sample.
    pub fn from_options(x: &[Option<f64>], y: &[Option<f64>]) -> Result<Self> {
        let unpack = |v: &[Option<f64>]| -> (Vec<f64>, Vec<bool>) {
            v.iter()
                .map(|s| match s {
                    Some(v) => (*v, false),
                    None => (MISSING, true),
                })
                .unzip()
        };
        let (xv, xm) = unpack(x);
        let (yv, ym) = unpack(y);
        Self::from_parts(xv, yv, xm, ym)
    }

    pub fn from_parts(
        mut x: Vec<f64>,
        mut y: Vec<f64>,
        x_missing: Vec<bool>,
        y_missing: Vec<bool>,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x_missing.len() != x.len() || y_missing.len() != y.len() {
            return Err(Error::InvalidParameter(
                "mask length differs from series length".into(),
            ));
        }
        if x.is_empty() {
            return Err(Error::InsufficientData { have: 0, need: 1 });
        }
        for (values, mask) in [(&mut x, &x_missing), (&mut y, &y_missing)] {
            for (i, (v, &m)) in values.iter_mut().zip(mask).enumerate() {
                if m {
                    *v = MISSING;
                } else if !v.is_finite() {
                    return Err(Error::NonFinite { index: i });
                }
            }
        }
        Ok(SeriesPair {
            x,
            y,
            x_missing,
            y_missing,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_missing(&self) -> &[bool] {
        &self.x_missing
    }

    pub fn y_missing(&self) -> &[bool] {
        &self.y_missing
    }

    pub fn has_missing(&self) -> bool {
        self.x_missing.iter().chain(&self.y_missing).any(|&m| m)
    }

    /// Sample values of the series playing `role` for `dir`: the effect
    /// (target) or the cause (source).
    pub fn effect(&self, dir: Direction) -> (&[f64], &[bool]) {
        match dir {
            Direction::YtoX => (&self.x, &self.x_missing),
            Direction::XtoY => (&self.y, &self.y_missing),
        }
    }

    pub fn cause(&self, dir: Direction) -> (&[f64], &[bool]) {
        self.effect(dir.reverse())
    }

    /// Returns the pair with X and Y exchanged.
    pub fn swapped(&self) -> SeriesPair {
        SeriesPair {
            x: self.y.clone(),
            y: self.x.clone(),
            x_missing: self.y_missing.clone(),
            y_missing: self.x_missing.clone(),
        }
    }

    /// Applies `f` to every present sample of the chosen series.
    pub fn map_series(
        &self,
        on_x: bool,
        on_y: bool,
        mut f: impl FnMut(usize, f64) -> f64,
    ) -> Result<SeriesPair> {
        let mut out = self.clone();
        if on_x {
            for (i, v) in out.x.iter_mut().enumerate() {
                if !self.x_missing[i] {
                    *v = f(i, *v);
                }
            }
        }
        if on_y {
            for (i, v) in out.y.iter_mut().enumerate() {
                if !self.y_missing[i] {
                    *v = f(i, *v);
                }
            }
        }
        Self::from_parts(out.x, out.y, out.x_missing, out.y_missing)
    }

    /// Marks additional samples as missing.
    pub fn with_extra_missing(&self, x_mask: &[bool], y_mask: &[bool]) -> Result<SeriesPair> {
        let xm: Vec<bool> = self
            .x_missing
            .iter()
            .zip(x_mask)
            .map(|(a, b)| *a || *b)
            .collect();
        let ym: Vec<bool> = self
            .y_missing
            .iter()
            .zip(y_mask)
            .map(|(a, b)| *a || *b)
            .collect();
        Self::from_parts(self.x.clone(), self.y.clone(), xm, ym)
    }

    /// First `len` samples.
    pub fn truncated(&self, len: usize) -> Result<SeriesPair> {
        if len == 0 || len > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a series of length {} to {}",
                self.len(),
                len
            )));
        }
        Self::from_parts(
            self.x[..len].to_vec(),
            self.y[..len].to_vec(),
            self.x_missing[..len].to_vec(),
            self.y_missing[..len].to_vec(),
        )
    }
}

/// Delay-embedding configuration: dimension `m`, lag `tau`, horizon `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub m: usize,
    pub tau: usize,
    pub h: usize,
}

impl EmbeddingSpec {
    pub fn new(m: usize, tau: usize, h: usize) -> Result<Self> {
        if m == 0 || tau == 0 || h == 0 {
            return Err(Error::InvalidParameter(format!(
                "embedding requires m, tau, h >= 1 (got m={m}, tau={tau}, h={h})"
            )));
        }
        Ok(EmbeddingSpec { m, tau, h })
    }

    /// `m` with unit lag and horizon.
    pub fn dim(m: usize) -> Self {
        EmbeddingSpec { m, tau: 1, h: 1 }
    }

    /// Offset of the oldest sample used by a row relative to its time index.
    pub fn span(&self) -> usize {
        (self.m - 1) * self.tau
    }
}

/// Complete delay-embedding rows of a [`SeriesPair`].
///
/// Row `i` holds the embedding vectors of both series at time `times[i]`
/// (oldest sample first) and both futures at `times[i] + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayMatrix {
    spec: EmbeddingSpec,
    times: Vec<usize>,
    x_emb: Vec<f64>,
    y_emb: Vec<f64>,
    x_future: Vec<f64>,
    y_future: Vec<f64>,
}

impl DelayMatrix {
    pub fn spec(&self) -> EmbeddingSpec {
        self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x_emb[i * self.spec.m..(i + 1) * self.spec.m]
    }

    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.y_emb[i * self.spec.m..(i + 1) * self.spec.m]
    }

    pub fn x_future(&self) -> &[f64] {
        &self.x_future
    }

    pub fn y_future(&self) -> &[f64] {
        &self.y_future
    }

    /// Flat row-major embedding of the effect series for `dir`.
    pub fn effect_embedding(&self, dir: Direction) -> &[f64] {
        match dir {
            Direction::YtoX => &self.x_emb,
            Direction::XtoY => &self.y_emb,
        }
    }

    pub fn cause_embedding(&self, dir: Direction) -> &[f64] {
        self.effect_embedding(dir.reverse())
    }

    pub fn effect_future(&self, dir: Direction) -> &[f64] {
        match dir {
            Direction::YtoX => &self.x_future,
            Direction::XtoY => &self.y_future,
        }
    }

    /// Joint embedding `(effect, cause)` for `dir`, flat row-major with
    /// dimension `2m`.
    pub fn joint_embedding(&self, dir: Direction) -> Vec<f64> {
        let m = self.spec.m;
        let (a, b) = (self.effect_embedding(dir), self.cause_embedding(dir));
        let mut out = Vec::with_capacity(2 * a.len());
        for i in 0..self.len() {
            out.extend_from_slice(&a[i * m..(i + 1) * m]);
            out.extend_from_slice(&b[i * m..(i + 1) * m]);
        }
        out
    }
}

/// Builds the delay embedding of `pair`, dropping rows with any missing component.
pub fn embed(pair: &SeriesPair, spec: EmbeddingSpec) -> Result<DelayMatrix> {
    let spec = EmbeddingSpec::new(spec.m, spec.tau, spec.h)?;
    let n = pair.len();
    let need = spec.m * spec.tau + spec.h + 1;
    if n < need {
        return Err(Error::InsufficientData { have: n, need });
    }
    let mut out = DelayMatrix {
        spec,
        times: Vec::new(),
        x_emb: Vec::new(),
        y_emb: Vec::new(),
        x_future: Vec::new(),
        y_future: Vec::new(),
    };
    let (xm, ym) = (pair.x_missing(), pair.y_missing());
    'rows: for t in spec.span()..n - spec.h {
        let lags = (0..spec.m).map(|j| t - spec.span() + j * spec.tau);
        for s in lags.clone().chain(std::iter::once(t + spec.h)) {
            if xm[s] || ym[s] {
                continue 'rows;
            }
        }
        out.times.push(t);
        for s in lags {
            out.x_emb.push(pair.x()[s]);
            out.y_emb.push(pair.y()[s]);
        }
        out.x_future.push(pair.x()[t + spec.h]);
        out.y_future.push(pair.y()[t + spec.h]);
    }
    if out.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    Ok(out)
}

/// Population mean and standard deviation over the present samples.
pub fn mean_std(values: &[f64], missing: &[bool]) -> (f64, f64, usize) {
    let present = values
        .iter()
        .zip(missing)
        .filter(|(_, &m)| !m)
        .map(|(v, _)| *v);
    let (mut n, mut sum) = (0usize, 0.0);
    for v in present.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = sum / n as f64;
    let var = present.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt(), n)
}

/// Centres each series on its sample mean and divides by its population
/// standard deviation.
pub fn standardize(pair: &SeriesPair) -> Result<SeriesPair> {
    let mut stats = [(0.0, 0.0); 2];
    for (slot, (values, mask, name)) in stats.iter_mut().zip([
        (pair.x(), pair.x_missing(), "x"),
        (pair.y(), pair.y_missing(), "y"),
    ]) {
        let (mean, sd, n) = mean_std(values, mask);
        if n < 2 || !(sd > 0.0) {
            return Err(Error::DegenerateSeries(format!(
                "series {name} has zero variance"
            )));
        }
        *slot = (mean, sd);
    }
    let [(mx, sx), (my, sy)] = stats;
    let x = pair.x().iter().map(|v| (v - mx) / sx).collect();
    let y = pair.y().iter().map(|v| (v - my) / sy).collect();
    SeriesPair::from_parts(x, y, pair.x_missing().to_vec(), pair.y_missing().to_vec())
}

/// `D = i_{X->Y} - i_{Y->X}`.
pub fn directed_index(est_xy: f64, est_yx: f64) -> Result<f64> {
    if !est_xy.is_finite() || !est_yx.is_finite() {
        return Err(Error::Undefined(
            "directed index of a non-finite estimate".into(),
        ));
    }
    Ok(est_xy - est_yx)
}

/// Outcome flag attached to every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "degenerate")]
    Degenerate,
    #[serde(rename = "skipped-synchrony")]
    SkippedSynchrony,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Degenerate => "degenerate",
            Status::SkippedSynchrony => "skipped-synchrony",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "ok" => Some(Status::Ok),
            "degenerate" => Some(Status::Degenerate),
            "skipped-synchrony" => Some(Status::SkippedSynchrony),
            _ => None,
        }
    }

    /// The worse of two statuses.
    pub fn combine(self, other: Status) -> Status {
        self.max(other)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One index value per direction plus timing and a parameter echo.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEstimate {
    pub index: String,
    pub value_xy: f64,
    pub value_yx: f64,
    pub directed: f64,
    pub elapsed_xy: f64,
    pub elapsed_yx: f64,
    pub params: BTreeMap<String, String>,
    pub status: Status,
}

impl IndexEstimate {
    pub fn new(index: impl Into<String>, value_xy: f64, value_yx: f64) -> Self {
        let (directed, status) = match directed_index(value_xy, value_yx) {
            Ok(d) => (d, Status::Ok),
            Err(_) => (f64::NAN, Status::Degenerate),
        };
        IndexEstimate {
            index: index.into(),
            value_xy,
            value_yx,
            directed,
            elapsed_xy: 0.0,
            elapsed_yx: 0.0,
            params: BTreeMap::new(),
            status,
        }
    }

    /// Estimate with both directions flagged degenerate.
    pub fn degenerate(index: impl Into<String>) -> Self {
        let mut e = Self::new(index, f64::NAN, f64::NAN);
        e.status = Status::Degenerate;
        e
    }

    pub fn value(&self, dir: Direction) -> f64 {
        match dir {
            Direction::XtoY => self.value_xy,
            Direction::YtoX => self.value_yx,
        }
    }

    pub fn elapsed(&self, dir: Direction) -> f64 {
        match dir {
            Direction::XtoY => self.elapsed_xy,
            Direction::YtoX => self.elapsed_yx,
        }
    }

    pub fn set_elapsed(&mut self, dir: Direction, seconds: f64) {
        match dir {
            Direction::XtoY => self.elapsed_xy = seconds,
            Direction::YtoX => self.elapsed_yx = seconds,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = self.status.combine(status);
        self
    }
}
