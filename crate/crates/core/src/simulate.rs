//! Seeded generators for the four benchmark systems.
//!
//! Each generator discards a fixed number of transient iterations before
//! recording: 10^4 for the linear process and 10^5 for the chaotic maps.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::SeriesPair;

pub const LP_TRANSIENTS: usize = 10_000;
pub const MAP_TRANSIENTS: usize = 100_000;
/// Any state beyond this magnitude counts as an escape to infinity.
pub const ESCAPE_BOUND: f64 = 1e6;
pub const MAX_RESTARTS: usize = 100;

/// Linear autoregressive process with `Y -> X` coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpParams {
    pub b_x: f64,
    pub b_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub lambda: f64,
    pub len: usize,
    pub seed: u64,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            b_x: 0.8,
            b_y: 0.4,
            var_x: 0.2,
            var_y: 0.2,
            lambda: 0.0,
            len: 10_000,
            seed: 0,
        }
    }
}

impl LpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b_x.abs() < 1.0 && self.b_y.abs() < 1.0) {
            return Err(Error::NonStationary(format!(
                "|b_x| and |b_y| must be < 1 (b_x={}, b_y={})",
                self.b_x, self.b_y
            )));
        }
        if !(self.var_x >= 0.0 && self.var_y >= 0.0) {
            return Err(Error::InvalidParameter(
                "innovation variances must be >= 0".into(),
            ));
        }
        check_unit(self.lambda, "lambda")?;
        check_len(self.len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlamParams {
    pub lattice_size: usize,
    pub lambda: f64,
    pub len: usize,
    pub seed: u64,
}

impl Default for UlamParams {
    fn default() -> Self {
        UlamParams {
            lattice_size: 100,
            lambda: 0.0,
            len: 1_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonUniParams {
    pub a: f64,
    pub b_x: f64,
    pub b_y: f64,
    pub lambda: f64,
    pub len: usize,
    pub seed: u64,
}

impl Default for HenonUniParams {
    fn default() -> Self {
        HenonUniParams {
            a: 1.4,
            b_x: 0.3,
            b_y: 0.3,
            lambda: 0.0,
            len: 1_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonBiParams {
    pub a: f64,
    pub b_x: f64,
    pub b_y: f64,
    pub lambda_xy: f64,
    pub lambda_yx: f64,
    pub len: usize,
    pub seed: u64,
}

impl Default for HenonBiParams {
    fn default() -> Self {
        HenonBiParams {
            a: 1.4,
            b_x: 0.3,
            b_y: 0.3,
            lambda_xy: 0.0,
            lambda_yx: 0.0,
            len: 10_000,
            seed: 0,
        }
    }
}

fn check_unit(v: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidParameter(
            "series length must be positive".into(),
        ));
    }
    Ok(())
}

pub fn sim_lp(p: &LpParams) -> Result<SeriesPair> {
    p.validate()?;
    let mut rng = rng::stream(p.seed, "lp");
    let (sx, sy) = (p.var_x.sqrt(), p.var_y.sqrt());
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let mut x = sx * normal();
    let mut y = sy * normal();
    let mut xs = Vec::with_capacity(p.len);
    let mut ys = Vec::with_capacity(p.len);
    for step in 0..LP_TRANSIENTS + p.len {
        if step >= LP_TRANSIENTS {
            xs.push(x);
            ys.push(y);
        }
        let ex = sx * normal();
        let ey = sy * normal();
        let next_x = p.b_x * x + p.lambda * y + ex;
        y = p.b_y * y + ey;
        x = next_x;
    }
    SeriesPair::new(xs, ys)
}

/// Ulam lattice iterated from an explicit state; `transients` steps are
/// discarded before `len` samples of sites 1 and 2 are recorded.
pub fn ulam_from_state(
    state: &[f64],
    lambda: f64,
    transients: usize,
    len: usize,
) -> Result<SeriesPair> {
    let n = state.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "Ulam lattice needs at least 2 sites".into(),
        ));
    }
    check_unit(lambda, "lambda")?;
    check_len(len)?;
    let f = |s: f64| 2.0 - s * s;
    let mut cur = state.to_vec();
    let mut next = vec![0.0; n];
    let mut xs = Vec::with_capacity(len);
    let mut ys = Vec::with_capacity(len);
    for step in 0..transients + len {
        if step >= transients {
            xs.push(cur[0]);
            ys.push(cur[1]);
        }
        next[0] = f(lambda * cur[n - 1] + (1.0 - lambda) * cur[0]);
        for l in 1..n {
            next[l] = f(lambda * cur[l - 1] + (1.0 - lambda) * cur[l]);
        }
        std::mem::swap(&mut cur, &mut next);
        if !cur.iter().all(|s| s.abs() <= ESCAPE_BOUND) {
            return Err(Error::NumericalEscape(format!(
                "Ulam lattice diverged at step {step}"
            )));
        }
    }
    SeriesPair::new(xs, ys)
}

pub fn sim_ulam(p: &UlamParams) -> Result<SeriesPair> {
    let mut rng = rng::stream(p.seed, "ulam");
    let state: Vec<f64> = (0..p.lattice_size)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    ulam_from_state(&state, p.lambda, MAP_TRANSIENTS, p.len)
}

/// Second-order two-variable map `(x_{t+2}, y_{t+2}) = step(x_{t+1}, x_t, y_{t+1}, y_t)`.
fn iterate_map(
    init: [f64; 4],
    transients: usize,
    len: usize,
    step: impl Fn(f64, f64, f64, f64) -> (f64, f64),
) -> Option<SeriesPair> {
    let [mut x0, mut x1, mut y0, mut y1] = init;
    let mut xs = Vec::with_capacity(len);
    let mut ys = Vec::with_capacity(len);
    for i in 0..transients + len {
        if i >= transients {
            xs.push(x0);
            ys.push(y0);
        }
        let (x2, y2) = step(x1, x0, y1, y0);
        if !(x2.abs() <= ESCAPE_BOUND && y2.abs() <= ESCAPE_BOUND) {
            return None;
        }
        (x0, x1, y0, y1) = (x1, x2, y1, y2);
    }
    SeriesPair::new(xs, ys).ok()
}

fn henon_uni_step(p: &HenonUniParams) -> impl Fn(f64, f64, f64, f64) -> (f64, f64) + '_ {
    move |x1, x0, y1, y0| {
        let x2 = p.a - x1 * x1 + p.b_x * x0;
        let y2 = p.a - (p.lambda * x1 + (1.0 - p.lambda) * y1) * y1 + p.b_y * y0;
        (x2, y2)
    }
}

fn henon_bi_step(p: &HenonBiParams) -> impl Fn(f64, f64, f64, f64) -> (f64, f64) + '_ {
    move |x1, x0, y1, y0| {
        let x2 = p.a - x1 * x1 + p.lambda_yx * (x1 * x1 - y1 * y1) + p.b_x * x0;
        let y2 = p.a - y1 * y1 + p.lambda_xy * (y1 * y1 - x1 * x1) + p.b_y * y0;
        (x2, y2)
    }
}

/// Hénon unidirectional map from initial values `(x_0, x_1, y_0, y_1)`.
pub fn henon_uni_from_state(
    p: &HenonUniParams,
    init: [f64; 4],
    transients: usize,
) -> Result<SeriesPair> {
    check_unit(p.lambda, "lambda")?;
    check_len(p.len)?;
    iterate_map(init, transients, p.len, henon_uni_step(p))
        .ok_or_else(|| Error::NumericalEscape("Hénon map escaped".into()))
}

pub fn henon_bi_from_state(
    p: &HenonBiParams,
    init: [f64; 4],
    transients: usize,
) -> Result<SeriesPair> {
    validate_bi(p)?;
    iterate_map(init, transients, p.len, henon_bi_step(p))
        .ok_or_else(|| Error::NumericalEscape("Hénon map escaped".into()))
}

fn validate_bi(p: &HenonBiParams) -> Result<()> {
    for (v, name) in [(p.lambda_xy, "lambda_xy"), (p.lambda_yx, "lambda_yx")] {
        if !(0.0..=0.4).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0, 0.4], got {v}"
            )));
        }
    }
    check_len(p.len)
}

/// Draws initial conditions in (-0.1, 0.1) until the orbit stays bounded.
fn with_restarts(
    seed: u64,
    mut attempt: impl FnMut([f64; 4]) -> Option<SeriesPair>,
) -> Result<SeriesPair> {
    let mut rng = rng::stream(seed, "henon");
    for _ in 0..=MAX_RESTARTS {
        let init = [(); 4].map(|_| rng.random_range(-0.1..0.1));
        if let Some(pair) = attempt(init) {
            return Ok(pair);
        }
    }
    Err(Error::NumericalEscape(format!(
        "Hénon orbit escaped after {MAX_RESTARTS} restarts"
    )))
}

pub fn sim_henon_uni(p: &HenonUniParams) -> Result<SeriesPair> {
    check_unit(p.lambda, "lambda")?;
    check_len(p.len)?;
    let step = henon_uni_step(p);
    with_restarts(p.seed, |init| {
        iterate_map(init, MAP_TRANSIENTS, p.len, &step)
    })
}

pub fn sim_henon_bi(p: &HenonBiParams) -> Result<SeriesPair> {
    validate_bi(p)?;
    let step = henon_bi_step(p);
    with_restarts(p.seed, |init| {
        iterate_map(init, MAP_TRANSIENTS, p.len, &step)
    })
}

/// Coupling strengths of a grid point. Single-coupling systems use the
/// component matching their causal direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coupling {
    pub xy: f64,
    pub yx: f64,
}

/// The benchmark systems, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemKind {
    #[serde(rename = "lp")]
    LinearProcess,
    #[serde(rename = "ulam")]
    Ulam,
    #[serde(rename = "henon-uni")]
    HenonUni,
    #[serde(rename = "henon-bi-i")]
    HenonBiIdentical,
    #[serde(rename = "henon-bi-ni")]
    HenonBiNonIdentical,
}

impl SystemKind {
    pub const ALL: [SystemKind; 5] = [
        SystemKind::LinearProcess,
        SystemKind::Ulam,
        SystemKind::HenonUni,
        SystemKind::HenonBiIdentical,
        SystemKind::HenonBiNonIdentical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::LinearProcess => "lp",
            SystemKind::Ulam => "ulam",
            SystemKind::HenonUni => "henon-uni",
            SystemKind::HenonBiIdentical => "henon-bi-i",
            SystemKind::HenonBiNonIdentical => "henon-bi-ni",
        }
    }

    pub fn parse(s: &str) -> Option<SystemKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_bidirectional(self) -> bool {
        matches!(
            self,
            SystemKind::HenonBiIdentical | SystemKind::HenonBiNonIdentical
        )
    }

    /// Maximum coupling in the benchmark sweep range.
    pub fn max_coupling(self) -> f64 {
        if self.is_bidirectional() {
            0.4
        } else {
            1.0
        }
    }

    /// Grid point for a scalar coupling `lambda`.
    pub fn coupling(self, lambda: f64) -> Coupling {
        match self {
            SystemKind::LinearProcess => Coupling {
                xy: 0.0,
                yx: lambda,
            },
            SystemKind::Ulam | SystemKind::HenonUni => Coupling {
                xy: lambda,
                yx: 0.0,
            },
            _ => Coupling {
                xy: lambda,
                yx: lambda,
            },
        }
    }

    /// Scalar coupling of a grid point for single-coupling systems.
    pub fn scalar_coupling(self, c: Coupling) -> f64 {
        match self {
            SystemKind::LinearProcess => c.yx,
            _ => c.xy,
        }
    }

    /// Simulates this system with its benchmark default parameters.
    pub fn simulate(self, coupling: Coupling, len: usize, seed: u64) -> Result<SeriesPair> {
        match self {
            SystemKind::LinearProcess => sim_lp(&LpParams {
                lambda: coupling.yx,
                len,
                seed,
                ..Default::default()
            }),
            SystemKind::Ulam => sim_ulam(&UlamParams {
                lambda: coupling.xy,
                len,
                seed,
                ..Default::default()
            }),
            SystemKind::HenonUni => sim_henon_uni(&HenonUniParams {
                lambda: coupling.xy,
                len,
                seed,
                ..Default::default()
            }),
            SystemKind::HenonBiIdentical | SystemKind::HenonBiNonIdentical => {
                let b_y = if self == SystemKind::HenonBiIdentical {
                    0.3
                } else {
                    0.1
                };
                sim_henon_bi(&HenonBiParams {
                    b_y,
                    lambda_xy: coupling.xy,
                    lambda_yx: coupling.yx,
                    len,
                    seed,
                    ..Default::default()
                })
            }
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
