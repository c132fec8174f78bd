//! Post-simulation measurement perturbations and the f/g deviation
//! statistics comparing a perturbed sweep with its baseline.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{in_sync_window, mean_sd, GridKey, OrderedF64, Statistic, SweepResult};
use crate::rng::stream;
use crate::series::{standardize, SeriesPair};
use crate::simulate::{Coupling, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    X,
    Y,
    #[default]
    Both,
}

impl Target {
    fn on(self) -> (bool, bool) {
        match self {
            Target::X => (true, false),
            Target::Y => (false, true),
            Target::Both => (true, true),
        }
    }

    pub fn parse(s: &str) -> Option<Target> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Some(Target::X),
            "y" => Some(Target::Y),
            "both" | "xy" | "x,y" => Some(Target::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    Identity,
    /// Keep the first `len` samples.
    DataSize {
        len: usize,
    },
    Standardize,
    Scale {
        factor: f64,
        target: Target,
    },
    /// Decimal rounding, half away from zero.
    Round {
        decimals: u32,
        target: Target,
    },
    /// Mask exactly `floor(fraction * T)` further samples of each targeted series.
    Missing {
        fraction: f64,
        target: Target,
    },
    /// Additive i.i.d. Gaussian noise of the given variance.
    Noise {
        variance: f64,
        target: Target,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub kind: Perturbation,
    #[serde(default)]
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(kind: Perturbation, seed: u64) -> Self {
        PerturbationSpec { kind, seed }
    }

    pub fn reseeded(&self, seed: u64) -> Self {
        PerturbationSpec {
            kind: self.kind.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.kind {
            Perturbation::DataSize { len } if len < 2 => bad(format!("data size {len} < 2")),
            Perturbation::Scale { factor, .. } if !(factor.is_finite() && factor != 0.0) => {
                bad(format!("scale factor {factor} must be finite and non-zero"))
            }
            Perturbation::Round { decimals, .. } if decimals > 15 => {
                bad(format!("{decimals} decimals exceeds 15"))
            }
            Perturbation::Missing { fraction, .. } if !(fraction > 0.0 && fraction < 1.0) => {
                bad(format!("missing fraction {fraction} outside (0, 1)"))
            }
            Perturbation::Noise { variance, .. } if !(variance > 0.0 && variance.is_finite()) => {
                bad(format!("noise variance {variance} must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in tables, e.g. `scale(10,x)`.
    pub fn label(&self) -> String {
        let t = |t: Target| format!("{t:?}").to_ascii_lowercase();
        match &self.kind {
            Perturbation::Identity => "identity".into(),
            Perturbation::DataSize { len } => format!("data_size({len})"),
            Perturbation::Standardize => "standardize".into(),
            Perturbation::Scale { factor, target } => format!("scale({factor},{})", t(*target)),
            Perturbation::Round { decimals, target } => format!("round({decimals},{})", t(*target)),
            Perturbation::Missing { fraction, target } => {
                format!("missing({fraction},{})", t(*target))
            }
            Perturbation::Noise { variance, target } => format!("noise({variance},{})", t(*target)),
        }
    }
}

/// Rounds to `decimals` places, halves away from zero.
pub fn round_half_away(v: f64, decimals: u32) -> f64 {
    let p = 10f64.powi(decimals as i32);
    (v * p).round() / p
}

fn missing_mask(present: &[bool], count: usize, seed: u64, label: &str) -> Result<Vec<bool>> {
    let candidates: Vec<usize> = present
        .iter()
        .enumerate()
        .filter(|(_, &m)| !m)
        .map(|(i, _)| i)
        .collect();
    if count > candidates.len() {
        return Err(Error::InsufficientData {
            have: candidates.len(),
            need: count,
        });
    }
    let mut mask = vec![false; present.len()];
    for i in sample(&mut stream(seed, label), candidates.len(), count) {
        mask[candidates[i]] = true;
    }
    Ok(mask)
}

pub fn apply_perturbation(pair: &SeriesPair, spec: &PerturbationSpec) -> Result<SeriesPair> {
    spec.validate()?;
    match spec.kind {
        Perturbation::Identity => Ok(pair.clone()),
        Perturbation::DataSize { len } => pair.truncated(len),
        Perturbation::Standardize => standardize(pair),
        Perturbation::Scale { factor, target } => {
            let (ox, oy) = target.on();
            pair.map_series(ox, oy, |_, v| v * factor)
        }
        Perturbation::Round { decimals, target } => {
            let (ox, oy) = target.on();
            pair.map_series(ox, oy, |_, v| round_half_away(v, decimals))
        }
        Perturbation::Missing { fraction, target } => {
            let count = (fraction * pair.len() as f64).floor() as usize;
            let (ox, oy) = target.on();
            let none = vec![false; pair.len()];
            let xm = if ox {
                missing_mask(pair.x_missing(), count, spec.seed, "missing-x")?
            } else {
                none.clone()
            };
            let ym = if oy {
                missing_mask(pair.y_missing(), count, spec.seed, "missing-y")?
            } else {
                none
            };
            pair.with_extra_missing(&xm, &ym)
        }
        Perturbation::Noise { variance, target } => {
            let normal = Normal::new(0.0, variance.sqrt())
                .map_err(|e| Error::InvalidParameter(format!("noise variance: {e}")))?;
            let (ox, oy) = target.on();
            let mut rx = stream(spec.seed, "noise-x");
            let x = pair.map_series(ox, false, |_, v| v + normal.sample(&mut rx))?;
            let mut ry = stream(spec.seed, "noise-y");
            x.map_series(false, oy, |_, v| v + normal.sample(&mut ry))
        }
    }
}

/// Per-coupling mean and sample std of `D` over runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStats {
    pub coupling: Coupling,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexFg {
    pub index: String,
    /// `<mu - mu_hat> / <|mu|>`; NaN when `<|mu|> = 0`.
    pub f: f64,
    /// `<sigma_hat> / <sigma>`; NaN when `<sigma> = 0`.
    pub g: f64,
    pub baseline: Vec<LambdaStats>,
    pub perturbed: Vec<LambdaStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSummary {
    pub rows: Vec<IndexFg>,
    pub excluded: Vec<Coupling>,
}

impl PerturbSummary {
    pub fn get(&self, index: &str) -> Option<&IndexFg> {
        self.rows.iter().find(|r| r.index == index)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "f", "g"])?;
        let fmt = |v: f64| {
            if v.is_finite() {
                let s = format!("{v:.3}");
                if s == "-0.000" {
                    "0.000".to_string()
                } else {
                    s
                }
            } else {
                crate::harness::NA.to_string()
            }
        };
        for r in &self.rows {
            w.write_record([r.index.clone(), fmt(r.f), fmt(r.g)])?;
        }
        w.flush()?;
        Ok(())
    }
}

type Coord = (OrderedF64, OrderedF64);

fn lambda_stats(res: &SweepResult, index: &str) -> BTreeMap<Coord, (LambdaStats, bool)> {
    let mut by_lambda: BTreeMap<Coord, Vec<f64>> = BTreeMap::new();
    for (k, v) in res.statistic(index, Statistic::Directed) {
        by_lambda
            .entry((k.lambda_xy, k.lambda_yx))
            .or_default()
            .push(v);
    }
    by_lambda
        .into_iter()
        .map(|(c, vals)| {
            let finite = vals.iter().all(|v| v.is_finite());
            let (mean, std) = mean_sd(&vals);
            let coupling = GridKey::new(c.0 .0, c.1 .0, 0).coupling();
            (
                c,
                (
                    LambdaStats {
                        coupling,
                        mean,
                        std,
                        runs: vals.len(),
                    },
                    finite,
                ),
            )
        })
        .collect()
}

/// Compares per-coupling means and standard deviations of the directed index
/// between two sweeps over the same grid. Coupling values in the Ulam
/// synchrony windows and values with undefined estimates are left out.
pub fn summarize_fg(
    baseline: &SweepResult,
    perturbed: &SweepResult,
    system: SystemKind,
) -> Result<PerturbSummary> {
    let names = baseline.index_names();
    if names != perturbed.index_names() {
        return Err(Error::InvalidParameter(
            "baseline and perturbed sweeps cover different indices".into(),
        ));
    }
    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    for name in &names {
        let base = lambda_stats(baseline, name);
        let pert = lambda_stats(perturbed, name);
        if base.keys().ne(pert.keys()) {
            return Err(Error::InvalidParameter(format!(
                "{name}: coupling grids differ"
            )));
        }
        let (mut b_used, mut p_used) = (Vec::new(), Vec::new());
        for (c, (b, b_ok)) in &base {
            let (p, p_ok) = &pert[c];
            if in_sync_window(system, b.coupling) {
                if !excluded.contains(&b.coupling) {
                    excluded.push(b.coupling);
                }
                continue;
            }
            if *b_ok && *p_ok {
                b_used.push(*b);
                p_used.push(*p);
            }
        }
        let (f, g) = fg(&b_used, &p_used).unwrap_or_else(|e| {
            log::warn!("{name}: {e}");
            (f64::NAN, f64::NAN)
        });
        let g = if b_used.is_empty() { f64::NAN } else { g };
        rows.push(IndexFg {
            index: name.clone(),
            f,
            g,
            baseline: b_used,
            perturbed: p_used,
        });
    }
    Ok(PerturbSummary { rows, excluded })
}

/// `f = <mu - mu_hat> / <|mu|>` and `g = <sigma_hat> / <sigma>`. An all-zero
/// baseline mean makes `f` undefined; a zero baseline spread makes `g` NaN.
pub fn fg(baseline: &[LambdaStats], perturbed: &[LambdaStats]) -> Result<(f64, f64)> {
    if baseline.is_empty() || baseline.len() != perturbed.len() {
        return Err(Error::Undefined("no comparable coupling values".into()));
    }
    let n = baseline.len() as f64;
    let abs_mu = baseline.iter().map(|b| b.mean.abs()).sum::<f64>() / n;
    let diff = baseline
        .iter()
        .zip(perturbed)
        .map(|(b, p)| b.mean - p.mean)
        .sum::<f64>()
        / n;
    let sigma = baseline.iter().map(|b| b.std).sum::<f64>() / n;
    let sigma_hat = perturbed.iter().map(|p| p.std).sum::<f64>() / n;
    let g = if sigma > 0.0 {
        sigma_hat / sigma
    } else {
        f64::NAN
    };
    if !(abs_mu > 0.0) {
        return Err(Error::Undefined(
            "f undefined: baseline mean is zero everywhere".into(),
        ));
    }
    Ok((diff / abs_mu, g))
}
