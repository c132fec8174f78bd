//! Histogram and k-nearest-neighbour entropy machinery, and the indices built
//! on it: TE (H), ETE (H), TE (KSG) and CTIR.
//!
//! All quantities are in nats.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::estimate::{both_directions, DirValue};
use crate::neighbors::{has_ties, jitter, KdTree, Metric, PointSet};
use crate::rng;
use crate::series::{embed, DelayMatrix, Direction, EmbeddingSpec, IndexEstimate, SeriesPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistParams {
    pub bins: usize,
}

impl Default for HistParams {
    fn default() -> Self {
        HistParams { bins: 8 }
    }
}

impl HistParams {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 bins, got {}",
                self.bins
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsgParams {
    pub k: usize,
    /// Jitter half-width as a multiple of each column's standard deviation.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for KsgParams {
    fn default() -> Self {
        KsgParams {
            k: 4,
            jitter: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EteParams {
    pub shuffles: usize,
    pub seed: u64,
}

impl Default for EteParams {
    fn default() -> Self {
        EteParams {
            shuffles: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtirParams {
    pub tau_max: usize,
    pub ksg: KsgParams,
}

/// Bin boundaries for one dimension; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    boundaries: Vec<f64>,
}

impl BinEdges {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "bin boundaries must be strictly increasing".into(),
            ));
        }
        Ok(BinEdges { boundaries })
    }

    /// `bins` equal-width bins spanning `[min, max]`.
    pub fn equal_width(min: f64, max: f64, bins: usize) -> Result<Self> {
        if !(max > min) {
            return Err(Error::DegenerateSeries(format!(
                "empty range [{min}, {max}] for binning"
            )));
        }
        let width = (max - min) / bins as f64;
        let mut b: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
        b.push(max);
        Self::new(b)
    }

    pub fn bins(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn bin(&self, v: f64) -> Option<usize> {
        let (lo, hi) = (
            self.boundaries[0],
            *self.boundaries.last().expect("non-empty"),
        );
        if !(v >= lo && v <= hi) {
            return None;
        }
        let i = self.boundaries.partition_point(|b| *b <= v);
        Some((i - 1).min(self.bins() - 1))
    }
}

fn plug_in_entropy<I: Iterator<Item = u128>>(codes: I) -> f64 {
    let mut codes: Vec<u128> = codes.collect();
    codes.sort_unstable();
    let n = codes.len() as f64;
    -codes
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let p = run.len() as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Plug-in Shannon entropy of `samples` over the product partition `edges`.
pub fn hist_entropy(samples: &PointSet, edges: &[BinEdges]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    if edges.len() != samples.dim() {
        return Err(Error::InvalidParameter(format!(
            "{} bin edge sets for {}-dimensional samples",
            edges.len(),
            samples.dim()
        )));
    }
    let mut codes = Vec::with_capacity(samples.len());
    for i in 0..samples.len() {
        let mut code: u128 = 0;
        for (v, e) in samples.point(i).iter().zip(edges) {
            let b = e
                .bin(*v)
                .ok_or_else(|| Error::InvalidParameter(format!("sample {v} outside bin range")))?;
            code = code
                .checked_mul(e.bins() as u128)
                .and_then(|c| c.checked_add(b as u128))
                .ok_or_else(|| Error::InvalidParameter("too many product bins".into()))?;
        }
        codes.push(code);
    }
    Ok(plug_in_entropy(codes.into_iter()))
}

fn column_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Bin codes of the effect embedding, cause embedding and effect future.
struct BinnedRows {
    effect: Vec<u128>,
    cause: Vec<u128>,
    future: Vec<u128>,
    bins: u128,
    m: usize,
}

fn bin_rows(dm: &DelayMatrix, dir: Direction, p: &HistParams) -> Result<BinnedRows> {
    let m = dm.m();
    let (emb_e, emb_c, fut) = (
        dm.effect_embedding(dir),
        dm.cause_embedding(dir),
        dm.effect_future(dir),
    );
    let (lo_e, hi_e) = column_range(emb_e.iter().chain(fut).copied());
    let (lo_c, hi_c) = column_range(emb_c.iter().copied());
    let edges_e = BinEdges::equal_width(lo_e, hi_e, p.bins)?;
    let edges_c = BinEdges::equal_width(lo_c, hi_c, p.bins)?;
    let bins = p.bins as u128;
    if (bins as f64).powi(2 * m as i32 + 1) > u128::MAX as f64 {
        return Err(Error::InvalidParameter("too many product bins".into()));
    }
    let encode = |row: &[f64], e: &BinEdges| -> u128 {
        row.iter().fold(0u128, |acc, v| {
            acc * bins + e.bin(*v).expect("within observed range") as u128
        })
    };
    Ok(BinnedRows {
        effect: emb_e.chunks(m).map(|r| encode(r, &edges_e)).collect(),
        cause: emb_c.chunks(m).map(|r| encode(r, &edges_c)).collect(),
        future: fut
            .iter()
            .map(|v| edges_e.bin(*v).expect("within observed range") as u128)
            .collect(),
        bins,
        m,
    })
}

/// `H(e, f) + H(e, c) - H(e) - H(e, c, f)` from bin codes.
fn te_from_bins(b: &BinnedRows) -> f64 {
    let scale_m = b.bins.pow(b.m as u32);
    let n = b.effect.len();
    let h_ef = plug_in_entropy((0..n).map(|i| b.effect[i] * b.bins + b.future[i]));
    let h_ec = plug_in_entropy((0..n).map(|i| b.effect[i] * scale_m + b.cause[i]));
    let h_e = plug_in_entropy(b.effect.iter().copied());
    let h_ecf = plug_in_entropy(
        (0..n).map(|i| (b.effect[i] * scale_m + b.cause[i]) * b.bins + b.future[i]),
    );
    h_ef + h_ec - h_e - h_ecf
}

/// Histogram transfer entropy in one direction.
pub fn te_hist_direction(dm: &DelayMatrix, dir: Direction, p: &HistParams) -> Result<f64> {
    p.validate()?;
    Ok(te_from_bins(&bin_rows(dm, dir, p)?))
}

pub fn te_hist(dm: &DelayMatrix, p: &HistParams) -> Result<IndexEstimate> {
    p.validate()?;
    let est = both_directions("TE_H", |dir| {
        te_hist_direction(dm, dir, p).map(DirValue::ok)
    })?;
    Ok(est.with_param("m", dm.m()).with_param("bins", p.bins))
}

/// Permutes the cause series of `dir` (values and missing mask together).
fn shuffle_cause(
    pair: &SeriesPair,
    dir: Direction,
    rng: &mut rng::StreamRng,
) -> Result<SeriesPair> {
    let mut perm: Vec<usize> = (0..pair.len()).collect();
    perm.shuffle(rng);
    let (values, mask) = pair.cause(dir);
    let v: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
    let m: Vec<bool> = perm.iter().map(|&i| mask[i]).collect();
    let (ex, em) = pair.effect(dir);
    match dir {
        Direction::YtoX => SeriesPair::from_parts(ex.to_vec(), v, em.to_vec(), m),
        Direction::XtoY => SeriesPair::from_parts(v, ex.to_vec(), m, em.to_vec()),
    }
}

/// TE minus its mean over cause-shuffled surrogates, in one direction.
pub fn ete_hist_direction(
    pair: &SeriesPair,
    spec: EmbeddingSpec,
    dir: Direction,
    p: &HistParams,
    e: &EteParams,
) -> Result<f64> {
    if e.shuffles == 0 {
        return Err(Error::InvalidParameter("need at least one shuffle".into()));
    }
    let te = te_hist_direction(&embed(pair, spec)?, dir, p)?;
    let mut rng = rng::stream(e.seed, &format!("ete-shuffle-{dir}"));
    let mut surrogate = 0.0;
    for _ in 0..e.shuffles {
        let shuffled = shuffle_cause(pair, dir, &mut rng)?;
        surrogate += te_hist_direction(&embed(&shuffled, spec)?, dir, p)?;
    }
    Ok(te - surrogate / e.shuffles as f64)
}

pub fn ete_hist(
    pair: &SeriesPair,
    spec: EmbeddingSpec,
    p: &HistParams,
    e: &EteParams,
) -> Result<IndexEstimate> {
    p.validate()?;
    let est = both_directions("ETE_H", |dir| {
        ete_hist_direction(pair, spec, dir, p, e).map(DirValue::ok)
    })?;
    Ok(est
        .with_param("m", spec.m)
        .with_param("bins", p.bins)
        .with_param("shuffles", e.shuffles))
}

/// Result of a k-NN conditional mutual information estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsgOutcome {
    pub value: f64,
    /// Every sample hit the minimum possible marginal counts: the estimate is
    /// at its ceiling, as happens for identical continuous variables.
    pub saturated: bool,
    pub jittered: bool,
}

enum Counter<'a> {
    Sorted(Vec<f64>),
    Tree(KdTree<'a>),
}

impl Counter<'_> {
    /// Points strictly closer than `radius` to `query`, excluding one copy of it.
    fn count(&self, query: &[f64], radius: f64, self_index: usize) -> usize {
        match self {
            Counter::Sorted(v) => {
                if !(radius > 0.0) {
                    return 0;
                }
                let q = query[0];
                let inside = |x: f64| (x - q).abs() < radius;
                let mut lo = v.partition_point(|x| *x < q - radius);
                while lo > 0 && inside(v[lo - 1]) {
                    lo -= 1;
                }
                while lo < v.len() && v[lo] < q && !inside(v[lo]) {
                    lo += 1;
                }
                let mut hi = v.partition_point(|x| *x < q + radius).max(lo);
                while hi < v.len() && inside(v[hi]) {
                    hi += 1;
                }
                while hi > lo && v[hi - 1] > q && !inside(v[hi - 1]) {
                    hi -= 1;
                }
                // the query itself is always inside
                hi - lo - 1
            }
            Counter::Tree(t) => t.count_point(query, radius, true, Some(self_index)),
        }
    }
}

fn counter(set: &PointSet) -> Counter<'_> {
    if set.dim() == 1 {
        let mut v = set.coords().to_vec();
        v.sort_by(f64::total_cmp);
        Counter::Sorted(v)
    } else {
        Counter::Tree(KdTree::new(set, Metric::Linf))
    }
}

fn columns(set: &PointSet) -> Vec<Vec<f64>> {
    (0..set.dim())
        .map(|d| (0..set.len()).map(|i| set.point(i)[d]).collect())
        .collect()
}

fn stack(parts: &[&[Vec<f64>]], n: usize) -> Result<PointSet> {
    let cols: Vec<&Vec<f64>> = parts.iter().flat_map(|p| p.iter()).collect();
    let mut coords = Vec::with_capacity(n * cols.len());
    for i in 0..n {
        coords.extend(cols.iter().map(|c| c[i]));
    }
    PointSet::new(coords, cols.len())
}

/// Conditional mutual information `I(A; B | C)` by the k-nearest-neighbour
/// method under the max-norm, with strict-radius marginal counts. An empty
/// `c` gives the plain mutual information.
pub fn cmi_ksg(
    a: &PointSet,
    b: &PointSet,
    c: Option<&PointSet>,
    p: &KsgParams,
) -> Result<KsgOutcome> {
    let n = a.len();
    if b.len() != n || c.is_some_and(|c| c.len() != n) {
        return Err(Error::InvalidParameter(
            "A, B and C must have equal sample counts".into(),
        ));
    }
    if p.k == 0 || p.k >= n {
        return Err(Error::InsufficientPoints {
            k: p.k,
            available: n.saturating_sub(1),
        });
    }
    let mut rng = rng::stream(p.seed, "ksg-jitter");
    let mut jittered = false;
    let mut prepare = |set: &PointSet| -> Vec<Vec<f64>> {
        let mut cols = columns(set);
        for col in cols.iter_mut() {
            if has_ties(col) {
                jitter(col, p.jitter, &mut rng);
                jittered = true;
            }
        }
        cols
    };
    let (ca, cb) = (prepare(a), prepare(b));
    let cc = c.map(&mut prepare).unwrap_or_default();

    let joint = stack(&[&ca, &cb, &cc], n)?;
    let ac = stack(&[&ca, &cc], n)?;
    let bc = stack(&[&cb, &cc], n)?;
    let cset = if cc.is_empty() {
        None
    } else {
        Some(stack(&[&cc], n)?)
    };

    let joint_tree = KdTree::new(&joint, Metric::Linf);
    let (ac_count, bc_count) = (counter(&ac), counter(&bc));
    let c_count = cset.as_ref().map(counter);

    let k = p.k;
    let per_sample: Vec<Result<(f64, bool)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nn = joint_tree.knn(i, k, true)?;
            let d = nn[k - 1].distance;
            let n_ac = ac_count.count(ac.point(i), d, i);
            let n_bc = bc_count.count(bc.point(i), d, i);
            let n_c = match (&c_count, &cset) {
                (Some(cnt), Some(s)) => cnt.count(s.point(i), d, i),
                _ => n - 1,
            };
            let term =
                digamma((n_ac + 1) as f64) + digamma((n_bc + 1) as f64) - digamma((n_c + 1) as f64);
            Ok((term, n_ac + 1 == k && n_bc + 1 == k))
        })
        .collect();
    let mut sum = 0.0;
    let mut saturated = true;
    for r in per_sample {
        let (term, sat) = r?;
        sum += term;
        saturated &= sat;
    }
    Ok(KsgOutcome {
        value: digamma(k as f64) - sum / n as f64,
        saturated,
        jittered,
    })
}

fn single_column(values: impl Iterator<Item = f64>) -> Result<PointSet> {
    PointSet::new(values.collect(), 1)
}

/// KSG transfer entropy in one direction: `I(effect_{t+h}; cause_t | effect_t)`.
pub fn te_ksg_direction(dm: &DelayMatrix, dir: Direction, p: &KsgParams) -> Result<KsgOutcome> {
    let m = dm.m();
    let a = single_column(dm.effect_future(dir).iter().copied())?;
    let b = PointSet::new(dm.cause_embedding(dir).to_vec(), m)?;
    let c = PointSet::new(dm.effect_embedding(dir).to_vec(), m)?;
    let params = KsgParams {
        seed: rng::derive_seed(p.seed, dir.as_str()),
        ..*p
    };
    cmi_ksg(&a, &b, Some(&c), &params)
}

fn ksg_value(o: KsgOutcome) -> DirValue {
    DirValue {
        value: o.value,
        degenerate: o.saturated,
    }
}

pub fn te_ksg(dm: &DelayMatrix, p: &KsgParams) -> Result<IndexEstimate> {
    let est = both_directions("TE_KSG", |dir| te_ksg_direction(dm, dir, p).map(ksg_value))?;
    Ok(est.with_param("m", dm.m()).with_param("k", p.k))
}

/// `I(effect_{t+lag}; cause_t | effect_t)` over all complete triples.
pub fn lagged_cmi(
    pair: &SeriesPair,
    dir: Direction,
    lag: usize,
    p: &KsgParams,
) -> Result<KsgOutcome> {
    let (ev, em) = pair.effect(dir);
    let (cv, cm) = pair.cause(dir);
    let rows: Vec<usize> = (0..pair.len().saturating_sub(lag))
        .filter(|&t| !(em[t] || cm[t] || em[t + lag]))
        .collect();
    if rows.len() <= p.k {
        return Err(Error::InsufficientData {
            have: rows.len(),
            need: p.k + 1,
        });
    }
    let a = single_column(rows.iter().map(|&t| ev[t + lag]))?;
    let b = single_column(rows.iter().map(|&t| cv[t]))?;
    let c = single_column(rows.iter().map(|&t| ev[t]))?;
    let params = KsgParams {
        seed: rng::derive_seed(p.seed, &format!("{dir}-lag{lag}")),
        ..*p
    };
    cmi_ksg(&a, &b, Some(&c), &params)
}

/// Lag-averaged conditional mutual information in one direction.
pub fn ctir_direction(pair: &SeriesPair, dir: Direction, p: &CtirParams) -> Result<DirValue> {
    if p.tau_max == 0 {
        return Err(Error::InvalidParameter("tau_max must be >= 1".into()));
    }
    if pair.len() <= p.tau_max + 2 {
        return Err(Error::InsufficientData {
            have: pair.len(),
            need: p.tau_max + 3,
        });
    }
    let outcomes: Vec<Result<KsgOutcome>> = (1..=p.tau_max)
        .into_par_iter()
        .map(|lag| lagged_cmi(pair, dir, lag, &p.ksg))
        .collect();
    let mut total = 0.0;
    let mut degenerate = false;
    for o in outcomes {
        let o = o?;
        total += o.value;
        degenerate |= o.saturated;
    }
    Ok(DirValue {
        value: total / p.tau_max as f64,
        degenerate,
    })
}

pub fn ctir(pair: &SeriesPair, p: &CtirParams) -> Result<IndexEstimate> {
    let est = both_directions("CTIR", |dir| ctir_direction(pair, dir, p))?;
    Ok(est
        .with_param("tau_max", p.tau_max)
        .with_param("k", p.ksg.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{sim_lp, LpParams};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn col(v: Vec<f64>) -> PointSet {
        PointSet::new(v, 1).unwrap()
    }

    /// Direct plug-in over explicit bin tuples.
    fn entropy_oracle(samples: &[Vec<f64>], edges: &[BinEdges]) -> f64 {
        let keys: Vec<Vec<usize>> = samples
            .iter()
            .map(|s| {
                s.iter()
                    .zip(edges)
                    .map(|(v, e)| e.bin(*v).unwrap())
                    .collect()
            })
            .collect();
        let mut distinct: Vec<Vec<usize>> = keys.clone();
        distinct.sort();
        distinct.dedup();
        let n = keys.len() as f64;
        -distinct
            .iter()
            .map(|d| {
                let p = keys.iter().filter(|k| *k == d).count() as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    }

    #[test]
    fn uniform_bins_give_log8() {
        let v: Vec<f64> = (0..8000).map(|i| (i % 8) as f64 + 0.5).collect();
        let e = BinEdges::equal_width(0.0, 8.0, 8).unwrap();
        let h = hist_entropy(&col(v), &[e]).unwrap();
        assert!((h - 8f64.ln()).abs() < 1e-12);
        assert!((h - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn single_bin_gives_zero() {
        let e = BinEdges::equal_width(0.0, 1.0, 4).unwrap();
        assert_eq!(hist_entropy(&col(vec![0.1, 0.2, 0.15]), &[e]).unwrap(), 0.0);
    }

    #[test]
    fn hist_entropy_errors() {
        let e = BinEdges::equal_width(0.0, 1.0, 4).unwrap();
        assert!(hist_entropy(&col(vec![2.0]), &[e.clone()]).is_err());
        assert!(BinEdges::equal_width(1.0, 1.0, 4).is_err());
        assert!(BinEdges::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn bin_edges_close_last_bin() {
        let e = BinEdges::equal_width(0.0, 1.0, 4).unwrap();
        assert_eq!(e.bin(0.0), Some(0));
        assert_eq!(e.bin(0.25), Some(1));
        assert_eq!(e.bin(1.0), Some(3));
        assert_eq!(e.bin(1.5), None);
    }

    proptest! {
        #[test]
        fn hist_entropy_matches_direct_sum(raw in proptest::collection::vec((0u8..5, 0u8..3), 1..100)) {
            let samples: Vec<Vec<f64>> = raw.iter().map(|(a, b)| vec![f64::from(*a), f64::from(*b)]).collect();
            let edges = [BinEdges::equal_width(0.0, 4.0, 5).unwrap(), BinEdges::equal_width(0.0, 2.0, 3).unwrap()];
            let set = PointSet::from_rows(&samples).unwrap();
            let h = hist_entropy(&set, &edges).unwrap();
            prop_assert_eq!(h, entropy_oracle(&samples, &edges));
        }

        #[test]
        fn hist_entropy_subadditive(raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..200)) {
            let samples: Vec<Vec<f64>> = raw.iter().map(|(a, b)| vec![*a, *b]).collect();
            let e = BinEdges::equal_width(0.0, 1.0, 6).unwrap();
            let joint = hist_entropy(&PointSet::from_rows(&samples).unwrap(), &[e.clone(), e.clone()]).unwrap();
            let hx = hist_entropy(&col(raw.iter().map(|r| r.0).collect()), &[e.clone()]).unwrap();
            let hy = hist_entropy(&col(raw.iter().map(|r| r.1).collect()), &[e]).unwrap();
            prop_assert!(joint <= hx + hy + 1e-12);
        }
    }

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn te_hist_independent_uniform_is_small() {
        let pair = SeriesPair::new(uniforms(10_000, 1), uniforms(10_000, 2)).unwrap();
        let est = te_hist(
            &embed(&pair, EmbeddingSpec::dim(1)).unwrap(),
            &HistParams::default(),
        )
        .unwrap();
        for v in [est.value_xy, est.value_yx] {
            assert!(v > 0.0 && v < 0.05, "{v}");
        }
    }

    #[test]
    fn te_hist_period_two_is_zero() {
        let x: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let pair = SeriesPair::new(x.clone(), x).unwrap();
        let est = te_hist(
            &embed(&pair, EmbeddingSpec::dim(1)).unwrap(),
            &HistParams::default(),
        )
        .unwrap();
        assert!(est.value_xy.abs() < 1e-12 && est.value_yx.abs() < 1e-12);
    }

    #[test]
    fn te_hist_constant_is_degenerate() {
        let pair = SeriesPair::new(vec![1.0; 50], uniforms(50, 3)).unwrap();
        let est = te_hist(
            &embed(&pair, EmbeddingSpec::dim(1)).unwrap(),
            &HistParams::default(),
        )
        .unwrap();
        assert_eq!(est.status, crate::series::Status::Degenerate);
        assert!(est.value_yx.is_nan());
    }

    #[test]
    fn te_hist_affine_invariant() {
        let pair = sim_lp(&LpParams {
            lambda: 0.5,
            len: 3_000,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let base = te_hist(
            &embed(&pair, EmbeddingSpec::dim(1)).unwrap(),
            &HistParams::default(),
        )
        .unwrap();
        let moved = pair.map_series(true, false, |_, v| 3.0 * v - 7.0).unwrap();
        let other = te_hist(
            &embed(&moved, EmbeddingSpec::dim(1)).unwrap(),
            &HistParams::default(),
        )
        .unwrap();
        assert_eq!(base.value_xy, other.value_xy);
        assert_eq!(base.value_yx, other.value_yx);
    }

    #[test]
    fn ete_removes_bias_on_independent_series() {
        let mut ete_abs = 0.0;
        let mut te = 0.0;
        for seed in 0..10 {
            let pair = SeriesPair::new(uniforms(2_000, seed), uniforms(2_000, 100 + seed)).unwrap();
            let spec = EmbeddingSpec::dim(1);
            te += te_hist(&embed(&pair, spec).unwrap(), &HistParams::default())
                .unwrap()
                .value_yx;
            ete_abs += ete_hist(
                &pair,
                spec,
                &HistParams::default(),
                &EteParams { shuffles: 10, seed },
            )
            .unwrap()
            .value_yx;
        }
        assert!(ete_abs.abs() < te, "ete {ete_abs} te {te}");
    }

    #[test]
    fn ete_is_nonpositive_when_te_is_zero() {
        let x: Vec<f64> = (0..400)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let pair = SeriesPair::new(x, uniforms(400, 9)).unwrap();
        let est = ete_hist(
            &pair,
            EmbeddingSpec::dim(1),
            &HistParams::default(),
            &EteParams::default(),
        )
        .unwrap();
        assert!(est.value_yx <= 1e-12);
    }

    #[test]
    fn ksg_independent_normals() {
        let mut worst: f64 = 0.0;
        for seed in 0..10 {
            let a = col(normals(10_000, seed));
            let b = col(normals(10_000, 50 + seed));
            let mi = cmi_ksg(&a, &b, None, &KsgParams::default()).unwrap();
            worst = worst.max(mi.value.abs());
        }
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn ksg_gaussian_mutual_information() {
        let r: f64 = 0.6;
        let exact = -0.5 * (1.0 - r * r).ln();
        assert!((exact - 0.2231).abs() < 1e-4);
        let mut total = 0.0;
        for seed in 0..10 {
            let z1 = normals(10_000, 7 + 2 * seed);
            let z2 = normals(10_000, 8 + 2 * seed);
            let b: Vec<f64> = z1
                .iter()
                .zip(&z2)
                .map(|(u, v)| r * u + (1.0 - r * r).sqrt() * v)
                .collect();
            total += cmi_ksg(&col(z1), &col(b), None, &KsgParams::default())
                .unwrap()
                .value;
        }
        assert!((total / 10.0 - exact).abs() < 0.01, "{}", total / 10.0);
    }

    proptest! {
        #[test]
        fn sorted_counter_matches_brute_force(raw in proptest::collection::vec(-20i32..20, 2..60), q in 0usize..60, r in 0i32..10) {
            let v: Vec<f64> = raw.iter().map(|x| f64::from(*x) * 0.1).collect();
            let q = q % v.len();
            let radius = f64::from(r) * 0.1;
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let fast = Counter::Sorted(sorted).count(&[v[q]], radius, q);
            let slow = (0..v.len()).filter(|&j| j != q && (v[j] - v[q]).abs() < radius).count();
            prop_assert_eq!(fast, slow);
        }
    }

    #[test]
    fn ksg_identical_variables_saturate() {
        let a = col(normals(2_000, 3));
        let out = cmi_ksg(&a, &a.clone(), None, &KsgParams::default()).unwrap();
        assert!(out.value.is_finite() && out.value > 3.0);
        assert!(out.saturated);
    }

    #[test]
    fn ksg_rejects_large_k() {
        let a = col(vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            cmi_ksg(
                &a,
                &a.clone(),
                None,
                &KsgParams {
                    k: 3,
                    ..Default::default()
                }
            ),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn ksg_jitters_ties() {
        let a = col((0..500).map(|i| f64::from(i % 5)).collect());
        let b = col(uniforms(500, 4));
        let out = cmi_ksg(&a, &b, None, &KsgParams::default()).unwrap();
        assert!(out.jittered && out.value.is_finite());
    }

    #[test]
    fn te_ksg_common_rescaling_invariant() {
        let pair = sim_lp(&LpParams {
            lambda: 0.5,
            len: 2_000,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let scaled = pair.map_series(true, true, |_, v| 10.0 * v).unwrap();
        let spec = EmbeddingSpec::dim(1);
        let a = te_ksg(&embed(&pair, spec).unwrap(), &KsgParams::default()).unwrap();
        let b = te_ksg(&embed(&scaled, spec).unwrap(), &KsgParams::default()).unwrap();
        assert!((a.value_yx - b.value_yx).abs() < 1e-9);
        assert!((a.value_xy - b.value_xy).abs() < 1e-9);
    }

    #[test]
    fn ctir_single_lag_equals_te_ksg() {
        let pair = sim_lp(&LpParams {
            lambda: 0.4,
            len: 2_000,
            seed: 6,
            ..Default::default()
        })
        .unwrap();
        let ksg = KsgParams::default();
        let c = ctir(&pair, &CtirParams { tau_max: 1, ksg }).unwrap();
        let dm = embed(&pair, EmbeddingSpec::dim(1)).unwrap();
        // identical samples; jitter streams differ but no ties occur in Gaussian data
        let te = te_ksg(&dm, &ksg).unwrap();
        assert!((c.value_yx - te.value_yx).abs() < 1e-12);
        assert!((c.value_xy - te.value_xy).abs() < 1e-12);
    }

    #[test]
    fn ctir_independent_near_zero() {
        let pair = SeriesPair::new(normals(4_000, 21), normals(4_000, 22)).unwrap();
        let c = ctir(
            &pair,
            &CtirParams {
                tau_max: 5,
                ksg: KsgParams::default(),
            },
        )
        .unwrap();
        assert!(c.value_xy.abs() < 0.02 && c.value_yx.abs() < 0.02, "{c:?}");
    }

    #[test]
    fn ctir_needs_enough_samples() {
        let pair = SeriesPair::new(normals(6, 1), normals(6, 2)).unwrap();
        let c = ctir(
            &pair,
            &CtirParams {
                tau_max: 5,
                ksg: KsgParams::default(),
            },
        )
        .unwrap();
        assert_eq!(c.status, crate::series::Status::Degenerate);
    }
}
