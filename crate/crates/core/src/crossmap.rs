//! State-space indices: the similarity indices SI¹ and SI² and convergent
//! cross mapping.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{both_directions, DirValue};
use crate::neighbors::{KdTree, Metric, PointSet};
use crate::rng;
use crate::series::{DelayMatrix, Direction, IndexEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiParams {
    pub neighbours: usize,
    pub metric: Metric,
}

impl SiParams {
    pub fn new(neighbours: usize) -> Self {
        SiParams {
            neighbours,
            metric: Metric::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcmParams {
    /// Largest library size; the number of embedded rows when unset.
    pub t_max: Option<usize>,
    pub segments: usize,
    pub delta_rho: f64,
    pub grid_size: usize,
    pub seed: u64,
}

impl Default for CcmParams {
    fn default() -> Self {
        CcmParams {
            t_max: None,
            segments: 40,
            delta_rho: 0.05,
            grid_size: 20,
            seed: 0,
        }
    }
}

/// Per-row neighbour distance averages for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SiTerms {
    /// Mean squared distance to all other rows.
    pub all: Vec<f64>,
    /// Mean squared distance to the row's own R nearest neighbours.
    pub own: Vec<f64>,
    /// Mean squared distance to the rows whose indices are the R nearest
    /// neighbours in the other space.
    pub mapped: Vec<f64>,
}

/// SI¹ and SI² in one direction; the flag reports floored zero distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiValues {
    pub si1: f64,
    pub si2: f64,
    pub floored: bool,
}

fn centered(set: &PointSet) -> Vec<f64> {
    let (n, d) = (set.len(), set.dim());
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(set.point(i)) {
            *m += v / n as f64;
        }
    }
    set.coords()
        .chunks(d)
        .flat_map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect::<Vec<_>>())
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn si_terms(own: &PointSet, other: &PointSet, r: usize, metric: Metric) -> Result<SiTerms> {
    let n = own.len();
    if other.len() != n {
        return Err(Error::InvalidParameter(
            "state spaces differ in length".into(),
        ));
    }
    if n <= r + 1 {
        return Err(Error::InsufficientData {
            have: n,
            need: r + 2,
        });
    }
    let c = centered(own);
    let d = own.dim();
    let sq: Vec<f64> = c.chunks(d).map(|v| v.iter().map(|a| a * a).sum()).collect();
    let q: f64 = sq.iter().sum();
    let mut s = vec![0.0; d];
    for row in c.chunks(d) {
        for (a, b) in s.iter_mut().zip(row) {
            *a += b;
        }
    }
    let all: Vec<f64> = (0..n)
        .map(|t| {
            let row = &c[t * d..(t + 1) * d];
            let dot: f64 = row.iter().zip(&s).map(|(a, b)| a * b).sum();
            ((n as f64 * sq[t] - 2.0 * dot + q) / (n - 1) as f64).max(0.0)
        })
        .collect();
    let own_tree = KdTree::new(own, metric);
    let other_tree = KdTree::new(other, metric);
    let pairs: Vec<Result<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mean_to = |idx: &[usize]| {
                idx.iter()
                    .map(|&j| sq_dist(own.point(t), own.point(j)))
                    .sum::<f64>()
                    / r as f64
            };
            let o: Vec<usize> = own_tree
                .knn(t, r, true)?
                .iter()
                .map(|nb| nb.index)
                .collect();
            let m: Vec<usize> = other_tree
                .knn(t, r, true)?
                .iter()
                .map(|nb| nb.index)
                .collect();
            Ok((mean_to(&o), mean_to(&m)))
        })
        .collect();
    let mut own_d = Vec::with_capacity(n);
    let mut mapped = Vec::with_capacity(n);
    for p in pairs {
        let (o, m) = p?;
        own_d.push(o);
        mapped.push(m);
    }
    Ok(SiTerms {
        all,
        own: own_d,
        mapped,
    })
}

/// Averages the two log ratios, flooring zero distances at machine epsilon
/// relative to the row's overall spread.
pub fn si_from_terms(t: &SiTerms) -> Result<SiValues> {
    let n = t.all.len();
    let mut floored = false;
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..n {
        let scale = t.all[i];
        if !(scale > 0.0) {
            return Err(Error::DegenerateSeries(
                "state space collapses to a point".into(),
            ));
        }
        let floor = f64::EPSILON * scale;
        let mut fl = |v: f64| {
            if v < floor {
                floored = true;
                floor
            } else {
                v
            }
        };
        let (own, mapped) = (fl(t.own[i]), fl(t.mapped[i]));
        s1 += (scale / mapped).ln();
        s2 += (own / mapped).ln();
    }
    Ok(SiValues {
        si1: s1 / n as f64,
        si2: s2 / n as f64,
        floored,
    })
}

pub fn si_direction(dm: &DelayMatrix, dir: Direction, p: &SiParams) -> Result<SiValues> {
    if p.neighbours == 0 {
        return Err(Error::InvalidParameter("SI needs R >= 1".into()));
    }
    let m = dm.m();
    let own = PointSet::new(dm.effect_embedding(dir).to_vec(), m)?;
    let other = PointSet::new(dm.cause_embedding(dir).to_vec(), m)?;
    si_from_terms(&si_terms(&own, &other, p.neighbours, p.metric)?)
}

/// SI¹ and SI², each with its own neighbour count.
pub fn si_pair(
    dm: &DelayMatrix,
    p1: &SiParams,
    p2: &SiParams,
) -> Result<(IndexEstimate, IndexEstimate)> {
    let run = |p: &SiParams, pick: fn(&SiValues) -> f64, name: &str| {
        both_directions(name, |dir| {
            let v = si_direction(dm, dir, p)?;
            Ok(DirValue {
                value: pick(&v),
                degenerate: v.floored || !pick(&v).is_finite(),
            })
        })
    };
    let si1 = run(p1, |v| v.si1, "SI1")?
        .with_param("m", dm.m())
        .with_param("R", p1.neighbours);
    let si2 = run(p2, |v| v.si2, "SI2")?
        .with_param("m", dm.m())
        .with_param("R", p2.neighbours);
    Ok((si1, si2))
}

/// Library sizes: `count` geometrically spaced integers from `lo` to `hi`,
/// deduplicated.
pub fn library_grid(lo: usize, hi: usize, count: usize) -> Result<Vec<usize>> {
    if lo > hi || count == 0 {
        return Err(Error::InsufficientData { have: hi, need: lo });
    }
    if count == 1 || lo == hi {
        return Ok(vec![hi]);
    }
    let ratio = (hi as f64 / lo as f64).ln() / (count - 1) as f64;
    let mut g: Vec<usize> = (0..count)
        .map(|i| ((lo as f64) * (ratio * i as f64).exp()).round() as usize)
        .collect();
    g[0] = lo;
    g[count - 1] = hi;
    g.dedup();
    Ok(g)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Cross-map skill of one contiguous library segment starting at `start`,
/// predicting every row of `all` (a row never uses itself as a neighbour).
fn segment_rho(all: &PointSet, target: &[f64], start: usize, len: usize, k: usize) -> Result<f64> {
    let m = all.dim();
    let lib = PointSet::new(all.coords()[start * m..(start + len) * m].to_vec(), m)?;
    let tree = KdTree::new(&lib, Metric::L2);
    let mut est = Vec::with_capacity(all.len());
    for i in 0..all.len() {
        let own = (start..start + len).contains(&i).then(|| i - start);
        let nn = tree.knn_point(all.point(i), k, own)?;
        let d1 = nn[0].distance;
        let u: Vec<f64> = if d1 > 0.0 {
            nn.iter().map(|n| (-n.distance / d1).exp()).collect()
        } else {
            vec![1.0; k]
        };
        let total: f64 = u.iter().sum();
        est.push(
            nn.iter()
                .zip(&u)
                .map(|(n, w)| w * target[start + n.index])
                .sum::<f64>()
                / total,
        );
    }
    Ok(pearson(&est, target))
}

/// Mean cross-map correlation at each library size. For `dir` = Y->X the
/// library is the X state space and the estimated quantity is y.
pub fn ccm_curve(dm: &DelayMatrix, dir: Direction, p: &CcmParams) -> Result<Vec<(usize, f64)>> {
    let m = dm.m();
    let rows = dm.len();
    let t_max = p.t_max.unwrap_or(rows);
    if t_max > rows {
        return Err(Error::InsufficientData {
            have: rows,
            need: t_max,
        });
    }
    if p.segments == 0 {
        return Err(Error::InvalidParameter(
            "CCM needs at least one segment".into(),
        ));
    }
    let grid = library_grid(m + 2, t_max, p.grid_size)?;
    let emb = PointSet::new(dm.effect_embedding(dir).to_vec(), m)?;
    let target: Vec<f64> = dm
        .cause_embedding(dir)
        .chunks(m)
        .map(|r| r[m - 1])
        .collect();
    grid.par_iter()
        .map(|&len| {
            let mut rng = rng::stream(p.seed, &format!("ccm-{dir}-{len}"));
            let mut starts: Vec<usize> = (0..p.segments)
                .map(|_| rng.random_range(0..=rows - len))
                .collect();
            starts.sort_unstable();
            starts.dedup();
            let rhos: Vec<Result<f64>> = starts
                .par_iter()
                .map(|&s| segment_rho(&emb, &target, s, len, m + 1))
                .collect();
            let mut total = 0.0;
            for r in &rhos {
                total += r.as_ref().map_err(|e| Error::Undefined(e.to_string()))?;
            }
            Ok((len, total / rhos.len() as f64))
        })
        .collect()
}

/// `rho_max` when the skill grew by more than `delta`, else 0.
pub fn ccm_decision(rho_min: f64, rho_max: f64, delta: f64) -> f64 {
    if rho_max - rho_min > delta {
        rho_max
    } else {
        0.0
    }
}

pub fn ccm(dm: &DelayMatrix, p: &CcmParams) -> Result<IndexEstimate> {
    let est = both_directions("CCM", |dir| {
        let curve = ccm_curve(dm, dir, p)?;
        let (first, last) = (curve[0].1, curve[curve.len() - 1].1);
        Ok(DirValue::ok(ccm_decision(first, last, p.delta_rho)))
    })?;
    Ok(est
        .with_param("m", dm.m())
        .with_param("segments", p.segments)
        .with_param("delta_rho", p.delta_rho)
        .with_param("t_max", p.t_max.unwrap_or(dm.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{embed, EmbeddingSpec, SeriesPair, Status};
    use crate::simulate::{sim_henon_uni, HenonUniParams};
    use proptest::prelude::*;
    use rand::Rng;

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    fn logistic(n: usize, x0: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(n);
        let mut x = x0;
        for _ in 0..n {
            x = 3.9 * x * (1.0 - x);
            v.push(x);
        }
        v
    }

    /// Direct O(n²) evaluation of the three distance averages.
    fn si_oracle(own: &PointSet, other: &PointSet, r: usize) -> SiTerms {
        let n = own.len();
        let knn = |set: &PointSet, t: usize| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..n).filter(|&j| j != t).collect();
            idx.sort_by(|&a, &b| {
                sq_dist(set.point(t), set.point(a))
                    .total_cmp(&sq_dist(set.point(t), set.point(b)))
                    .then(a.cmp(&b))
            });
            idx.truncate(r);
            idx
        };
        let mut out = SiTerms {
            all: vec![],
            own: vec![],
            mapped: vec![],
        };
        for t in 0..n {
            let d = |j: usize| sq_dist(own.point(t), own.point(j));
            out.all
                .push((0..n).filter(|&j| j != t).map(d).sum::<f64>() / (n - 1) as f64);
            out.own
                .push(knn(own, t).into_iter().map(d).sum::<f64>() / r as f64);
            out.mapped
                .push(knn(other, t).into_iter().map(d).sum::<f64>() / r as f64);
        }
        out
    }

    proptest! {
        #[test]
        fn si_terms_match_direct_sums(seed in 0u64..200, r in 1usize..5) {
            let own = PointSet::new(uniforms(80, seed), 2).unwrap();
            let other = PointSet::new(uniforms(80, seed + 1), 2).unwrap();
            let fast = si_terms(&own, &other, r, Metric::L2).unwrap();
            let slow = si_oracle(&own, &other, r);
            for (a, b) in fast.all.iter().zip(&slow.all) {
                prop_assert!((a - b).abs() < 1e-12 * b.max(1.0));
            }
            prop_assert_eq!(fast.own, slow.own);
            prop_assert_eq!(fast.mapped, slow.mapped);
        }

        #[test]
        fn si_ccm_separate_scaling_invariant(seed in 0u64..20, a in 0.1f64..20.0, b in -3.0f64..3.0) {
            let pair = SeriesPair::new(logistic(300, 0.1 + 0.001 * seed as f64), uniforms(300, seed)).unwrap();
            let moved = pair.map_series(true, false, |_, v| a * v + b).unwrap();
            let spec = EmbeddingSpec::dim(2);
            let (d0, d1) = (embed(&pair, spec).unwrap(), embed(&moved, spec).unwrap());
            let p = SiParams::new(5);
            let (s0, s1) = (si_pair(&d0, &p, &p).unwrap(), si_pair(&d1, &p, &p).unwrap());
            prop_assert!((s0.0.value_yx - s1.0.value_yx).abs() < 1e-9);
            prop_assert!((s0.1.value_xy - s1.1.value_xy).abs() < 1e-9);
            let cp = CcmParams { grid_size: 5, segments: 5, ..Default::default() };
            let (c0, c1) = (ccm_curve(&d0, Direction::YtoX, &cp).unwrap(), ccm_curve(&d1, Direction::YtoX, &cp).unwrap());
            for ((_, r0), (_, r1)) in c0.iter().zip(&c1) {
                prop_assert!((r0 - r1).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(r0));
            }
        }
    }

    #[test]
    fn si_identical_series() {
        let x = logistic(500, 0.3);
        let dm = embed(
            &SeriesPair::new(x.clone(), x).unwrap(),
            EmbeddingSpec::dim(2),
        )
        .unwrap();
        let p = SiParams::new(5);
        let (si1, si2) = si_pair(&dm, &p, &p).unwrap();
        assert_eq!(si2.value_xy, 0.0);
        assert_eq!(si2.value_yx, 0.0);
        assert!(si1.value_yx > 0.0);
    }

    #[test]
    fn si_independent_series() {
        for seed in 0..10 {
            let pair = SeriesPair::new(uniforms(1_000, seed), uniforms(1_000, seed + 30)).unwrap();
            let dm = embed(&pair, EmbeddingSpec::dim(1)).unwrap();
            let p = SiParams::new(10);
            let (si1, si2) = si_pair(&dm, &p, &p).unwrap();
            assert!(si1.value_yx.abs() < 0.1, "{}", si1.value_yx);
            assert!(si2.value_yx < 0.0);
        }
    }

    #[test]
    fn si_zero_mapped_distance_is_floored_and_flagged() {
        let x: Vec<f64> = (0..40).map(|i| f64::from(i % 4)).collect();
        let dm = embed(
            &SeriesPair::new(x.clone(), x).unwrap(),
            EmbeddingSpec::dim(1),
        )
        .unwrap();
        let p = SiParams::new(2);
        let (si1, _) = si_pair(&dm, &p, &p).unwrap();
        assert!(si1.value_yx.is_finite());
        assert_eq!(si1.status, Status::Degenerate);
    }

    #[test]
    fn library_grid_endpoints() {
        let g = library_grid(4, 1000, 20).unwrap();
        assert_eq!(g[0], 4);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.len(), 20);
    }

    #[test]
    fn ccm_criterion_arithmetic() {
        assert_eq!(ccm_decision(0.2, 0.8, 0.05), 0.8);
        assert_eq!(ccm_decision(0.2, 0.24, 0.05), 0.0);
    }

    #[test]
    fn ccm_self_map_converges() {
        let x = sim_henon_uni(&HenonUniParams {
            seed: 4,
            ..Default::default()
        })
        .unwrap()
        .x()
        .to_vec();
        let dm = embed(
            &SeriesPair::new(x.clone(), x).unwrap(),
            EmbeddingSpec::dim(2),
        )
        .unwrap();
        let est = ccm(&dm, &CcmParams::default()).unwrap();
        assert!(est.value_yx > 0.95, "{est:?}");
    }

    #[test]
    fn ccm_white_noise_not_converged() {
        // null correlation sd is about 1/sqrt(T), well under the 0.05 threshold here
        let pair = SeriesPair::new(uniforms(6_000, 1), uniforms(6_000, 2)).unwrap();
        let dm = embed(&pair, EmbeddingSpec::dim(2)).unwrap();
        let est = ccm(&dm, &CcmParams::default()).unwrap();
        assert_eq!(est.value_xy, 0.0);
        assert_eq!(est.value_yx, 0.0);
    }

    #[test]
    fn ccm_deterministic() {
        let pair = SeriesPair::new(logistic(400, 0.2), uniforms(400, 2)).unwrap();
        let dm = embed(&pair, EmbeddingSpec::dim(2)).unwrap();
        let p = CcmParams {
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            ccm_curve(&dm, Direction::XtoY, &p).unwrap(),
            ccm_curve(&dm, Direction::XtoY, &p).unwrap()
        );
    }
}
