//! Regression-error indices: extended Granger causality (local linear fits in
//! δ-neighbourhoods), nonlinear Granger causality (global Gaussian RBF fits)
//! and predictability improvement (locally constant prediction).

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{both_directions, DirValue};
use crate::neighbors::{KdTree, Metric, PointSet};
use crate::rng;
use crate::series::{DelayMatrix, Direction, IndexEstimate};

/// Least-squares solution of `design · β ≈ target`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    /// Residual sum of squares over the number of rows.
    pub residual_variance: f64,
    pub rank_deficient: bool,
}

/// Householder QR followed by an SVD of the triangular factor; singular
/// values below `max(n, p) · ε · σ_max` are dropped, giving the minimum-norm
/// solution when the design is rank deficient.
pub fn ols_fit(design: &DMatrix<f64>, target: &DVector<f64>) -> Result<OlsFit> {
    let (n, p) = design.shape();
    if target.len() != n {
        return Err(Error::InvalidParameter(format!(
            "design has {n} rows, target {}",
            target.len()
        )));
    }
    if p == 0 || n < p {
        return Err(Error::InsufficientData {
            have: n,
            need: p.max(1),
        });
    }
    if design.iter().chain(target.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite entry in regression".into(),
        ));
    }
    let qr = design.clone().qr();
    let mut qtb = target.clone();
    qr.q_tr_mul(&mut qtb);
    let r = qr.r();
    let rhs = qtb.rows(0, p).into_owned();
    let svd = r.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = n.max(p) as f64 * f64::EPSILON * smax;
    let rank_deficient = smax == 0.0 || svd.singular_values.iter().any(|s| *s <= tol);
    let coefficients = if smax == 0.0 {
        DVector::zeros(p)
    } else {
        svd.solve(&rhs, tol)
            .map_err(|e| Error::Undefined(e.to_string()))?
    };
    let residual = target - design * &coefficients;
    Ok(OlsFit {
        coefficients,
        residual_variance: residual.norm_squared() / n as f64,
        rank_deficient,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: PointSet,
    /// Inertia after every assignment step.
    pub inertia: Vec<f64>,
    pub iterations: usize,
}

pub const KMEANS_MAX_ITER: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_points(points: &PointSet) -> usize {
    let mut rows: Vec<&[f64]> = (0..points.len()).map(|i| points.point(i)).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(*b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.dedup();
    rows.len()
}

fn nearest(point: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    centers
        .chunks(dim)
        .enumerate()
        .map(|(j, c)| (j, sq_dist(point, c)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            },
        )
}

/// Lloyd's algorithm from a seeded k-means++ initialisation.
pub fn kmeans(points: &PointSet, p: usize, seed: u64) -> Result<KMeans> {
    let (n, dim) = (points.len(), points.dim());
    if p == 0 {
        return Err(Error::InvalidParameter("need at least one center".into()));
    }
    let distinct = distinct_points(points);
    if p > distinct {
        return Err(Error::InsufficientPoints {
            k: p,
            available: distinct,
        });
    }
    let mut rng = rng::stream(seed, "kmeans");
    let mut centers: Vec<f64> = Vec::with_capacity(p * dim);
    centers.extend_from_slice(points.point(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.point(i), &centers[..dim]))
        .collect();
    while centers.len() < p * dim {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, d) in d2.iter().enumerate() {
            if *d > 0.0 && target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] == 0.0 {
            pick = d2
                .iter()
                .rposition(|d| *d > 0.0)
                .expect("fewer chosen centers than distinct points");
        }
        let c = points.point(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.point(i), &c));
        }
        centers.extend(c);
    }

    let mut assign = vec![usize::MAX; n];
    let mut inertia = Vec::new();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        let mut changed = false;
        let mut total = 0.0;
        for i in 0..n {
            let (j, d) = nearest(points.point(i), &centers, dim);
            changed |= assign[i] != j;
            assign[i] = j;
            total += d;
        }
        inertia.push(total);
        if !changed {
            break;
        }
        let mut sums = vec![0.0; p * dim];
        let mut counts = vec![0usize; p];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i] * dim..(assign[i] + 1) * dim]
                .iter_mut()
                .zip(points.point(i))
            {
                *s += v;
            }
        }
        for j in 0..p {
            if counts[j] > 0 {
                for d in 0..dim {
                    centers[j * dim + d] = sums[j * dim + d] / counts[j] as f64;
                }
            }
        }
        for j in 0..p {
            if counts[j] == 0 {
                let far = (0..n)
                    .map(|i| {
                        (
                            i,
                            sq_dist(
                                points.point(i),
                                &centers[assign[i] * dim..(assign[i] + 1) * dim],
                            ),
                        )
                    })
                    .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b })
                    .0;
                centers[j * dim..(j + 1) * dim].copy_from_slice(points.point(far));
                assign[far] = j;
            }
        }
    }
    Ok(KMeans {
        centers: PointSet::new(centers, dim)?,
        inertia,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgcParams {
    pub neighbourhoods: usize,
    pub delta: f64,
    pub metric: Metric,
    /// Defaults to `max(2m + 2, 10)` when unset.
    pub min_points: Option<usize>,
    pub seed: u64,
}

impl EgcParams {
    pub fn new(neighbourhoods: usize, delta: f64) -> Self {
        EgcParams {
            neighbourhoods,
            delta,
            metric: Metric::L1,
            min_points: None,
            seed: 0,
        }
    }

    pub fn resolved_min_points(&self, m: usize) -> usize {
        self.min_points.unwrap_or((2 * m + 2).max(10))
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.neighbourhoods == 0 {
            return Err(Error::InvalidParameter(
                "EGC needs at least one neighbourhood".into(),
            ));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "EGC radius must be positive, got {}",
                self.delta
            )));
        }
        if self.resolved_min_points(m) < 2 * m + 2 {
            return Err(Error::InvalidParameter(format!(
                "EGC min_points must be at least {}",
                2 * m + 2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlgcParams {
    pub centers: usize,
    pub sigma2: f64,
    pub seed: u64,
}

impl NlgcParams {
    pub fn new(centers: usize) -> Self {
        NlgcParams {
            centers,
            sigma2: 0.05,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers == 0 || !(self.sigma2 > 0.0) {
            return Err(Error::InvalidParameter(
                "NLGC needs P >= 1 and sigma2 > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiParams {
    pub neighbours: usize,
    pub metric: Metric,
}

impl PiParams {
    pub fn new(neighbours: usize) -> Self {
        PiParams {
            neighbours,
            metric: Metric::L2,
        }
    }
}

/// Design matrix with an intercept column followed by the given row blocks.
fn local_design(rows: &[usize], blocks: &[(&[f64], usize)]) -> DMatrix<f64> {
    let cols = 1 + blocks.iter().map(|b| b.1).sum::<usize>();
    DMatrix::from_fn(rows.len(), cols, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let mut c = c - 1;
        for (data, m) in blocks {
            if c < *m {
                return data[rows[r] * m + c];
            }
            c -= m;
        }
        unreachable!()
    })
}

/// `1 - ε_xy / ε_x` for one neighbourhood, or None when the self fit is exact.
fn egc_neighbourhood(dm: &DelayMatrix, dir: Direction, rows: &[usize]) -> Result<Option<f64>> {
    let m = dm.m();
    let (own, other, fut) = (
        dm.effect_embedding(dir),
        dm.cause_embedding(dir),
        dm.effect_future(dir),
    );
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|&r| fut[r]));
    let e_self = ols_fit(&local_design(rows, &[(own, m)]), &target)?.residual_variance;
    let e_joint = ols_fit(&local_design(rows, &[(own, m), (other, m)]), &target)?.residual_variance;
    if !(e_self > 0.0) {
        return Ok(None);
    }
    // nested least squares cannot fit worse; clamp rounding noise
    Ok(Some(1.0 - e_joint.min(e_self) / e_self))
}

/// Reference rows and their δ-neighbourhoods in the joint space; the same
/// neighbourhoods serve both directions.
fn egc_neighbourhoods(dm: &DelayMatrix, p: &EgcParams) -> Result<Vec<Vec<usize>>> {
    let joint = PointSet::new(dm.joint_embedding(Direction::YtoX), 2 * dm.m())?;
    let tree = KdTree::new(&joint, p.metric);
    let mut rng = rng::stream(p.seed, "egc-references");
    let n = joint.len();
    let refs = sample(&mut rng, n, p.neighbourhoods.min(n)).into_vec();
    Ok(refs
        .into_iter()
        .map(|r| tree.range_point(joint.point(r), p.delta, false, None))
        .collect())
}

pub fn egc_direction(
    dm: &DelayMatrix,
    dir: Direction,
    hoods: &[Vec<usize>],
    min_points: usize,
) -> Result<DirValue> {
    let vals: Vec<Result<Option<f64>>> = hoods
        .par_iter()
        .filter(|h| h.len() >= min_points)
        .map(|h| egc_neighbourhood(dm, dir, h))
        .collect();
    let mut sum = 0.0;
    let mut valid = 0usize;
    for v in vals {
        if let Some(v) = v? {
            sum += v;
            valid += 1;
        }
    }
    if valid == 0 {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    Ok(DirValue::ok(sum / valid as f64))
}

pub fn egc(dm: &DelayMatrix, p: &EgcParams) -> Result<IndexEstimate> {
    p.validate(dm.m())?;
    let hoods = egc_neighbourhoods(dm, p)?;
    let min_points = p.resolved_min_points(dm.m());
    let est = both_directions("EGC", |dir| egc_direction(dm, dir, &hoods, min_points))?;
    Ok(est
        .with_param("m", dm.m())
        .with_param("L", p.neighbourhoods)
        .with_param("delta", p.delta)
        .with_param("min_points", min_points))
}

fn rbf_block(emb: &[f64], m: usize, centers: &PointSet, sigma2: f64) -> Vec<f64> {
    let p = centers.len();
    let n = emb.len() / m;
    let mut out = Vec::with_capacity(n * p);
    for row in emb.chunks(m) {
        out.extend((0..p).map(|j| (-sq_dist(row, centers.point(j)) / (2.0 * sigma2)).exp()));
    }
    out
}

fn nlgc_fit(own_rbf: &[f64], other_rbf: &[f64], p: usize, fut: &[f64]) -> Result<DirValue> {
    let rows: Vec<usize> = (0..fut.len()).collect();
    let target = DVector::from_column_slice(fut);
    let e_self = ols_fit(&local_design(&rows, &[(own_rbf, p)]), &target)?.residual_variance;
    if !(e_self > 0.0) {
        return Err(Error::DegenerateSeries("self model fits exactly".into()));
    }
    let e_joint = ols_fit(
        &local_design(&rows, &[(own_rbf, p), (other_rbf, p)]),
        &target,
    )?
    .residual_variance;
    Ok(DirValue::ok(1.0 - e_joint.min(e_self) / e_self))
}

pub fn nlgc(dm: &DelayMatrix, p: &NlgcParams) -> Result<IndexEstimate> {
    p.validate()?;
    let m = dm.m();
    let x_emb = PointSet::new(dm.effect_embedding(Direction::YtoX).to_vec(), m)?;
    let y_emb = PointSet::new(dm.effect_embedding(Direction::XtoY).to_vec(), m)?;
    let rbfs = |set: &PointSet, label: &str| -> Result<Vec<f64>> {
        if p.centers > set.len() {
            return Err(Error::InsufficientPoints {
                k: p.centers,
                available: set.len(),
            });
        }
        let km = kmeans(set, p.centers, rng::derive_seed(p.seed, label))?;
        Ok(rbf_block(set.coords(), m, &km.centers, p.sigma2))
    };
    let (rx, ry) = (rbfs(&x_emb, "nlgc-x"), rbfs(&y_emb, "nlgc-y"));
    let est = both_directions("NLGC", |dir| {
        let (rx, ry) = (
            rx.as_ref().map_err(clone_numerical)?,
            ry.as_ref().map_err(clone_numerical)?,
        );
        let (own, other) = match dir {
            Direction::YtoX => (rx, ry),
            Direction::XtoY => (ry, rx),
        };
        nlgc_fit(own, other, p.centers, dm.effect_future(dir))
    })?;
    Ok(est
        .with_param("m", m)
        .with_param("P", p.centers)
        .with_param("sigma2", p.sigma2))
}

fn clone_numerical(e: &Error) -> Error {
    match e {
        Error::InsufficientPoints { k, available } => Error::InsufficientPoints {
            k: *k,
            available: *available,
        },
        other => Error::Undefined(other.to_string()),
    }
}

/// Mean squared error of predicting `future` by the mean future of the `r`
/// nearest neighbours in `space` (self excluded).
fn local_constant_mse(space: &PointSet, future: &[f64], r: usize, metric: Metric) -> Result<f64> {
    let tree = KdTree::new(space, metric);
    let errs: Vec<Result<f64>> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let nn = tree.knn(i, r, true)?;
            let pred = nn.iter().map(|n| future[n.index]).sum::<f64>() / r as f64;
            Ok((pred - future[i]).powi(2))
        })
        .collect();
    let mut sum = 0.0;
    for e in errs {
        sum += e?;
    }
    Ok(sum / space.len() as f64)
}

pub fn pi_direction(dm: &DelayMatrix, dir: Direction, p: &PiParams) -> Result<f64> {
    if dm.len() <= p.neighbours + 1 {
        return Err(Error::InsufficientData {
            have: dm.len(),
            need: p.neighbours + 2,
        });
    }
    let m = dm.m();
    let fut = dm.effect_future(dir);
    let own = PointSet::new(dm.effect_embedding(dir).to_vec(), m)?;
    let joint = PointSet::new(dm.joint_embedding(dir), 2 * m)?;
    Ok(local_constant_mse(&own, fut, p.neighbours, p.metric)?
        - local_constant_mse(&joint, fut, p.neighbours, p.metric)?)
}

pub fn pi(dm: &DelayMatrix, p: &PiParams) -> Result<IndexEstimate> {
    if p.neighbours == 0 {
        return Err(Error::InvalidParameter("PI needs R >= 1".into()));
    }
    let est = both_directions("PI", |dir| pi_direction(dm, dir, p).map(DirValue::ok))?;
    Ok(est.with_param("m", dm.m()).with_param("R", p.neighbours))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{embed, EmbeddingSpec, SeriesPair, Status};
    use crate::simulate::{sim_lp, LpParams};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    /// Normal equations solved by Gaussian elimination with partial pivoting.
    fn normal_equations(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
        let p = a.ncols();
        let mut m = vec![vec![0.0; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                m[i][j] = (0..a.nrows()).map(|r| a[(r, i)] * a[(r, j)]).sum();
            }
            m[i][p] = (0..a.nrows()).map(|r| a[(r, i)] * b[r]).sum();
        }
        for c in 0..p {
            let piv = (c..p)
                .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
                .unwrap();
            m.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for k in c..=p {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        (0..p).map(|i| m[i][p] / m[i][i]).collect()
    }

    #[test]
    fn ols_exact_line() {
        let a = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let b = DVector::from_column_slice(&[2.0, 4.0, 6.0, 8.0]);
        let fit = ols_fit(&a, &b).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!(fit.residual_variance < 1e-24);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn ols_orthogonal_target() {
        let a = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 0.0, 0.0]);
        let b = DVector::from_column_slice(&[0.0, 0.0, 1.0, -1.0]);
        let fit = ols_fit(&a, &b).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-15);
        assert!((fit.residual_variance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ols_matches_normal_equations() {
        let mut r = rng::seeded(11);
        let a = DMatrix::from_fn(50, 3, |_, _| r.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(50, |_, _| r.sample::<f64, _>(StandardNormal));
        let fit = ols_fit(&a, &b).unwrap();
        for (x, y) in fit.coefficients.iter().zip(normal_equations(&a, &b)) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn ols_rank_deficient_gives_minimum_norm() {
        let a = DMatrix::from_fn(6, 2, |r, _| r as f64 + 1.0);
        let b = DVector::from_fn(6, |r, _| 2.0 * (r as f64 + 1.0));
        let fit = ols_fit(&a, &b).unwrap();
        assert!(fit.rank_deficient);
        assert!(
            (fit.coefficients[0] - 1.0).abs() < 1e-10 && (fit.coefficients[1] - 1.0).abs() < 1e-10
        );
    }

    #[test]
    fn kmeans_two_clusters() {
        let pts = PointSet::new(vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0], 1).unwrap();
        let km = kmeans(&pts, 2, 3).unwrap();
        let mut c = km.centers.coords().to_vec();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 10.0]);
    }

    #[test]
    fn kmeans_all_distinct_points_are_centers() {
        let pts = PointSet::new(vec![1.0, 1.0, 2.0, 3.0, 3.0, 5.0], 1).unwrap();
        let km = kmeans(&pts, 4, 0).unwrap();
        let mut c = km.centers.coords().to_vec();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![1.0, 2.0, 3.0, 5.0]);
        assert!(kmeans(&pts, 5, 0).is_err());
    }

    proptest! {
        #[test]
        fn kmeans_inertia_never_increases(seed in 0u64..1000, p in 1usize..6) {
            let pts = PointSet::new(uniforms(120, seed), 2).unwrap();
            let km = kmeans(&pts, p, seed).unwrap();
            prop_assert_eq!(km.centers.len(), p);
            for w in km.inertia.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn egc_and_nlgc_in_unit_interval(seed in 0u64..50) {
            let pair = SeriesPair::new(uniforms(300, seed), uniforms(300, seed + 7)).unwrap();
            let dm = embed(&pair, EmbeddingSpec::dim(1)).unwrap();
            let e = egc(&dm, &EgcParams { seed, ..EgcParams::new(20, 0.6) }).unwrap();
            let n = nlgc(&dm, &NlgcParams { seed, ..NlgcParams::new(5) }).unwrap();
            for v in [e.value_xy, e.value_yx, n.value_xy, n.value_yx] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn regress_translation_invariant(seed in 0u64..20, shift in -5.0f64..5.0) {
            let pair = SeriesPair::new(uniforms(200, seed), uniforms(200, seed + 3)).unwrap();
            let moved = pair.map_series(true, true, |_, v| v + shift).unwrap();
            let spec = EmbeddingSpec::dim(1);
            let (a, b) = (embed(&pair, spec).unwrap(), embed(&moved, spec).unwrap());
            let pa = pi(&a, &PiParams::new(3)).unwrap();
            let pb = pi(&b, &PiParams::new(3)).unwrap();
            prop_assert!((pa.value_yx - pb.value_yx).abs() < 1e-9);
            let ea = egc(&a, &EgcParams { seed, ..EgcParams::new(10, 0.5) }).unwrap();
            let eb = egc(&b, &EgcParams { seed, ..EgcParams::new(10, 0.5) }).unwrap();
            prop_assert!((ea.value_yx - eb.value_yx).abs() < 1e-6);
        }
    }

    fn driven_pair(n: usize, seed: u64) -> SeriesPair {
        let y = uniforms(n, seed);
        let mut x = uniforms(n, seed + 1);
        for t in 1..n {
            x[t] = y[t - 1];
        }
        SeriesPair::new(x, y).unwrap()
    }

    #[test]
    fn egc_perfect_joint_fit_is_one() {
        let dm = embed(&driven_pair(2_000, 4), EmbeddingSpec::dim(1)).unwrap();
        let est = egc(&dm, &EgcParams::new(20, 0.5)).unwrap();
        assert!((est.value_yx - 1.0).abs() < 1e-9, "{}", est.value_yx);
    }

    #[test]
    fn egc_without_neighbourhoods_is_degenerate() {
        let dm = embed(&driven_pair(30, 4), EmbeddingSpec::dim(1)).unwrap();
        let est = egc(&dm, &EgcParams::new(5, 1e-6)).unwrap();
        assert_eq!(est.status, Status::Degenerate);
        assert!(est.value_yx.is_nan());
    }

    #[test]
    fn egc_nlgc_decoupled_lp_near_zero() {
        let (mut e, mut n) = (0.0, 0.0);
        for seed in 0..10 {
            let pair = sim_lp(&LpParams {
                lambda: 0.0,
                len: 10_000,
                seed,
                ..Default::default()
            })
            .unwrap();
            let dm = embed(&pair, EmbeddingSpec::dim(2)).unwrap();
            e += egc(
                &dm,
                &EgcParams {
                    seed,
                    ..EgcParams::new(20, 0.8)
                },
            )
            .unwrap()
            .value_yx
                / 10.0;
            n += nlgc(
                &dm,
                &NlgcParams {
                    seed,
                    ..NlgcParams::new(10)
                },
            )
            .unwrap()
            .value_yx
                / 10.0;
        }
        assert!(e.abs() < 0.05, "{e}");
        assert!(n.abs() < 0.05, "{n}");
    }

    #[test]
    fn nlgc_function_in_span_is_one() {
        // y visits the center 0 exactly; x is a Gaussian bump of y
        let mut r = rng::seeded(2);
        let y: Vec<f64> = (0..400)
            .map(|i| {
                if i % 4 == 0 {
                    0.0
                } else {
                    r.random_range(-1.0..1.0)
                }
            })
            .collect();
        let mut x = vec![0.3; 400];
        for t in 1..400 {
            x[t] = (-y[t - 1] * y[t - 1] / (2.0 * 0.05)).exp();
        }
        let dm = embed(&SeriesPair::new(x, y).unwrap(), EmbeddingSpec::dim(1)).unwrap();
        let y_emb = PointSet::new(dm.effect_embedding(Direction::XtoY).to_vec(), 1).unwrap();
        let block = rbf_block(
            y_emb.coords(),
            1,
            &PointSet::new(vec![0.0], 1).unwrap(),
            0.05,
        );
        let x_emb = PointSet::new(dm.effect_embedding(Direction::YtoX).to_vec(), 1).unwrap();
        let own = rbf_block(
            x_emb.coords(),
            1,
            &kmeans(&x_emb, 1, 0).unwrap().centers,
            0.05,
        );
        let v = nlgc_fit(&own, &block, 1, dm.effect_future(Direction::YtoX)).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9, "{}", v.value);
    }

    #[test]
    fn pi_driven_pair_recovers_variance() {
        let pair = driven_pair(5_000, 9);
        let dm = embed(&pair, EmbeddingSpec::dim(1)).unwrap();
        let est = pi(&dm, &PiParams::new(1)).unwrap();
        let fut = dm.effect_future(Direction::YtoX);
        let mean = fut.iter().sum::<f64>() / fut.len() as f64;
        let var = fut.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / fut.len() as f64;
        // self prediction from an independent neighbour has error 2 Var; joint is near exact
        assert!(
            (est.value_yx - 2.0 * var).abs() < 0.1 * var,
            "{} vs {}",
            est.value_yx,
            var
        );
    }

    #[test]
    fn pi_independent_near_zero() {
        let vals: Vec<f64> = (0..10)
            .map(|s| {
                let pair = SeriesPair::new(uniforms(1_000, s), uniforms(1_000, 40 + s)).unwrap();
                pi(
                    &embed(&pair, EmbeddingSpec::dim(1)).unwrap(),
                    &PiParams::new(10),
                )
                .unwrap()
                .value_yx
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / 10.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!(mean.abs() < 2.0 * sd.max(1e-3), "{mean} {sd}");
    }

    #[test]
    fn pi_insufficient_rows() {
        let pair = SeriesPair::new(uniforms(4, 1), uniforms(4, 2)).unwrap();
        let est = pi(
            &embed(&pair, EmbeddingSpec::dim(1)).unwrap(),
            &PiParams::new(5),
        )
        .unwrap();
        assert_eq!(est.status, Status::Degenerate);
    }
}
