//! Closed-form second moments of the Gaussian linear process and the
//! information quantities that follow from them.
//!
//! For `x_{t+1} = b_x x_t + λ y_t + ε_x`, `y_{t+1} = b_y y_t + ε_y` every
//! stationary lagged covariance has a closed form; transfer entropy (m = 1)
//! has one too, and the lag-averaged rate is assembled numerically from
//! 3×3 covariance determinants.

use nalgebra::{Matrix2, Matrix3};

use crate::error::{Error, Result};
use crate::series::Direction;
use crate::simulate::LpParams;

/// Smallest determinant admitted before taking logarithms.
pub const DET_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// `u = (1 - b_y²)/σ²_y`, `v = 1 - b_x²`, `w = 1 - b_x b_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpAuxiliary {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl LpAuxiliary {
    pub fn new(p: &LpParams) -> Result<Self> {
        check(p)?;
        Ok(LpAuxiliary {
            u: (1.0 - p.b_y * p.b_y) / p.var_y,
            v: 1.0 - p.b_x * p.b_x,
            w: 1.0 - p.b_x * p.b_y,
        })
    }
}

fn check(p: &LpParams) -> Result<()> {
    if !(p.b_x.abs() < 1.0 && p.b_y.abs() < 1.0) {
        return Err(Error::NonStationary(format!(
            "b_x={}, b_y={}",
            p.b_x, p.b_y
        )));
    }
    if !(p.var_x > 0.0 && p.var_y > 0.0) {
        return Err(Error::InvalidParameter(
            "innovation variances must be > 0".into(),
        ));
    }
    Ok(())
}

/// Stationary covariances `c(a_t, b_{t+τ})` of the linear process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceTable {
    p: LpParams,
}

impl CovarianceTable {
    pub fn new(p: &LpParams) -> Result<Self> {
        check(p)?;
        Ok(CovarianceTable { p: *p })
    }

    pub fn params(&self) -> &LpParams {
        &self.p
    }

    /// `c(a_t, b_{t+lag})`.
    pub fn get(&self, a: Var, b: Var, lag: usize) -> f64 {
        let LpParams {
            b_x: bx,
            b_y: by,
            var_x: sx2,
            var_y: sy2,
            lambda: l,
            ..
        } = self.p;
        let (vy, w) = (1.0 - by * by, 1.0 - bx * by);
        let tau = lag as i32;
        match (a, b) {
            (Var::Y, Var::Y) => sy2 * by.powi(tau) / vy,
            (Var::X, Var::Y) => sy2 * by.powi(tau + 1) * l / (vy * w),
            (Var::X, Var::X) => {
                let vx = 1.0 - bx * bx;
                let geometric: f64 = (0..=tau).map(|k| by.powi(k) * bx.powi(tau - k)).sum();
                let a_term = vx * geometric + bx.powi(tau + 1) * (bx + by);
                sx2 * bx.powi(tau) / vx + l * l * sy2 / (vx * vy * w) * a_term
            }
            (Var::Y, Var::X) => {
                let geometric: f64 = (0..tau).map(|k| by.powi(k) * bx.powi(tau - 1 - k)).sum();
                let b_term = bx.powi(tau) * by + w * geometric;
                l * sy2 / (vy * w) * b_term
            }
        }
    }

    /// Covariance matrix of `(effect_t, cause_t, effect_{t+lag})` for `dir`.
    pub fn conditioning_block(&self, dir: Direction, lag: usize) -> Matrix3<f64> {
        let (e, c) = match dir {
            Direction::YtoX => (Var::X, Var::Y),
            Direction::XtoY => (Var::Y, Var::X),
        };
        let ee = self.get(e, e, 0);
        let cc = self.get(c, c, 0);
        let ec = self.get(e, c, 0);
        let e_fut = self.get(e, e, lag);
        let c_fut = self.get(c, e, lag);
        Matrix3::new(ee, ec, e_fut, ec, cc, c_fut, e_fut, c_fut, ee)
    }
}

pub fn lp_covariance(p: &LpParams, pair: (Var, Var), lag: usize) -> Result<f64> {
    Ok(CovarianceTable::new(p)?.get(pair.0, pair.1, lag))
}

/// Gaussian conditional mutual information `I(fut; cause | eff)` from the
/// covariance of `(eff, cause, fut)`.
pub fn gaussian_cmi(c: &Matrix3<f64>) -> f64 {
    let det_ef = Matrix2::new(c[(0, 0)], c[(0, 2)], c[(2, 0)], c[(2, 2)]).determinant();
    let det_ec = Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]).determinant();
    let det_all = c.determinant();
    let det_e = c[(0, 0)];
    let g = |d: f64| d.max(DET_FLOOR);
    0.5 * (g(det_ef) * g(det_ec) / (g(det_all) * g(det_e))).ln()
}

/// Exact transfer entropy (nats) for embedding dimension 1.
pub fn te_lp_analytic(p: &LpParams, dir: Direction) -> Result<f64> {
    let LpAuxiliary { u, w, .. } = LpAuxiliary::new(p)?;
    if dir == Direction::XtoY {
        return Ok(0.0);
    }
    let (sx2, sy2, l2) = (p.var_x, p.var_y, p.lambda * p.lambda);
    let num = u * w * w * sx2 * sx2 + 2.0 * l2 * w * sx2 + l2 * l2 * sy2;
    let den = u * w * w * sx2 * sx2 + l2 * w * (2.0 - w) * sx2;
    Ok(0.5 * (num / den).ln())
}

/// Leading small-coupling term `λ² σ²_y / (2 σ²_x (1 - b_y²))`.
pub fn te_lp_leading_order(p: &LpParams) -> f64 {
    p.lambda * p.lambda * p.var_y / (2.0 * p.var_x * (1.0 - p.b_y * p.b_y))
}

/// Lag-averaged conditional mutual information over lags `1..=tau_max`.
pub fn ctir_lp_analytic(p: &LpParams, tau_max: usize, dir: Direction) -> Result<f64> {
    if tau_max == 0 {
        return Err(Error::InvalidParameter("tau_max must be >= 1".into()));
    }
    let table = CovarianceTable::new(p)?;
    let total: f64 = (1..=tau_max)
        .map(|lag| gaussian_cmi(&table.conditioning_block(dir, lag)))
        .sum();
    Ok(total / tau_max as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table2(lambda: f64) -> LpParams {
        LpParams {
            lambda,
            ..Default::default()
        }
    }

    /// Covariances by iterating the one-step recursions from the lag-0 entries.
    fn recursive(p: &LpParams, lag: usize) -> [f64; 4] {
        let t = CovarianceTable::new(p).unwrap();
        let (mut xx, mut xy, mut yx, mut yy) = (
            t.get(Var::X, Var::X, 0),
            t.get(Var::X, Var::Y, 0),
            t.get(Var::Y, Var::X, 0),
            t.get(Var::Y, Var::Y, 0),
        );
        for _ in 0..lag {
            // c(a_t, x_{s+1}) = b_x c(a_t, x_s) + λ c(a_t, y_s); c(a_t, y_{s+1}) = b_y c(a_t, y_s)
            (xx, xy) = (p.b_x * xx + p.lambda * xy, p.b_y * xy);
            (yx, yy) = (p.b_x * yx + p.lambda * yy, p.b_y * yy);
        }
        [xx, xy, yx, yy]
    }

    #[test]
    fn driver_variance() {
        let c = lp_covariance(&table2(0.5), (Var::Y, Var::Y), 0).unwrap();
        assert!((c - 0.2 / 0.84).abs() < 1e-15);
        assert!((c - 0.238095).abs() < 1e-6);
    }

    #[test]
    fn lag_zero_matches_lag_free_forms() {
        let p = table2(0.7);
        let a = LpAuxiliary::new(&p).unwrap();
        let t = CovarianceTable::new(&p).unwrap();
        let l = p.lambda;
        assert!((t.get(Var::Y, Var::Y, 0) - 1.0 / a.u).abs() < 1e-14);
        assert!((t.get(Var::X, Var::Y, 0) - l * p.b_y / (a.u * a.w)).abs() < 1e-14);
        assert!((t.get(Var::X, Var::Y, 0) - t.get(Var::Y, Var::X, 0)).abs() < 1e-15);
        let cxx = (a.u * a.w * p.var_x + l * l * (1.0 + p.b_x * p.b_y)) / (a.u * a.v * a.w);
        assert!((t.get(Var::X, Var::X, 0) - cxx).abs() < 1e-14);
        let cxx1 = (p.b_x * a.u * a.w * p.var_x + l * l * (p.b_x + p.b_y)) / (a.u * a.v * a.w);
        assert!((t.get(Var::X, Var::X, 1) - cxx1).abs() < 1e-14);
        assert!((t.get(Var::Y, Var::X, 1) - l / (a.u * a.w)).abs() < 1e-14);
        assert!((t.get(Var::X, Var::Y, 1) - l * p.b_y * p.b_y / (a.u * a.w)).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_agree_with_recursion() {
        for &(bx, by, l) in &[
            (0.8, 0.4, 0.5),
            (-0.5, 0.7, 1.0),
            (0.3, -0.6, 0.2),
            (0.0, 0.9, 0.8),
        ] {
            let p = LpParams {
                b_x: bx,
                b_y: by,
                lambda: l,
                var_x: 0.3,
                var_y: 0.7,
                ..Default::default()
            };
            let t = CovarianceTable::new(&p).unwrap();
            for lag in 0..12 {
                let [xx, xy, yx, yy] = recursive(&p, lag);
                for (got, want) in [
                    (t.get(Var::X, Var::X, lag), xx),
                    (t.get(Var::X, Var::Y, lag), xy),
                    (t.get(Var::Y, Var::X, lag), yx),
                    (t.get(Var::Y, Var::Y, lag), yy),
                ] {
                    assert!(
                        (got - want).abs() < 1e-12 * (1.0 + want.abs()),
                        "lag {lag}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn decoupled_cross_covariances_vanish() {
        let t = CovarianceTable::new(&table2(0.0)).unwrap();
        for lag in 0..10 {
            assert_eq!(t.get(Var::X, Var::Y, lag), 0.0);
            assert_eq!(t.get(Var::Y, Var::X, lag), 0.0);
        }
    }

    #[test]
    fn te_reverse_direction_is_zero() {
        for l in [0.0, 0.3, 1.0] {
            assert_eq!(te_lp_analytic(&table2(l), Direction::XtoY).unwrap(), 0.0);
            let numeric = gaussian_cmi(
                &CovarianceTable::new(&table2(l))
                    .unwrap()
                    .conditioning_block(Direction::XtoY, 1),
            );
            assert!(numeric.abs() < 1e-12);
        }
        assert_eq!(te_lp_analytic(&table2(0.0), Direction::YtoX).unwrap(), 0.0);
    }

    #[test]
    fn te_at_half_coupling() {
        let te = te_lp_analytic(&table2(0.5), Direction::YtoX).unwrap();
        // u = 4.2, w = 0.68: ratio 0.1581832 / 0.1225632
        assert!((te - 0.127_563_519_846).abs() < 1e-10, "{te}");
        assert!((te - 0.128).abs() < 5e-4);
    }

    #[test]
    fn te_closed_form_matches_determinants() {
        for l in [0.05, 0.3, 0.5, 0.9] {
            let p = table2(l);
            let closed = te_lp_analytic(&p, Direction::YtoX).unwrap();
            let det = gaussian_cmi(
                &CovarianceTable::new(&p)
                    .unwrap()
                    .conditioning_block(Direction::YtoX, 1),
            );
            assert!((closed - det).abs() < 1e-12);
        }
    }

    #[test]
    fn leading_order_value() {
        assert!((te_lp_leading_order(&table2(0.1)) - 0.005_952_38).abs() < 1e-8);
    }

    #[test]
    fn te_depends_only_on_variance_ratio() {
        let p = table2(0.6);
        let q = LpParams {
            var_x: 2.0,
            var_y: 2.0,
            ..p
        };
        let (a, b) = (
            te_lp_analytic(&p, Direction::YtoX).unwrap(),
            te_lp_analytic(&q, Direction::YtoX).unwrap(),
        );
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn ctir_collapses_to_te_for_one_lag() {
        let p = table2(0.4);
        let te = te_lp_analytic(&p, Direction::YtoX).unwrap();
        assert!((ctir_lp_analytic(&p, 1, Direction::YtoX).unwrap() - te).abs() < 1e-12);
        assert!(
            ctir_lp_analytic(&table2(0.0), 20, Direction::YtoX)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(ctir_lp_analytic(&p, 20, Direction::XtoY).unwrap().abs() < 1e-10);
    }

    #[test]
    fn rejects_nonstationary() {
        let p = LpParams {
            b_y: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            te_lp_analytic(&p, Direction::YtoX),
            Err(Error::NonStationary(_))
        ));
        assert!(ctir_lp_analytic(&table2(0.1), 0, Direction::YtoX).is_err());
    }
}
