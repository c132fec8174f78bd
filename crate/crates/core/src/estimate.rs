//! Shared two-direction driver with per-direction timing.

use std::time::Instant;

use crate::error::Result;
use crate::series::{Direction, IndexEstimate, Status};

/// One directional value and whether it should be reported as degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirValue {
    pub value: f64,
    pub degenerate: bool,
}

impl DirValue {
    pub fn ok(value: f64) -> Self {
        DirValue {
            value,
            degenerate: !value.is_finite(),
        }
    }
}

/// Runs `f` for X->Y then Y->X. Numerical failures become NaN with a
/// degenerate status; parameter errors propagate.
pub fn both_directions(
    name: &str,
    mut f: impl FnMut(Direction) -> Result<DirValue>,
) -> Result<IndexEstimate> {
    let mut values = [f64::NAN; 2];
    let mut elapsed = [0.0; 2];
    let mut degenerate = false;
    for (slot, dir) in Direction::BOTH.into_iter().enumerate() {
        let start = Instant::now();
        let out = f(dir);
        elapsed[slot] = start.elapsed().as_secs_f64();
        match out {
            Ok(v) => {
                values[slot] = v.value;
                degenerate |= v.degenerate;
            }
            Err(e) if e.is_numerical() => {
                log::debug!("{name} {dir}: {e}");
                degenerate = true;
            }
            Err(e) => return Err(e),
        }
    }
    let mut est = IndexEstimate::new(name, values[0], values[1]);
    est.elapsed_xy = elapsed[0];
    est.elapsed_yx = elapsed[1];
    if degenerate {
        est = est.with_status(Status::Degenerate);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn numerical_failure_is_degenerate() {
        let est = both_directions("T", |d| match d {
            Direction::XtoY => Ok(DirValue::ok(0.5)),
            Direction::YtoX => Err(Error::DegenerateSeries("flat".into())),
        })
        .unwrap();
        assert_eq!(est.value_xy, 0.5);
        assert!(est.value_yx.is_nan() && est.directed.is_nan());
        assert_eq!(est.status, Status::Degenerate);
        assert!(est.elapsed_xy >= 0.0 && est.elapsed_yx >= 0.0);
    }

    #[test]
    fn parameter_errors_propagate() {
        assert!(both_directions("T", |_| Err(Error::InvalidParameter("k".into()))).is_err());
    }
}
