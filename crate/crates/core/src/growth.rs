//! Growth rates `nu: [0, inf) -> [0, inf)`, strictly increasing bijections that
//! bound how fast the dynamics grow in the control magnitude.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A growth rate together with its exact inverse.
///
/// Control-polynomial systems of degree `d` use [`GrowthRate::Power`], for
/// which `nu(r) = r^d` is evaluated exactly.
#[derive(Clone)]
pub enum GrowthRate {
    Power(u32),
    Custom { nu: ScalarFn, inverse: ScalarFn },
}

impl fmt::Debug for GrowthRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthRate::Power(d) => write!(f, "GrowthRate::Power({d})"),
            GrowthRate::Custom { .. } => write!(f, "GrowthRate::Custom"),
        }
    }
}

impl GrowthRate {
    pub fn power(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Domain("growth degree must be at least 1".into()));
        }
        Ok(GrowthRate::Power(degree))
    }

    /// Builds a growth rate from a function and its inverse. The pair is
    /// trusted; [`GrowthRate::check_on_grid`] verifies it on samples.
    pub fn custom<F, G>(nu: F, inverse: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        GrowthRate::Custom {
            nu: Arc::new(nu),
            inverse: Arc::new(inverse),
        }
    }

    pub fn degree(&self) -> Option<u32> {
        match self {
            GrowthRate::Power(d) => Some(*d),
            GrowthRate::Custom { .. } => None,
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        check_arg(r)?;
        Ok(match self {
            GrowthRate::Power(d) => r.powi(*d as i32),
            GrowthRate::Custom { nu, .. } => nu(r),
        })
    }

    pub fn inverse(&self, r: f64) -> Result<f64> {
        check_arg(r)?;
        Ok(match self {
            GrowthRate::Power(1) => r,
            GrowthRate::Power(2) => r.sqrt(),
            GrowthRate::Power(3) => r.cbrt(),
            GrowthRate::Power(d) => {
                if r == 0.0 || r.is_infinite() {
                    return Ok(r);
                }
                // one Newton polish on top of powf
                let d = *d as i32;
                let y = r.powf(1.0 / d as f64);
                y - (y.powi(d) - r) / (d as f64 * y.powi(d - 1))
            }
            GrowthRate::Custom { inverse, .. } => inverse(r),
        })
    }

    /// Checks `nu(0) = 0`, strict monotonicity and the inverse round trip on
    /// `grid`. Returns a description of the first failure.
    pub fn check_on_grid(&self, grid: &[f64], rel_tol: f64) -> Result<()> {
        if self.eval(0.0)? != 0.0 {
            return Err(Error::Domain("nu(0) != 0".into()));
        }
        let mut prev: Option<(f64, f64)> = None;
        let mut sorted = grid.to_vec();
        sorted.sort_by(f64::total_cmp);
        for &r in &sorted {
            let v = self.eval(r)?;
            if let Some((pr, pv)) = prev {
                if r > pr && v <= pv {
                    return Err(Error::Domain(format!("nu not strictly increasing at r = {r}")));
                }
            }
            let back = self.eval(self.inverse(r)?)?;
            if (back - r).abs() > rel_tol * r.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Domain(format!("nu(nu^-1({r})) = {back}")));
            }
            prev = Some((r, v));
        }
        Ok(())
    }
}

fn check_arg(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        Err(Error::Domain(format!("growth rate argument must be >= 0, got {r}")))
    } else {
        Ok(())
    }
}
