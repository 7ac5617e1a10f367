//! Adaptive Dormand-Prince 5(4) integrator for autonomous ODEs `y' = f(y)`.
//!
//! Within one sampling interval the control is frozen, so the right-hand side
//! is smooth and time-independent. The integrator reports step-size collapse
//! separately so callers can treat it as a finite escape time.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub min_step: f64,
    /// Suggested first step; estimated from the initial slope when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            min_step: 1e-12,
            initial_step: None,
            max_steps: 1_000_000,
        }
    }
}

/// Decision returned by the step observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integrated {
    pub t: f64,
    pub y: Vec<f64>,
    /// `true` when the observer requested the stop before `t_end`.
    pub stopped: bool,
    pub accepted_steps: usize,
    /// Step size to try on the next call.
    pub next_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure {
    /// The adaptive step fell below `min_step` before reaching `t_end`.
    StepUnderflow { t: f64, y: Vec<f64> },
    TooManySteps { t: f64, y: Vec<f64> },
    Rhs(Error),
}

impl OdeFailure {
    pub fn last_valid(&self) -> Option<(f64, &[f64])> {
        match self {
            OdeFailure::StepUnderflow { t, y } | OdeFailure::TooManySteps { t, y } => Some((*t, y)),
            OdeFailure::Rhs(_) => None,
        }
    }
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &OdeOptions) -> f64 {
    let n = y.len().max(1) as f64;
    let s: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step(y: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    let d0 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1 = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(opts.min_step)
}

/// Integrates `y' = f(y)` from `t0` to `t_end`. `observer` sees every accepted
/// step `(t, y)` and may stop the integration early.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    t_end: f64,
    y0: &[f64],
    opts: &OdeOptions,
    mut observer: O,
) -> std::result::Result<Integrated, OdeFailure>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Flow,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let span = t_end - t0;
    if span <= 0.0 {
        return Ok(Integrated {
            t,
            y,
            stopped: false,
            accepted_steps: 0,
            next_step: opts.initial_step.unwrap_or(opts.min_step),
        });
    }

    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut k5, mut k6, mut k7) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    rhs(&y, &mut k1).map_err(OdeFailure::Rhs)?;
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(&y, &k1, span, opts))
        .min(span);
    let mut accepted = 0usize;
    let mut attempts = 0usize;

    loop {
        let remaining = t_end - t;
        if remaining <= 0.0 {
            break;
        }
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(OdeFailure::TooManySteps { t, y });
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }

        macro_rules! combine {
            ($out:expr, $($c:expr, $k:expr),+) => {
                for i in 0..n {
                    $out[i] = y[i] + h * (0.0 $(+ $c * $k[i])+);
                }
            };
        }

        let mut ok = true;
        combine!(stage, A21, k1);
        ok &= rhs(&stage, &mut k2).is_ok();
        combine!(stage, A31, k1, A32, k2);
        ok &= ok && rhs(&stage, &mut k3).is_ok();
        combine!(stage, A41, k1, A42, k2, A43, k3);
        ok &= ok && rhs(&stage, &mut k4).is_ok();
        combine!(stage, A51, k1, A52, k2, A53, k3, A54, k4);
        ok &= ok && rhs(&stage, &mut k5).is_ok();
        combine!(stage, A61, k1, A62, k2, A63, k3, A64, k4, A65, k5);
        ok &= ok && rhs(&stage, &mut k6).is_ok();
        combine!(y_new, A71, k1, A73, k3, A74, k4, A75, k5, A76, k6);
        ok &= ok && rhs(&y_new, &mut k7).is_ok();

        let en = if ok {
            for i in 0..n {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let e = error_norm(&y, &y_new, &err, opts);
            if e.is_finite() {
                e
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };

        if en <= 1.0 {
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            accepted += 1;
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            let proposed = h * factor;
            if observer(t, &y) == Flow::Stop {
                return Ok(Integrated {
                    t,
                    y,
                    stopped: true,
                    accepted_steps: accepted,
                    next_step: proposed,
                });
            }
            if t >= t_end {
                return Ok(Integrated {
                    t,
                    y,
                    stopped: false,
                    accepted_steps: accepted,
                    next_step: proposed,
                });
            }
            h = proposed;
        } else {
            let factor = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= factor;
            if h < opts.min_step && t_end - t > opts.min_step {
                return Err(OdeFailure::StepUnderflow { t, y });
            }
        }
    }
    Ok(Integrated {
        t,
        y,
        stopped: false,
        accepted_steps: accepted,
        next_step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let out = integrate(
            |y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            3.0,
            &[1.0],
            &OdeOptions::default(),
            |_, _| Flow::Continue,
        )
        .unwrap();
        assert_eq!(out.t, 3.0);
        assert!((out.y[0] - 3f64.exp()).abs() < 1e-8 * 3f64.exp());
    }

    #[test]
    fn harmonic_oscillator() {
        let out = integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            10.0,
            &[1.0, 0.0],
            &OdeOptions::default(),
            |_, _| Flow::Continue,
        )
        .unwrap();
        assert!((out.y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((out.y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn finite_time_blow_up_underflows() {
        // y' = y^2, y(0) = 1 escapes at t = 1
        let res = integrate(
            |y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            2.0,
            &[1.0],
            &OdeOptions::default(),
            |_, _| Flow::Continue,
        );
        match res {
            Err(OdeFailure::StepUnderflow { t, .. }) => assert!((t - 1.0).abs() < 1e-3),
            other => panic!("expected underflow, got {other:?}"),
        }
    }

    #[test]
    fn observer_can_stop() {
        let out = integrate(
            |y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            100.0,
            &[1.0],
            &OdeOptions::default(),
            |_, y| if y[0] < 0.5 { Flow::Stop } else { Flow::Continue },
        )
        .unwrap();
        assert!(out.stopped);
        assert!(out.t < 100.0 && out.y[0] < 0.5);
    }
}
