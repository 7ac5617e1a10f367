//! The scalar system `x' = x - x^3 u`, `u >= 0`, with target `{0}`.
//!
//! With bounded controls `u <= M` trajectories settle at `sign(z)/sqrt(M)`,
//! so the system is not asymptotically controllable to the origin. Unbounded
//! controls stabilize it: `W(x) = |x|` is a control-Lyapunov function for the
//! extended system, and the feedback `K(x) = 2/x^2` sampled with step at most
//! `ln(phi)` gives `|x(t)| <= |z| e^(-t/2)`.

use crate::clf::LyapunovCandidate;
use crate::error::{Error, Result};
use crate::kl::KlFunction;
use crate::sampling::Feedback;
use crate::system::{ControlCone, ControlPolynomialSystem, Target, Term};
use crate::transforms::ExtendedControl;

/// Catalog name of the system.
pub const CATALOG_NAME: &str = "cubic-damped";

/// `(1 + sqrt 5) / 2`.
pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// Largest sampling step for which the decay bound is guaranteed: `ln(phi)`.
pub fn delta_max() -> f64 {
    golden_ratio().ln()
}

pub fn cubic_damped() -> ControlPolynomialSystem {
    ControlPolynomialSystem::new(CATALOG_NAME, 1, 1, 1, ControlCone::NonNegative, Target::Origin)
        .expect("valid dimensions")
        .with_term(Term::new(0, |x, _| vec![x[0]]))
        .expect("degree 0 <= 1")
        .with_term(Term::new(1, |x, e| vec![-x[0].powi(3) * e[0]]))
        .expect("degree 1 <= 1")
}

/// Decrease rate `gamma(r) = r^3 / (2 (2 + r^2))`.
pub fn gamma(r: f64) -> f64 {
    r.powi(3) / (2.0 * (2.0 + r * r))
}

/// `N(r) = r^2 / (2 + r^2)`.
pub fn n_of(r: f64) -> f64 {
    r * r / (2.0 + r * r)
}

/// `K_hat(x) = (x^2/(2 + x^2), 2/(2 + x^2))`.
pub fn k_hat(x: f64) -> Result<ExtendedControl> {
    if x == 0.0 {
        return Err(Error::Domain("K_hat is undefined on the target".into()));
    }
    let s = 2.0 + x * x;
    ExtendedControl::new(x * x / s, vec![2.0 / s])
}

/// `K(x) = 2 / x^2`.
pub fn k(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Domain("K is undefined on the target".into()));
    }
    Ok(2.0 / (x * x))
}

/// Everything needed to exercise the pipeline on this system.
#[derive(Clone, Debug)]
pub struct ExampleFixture {
    pub system: ControlPolynomialSystem,
    pub clf: LyapunovCandidate,
    pub beta: KlFunction,
    pub delta_max: f64,
}

impl ExampleFixture {
    pub fn new() -> Self {
        ExampleFixture {
            system: cubic_damped(),
            clf: LyapunovCandidate::new(
                |x| x[0].abs(),
                |x| vec![vec![x[0].signum()]],
                gamma,
            ),
            beta: KlFunction::exponential(1.0, 0.5).with_label("R*exp(-t/2)"),
            delta_max: delta_max(),
        }
    }

    pub fn feedback(&self) -> Feedback {
        Feedback::original(|x| Ok(vec![k(x[0])?]))
    }

    pub fn feedback_extended(&self) -> Feedback {
        Feedback::extended(|x| k_hat(x[0]))
    }
}

impl Default for ExampleFixture {
    fn default() -> Self {
        Self::new()
    }
}

/// Solution of `x' = x - M x^3` from `z`:
/// `z e^t / sqrt(z^2 M (e^{2t} - 1) + 1)`, written in a form that stays finite
/// for large `t` (and accepts `t = inf`).
pub fn closed_form_constant_control(z: f64, m: f64, t: f64) -> Result<f64> {
    if z == 0.0 || !z.is_finite() {
        return Err(Error::Domain("z must be nonzero and finite".into()));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("M must be positive, got {m}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    let decay = (-2.0 * t).exp();
    let grown = -(-2.0 * t).exp_m1();
    Ok(z / (z * z * m * grown + decay).sqrt())
}

/// Distance `1 / sqrt(2 s + 1/z^2)` along the extended trajectory driven by
/// the fast control `(w0, w) = (0, 1)`.
pub fn closed_form_jump(z: f64, s: f64) -> Result<f64> {
    if z == 0.0 || !z.is_finite() {
        return Err(Error::Domain("z must be nonzero and finite".into()));
    }
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("s must be >= 0, got {s}")));
    }
    Ok(1.0 / (2.0 * s + 1.0 / (z * z)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeContraction {
    /// `|x(t_{n+1})| / |x(t_n)| = e^delta / sqrt(2 e^{2 delta} - 1)`.
    pub ratio: f64,
    /// `e^{-delta/2}`.
    pub decay_bound: f64,
    /// `false` when `delta > ln(phi)`: the decay bound is no longer implied.
    pub bound_implied: bool,
}

/// One-interval contraction of the sampled feedback `K(x) = 2/x^2`.
pub fn node_contraction_ratio(delta: f64) -> Result<NodeContraction> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let e = delta.exp();
    Ok(NodeContraction {
        ratio: e / (2.0 * e * e - 1.0).sqrt(),
        decay_bound: (-delta / 2.0).exp(),
        bound_implied: delta <= delta_max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{extended_dynamics, extended_to_control};

    #[test]
    fn constant_control_closed_form() {
        assert_eq!(closed_form_constant_control(1.0, 2.0, 0.0).unwrap(), 1.0);
        let lim = closed_form_constant_control(1.0, 2.0, f64::INFINITY).unwrap();
        assert!((lim - 0.5f64.sqrt()).abs() < 1e-15);
        let e = 1f64.exp();
        let direct = e / (2.0 * (e * e - 1.0) + 1.0).sqrt();
        let v = closed_form_constant_control(1.0, 2.0, 1.0).unwrap();
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.732318).abs() < 1e-6);
        assert!(closed_form_constant_control(0.0, 2.0, 1.0).is_err());
        assert_eq!(
            closed_form_constant_control(-0.3, 2.0, 0.7).unwrap(),
            -closed_form_constant_control(0.3, 2.0, 0.7).unwrap()
        );
    }

    #[test]
    fn jump_closed_form() {
        assert_eq!(closed_form_jump(1.0, 0.0).unwrap(), 1.0);
        assert!((closed_form_jump(1.0, 4.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(closed_form_jump(2.0, 0.0).unwrap(), 2.0);
        assert!(closed_form_jump(2.0, 0.5).unwrap() < 2.0);
        assert!(closed_form_jump(0.0, 1.0).is_err());
    }

    #[test]
    fn contraction_at_golden_step() {
        let c = node_contraction_ratio(delta_max()).unwrap();
        assert!((c.ratio - golden_ratio().powf(-0.5)).abs() < 1e-15);
        assert!((c.ratio - c.decay_bound).abs() < 1e-15);
        assert!((c.ratio - 0.786151).abs() < 1e-6);
        assert!(c.bound_implied);
        assert!(!node_contraction_ratio(0.6).unwrap().bound_implied);
        assert!((node_contraction_ratio(1e-9).unwrap().ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn contraction_below_bound_brute_force() {
        // brute-force sweep of the inequality on (0, ln phi]
        let n = 10_000;
        for i in 1..=n {
            let delta = delta_max() * i as f64 / n as f64;
            let c = node_contraction_ratio(delta).unwrap();
            assert!(c.ratio <= c.decay_bound + 1e-15, "delta = {delta}");
        }
        let c = node_contraction_ratio(0.25).unwrap();
        assert!((c.ratio - 0.847132).abs() < 1e-6);
        assert!(c.ratio < c.decay_bound);
    }

    #[test]
    fn fixture_consistency() {
        let g = cubic_damped().growth();
        for &x in &[0.01, 0.3, 1.0, 1.7, 42.0, -2.5] {
            let wc = k_hat(x).unwrap();
            let u = extended_to_control(&g, &wc).unwrap()[0];
            assert!((u - k(x).unwrap()).abs() <= 1e-12 * u);
            let sys = cubic_damped();
            let big_f = extended_dynamics(&sys, &[x], &wc).unwrap()[0];
            let small_f = crate::transforms::rescaled_dynamics(&sys, &[x], &[u]).unwrap()[0];
            assert!((big_f - small_f).abs() <= 1e-12 * big_f.abs().max(1.0));
            let lhs = x.signum() * big_f;
            let exact = -x.abs().powi(3) / (2.0 + x * x);
            assert!((lhs - exact).abs() <= 1e-12 * exact.abs());
            assert!(lhs < -gamma(x.abs()));
        }
    }
}
