//! Rescaled and extended (impulsive) dynamics, the maps between the original
//! control cone `U` and the extended control set `{(w0, w): w0 + |w| = 1}`,
//! and the time changes relating original and rescaled trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::GrowthRate;
use crate::system::{ensure_dim, ensure_finite, norm, split_direction, Control, ControlPolynomialSystem, StateVector};
use crate::trajectory::{ControlValue, Status, TrajectoryRecord};

/// Tolerance on `w0 + |w| = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Extended control `(w0, w)` with `w0 in [0, 1]`, `w` in the control cone and
/// `w0 + |w| = 1`. Points with `w0 = 0` are controls "at infinity".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedControl {
    w0: f64,
    w: Vec<f64>,
}

impl ExtendedControl {
    pub fn new(w0: f64, w: Vec<f64>) -> Result<Self> {
        if !w0.is_finite() {
            return Err(Error::NonFinite("w0".into()));
        }
        ensure_finite(&w, "w")?;
        let n = norm(&w);
        if !(0.0..=1.0).contains(&w0) || (w0 + n - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Simplex { w0, norm: n });
        }
        Ok(ExtendedControl { w0, w })
    }

    /// Fast component only: `(0, direction)` with `|direction| = 1`.
    pub fn impulsive(direction: Vec<f64>) -> Result<Self> {
        Self::new(0.0, direction)
    }

    /// Drift only: `(1, 0)`.
    pub fn drift(m: usize) -> Self {
        ExtendedControl {
            w0: 1.0,
            w: vec![0.0; m],
        }
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn is_impulsive(&self) -> bool {
        self.w0 == 0.0
    }
}

/// The restricted extended control set `{(w0, w): w0 >= rho}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedControlSet {
    rho: f64,
}

impl RestrictedControlSet {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Domain(format!("rho must lie in (0, 1], got {rho}")));
        }
        Ok(RestrictedControlSet { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn contains(&self, wc: &ExtendedControl) -> bool {
        wc.w0() >= self.rho
    }

    /// Upper bound `nu^-1(1/rho)` on the magnitude of any projected control.
    pub fn control_bound(&self, g: &GrowthRate) -> Result<f64> {
        g.inverse(1.0 / self.rho)
    }
}

/// `f(x, u) / (1 + nu(|u|))`.
pub fn rescaled_dynamics(sys: &ControlPolynomialSystem, x: &[f64], u: &[f64]) -> Result<StateVector> {
    let f = sys.eval_dynamics(x, u)?;
    let scale = 1.0 + sys.growth().eval(norm(u))?;
    Ok(f.into_iter().map(|v| v / scale).collect())
}

/// Closed form of the extended dynamics for a control-polynomial system:
/// `F(x, w0, w) = sum_k f_k(x, w/|w|) |w|^(k/d) w0^(1 - k/d)`.
///
/// At `w0 = 0` only the `k = d` term survives; `0^0` is taken as 1 and the
/// vanishing powers are skipped, so the simplex never produces NaN.
pub fn extended_dynamics(sys: &ControlPolynomialSystem, x: &[f64], wc: &ExtendedControl) -> Result<StateVector> {
    sys.check_state(x)?;
    ensure_dim("extended control", sys.control_dim(), wc.w().len())?;
    if !sys.cone().contains(wc.w()) {
        return Err(Error::ControlSet(wc.w().to_vec()));
    }
    let d = sys.degree() as f64;
    let (direction, wn) = split_direction(wc.w());
    let w0 = wc.w0();
    sys.weighted_sum(x, &direction, |k| {
        let a = k as f64 / d;
        pow_or_one(wn, a) * pow_or_one(w0, 1.0 - a)
    })
}

// base^exp with 0^0 = 1
fn pow_or_one(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else if exp == 1.0 {
        base
    } else {
        base.powf(exp)
    }
}

/// `u -> (1/(1 + nu(|u|)), u nu(|u|) / (|u| (1 + nu(|u|))))`.
pub fn control_to_extended(g: &GrowthRate, u: &[f64]) -> Result<ExtendedControl> {
    ensure_finite(u, "control")?;
    let (direction, r) = split_direction(u);
    let nu = g.eval(r)?;
    if nu.is_infinite() {
        return ExtendedControl::new(0.0, direction);
    }
    let w0 = 1.0 / (1.0 + nu);
    let scale = nu / (1.0 + nu);
    ExtendedControl::new(w0, direction.into_iter().map(|e| e * scale).collect())
}

/// `(w0, w) -> (w/|w|) nu^-1(|w| / w0)`, defined for `w0 > 0`.
pub fn extended_to_control(g: &GrowthRate, wc: &ExtendedControl) -> Result<Control> {
    if wc.is_impulsive() {
        return Err(Error::ImpulsivePoint);
    }
    let (direction, wn) = split_direction(wc.w());
    let magnitude = g.inverse(wn / wc.w0())?;
    Ok(direction.into_iter().map(|e| e * magnitude).collect())
}

fn original_controls(traj: &TrajectoryRecord) -> Result<Vec<&[f64]>> {
    traj.controls
        .iter()
        .map(|c| {
            c.as_original()
                .ok_or_else(|| Error::Precondition("time change needs original controls".into()))
        })
        .collect()
}

fn remap_times(traj: &TrajectoryRecord, g: &GrowthRate, forward: bool) -> Result<TrajectoryRecord> {
    let controls = original_controls(traj)?;
    if traj.len() > 1 && controls.len() + 1 < traj.len() {
        return Err(Error::Precondition("one control per interval required".into()));
    }
    let mut times = Vec::with_capacity(traj.len());
    if let Some(&t0) = traj.times.first() {
        times.push(t0);
    }
    for k in 1..traj.len() {
        let gap = traj.times[k] - traj.times[k - 1];
        let rate = 1.0 + g.eval(norm(controls[k - 1]))?;
        let mapped = if forward { gap * rate } else { gap / rate };
        times.push(times[k - 1] + mapped);
    }
    let end = times.last().copied().unwrap_or(0.0);
    let status = match traj.status {
        Status::TargetReached(_) => Status::TargetReached(end),
        Status::BlowUp(_) => Status::BlowUp(end),
        Status::HorizonEnd => Status::HorizonEnd,
    };
    Ok(TrajectoryRecord {
        times,
        states: traj.states.clone(),
        distances: traj.distances.clone(),
        controls: traj.controls.clone(),
        is_node: traj.is_node.clone(),
        status,
        frozen_point: traj.frozen_point.clone(),
    })
}

/// Original time to rescaled parameter: `s(t) = int_0^t (1 + nu(|u|))`,
/// integrated exactly over the piecewise-constant control intervals.
pub fn time_change_forward(traj: &TrajectoryRecord, g: &GrowthRate) -> Result<TrajectoryRecord> {
    remap_times(traj, g, true)
}

/// Rescaled parameter to original time: `t(s) = int_0^s (1 + nu(|v|))^-1`.
pub fn time_change_backward(traj: &TrajectoryRecord, g: &GrowthRate) -> Result<TrajectoryRecord> {
    remap_times(traj, g, false)
}

/// Wraps an original control as a [`ControlValue`] of the extended system.
pub fn lift_control(g: &GrowthRate, c: &ControlValue) -> Result<ControlValue> {
    match c {
        ControlValue::Original(u) => Ok(ControlValue::Extended(control_to_extended(g, u)?)),
        ControlValue::Extended(_) => Ok(c.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::cubic_damped;
    use crate::system::{ControlCone, Target, Term};
    use proptest::prelude::*;

    #[test]
    fn rescaled_values() {
        let sys = cubic_damped();
        assert_eq!(rescaled_dynamics(&sys, &[1.0], &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(rescaled_dynamics(&sys, &[1.0], &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(rescaled_dynamics(&sys, &[2.0], &[3.0]).unwrap(), vec![-5.5]);
    }

    #[test]
    fn extended_values() {
        let sys = cubic_damped();
        for (y, w0) in [(0.7, 0.3), (-1.5, 0.9), (2.0, 0.0)] {
            let wc = ExtendedControl::new(w0, vec![1.0 - w0]).unwrap();
            let f = extended_dynamics(&sys, &[y], &wc).unwrap()[0];
            let expected = y * w0 - y.powi(3) * (1.0 - w0);
            assert!((f - expected).abs() < 1e-14);
        }
        let fast = ExtendedControl::impulsive(vec![1.0]).unwrap();
        assert_eq!(extended_dynamics(&sys, &[2.0], &fast).unwrap(), vec![-8.0]);
        let drift = ExtendedControl::drift(1);
        assert_eq!(extended_dynamics(&sys, &[3.0], &drift).unwrap(), vec![3.0]);
    }

    #[test]
    fn simplex_invariant_enforced() {
        assert!(matches!(ExtendedControl::new(0.5, vec![0.6]), Err(Error::Simplex { .. })));
        assert!(ExtendedControl::new(-0.1, vec![1.1]).is_err());
        assert!(RestrictedControlSet::new(0.0).is_err());
        let set = RestrictedControlSet::new(0.25).unwrap();
        assert!(set.contains(&ExtendedControl::new(0.5, vec![0.5]).unwrap()));
        assert!(!set.contains(&ExtendedControl::new(0.1, vec![0.9]).unwrap()));
        assert_eq!(set.control_bound(&GrowthRate::Power(1)).unwrap(), 4.0);
    }

    #[test]
    fn control_maps() {
        let g1 = GrowthRate::Power(1);
        let g2 = GrowthRate::Power(2);
        let wc = control_to_extended(&g1, &[1.0]).unwrap();
        assert_eq!((wc.w0(), wc.w()), (0.5, &[0.5][..]));
        let wc = control_to_extended(&g1, &[0.0]).unwrap();
        assert_eq!((wc.w0(), wc.w()), (1.0, &[0.0][..]));
        let wc = control_to_extended(&g2, &[3.0]).unwrap();
        assert!((wc.w0() - 0.1).abs() < 1e-16 && (wc.w()[0] - 0.9).abs() < 1e-16);

        let half = ExtendedControl::new(0.5, vec![0.5]).unwrap();
        assert_eq!(extended_to_control(&g1, &half).unwrap(), vec![1.0]);
        assert_eq!(extended_to_control(&g1, &ExtendedControl::drift(1)).unwrap(), vec![0.0]);
        let tenth = ExtendedControl::new(0.1, vec![0.9]).unwrap();
        assert!((extended_to_control(&g2, &tenth).unwrap()[0] - 3.0).abs() < 1e-14);
        let fast = ExtendedControl::impulsive(vec![1.0]).unwrap();
        assert_eq!(extended_to_control(&g1, &fast), Err(Error::ImpulsivePoint));
    }

    fn record_with(times: Vec<f64>, controls: Vec<f64>) -> TrajectoryRecord {
        let n = times.len();
        TrajectoryRecord {
            states: vec![vec![1.0]; n],
            distances: vec![1.0; n],
            controls: controls.into_iter().map(|u| ControlValue::Original(vec![u])).collect(),
            is_node: vec![true; n],
            status: Status::HorizonEnd,
            frozen_point: None,
            times,
        }
    }

    #[test]
    fn time_change_examples() {
        let g = GrowthRate::Power(1);
        let r = record_with(vec![0.0, 0.5, 1.0, 3.0], vec![1.0, 1.0, 1.0]);
        let s = time_change_forward(&r, &g).unwrap();
        assert_eq!(s.times, vec![0.0, 1.0, 2.0, 6.0]);

        let r = record_with(vec![0.0, 1.0, 2.0], vec![1.0, 3.0]);
        let s = time_change_forward(&r, &g).unwrap();
        assert_eq!(s.times, vec![0.0, 2.0, 6.0]);

        let r = record_with(vec![0.0, 0.3, 1.1], vec![0.0, 0.0]);
        assert_eq!(time_change_forward(&r, &g).unwrap().times, r.times);

        let r = record_with(vec![0.0, 2.0, 4.0], vec![1.0, 1.0]);
        assert_eq!(time_change_backward(&r, &g).unwrap().times, vec![0.0, 1.0, 2.0]);
    }

    fn two_dim() -> ControlPolynomialSystem {
        ControlPolynomialSystem::new("two-dim", 2, 2, 3, ControlCone::Full, Target::Origin)
            .unwrap()
            .with_term(Term::new(0, |x, _| vec![x[0] - x[1], x[0] * x[1]]))
            .unwrap()
            .with_term(Term::new(2, |x, e| vec![e[0] * x[1], -e[1] * e[1] * x[0]]))
            .unwrap()
            .with_term(Term::new(3, |x, e| vec![-x[0] * (1.0 + e[1].abs()), -x[1] * e[0].abs()]))
            .unwrap()
    }

    proptest! {
        #[test]
        fn conjugacy_both_ways(
            x0 in -4.0f64..4.0, x1 in -4.0f64..4.0,
            u0 in -20.0f64..20.0, u1 in -20.0f64..20.0,
        ) {
            let sys = two_dim();
            let g = sys.growth();
            let x = [x0, x1];
            let u = [u0, u1];
            let wc = control_to_extended(&g, &u).unwrap();
            prop_assert!((wc.w0() + norm(wc.w()) - 1.0).abs() <= SIMPLEX_TOL);
            let fbar = rescaled_dynamics(&sys, &x, &u).unwrap();
            let big = extended_dynamics(&sys, &x, &wc).unwrap();
            for i in 0..2 {
                prop_assert!((fbar[i] - big[i]).abs() <= 1e-10 * fbar[i].abs().max(1.0));
            }
            let back = extended_to_control(&g, &wc).unwrap();
            for i in 0..2 {
                prop_assert!((back[i] - u[i]).abs() <= 1e-10 * u[i].abs().max(1.0));
            }
            let fbar2 = rescaled_dynamics(&sys, &x, &back).unwrap();
            for i in 0..2 {
                prop_assert!((fbar2[i] - big[i]).abs() <= 1e-10 * big[i].abs().max(1.0));
            }
        }

        #[test]
        fn time_change_round_trip_and_monotone(
            gaps in proptest::collection::vec(0.01f64..2.0, 1..30),
            us in proptest::collection::vec(0.0f64..50.0, 30),
        ) {
            let mut times = vec![0.0];
            for g in &gaps { let last = *times.last().unwrap(); times.push(last + g); }
            let controls = us[..gaps.len()].to_vec();
            let r = record_with(times, controls);
            for d in 1..=3 {
                let g = GrowthRate::Power(d);
                let s = time_change_forward(&r, &g).unwrap();
                for (a, b) in s.times.iter().zip(&r.times) {
                    prop_assert!(a >= b);
                }
                let back = time_change_backward(&s, &g).unwrap();
                for (a, b) in back.times.iter().zip(&r.times) {
                    prop_assert!((a - b).abs() <= 1e-10 * b.max(1.0));
                }
            }
        }
    }
}
