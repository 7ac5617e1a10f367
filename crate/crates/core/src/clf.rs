//! Control-Lyapunov certification on control grids, and feedback synthesis
//! through restricted extended control sets.
//!
//! Hamiltonians `H(x, p) = inf <p, F(x, w0, w)>` are grid minima. Over the
//! compact simplex `{w0 + |w| = 1}` the extended grid is the reference; the
//! original-control grid (log-spaced magnitudes up to `R_max`) converges to it
//! from above as `R_max` grows.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::GrowthRate;
use crate::kl::log_grid;
use crate::sampling::Feedback;
use crate::system::{dot, norm, Control, ControlCone, ControlPolynomialSystem, StateVector, Target};
use crate::transforms::{control_to_extended, extended_dynamics, rescaled_dynamics, ExtendedControl};

/// Relative slack on strict inequalities `H < -gamma(W)`.
pub const STRICT_REL_TOL: f64 = 1e-10;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SubgradientFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Candidate `W` with user-supplied limiting-subgradient selections and
/// decrease rate `gamma`.
#[derive(Clone)]
pub struct LyapunovCandidate {
    value: ValueFn,
    subgradient: SubgradientFn,
    gamma: RateFn,
}

impl fmt::Debug for LyapunovCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LyapunovCandidate")
    }
}

impl LyapunovCandidate {
    pub fn new<W, P, G>(value: W, subgradient: P, gamma: G) -> Self
    where
        W: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        P: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LyapunovCandidate {
            value: Arc::new(value),
            subgradient: Arc::new(subgradient),
            gamma: Arc::new(gamma),
        }
    }

    /// Same `W` and subgradients with another decrease rate.
    pub fn with_gamma<G>(&self, gamma: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LyapunovCandidate {
            gamma: Arc::new(gamma),
            ..self.clone()
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn subgradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.subgradient)(x)
    }

    pub fn gamma(&self, r: f64) -> f64 {
        (self.gamma)(r)
    }

    /// Checks positive definiteness on `samples` (all off the target) and that
    /// `gamma` is positive and strictly increasing on `r_grid`.
    pub fn check_on_samples(&self, samples: &[StateVector], r_grid: &[f64]) -> Result<()> {
        for x in samples {
            let w = self.value(x);
            if !(w > 0.0) {
                return Err(Error::Certification(format!("W({x:?}) = {w} is not positive")));
            }
        }
        let mut rs = r_grid.to_vec();
        rs.sort_by(f64::total_cmp);
        for pair in rs.windows(2) {
            let (a, b) = (self.gamma(pair[0]), self.gamma(pair[1]));
            if !(a > 0.0) || !(b > a) {
                return Err(Error::Certification(format!(
                    "gamma not positive and strictly increasing between {} and {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }
}

/// `true` when `value < -gamma_w` holds with a relative safety slack.
pub fn strictly_decreasing(value: f64, gamma_w: f64) -> bool {
    value + gamma_w < -STRICT_REL_TOL * (value.abs() + gamma_w.abs())
}

/// Unit directions of the control cone used by the grids.
///
/// `m = 1`: `{+1, -1}`; `m = 2`: `count` equally spaced angles; `m >= 3`: the
/// signed coordinate axes plus `count` seeded random directions. All are
/// filtered by cone membership.
pub fn unit_directions(m: usize, cone: &ControlCone, count: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let k = count.max(4);
            (0..k)
                .map(|j| {
                    let a = std::f64::consts::TAU * j as f64 / k as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..m {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; m];
                    e[i] = s;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..count {
                let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let r = norm(&v);
                if r > 1e-3 {
                    out.push(v.into_iter().map(|a| a / r).collect());
                }
            }
            out
        }
    };
    dirs.retain(|d| cone.contains(d));
    // m = 2 with an orthant cone: make sure the boundary rays are present
    if m == 2 && matches!(cone, ControlCone::NonNegative) {
        for e in [vec![1.0, 0.0], vec![0.0, 1.0]] {
            if !dirs.contains(&e) {
                dirs.push(e);
            }
        }
    }
    dirs
}

/// Discretized control set for the Hamiltonian infima.
#[derive(Debug, Clone)]
pub enum ControlGrid {
    /// Points of the closed extended simplex (or a restricted part of it).
    Extended {
        points: Vec<ExtendedControl>,
        resolution: f64,
    },
    /// Points of the truncated original cone.
    Original { points: Vec<Control>, r_max: f64 },
}

impl ControlGrid {
    /// Mesh of the closed simplex: `w0 = j h` for `j = 0..=1/h`, each paired
    /// with every direction at `|w| = 1 - w0`. Contains the `w0 = 0` face and
    /// the vertex `(1, 0)`.
    pub fn simplex(sys: &ControlPolynomialSystem, h: f64, directions: usize) -> Result<Self> {
        Self::restricted(sys, 0.0, h, directions)
    }

    /// Mesh of `{w0 >= rho}` with `w0 = rho + (1 - rho) j / M`; `rho` itself
    /// is a grid value.
    pub fn restricted(sys: &ControlPolynomialSystem, rho: f64, h: f64, directions: usize) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::Domain(format!("mesh size must lie in (0, 1], got {h}")));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("rho must lie in [0, 1], got {rho}")));
        }
        let m = sys.control_dim();
        let dirs = unit_directions(m, sys.cone(), directions);
        let steps = (((1.0 - rho) / h).round() as usize).max(1);
        let mut points = Vec::new();
        for j in 0..=steps {
            let w0 = if j == steps {
                1.0
            } else {
                rho + (1.0 - rho) * j as f64 / steps as f64
            };
            if w0 == 1.0 {
                points.push(ExtendedControl::drift(m));
                break;
            }
            for d in &dirs {
                let w = d.iter().map(|e| e * (1.0 - w0)).collect();
                if let Ok(p) = ExtendedControl::new(w0, w) {
                    points.push(p);
                }
            }
        }
        Ok(ControlGrid::Extended {
            points,
            resolution: h,
        })
    }

    /// `{0}` together with `count` log-spaced magnitudes in `[1e-3, r_max]`
    /// along every cone direction.
    pub fn magnitudes(sys: &ControlPolynomialSystem, r_max: f64, count: usize, directions: usize) -> Result<Self> {
        if !(r_max > 1e-3) {
            return Err(Error::Domain(format!("r_max must exceed 1e-3, got {r_max}")));
        }
        let dirs = unit_directions(sys.control_dim(), sys.cone(), directions);
        let mut points = vec![vec![0.0; sys.control_dim()]];
        for r in log_grid(1e-3, r_max, count) {
            for d in &dirs {
                points.push(d.iter().map(|e| e * r).collect());
            }
        }
        Ok(ControlGrid::Original { points, r_max })
    }

    pub fn from_controls(points: Vec<Control>) -> Self {
        let r_max = points.iter().map(|u| norm(u)).fold(0.0, f64::max);
        ControlGrid::Original { points, r_max }
    }

    pub fn len(&self) -> usize {
        match self {
            ControlGrid::Extended { points, .. } => points.len(),
            ControlGrid::Original { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn extended_points(&self) -> Result<&[ExtendedControl]> {
        match self {
            ControlGrid::Extended { points, .. } if !points.is_empty() => Ok(points),
            ControlGrid::Extended { .. } => Err(Error::EmptyGrid),
            ControlGrid::Original { .. } => Err(Error::Precondition("expected an extended control grid".into())),
        }
    }

    fn original_points(&self) -> Result<&[Control]> {
        match self {
            ControlGrid::Original { points, .. } if !points.is_empty() => Ok(points),
            ControlGrid::Original { .. } => Err(Error::EmptyGrid),
            ControlGrid::Extended { .. } => Err(Error::Precondition("expected an original control grid".into())),
        }
    }
}

/// `min <p, F(x, w0, w)>` over the grid, with the minimizing grid point (first
/// in grid order on ties).
pub fn hamiltonian_extended_argmin(
    sys: &ControlPolynomialSystem,
    x: &[f64],
    p: &[f64],
    grid: &ControlGrid,
) -> Result<(f64, ExtendedControl)> {
    let points = grid.extended_points()?;
    let mut best: Option<(f64, &ExtendedControl)> = None;
    for wc in points {
        let v = dot(p, &extended_dynamics(sys, x, wc)?);
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, wc));
        }
    }
    let (v, wc) = best.ok_or(Error::EmptyGrid)?;
    Ok((v, wc.clone()))
}

pub fn hamiltonian_extended(sys: &ControlPolynomialSystem, x: &[f64], p: &[f64], grid: &ControlGrid) -> Result<f64> {
    hamiltonian_extended_argmin(sys, x, p, grid).map(|(v, _)| v)
}

/// `min <p, f(x, u) / (1 + nu(|u|))>` over an original-control grid.
pub fn hamiltonian_original(sys: &ControlPolynomialSystem, x: &[f64], p: &[f64], grid: &ControlGrid) -> Result<f64> {
    let points = grid.original_points()?;
    let mut best = f64::INFINITY;
    for u in points {
        best = best.min(dot(p, &rescaled_dynamics(sys, x, u)?));
    }
    Ok(best)
}

/// Sample states with distance to the target in `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusRegion {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub seed: u64,
}

impl AnnulusRegion {
    /// In one dimension: `count` log-spaced distances on both sides of the
    /// target. Otherwise: `count` log-spaced distances, each along a seeded
    /// random direction. Only the built-in targets are supported.
    pub fn samples(&self, target: &Target, n: usize) -> Result<Vec<StateVector>> {
        if !(self.r_min > 0.0) || self.r_max < self.r_min {
            return Err(Error::Precondition(format!(
                "annulus must satisfy 0 < r_min <= r_max (got [{}, {}])",
                self.r_min, self.r_max
            )));
        }
        if matches!(target, Target::Custom { .. }) {
            return Err(Error::Precondition("annulus sampling needs a built-in target".into()));
        }
        let radii = log_grid(self.r_min, self.r_max, self.count);
        let mut out = Vec::new();
        if n == 1 {
            for &r in &radii {
                for s in [1.0, -1.0] {
                    out.extend(target.point_at_distance(&[s], r));
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for &r in &radii {
                let dir = loop {
                    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                    let len = norm(&v);
                    if len > 1e-3 && len <= 1.0 {
                        break v.into_iter().map(|a| a / len).collect::<Vec<_>>();
                    }
                };
                out.extend(target.point_at_distance(&dir, r));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseViolation {
    pub x: StateVector,
    pub p: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "gamma_W")]
    pub gamma_w: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseReport {
    pub samples_checked: usize,
    /// Largest `H(x, p) + gamma(W(x))` seen; negative means decrease everywhere.
    pub worst_margin: Option<f64>,
    pub violations: Vec<DecreaseViolation>,
}

impl DecreaseReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `H(x, p) < -gamma(W(x))` for every sample and every supplied
/// subgradient, on the extended grid.
pub fn decrease_check(
    sys: &ControlPolynomialSystem,
    cand: &LyapunovCandidate,
    samples: &[StateVector],
    grid: &ControlGrid,
) -> Result<DecreaseReport> {
    grid.extended_points()?;
    type PerCovector = Vec<(f64, Option<DecreaseViolation>)>;
    let per_sample: Vec<Result<PerCovector>> = samples
        .par_iter()
        .map(|x| {
            if sys.distance(x) <= 0.0 {
                return Err(Error::Precondition(format!("sample {x:?} lies in the target")));
            }
            let gamma_w = cand.gamma(cand.value(x));
            cand.subgradients(x)
                .into_iter()
                .map(|p| {
                    let h = hamiltonian_extended(sys, x, &p, grid)?;
                    let margin = h + gamma_w;
                    let violation = (!strictly_decreasing(h, gamma_w)).then(|| DecreaseViolation {
                        x: x.clone(),
                        p: p.clone(),
                        h,
                        gamma_w,
                        margin,
                    });
                    Ok((margin, violation))
                })
                .collect()
        })
        .collect();

    let mut worst: Option<f64> = None;
    let mut violations = Vec::new();
    for r in per_sample {
        for (margin, v) in r? {
            worst = Some(worst.map_or(margin, |w: f64| w.max(margin)));
            violations.extend(v);
        }
    }
    Ok(DecreaseReport {
        samples_checked: samples.len(),
        worst_margin: worst,
        violations,
    })
}

/// Safety factor applied to the grid estimate of `N_hat(r)`.
pub const N_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NEstimate {
    pub r: f64,
    /// Grid estimate of `N_hat(r) = inf over the level band of sup{w0 : decrease}`.
    pub raw: f64,
    /// `N_SAFETY * raw`.
    pub value: f64,
}

/// Largest grid `w0` whose extended control still decreases `W` at `(x, p)`.
fn largest_decreasing_w0(
    sys: &ControlPolynomialSystem,
    x: &[f64],
    p: &[f64],
    gamma_w: f64,
    points: &[ExtendedControl],
) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for wc in points {
        if best.is_some_and(|b| wc.w0() <= b) {
            continue;
        }
        let v = dot(p, &extended_dynamics(sys, x, wc)?);
        if strictly_decreasing(v, gamma_w) {
            best = Some(wc.w0());
        }
    }
    Ok(best)
}

/// Grid estimate of the lower bound `N(r)` on `w0` for the states with
/// `W(x)` in `[min(r, 1), max(r, 1)]`, taken from `level_mesh`.
pub fn compute_n(
    sys: &ControlPolynomialSystem,
    cand: &LyapunovCandidate,
    r: f64,
    grid: &ControlGrid,
    level_mesh: &[StateVector],
) -> Result<NEstimate> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    let points = grid.extended_points()?;
    // relative slack so that the degenerate band at r = 1 is not empty
    let (lo, hi) = (r.min(1.0) * (1.0 - 1e-9), r.max(1.0) * (1.0 + 1e-9));
    let band: Vec<&StateVector> = level_mesh
        .iter()
        .filter(|x| {
            let w = cand.value(x);
            w >= lo && w <= hi
        })
        .collect();
    if band.is_empty() {
        return Err(Error::Precondition(format!("no level-mesh sample has W in [{lo}, {hi}]")));
    }
    let sups: Vec<Result<f64>> = band
        .par_iter()
        .map(|x| {
            let gamma_w = cand.gamma(cand.value(x));
            let mut inf = f64::INFINITY;
            for p in cand.subgradients(x) {
                let w0 = largest_decreasing_w0(sys, x, &p, gamma_w, points)?.ok_or_else(|| {
                    Error::Certification(format!("no grid control decreases W at x = {x:?}, p = {p:?}"))
                })?;
                inf = inf.min(w0);
            }
            Ok(inf)
        })
        .collect();
    let mut raw = f64::INFINITY;
    for s in sups {
        raw = raw.min(s?);
    }
    if !(raw > 0.0) || !raw.is_finite() {
        return Err(Error::Certification(format!(
            "only impulsive controls decrease W on the band for r = {r}"
        )));
    }
    Ok(NEstimate {
        r,
        raw,
        value: N_SAFETY * raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NPoint {
    pub r: f64,
    pub raw: f64,
    pub shrunk: f64,
    /// `shrunk` after forcing increase on `(0, 1]` and decrease on `[1, inf)`.
    pub monotone: f64,
}

/// `N` estimates on a set of radii with the monotone post-processing applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NCurve {
    pub points: Vec<NPoint>,
}

impl NCurve {
    /// Piecewise-linear interpolation of the monotone values; scaled by
    /// `r / r_first` below the first radius and `r_last / r` above the last.
    pub fn eval(&self, r: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if r <= first.r {
            return first.monotone * (r / first.r).min(1.0);
        }
        if r >= last.r {
            return last.monotone * (last.r / r).min(1.0);
        }
        let k = pts.partition_point(|p| p.r <= r);
        let (a, b) = (pts[k - 1], pts[k]);
        a.monotone + (b.monotone - a.monotone) * (r - a.r) / (b.r - a.r)
    }

    /// `true` if the raw estimates themselves violate the monotone shape.
    pub fn raw_needed_clamping(&self) -> bool {
        self.points.iter().any(|p| p.monotone < p.shrunk)
    }
}

pub fn n_curve(
    sys: &ControlPolynomialSystem,
    cand: &LyapunovCandidate,
    radii: &[f64],
    grid: &ControlGrid,
    level_mesh: &[StateVector],
) -> Result<NCurve> {
    let mut rs = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    if rs.is_empty() {
        return Err(Error::Precondition("no radii given".into()));
    }
    let est: Vec<NEstimate> = rs
        .iter()
        .map(|&r| compute_n(sys, cand, r, grid, level_mesh))
        .collect::<Result<_>>()?;
    let mut points: Vec<NPoint> = est
        .iter()
        .map(|e| NPoint {
            r: e.r,
            raw: e.raw,
            shrunk: e.value,
            monotone: e.value,
        })
        .collect();
    // increasing on (0, 1]: running min from 1 downwards
    let split = points.partition_point(|p| p.r <= 1.0);
    let mut run = f64::INFINITY;
    for p in points[..split].iter_mut().rev() {
        run = run.min(p.shrunk);
        p.monotone = run;
    }
    // decreasing on [1, inf): running min from 1 upwards
    let mut run = points[..split].last().map_or(f64::INFINITY, |p| p.monotone);
    for p in points[split..].iter_mut() {
        run = run.min(p.shrunk);
        p.monotone = run;
    }
    Ok(NCurve { points })
}

/// Points on the level sets `W = level`, found by bisection along the rays
/// from the origin through the first `max_rays` distinct sample directions.
/// Rays on which `W` stays below a level up to distance `1e12` are skipped.
pub fn level_points(
    cand: &LyapunovCandidate,
    samples: &[StateVector],
    levels: &[f64],
    max_rays: usize,
) -> Vec<StateVector> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for x in samples {
        let len = norm(x);
        if !(len > 0.0) {
            continue;
        }
        let d: Vec<f64> = x.iter().map(|a| a / len).collect();
        if !dirs.iter().any(|e| norm(&e.iter().zip(&d).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12) {
            dirs.push(d);
        }
        if dirs.len() >= max_rays {
            break;
        }
    }
    let at = |d: &[f64], t: f64| d.iter().map(|a| a * t).collect::<Vec<f64>>();
    let mut out = Vec::new();
    for d in &dirs {
        for &level in levels {
            let mut hi = 1.0;
            while cand.value(&at(d, hi)) < level && hi < 1e12 {
                hi *= 2.0;
            }
            if cand.value(&at(d, hi)) < level {
                continue;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if cand.value(&at(d, mid)) < level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(at(d, hi));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Synthesis {
    pub control: ExtendedControl,
    pub value: f64,
    pub gamma_w: f64,
    /// `value + gamma_w`; negative when the decrease condition holds.
    pub margin: f64,
    pub rho: f64,
}

/// Grid argmin of `<p(x), F(x, w0, w)>` over `{w0 >= N(W(x))}`, returned
/// whether or not it achieves decrease.
pub fn synthesize_candidate(
    sys: &ControlPolynomialSystem,
    cand: &LyapunovCandidate,
    n_func: &dyn Fn(f64) -> f64,
    x: &[f64],
    h: f64,
    directions: usize,
) -> Result<Synthesis> {
    sys.check_state(x)?;
    if sys.distance(x) <= 0.0 {
        return Err(Error::Precondition(format!("x = {x:?} lies in the target")));
    }
    let w = cand.value(x);
    let rho = n_func(w);
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Precondition(format!("N(W(x)) = {rho} is outside (0, 1]")));
    }
    let p = cand
        .subgradients(x)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Certification(format!("no subgradient supplied at {x:?}")))?;
    let grid = ControlGrid::restricted(sys, rho, h, directions)?;
    let (value, control) = hamiltonian_extended_argmin(sys, x, &p, &grid)?;
    let gamma_w = cand.gamma(w);
    Ok(Synthesis {
        control,
        value,
        gamma_w,
        margin: value + gamma_w,
        rho,
    })
}

/// Non-impulsive extended feedback value at `x`: fails when no control of the
/// restricted set achieves `<p, F> < -gamma(W(x))`.
pub fn synthesize_feedback_extended(
    sys: &ControlPolynomialSystem,
    cand: &LyapunovCandidate,
    n_func: &dyn Fn(f64) -> f64,
    x: &[f64],
    h: f64,
    directions: usize,
) -> Result<ExtendedControl> {
    let s = synthesize_candidate(sys, cand, n_func, x, h, directions)?;
    if strictly_decreasing(s.value, s.gamma_w) {
        Ok(s.control)
    } else {
        Err(Error::Certification(format!(
            "no control with w0 >= {} decreases W at x = {x:?} (margin {})",
            s.rho, s.margin
        )))
    }
}

/// `(w0, w) -> (w/|w|) nu^-1(|w| / w0)` for `w0 > 0` and `w != 0`.
pub fn project_feedback(g: &GrowthRate, wc: &ExtendedControl) -> Result<Control> {
    if wc.w0() <= 0.0 {
        return Err(Error::Projection("w0 = 0 has no finite control".into()));
    }
    let wn = norm(wc.w());
    if wn == 0.0 {
        return Err(Error::Projection("w = 0 is drift only; use u = 0".into()));
    }
    let magnitude = g.inverse(wn / wc.w0())?;
    Ok(wc.w().iter().map(|e| e / wn * magnitude).collect())
}

/// Lifts an original feedback: `K_hat(x) = (w0, w)(K(x))`.
pub fn feedback_to_extended(g: &GrowthRate, k: &Feedback) -> Result<Feedback> {
    match k {
        Feedback::Original(f) => {
            let f = f.clone();
            let g = g.clone();
            Ok(Feedback::extended(move |x| control_to_extended(&g, &f(x)?)))
        }
        Feedback::Extended(_) => Err(Error::Precondition("feedback is already extended".into())),
    }
}

/// Projects a non-impulsive extended feedback to the original system, with
/// `u = 0` where `w = 0`.
pub fn feedback_from_extended(g: &GrowthRate, k_hat: &Feedback, m: usize) -> Result<Feedback> {
    match k_hat {
        Feedback::Extended(f) => {
            let f = f.clone();
            let g = g.clone();
            Ok(Feedback::original(move |x| {
                let wc = f(x)?;
                if norm(wc.w()) == 0.0 && wc.w0() > 0.0 {
                    Ok(vec![0.0; m])
                } else {
                    project_feedback(&g, &wc)
                }
            }))
        }
        Feedback::Original(_) => Err(Error::Precondition("feedback is already original".into())),
    }
}

/// The synthesized extended feedback as a [`Feedback`].
pub fn synthesized_feedback(
    sys: &ControlPolynomialSystem,
    cand: &LyapunovCandidate,
    n_func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    h: f64,
    directions: usize,
) -> Feedback {
    let sys = sys.clone();
    let cand = cand.clone();
    Feedback::extended(move |x| synthesize_feedback_extended(&sys, &cand, &*n_func, x, h, directions))
}
