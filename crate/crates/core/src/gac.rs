//! Descent-rate verification and the KL constructions built from a strict
//! descent rate: strip radii, dwell times, the step bound `b(R, t)` and a
//! continuous majorant of it, plus an empirical sample-stabilizability
//! certifier.
//!
//! Strips use the half-open convention: `i(R)` is the unique index with
//! `R in [r_i, r_{i-1})`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kl::KlFunction;
use crate::sampling::{simulate_sample_hold, uniform_partition, DynamicsForm, Feedback, SimOptions};
use crate::system::{norm, ControlPolynomialSystem, StateVector};
use crate::trajectory::{Partition, Status, TrajectoryRecord};

/// Default absolute tolerance on distances in descent checks.
pub const DESCENT_TOL: f64 = 1e-6;

/// Relative accuracy of the backward strip recursion.
const RADIUS_REL_TOL: f64 = 1e-12;

/// Radii `r_i` for `i` in `[i_min, i_max]` with `r_0 = 1` and
/// `r_{i-1} = beta(r_i, 0)`.
#[derive(Debug, Clone)]
pub struct StripSystem {
    i_min: i64,
    radii: Vec<f64>,
    beta: KlFunction,
}

impl StripSystem {
    pub fn i_min(&self) -> i64 {
        self.i_min
    }

    pub fn i_max(&self) -> i64 {
        self.i_min + self.radii.len() as i64 - 1
    }

    pub fn beta(&self) -> &KlFunction {
        &self.beta
    }

    /// Radii in index order (decreasing).
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, i: i64) -> Option<f64> {
        if i < self.i_min || i > self.i_max() {
            None
        } else {
            Some(self.radii[(i - self.i_min) as usize])
        }
    }

    /// `i` with `R in [r_i, r_{i-1})`, if both radii are stored.
    pub fn index_of(&self, r: f64) -> Option<i64> {
        if !(r > 0.0) {
            return None;
        }
        // radii are decreasing; count those strictly greater than r
        let above = self.radii.partition_point(|&x| x > r);
        let i = self.i_min + above as i64;
        (i > self.i_min && i <= self.i_max()).then_some(i)
    }
}

/// Solves `beta(r, 0) = level` for `r in [0, level]` by bisection; exact hits
/// of the midpoint are returned immediately.
fn invert_at_zero(beta: &KlFunction, level: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, level);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = beta.eval(mid, 0.0);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("beta({mid}, 0)")));
        }
        if v == level {
            return Ok(mid);
        }
        if v < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= RADIUS_REL_TOL * hi * 1e-3 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn strip_radii(beta: &KlFunction, i_min: i64, i_max: i64) -> Result<StripSystem> {
    if !beta.strict_at_zero() {
        return Err(Error::NotStrict);
    }
    if i_min > 0 || i_max < 0 {
        return Err(Error::Precondition(format!(
            "strip window [{i_min}, {i_max}] must contain index 0"
        )));
    }
    let mut upper = Vec::new();
    let mut r = 1.0f64;
    for _ in i_min..0 {
        r = beta.eval(r, 0.0);
        if !r.is_finite() {
            return Err(Error::NonFinite("strip radius".into()));
        }
        upper.push(r);
    }
    upper.reverse();
    let mut radii = upper;
    radii.push(1.0);
    let mut r = 1.0f64;
    for _ in 0..i_max {
        r = invert_at_zero(beta, r)?;
        radii.push(r);
    }
    for w in radii.windows(2) {
        if !(w[1] < w[0]) || !(w[1] > 0.0) {
            return Err(Error::NotStrict);
        }
        let back = beta.eval(w[1], 0.0);
        if (back - w[0]).abs() > 1e-10 * w[0].max(1.0) {
            return Err(Error::Certification(format!(
                "strip recursion residual {} at r = {}",
                back - w[0],
                w[1]
            )));
        }
    }
    Ok(StripSystem {
        i_min,
        radii,
        beta: beta.clone(),
    })
}

/// Smallest `t` (to bisection accuracy, from above) with `beta(radius, t) <= level`.
pub fn time_to_level(beta: &KlFunction, radius: f64, level: f64, max_time: f64) -> Result<f64> {
    let failure = || Error::DecayFailure {
        radius,
        level,
        max_time,
    };
    if beta.eval(radius, 0.0) <= level {
        return Ok(0.0);
    }
    let mut hi = 1.0f64.min(max_time);
    while beta.eval(radius, hi) > level {
        if hi >= max_time {
            return Err(failure());
        }
        hi = (2.0 * hi).min(max_time);
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if beta.eval(radius, mid) <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Dwell time `T_i` for every strip `i in (i_min, i_max]`:
/// the smallest `t` with `beta(r_{i-1}, t) <= r_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellTimes {
    pub first_index: i64,
    pub times: Vec<f64>,
}

impl DwellTimes {
    pub fn get(&self, i: i64) -> Option<f64> {
        let k = i - self.first_index;
        (k >= 0 && (k as usize) < self.times.len()).then(|| self.times[k as usize])
    }

    pub fn total(&self) -> f64 {
        self.times.iter().sum()
    }
}

pub fn descent_times(beta: &KlFunction, strips: &StripSystem, max_time: f64) -> Result<DwellTimes> {
    let first = strips.i_min() + 1;
    let times = (first..=strips.i_max())
        .map(|i| {
            let upper = strips.radius(i - 1).expect("stored");
            let lower = strips.radius(i).expect("stored");
            time_to_level(beta, upper, lower, max_time)
        })
        .collect::<Result<Vec<_>>>()?;
    if times.is_empty() {
        return Err(Error::Precondition("strip window holds no strip".into()));
    }
    Ok(DwellTimes {
        first_index: first,
        times,
    })
}

/// Step bound `b(R, t) = r_{i(R)+N-2}` for `t in [Tbar_{i,N-1}, Tbar_{i,N})`,
/// where `Tbar_{i,N} = T_i + ... + T_{i+N}` and `Tbar_{i,-1} = 0`.
#[derive(Debug, Clone)]
pub struct PiecewiseB {
    strips: StripSystem,
    dwell: DwellTimes,
}

pub fn piecewise_b(strips: &StripSystem, dwell: &DwellTimes, horizon: f64) -> Result<PiecewiseB> {
    if dwell.first_index != strips.i_min() + 1
        || dwell.times.len() as i64 != strips.i_max() - strips.i_min()
    {
        return Err(Error::Precondition("dwell times do not match the strip window".into()));
    }
    if dwell.times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Precondition("dwell times must be positive".into()));
    }
    if !(dwell.total() > horizon) {
        return Err(Error::WindowExhausted(format!(
            "dwell times sum to {} which does not exceed the horizon {horizon}",
            dwell.total()
        )));
    }
    Ok(PiecewiseB {
        strips: strips.clone(),
        dwell: dwell.clone(),
    })
}

impl PiecewiseB {
    pub fn strips(&self) -> &StripSystem {
        &self.strips
    }

    pub fn dwell(&self) -> &DwellTimes {
        &self.dwell
    }

    /// Strip indices `i` on which `b(R, .)` is defined: `r_{i-2}` must be stored.
    pub fn strip_range(&self) -> (i64, i64) {
        (self.strips.i_min() + 2, self.strips.i_max())
    }

    /// Switching times `Tbar_{i,N}` for `N = 0, 1, ...` while the dwell
    /// times are stored.
    pub fn switch_times(&self, i: i64) -> Vec<f64> {
        let mut acc = 0.0;
        (i..=self.strips.i_max())
            .map_while(|j| self.dwell.get(j))
            .map(|t| {
                acc += t;
                acc
            })
            .collect()
    }

    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !(r >= 0.0) {
            return Err(Error::Domain(format!("b({r}, {t}) needs R, t >= 0")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.strip_range();
        let i = self
            .strips
            .index_of(r)
            .filter(|&i| i >= lo && i <= hi)
            .ok_or_else(|| Error::WindowExhausted(format!("R = {r} is outside the strip window")))?;
        let switches = self.switch_times(i);
        let n = switches.partition_point(|&s| s <= t);
        if n == switches.len() {
            return Err(Error::WindowExhausted(format!(
                "t = {t} lies beyond the stored dwell times for R = {r}"
            )));
        }
        self.strips
            .radius(i + n as i64 - 2)
            .ok_or_else(|| Error::WindowExhausted(format!("radius index {} not stored", i + n as i64 - 2)))
    }
}

/// Continuous majorant of a [`PiecewiseB`].
///
/// For each strip `j` the step function `t -> b(R, t)` is dominated by the
/// linear interpolant `g_j` through `(Tbar_{j,N-1}, r_{j+N-3})`. Node values in
/// `R` are `V_k = max_{j >= k} g_j`, interpolated linearly between adjacent
/// radii, plus `eta R e^-t` for strict monotonicity in `R`. Beyond the last
/// switching time `g_j` decays exponentially; outside the radius window the
/// nearest node value is scaled linearly in `R`.
#[derive(Debug, Clone)]
pub struct KlMajorant {
    b: PiecewiseB,
    // per strip j (from strip_range().0): interpolation nodes (t, value)
    nodes: Vec<Vec<(f64, f64)>>,
    tail_rate: f64,
    eta: f64,
}

pub fn kl_majorant(b: &PiecewiseB) -> Result<KlMajorant> {
    let (lo, hi) = b.strip_range();
    if lo > hi {
        return Err(Error::WindowExhausted("need at least three stored radii".into()));
    }
    let strips = b.strips();
    let mut nodes = Vec::new();
    for j in lo..=hi {
        let top = strips.radius(j - 2).expect("stored");
        let mut pts = vec![(0.0, strips.beta().eval(top, 0.0))];
        for (n, s) in b.switch_times(j).into_iter().enumerate() {
            // value on [Tbar_{j,n}, ...) is r_{j+n-1}; node carries r_{j+n-2}
            match strips.radius(j + n as i64 - 2) {
                Some(v) => pts.push((s, v)),
                None => break,
            }
        }
        nodes.push(pts);
    }
    let tail_rate = b.dwell().times.len() as f64 / b.dwell().total();
    Ok(KlMajorant {
        b: b.clone(),
        nodes,
        tail_rate,
        eta: 1e-6,
    })
}

impl KlMajorant {
    fn g(&self, j: i64, t: f64) -> f64 {
        let pts = &self.nodes[(j - self.b.strip_range().0) as usize];
        let k = pts.partition_point(|p| p.0 <= t);
        if k == pts.len() {
            let (tl, vl) = pts[pts.len() - 1];
            return vl * (-(t - tl) * self.tail_rate).exp();
        }
        let (a, b) = (pts[k - 1], pts[k]);
        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
    }

    /// `V_k(t)` at radius `r_k`, `k in [lo - 1, hi]`.
    fn node_value(&self, k: i64, t: f64) -> f64 {
        let (lo, hi) = self.b.strip_range();
        if k < lo {
            let s = self.b.strips();
            return self.node_value(lo, t) * s.radius(lo - 1).unwrap() / s.radius(lo).unwrap();
        }
        (k..=hi).map(|j| self.g(j, t)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value everywhere on `[0, inf)^2`.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = self.b.strips();
        let (lo, hi) = self.b.strip_range();
        let r_top = s.radius(lo - 1).unwrap();
        let r_bottom = s.radius(hi).unwrap();
        let base = if r >= r_top {
            self.node_value(lo - 1, t) * r / r_top
        } else if r < r_bottom {
            self.node_value(hi, t) * r / r_bottom
        } else {
            let i = s.index_of(r).expect("inside window");
            let (ri, rim1) = (s.radius(i).unwrap(), s.radius(i - 1).unwrap());
            let (vi, vim1) = (self.node_value(i, t), self.node_value(i - 1, t));
            vi + (vim1 - vi) * (r - ri) / (rim1 - ri)
        };
        base + self.eta * r * (-t).exp()
    }

    /// Value where `b` itself is defined; window-exhausted otherwise.
    pub fn try_eval(&self, r: f64, t: f64) -> Result<f64> {
        self.b.eval(r, t)?;
        Ok(self.eval(r, t))
    }

    pub fn to_kl_function(&self) -> KlFunction {
        let me = Arc::new(self.clone());
        KlFunction::new(move |r, t| me.eval(r, t)).with_label("majorant of b")
    }

    /// Largest `t` at which `b(r, t)` is still defined (exclusive).
    pub fn time_window(&self, r: f64) -> Option<f64> {
        let i = self.b.strips().index_of(r)?;
        let (lo, hi) = self.b.strip_range();
        if i < lo || i > hi {
            return None;
        }
        self.b.switch_times(i).last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub t: f64,
    pub distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentReport {
    pub nodes_checked: usize,
    pub violations: Vec<BoundViolation>,
}

impl DescentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d(x(t_k)) <= beta(d(z), t_k) + tol` at every partition node.
pub fn verify_descent(traj: &TrajectoryRecord, beta: &KlFunction, tol: f64) -> DescentReport {
    let d0 = traj.distances.first().copied().unwrap_or(0.0);
    let nodes = traj.node_indices();
    let violations = nodes
        .iter()
        .filter_map(|&k| {
            let (t, d) = (traj.times[k], traj.distances[k]);
            let bound = beta.eval(d0, t);
            (d > bound + tol).then_some(BoundViolation { t, distance: d, bound })
        })
        .collect();
    DescentReport {
        nodes_checked: nodes.len(),
        violations,
    }
}

/// Checks `|u(t_k)| <= sigma(d(x(t_k)))` at every node off the target.
pub fn verify_sigma_bound(traj: &TrajectoryRecord, sigma: &dyn Fn(f64) -> f64) -> Result<DescentReport> {
    let mut checked = 0;
    let mut violations = Vec::new();
    for k in traj.node_indices() {
        let Some(c) = traj.controls.get(k) else { continue };
        let u = c
            .as_original()
            .ok_or_else(|| Error::Precondition("sigma bounds need original controls".into()))?;
        let d = traj.distances[k];
        if d <= 0.0 {
            continue;
        }
        checked += 1;
        let (mag, bound) = (norm(u), sigma(d));
        if mag > bound {
            violations.push(BoundViolation {
                t: traj.times[k],
                distance: mag,
                bound,
            });
        }
    }
    Ok(DescentReport {
        nodes_checked: checked,
        violations,
    })
}

/// Largest control magnitude seen per strip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaStep {
    /// `(i, r_i, r_{i-1}, sup |u|)` for strips with at least one sample.
    pub strips: Vec<(i64, f64, f64, f64)>,
}

impl SigmaStep {
    /// `sup |u|` over the strips containing `r` or any smaller radius.
    pub fn eval(&self, r: f64) -> f64 {
        self.strips
            .iter()
            .filter(|s| s.1 <= r)
            .map(|s| s.3)
            .fold(0.0, f64::max)
    }
}

pub fn sigma_from_runs(strips: &StripSystem, runs: &[TrajectoryRecord]) -> Result<SigmaStep> {
    let mut sup = std::collections::BTreeMap::<i64, f64>::new();
    for run in runs {
        for k in run.node_indices() {
            let Some(c) = run.controls.get(k) else { continue };
            let u = c
                .as_original()
                .ok_or_else(|| Error::Precondition("sigma bounds need original controls".into()))?;
            if let Some(i) = strips.index_of(run.distances[k]) {
                let e = sup.entry(i).or_insert(0.0);
                *e = e.max(norm(u));
            }
        }
    }
    Ok(SigmaStep {
        strips: sup
            .into_iter()
            .map(|(i, s)| (i, strips.radius(i).unwrap(), strips.radius(i - 1).unwrap(), s))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub seed: u64,
    /// Initial states per pair; the first lies at distance `R`.
    pub seeds_per_pair: usize,
    /// Partitions per initial state; the first is uniform.
    pub partitions_per_seed: usize,
    /// Horizon is `horizon_factor * T_r + delta`, with `beta(R, T_r) = r`.
    pub horizon_factor: f64,
    pub max_time: f64,
    pub tol: f64,
    /// Violations stored per pair (all are counted).
    pub max_reported: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            seed: 0,
            seeds_per_pair: 8,
            partitions_per_seed: 3,
            horizon_factor: 2.0,
            max_time: 1e4,
            tol: DESCENT_TOL,
            max_reported: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Bound,
    BlowUp,
    SimulationError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityViolation {
    pub kind: ViolationKind,
    pub z: StateVector,
    pub partition: usize,
    pub t: f64,
    pub distance: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub delta: f64,
    pub horizon: f64,
    pub seeds_tested: usize,
    pub partitions_tested: usize,
    pub violation_count: usize,
    pub violations: Vec<StabilityViolation>,
    /// Largest `d(x(t_{k+1})) / d(x(t_k))` over consecutive nodes off the target.
    pub worst_node_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub beta: String,
    pub pairs: Vec<PairReport>,
    pub verdict: String,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.violation_count == 0)
    }
}

struct Task {
    pair: usize,
    z: StateVector,
    partition_index: usize,
    partition: Partition,
}

fn sample_states(
    sys: &ControlPolynomialSystem,
    big_r: f64,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StateVector>> {
    let n = sys.state_dim();
    (0..count)
        .map(|s| {
            let d = if s == 0 {
                big_r
            } else {
                big_r * 1e-3f64.powf(rng.random::<f64>())
            };
            let dir: Vec<f64> = if n == 1 {
                vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
            } else {
                loop {
                    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                    let l = norm(&v);
                    if l > 1e-3 && l <= 1.0 {
                        break v.into_iter().map(|a| a / l).collect();
                    }
                }
            };
            sys.target()
                .point_at_distance(&dir, d)
                .ok_or_else(|| Error::Precondition("cannot sample initial states around a custom target".into()))
        })
        .collect()
}

fn jittered_partition(delta: f64, horizon: f64, rng: &mut ChaCha8Rng) -> Result<Partition> {
    let mut times = vec![0.0];
    let mut t = 0.0;
    while t < horizon {
        t += delta * (0.5 + 0.5 * rng.random::<f64>());
        times.push(t.min(horizon));
        if t >= horizon {
            break;
        }
    }
    Partition::new(times)
}

/// Empirical check of `d(x(t)) <= max(beta(d(z), t), r)` over sampled initial
/// states with `d(z) <= R` and partitions with diameter at most `delta(R, r)`.
///
/// Tasks are generated sequentially from `opts.seed`, run in parallel, and
/// merged in generation order, so reports are reproducible.
#[allow(clippy::too_many_arguments)]
pub fn certify_sample_stabilizability(
    sys: &ControlPolynomialSystem,
    form: DynamicsForm,
    k: &Feedback,
    beta: &KlFunction,
    pairs: &[(f64, f64)],
    delta: &dyn Fn(f64, f64) -> f64,
    sim: &SimOptions,
    opts: &CertifyOptions,
) -> Result<CertifyReport> {
    if opts.seeds_per_pair == 0 || opts.partitions_per_seed == 0 {
        return Err(Error::Precondition("need at least one seed and one partition".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tasks = Vec::new();
    let mut headers = Vec::new();
    for (p, &(big_r, r)) in pairs.iter().enumerate() {
        if !(r > 0.0 && r < big_r) {
            return Err(Error::Precondition(format!("pair (R, r) = ({big_r}, {r}) needs 0 < r < R")));
        }
        let d = delta(big_r, r);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Precondition(format!("delta({big_r}, {r}) = {d} must be positive")));
        }
        let t_r = time_to_level(beta, big_r, r, opts.max_time)?;
        let horizon = opts.horizon_factor * t_r + d;
        headers.push((big_r, r, d, horizon));
        for z in sample_states(sys, big_r, opts.seeds_per_pair, &mut rng)? {
            for q in 0..opts.partitions_per_seed {
                let partition = if q == 0 {
                    uniform_partition(d.min(horizon), horizon)?
                } else {
                    jittered_partition(d, horizon, &mut rng)?
                };
                tasks.push(Task {
                    pair: p,
                    z: z.clone(),
                    partition_index: q,
                    partition,
                });
            }
        }
    }

    let outcomes: Vec<(usize, Vec<StabilityViolation>, f64)> = tasks
        .par_iter()
        .map(|task| {
            let (_, r, _, horizon) = headers[task.pair];
            let sim = SimOptions { horizon, ..*sim };
            let mut violations = Vec::new();
            let mut worst_ratio: f64 = 0.0;
            match simulate_sample_hold(sys, form, k, &task.partition, &task.z, &sim) {
                Ok(rec) => {
                    let d0 = rec.distances[0];
                    for (&t, &d) in rec.times.iter().zip(&rec.distances) {
                        let bound = beta.eval(d0, t).max(r);
                        if d > bound + opts.tol {
                            violations.push(StabilityViolation {
                                kind: ViolationKind::Bound,
                                z: task.z.clone(),
                                partition: task.partition_index,
                                t,
                                distance: d,
                                bound,
                                message: None,
                            });
                        }
                    }
                    let nodes = rec.node_indices();
                    for w in nodes.windows(2) {
                        let (a, b) = (rec.distances[w[0]], rec.distances[w[1]]);
                        if a > sim.target_tol && b > 0.0 {
                            worst_ratio = worst_ratio.max(b / a);
                        }
                    }
                    if let Status::BlowUp(t) = rec.status {
                        violations.push(StabilityViolation {
                            kind: ViolationKind::BlowUp,
                            z: task.z.clone(),
                            partition: task.partition_index,
                            t,
                            distance: rec.final_distance(),
                            bound: beta.eval(d0, t).max(r),
                            message: None,
                        });
                    }
                }
                Err(e) => violations.push(StabilityViolation {
                    kind: ViolationKind::SimulationError,
                    z: task.z.clone(),
                    partition: task.partition_index,
                    t: 0.0,
                    distance: sys.distance(&task.z),
                    bound: f64::NAN,
                    message: Some(e.to_string()),
                }),
            }
            (task.pair, violations, worst_ratio)
        })
        .collect();

    let mut reports: Vec<PairReport> = headers
        .iter()
        .map(|&(big_r, r, delta, horizon)| PairReport {
            big_r,
            r,
            delta,
            horizon,
            seeds_tested: opts.seeds_per_pair,
            partitions_tested: opts.seeds_per_pair * opts.partitions_per_seed,
            violation_count: 0,
            violations: Vec::new(),
            worst_node_ratio: 0.0,
        })
        .collect();
    for (p, vs, ratio) in outcomes {
        let rep = &mut reports[p];
        rep.worst_node_ratio = rep.worst_node_ratio.max(ratio);
        rep.violation_count += vs.len();
        let room = opts.max_reported.saturating_sub(rep.violations.len());
        rep.violations.extend(vs.into_iter().take(room));
    }
    let passed = reports.iter().all(|p| p.violation_count == 0);
    Ok(CertifyReport {
        beta: beta.label().to_string(),
        pairs: reports,
        verdict: if passed { "pass" } else { "violations" }.to_string(),
    })
}
