//! Self-check of the whole pipeline on the cubic-damped system, used by the
//! `example` command. Each check compares against closed-form values.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli::{cmd_certify_stab, cmd_simulate, cmd_verify_clf, EXIT_OK, EXIT_VIOLATIONS};
use crate::clf::{
    hamiltonian_extended, hamiltonian_original, project_feedback, synthesize_feedback_extended, ControlGrid,
};
use crate::config::RunConfig;
use crate::error::Result;
use crate::example::{
    closed_form_constant_control, closed_form_jump, delta_max, k_hat, n_of, ExampleFixture,
};
use crate::gac::{descent_times, kl_majorant, piecewise_b, strip_radii};
use crate::kl::{kl_check, linear_grid, log_grid, KlFunction, KlViolationKind};
use crate::sampling::{simulate_open_loop, simulate_sample_hold, uniform_partition, ControlSignal, DynamicsForm, Feedback, SimOptions};
use crate::trajectory::{ControlValue, Partition, Status, TrajectoryRecord};
use crate::transforms::{
    control_to_extended, extended_dynamics, extended_to_control, rescaled_dynamics, time_change_backward,
    time_change_forward, ExtendedControl,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn check(id: u32, name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult {
        id,
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn bounded_control_floor() -> Result<(bool, String)> {
    let fx = ExampleFixture::new();
    let start = Instant::now();
    let p = uniform_partition(0.2, 20.0)?;
    let sig = ControlSignal::constant(p, ControlValue::Original(vec![2.0]));
    let rec = simulate_open_loop(&fx.system, DynamicsForm::Original, &sig, &[1.0], &SimOptions::default().with_horizon(20.0))?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for k in rec.node_indices() {
        let exact = closed_form_constant_control(1.0, 2.0, rec.times[k])?;
        worst = worst.max((rec.states[k][0] - exact).abs());
    }
    let floor_err = (rec.final_state()[0] - 0.5f64.sqrt()).abs();
    Ok((
        floor_err <= 1e-4 && worst <= 1e-6 && elapsed < 1.0,
        format!("|x(20) - 1/sqrt2| = {floor_err:.2e}, max checkpoint error {worst:.2e}, {elapsed:.3}s"),
    ))
}

pub fn sampled_stabilization() -> Result<(bool, String)> {
    let fx = ExampleFixture::new();
    let delta = delta_max();
    let bound = (-delta / 2.0).exp() + 1e-6;
    let p = uniform_partition(delta, 10.0)?;
    let (mut worst_ratio, mut ok, mut slowest) = (0.0f64, true, 0.0f64);
    for z in [0.1, -0.1, 1.0, -1.0, 5.0, -5.0] {
        let start = Instant::now();
        let rec = simulate_sample_hold(&fx.system, DynamicsForm::Original, &fx.feedback(), &p, &[z], &SimOptions::default())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let nodes = rec.node_indices();
        for &k in &nodes {
            ok &= rec.distances[k] <= z.abs() * (-rec.times[k] / 2.0).exp() + 1e-6;
        }
        for w in nodes.windows(2) {
            // the last interval is cut short by the horizon and gets its own bound
            let len = rec.times[w[1]] - rec.times[w[0]];
            let ratio = rec.distances[w[1]] / rec.distances[w[0]];
            ok &= ratio <= (-len / 2.0).exp() + 1e-6;
            if (len - delta).abs() <= 1e-9 {
                worst_ratio = worst_ratio.max(ratio);
            }
        }
    }
    ok &= worst_ratio <= bound && slowest < 1.0;
    Ok((ok, format!("worst node ratio {worst_ratio:.6} (bound {bound:.6}), slowest run {slowest:.3}s")))
}

pub fn impulsive_jump() -> Result<(bool, String)> {
    let fx = ExampleFixture::new();
    let k = Feedback::constant_extended(ExtendedControl::impulsive(vec![1.0])?);
    let p = uniform_partition(0.1, 10.0)?;
    let rec = simulate_sample_hold(&fx.system, DynamicsForm::Extended, &k, &p, &[1.0], &SimOptions::default().with_horizon(10.0))?;
    let mut worst: f64 = 0.0;
    for (t, d) in rec.times.iter().zip(&rec.distances) {
        worst = worst.max((d - closed_form_jump(1.0, *t)?).abs());
    }
    Ok((worst <= 1e-6, format!("max |d - 1/sqrt(2s+1)| = {worst:.2e} over s in [0, 10]")))
}

const CLF_CONFIG: &str = r#"{
    "system": "cubic-damped",
    "clf": {
        "W": "abs(x1)", "p": ["signum(x1)"], "gamma": "r^3/(2*(2+r^2))",
        "region": {"r_min": 0.01, "r_max": 100, "count": 200},
        "n_radii": [0.1, 0.5, 1, 2, 10]
    }
}"#;

pub fn clf_certification(out: &Path) -> Result<(bool, String)> {
    let good = RunConfig::from_json_str(CLF_CONFIG, &[])?;
    let a = cmd_verify_clf(&good, &out.join("clf_good"))?;
    let bad = RunConfig::from_json_str(CLF_CONFIG, &["clf.gamma=r^3".into()])?;
    let b = cmd_verify_clf(&bad, &out.join("clf_bad"))?;
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("clf_bad").join("clf_report.json"))?).unwrap_or_default();
    let all_flagged = report["violations"].as_array().map(|v| v.len()) == report["samples_checked"].as_u64().map(|n| n as usize);
    Ok((
        a.code == EXIT_OK && b.code == EXIT_VIOLATIONS && all_flagged,
        format!("gamma r^3/(2(2+r^2)): exit {} ({}); r^3: exit {} ({})", a.code, a.summary, b.code, b.summary),
    ))
}

pub fn hamiltonian_equivalence() -> Result<(bool, String)> {
    let fx = ExampleFixture::new();
    let mesh = 1e-3;
    let he = hamiltonian_extended(&fx.system, &[1.0], &[1.0], &ControlGrid::simplex(&fx.system, mesh, 2)?)?;
    let mut ok = (he + 1.0).abs() <= mesh;
    let mut detail = format!("H_ext = {he}");
    for r_max in [10.0, 1e2, 1e3] {
        let grid = ControlGrid::magnitudes(&fx.system, r_max, 200, 2)?;
        let ho = hamiltonian_original(&fx.system, &[1.0], &[1.0], &grid)?;
        let gap = (ho - he).abs();
        ok &= gap <= 2.0 / (1.0 + r_max) + 1e-3;
        detail.push_str(&format!(", R_max {r_max}: gap {gap:.3e}"));
    }
    Ok((ok, detail))
}

pub fn synthesis_pipeline() -> Result<(bool, String)> {
    let fx = ExampleFixture::new();
    let g = fx.system.growth();
    let (mut worst_rel, mut worst_trip) = (0.0f64, 0.0f64);
    for x in linear_grid(0.1, 10.0, 100) {
        let wc = synthesize_feedback_extended(&fx.system, &fx.clf, &n_of, &[x], 1e-3, 2)?;
        let u = project_feedback(&g, &wc)?[0];
        let exact = 2.0 / (x * x);
        worst_rel = worst_rel.max((u - exact).abs() / exact);
        let back = project_feedback(&g, &control_to_extended(&g, &[exact])?)?[0];
        worst_trip = worst_trip.max((back - exact).abs() / exact);
        let lifted = k_hat(x)?;
        worst_trip = worst_trip.max((project_feedback(&g, &lifted)?[0] - exact).abs() / exact);
    }
    Ok((
        worst_rel <= 0.05 && worst_trip <= 1e-10,
        format!("max relative error of K {worst_rel:.2e}, round trip {worst_trip:.2e}"),
    ))
}

fn random_record(rng: &mut ChaCha8Rng) -> Result<TrajectoryRecord> {
    let n = rng.random_range(2..20);
    let mut times = vec![0.0];
    for _ in 1..n {
        let last = *times.last().unwrap();
        times.push(last + rng.random_range(0.01..2.0));
    }
    let controls: Vec<ControlValue> = (1..n)
        .map(|_| ControlValue::Original(vec![rng.random_range(0.0..50.0)]))
        .collect();
    Partition::new(times.clone())?;
    Ok(TrajectoryRecord {
        states: times.iter().map(|&t| vec![t]).collect(),
        distances: times.clone(),
        is_node: vec![true; n],
        times,
        controls,
        status: Status::HorizonEnd,
        frozen_point: None,
    })
}

pub fn transform_round_trips() -> Result<(bool, String)> {
    let fx = ExampleFixture::new();
    let g = fx.system.growth();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_time: f64 = 0.0;
    for _ in 0..1000 {
        let rec = random_record(&mut rng)?;
        let back = time_change_backward(&time_change_forward(&rec, &g)?, &g)?;
        for (a, b) in rec.times.iter().zip(&back.times) {
            worst_time = worst_time.max((a - b).abs() / a.max(1.0));
        }
    }
    let (mut worst_map, mut worst_conj) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let x: f64 = rng.random_range(-10.0..10.0);
        let u: f64 = 10f64.powf(rng.random_range(-4.0..4.0));
        let wc = control_to_extended(&g, &[u])?;
        worst_map = worst_map.max((extended_to_control(&g, &wc)?[0] - u).abs() / u);
        let w0: f64 = rng.random_range(1e-6..1.0);
        let wc2 = ExtendedControl::new(w0, vec![1.0 - w0])?;
        let back = control_to_extended(&g, &extended_to_control(&g, &wc2)?)?;
        worst_map = worst_map.max((back.w0() - w0).abs());
        let a = rescaled_dynamics(&fx.system, &[x], &[u])?[0];
        let b = extended_dynamics(&fx.system, &[x], &wc)?[0];
        worst_conj = worst_conj.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok((
        worst_time <= 1e-10 && worst_map <= 1e-10 && worst_conj <= 1e-10,
        format!("time change {worst_time:.1e}, control maps {worst_map:.1e}, conjugacy {worst_conj:.1e}"),
    ))
}

pub fn kl_machinery() -> Result<(bool, String)> {
    let beta = KlFunction::exponential(2.0, 0.5);
    let strips = strip_radii(&beta, -2, 2)?;
    let exact_radii = strips.radii() == [4.0, 2.0, 1.0, 0.5, 0.25];
    let wide = strip_radii(&beta, -6, 14)?;
    let dwell = descent_times(&beta, &wide, 100.0)?;
    let worst_dwell = dwell
        .times
        .iter()
        .map(|t| (t - 2.0 * 4f64.ln()).abs())
        .fold(0.0, f64::max);
    let b = piecewise_b(&wide, &dwell, 20.0)?;
    let maj = kl_majorant(&b)?;
    let mut checked = 0;
    let mut dominated = true;
    for r in log_grid(1e-3, 30.0, 60) {
        for t in linear_grid(0.0, 40.0, 40) {
            if let Ok(v) = b.eval(r, t) {
                dominated &= maj.eval(r, t) >= v;
                checked += 1;
            }
        }
    }
    let (rg, tg) = (log_grid(1e-3, 1e3, 40), linear_grid(0.0, 50.0, 40));
    let clean = kl_check(&KlFunction::exponential(1.0, 0.5), &rg, &tg).is_clean();
    let flagged = kl_check(&KlFunction::new(|r, _| r), &rg, &tg).has(KlViolationKind::NotDecreasingInT);
    Ok((
        exact_radii && worst_dwell <= 1e-8 && dominated && checked >= 1000 && clean && flagged,
        format!(
            "radii exact: {exact_radii}, dwell error {worst_dwell:.1e}, majorant checked at {checked} points, kl_check clean/flagged: {clean}/{flagged}"
        ),
    ))
}

const CERTIFY_CONFIG: &str = r#"{
    "system": "cubic-damped",
    "seed": 3,
    "feedback": {"u": ["2"]},
    "beta": "R*exp(-t/2)",
    "partition": {"delta": "ln(phi)"},
    "certify": {"pairs": [[2, 0.1]], "seeds_per_pair": 4, "partitions_per_seed": 2}
}"#;

pub fn negative_certification(out: &Path) -> Result<(bool, String)> {
    let cfg = RunConfig::from_json_str(CERTIFY_CONFIG, &[])?;
    let o = cmd_certify_stab(&cfg, &out.join("certify_constant"))?;
    Ok((o.code == EXIT_VIOLATIONS, format!("exit {}: {}", o.code, o.summary)))
}

const SIMULATE_CONFIG: &str = r#"{
    "system": "cubic-damped",
    "feedback": {"u": ["2/x1^2"]},
    "partition": {"delta": "ln(phi)", "horizon": 10},
    "simulate": {"z": [1.0]},
    "beta": "R*exp(-t/2)"
}"#;

pub fn determinism(out: &Path) -> Result<(bool, String)> {
    let mut same = true;
    let sim = RunConfig::from_json_str(SIMULATE_CONFIG, &[])?;
    let cert = RunConfig::from_json_str(CERTIFY_CONFIG, &["feedback.u=[\"2/x1^2\"]".into()])?;
    for (run, file) in [("a", ""), ("b", "")] {
        let _ = file;
        cmd_simulate(&sim, &out.join(format!("determinism_{run}")), true)?;
        cmd_certify_stab(&cert, &out.join(format!("determinism_{run}")))?;
    }
    for f in ["trajectory.csv", "trajectory.svg", "certify_report.json"] {
        let a = std::fs::read(out.join("determinism_a").join(f))?;
        let b = std::fs::read(out.join("determinism_b").join(f))?;
        same &= a == b;
    }
    Ok((same, "trajectory.csv, trajectory.svg and certify_report.json identical across two runs".into()))
}

/// Runs every check; scratch outputs go below `out`.
pub fn run_all(out: &Path) -> Vec<CheckResult> {
    vec![
        check(1, "bounded-control floor", bounded_control_floor),
        check(2, "sampled stabilization", sampled_stabilization),
        check(3, "impulsive jump", impulsive_jump),
        check(4, "CLF certification", || clf_certification(out)),
        check(5, "Hamiltonian equivalence", hamiltonian_equivalence),
        check(6, "synthesis pipeline", synthesis_pipeline),
        check(7, "transform round trips", transform_round_trips),
        check(8, "KL machinery", kl_machinery),
        check(9, "negative certification", || negative_certification(out)),
        check(10, "determinism", || determinism(out)),
    ]
}
