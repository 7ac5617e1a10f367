//! Acceptance gate on the cubic-damped system `x' = x - x^3 u`.
//!
//! Runs without the libtest harness so that every criterion prints exactly
//! one PASS/FAIL line; the process fails if any criterion fails. Reference
//! values are computed here from closed forms, independent of the crate's
//! own fixtures.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use clfstab::clf::{hamiltonian_extended, hamiltonian_original, project_feedback, synthesize_feedback_extended, ControlGrid, LyapunovCandidate};
use clfstab::example::cubic_damped;
use clfstab::gac::{descent_times, kl_majorant, piecewise_b, strip_radii};
use clfstab::kl::{kl_check, KlViolationKind};
use clfstab::transforms::{
    control_to_extended, extended_dynamics, extended_to_control, rescaled_dynamics, time_change_backward,
    time_change_forward,
};
use clfstab::{
    simulate_open_loop, simulate_sample_hold, uniform_partition, ControlSignal, ControlValue, DynamicsForm,
    ExtendedControl, Feedback, KlFunction, SimOptions, Status, TrajectoryRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `x(t)` under the constant control `m`: `x^-2` solves `y' = 2m - 2y`.
fn oracle_constant(z: f64, m: f64, t: f64) -> f64 {
    let y = m + (1.0 / (z * z) - m) * (-2.0 * t).exp();
    z.signum() / y.sqrt()
}

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn lin(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn geo(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn c1_bounded_control_floor() -> Outcome {
    let sys = cubic_damped();
    let start = Instant::now();
    let p = uniform_partition(0.2, 20.0)?;
    let sig = ControlSignal::constant(p, ControlValue::Original(vec![2.0]));
    let rec = simulate_open_loop(&sys, DynamicsForm::Original, &sig, &[1.0], &SimOptions::default().with_horizon(20.0))?;
    let elapsed = start.elapsed().as_secs_f64();
    let nodes = rec.node_indices();
    let mut worst: f64 = 0.0;
    for &k in &nodes {
        worst = worst.max((rec.states[k][0] - oracle_constant(1.0, 2.0, rec.times[k])).abs());
    }
    let floor = (rec.final_state()[0] - 1.0 / 2f64.sqrt()).abs();
    Ok((
        floor <= 1e-4 && worst <= 1e-6 && nodes.len() >= 100 && elapsed < 1.0,
        format!("|x(20) - 0.707107| = {floor:.1e}; {} checkpoints, max error {worst:.1e}; {elapsed:.3}s", nodes.len()),
    ))
}

fn c2_sampled_stabilization() -> Outcome {
    let sys = cubic_damped();
    let delta = golden().ln();
    assert!((delta - 0.481212).abs() < 1e-6);
    let bound = (-delta / 2.0).exp() + 1e-6;
    let k = Feedback::original(|x: &[f64]| Ok(vec![2.0 / (x[0] * x[0])]));
    let p = uniform_partition(delta, 10.0)?;
    let (mut ok, mut worst_ratio, mut slowest) = (true, 0.0f64, 0.0f64);
    for z in [0.1, -0.1, 1.0, -1.0, 5.0, -5.0] {
        let start = Instant::now();
        let rec = simulate_sample_hold(&sys, DynamicsForm::Original, &k, &p, &[z], &SimOptions::default())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let nodes = rec.node_indices();
        ok &= nodes.len() >= 21;
        for &n in &nodes {
            ok &= rec.states[n][0].abs() <= z.abs() * (-rec.times[n] / 2.0).exp() + 1e-6;
        }
        for w in nodes.windows(2) {
            let len = rec.times[w[1]] - rec.times[w[0]];
            let ratio = rec.states[w[1]][0].abs() / rec.states[w[0]][0].abs();
            // the horizon truncates the final interval; its bound uses its own length
            ok &= ratio <= (-len / 2.0).exp() + 1e-6;
            if (len - delta).abs() < 1e-9 {
                worst_ratio = worst_ratio.max(ratio);
            }
        }
    }
    ok &= worst_ratio <= bound && slowest < 1.0;
    Ok((ok, format!("worst full-interval ratio {worst_ratio:.6} <= {bound:.6}; slowest run {slowest:.3}s")))
}

fn c3_impulsive_jump() -> Outcome {
    let sys = cubic_damped();
    let k = Feedback::constant_extended(ExtendedControl::new(0.0, vec![1.0])?);
    let p = uniform_partition(0.1, 10.0)?;
    let rec = simulate_sample_hold(&sys, DynamicsForm::Extended, &k, &p, &[1.0], &SimOptions::default().with_horizon(10.0))?;
    let mut worst: f64 = 0.0;
    for (s, x) in rec.times.iter().zip(&rec.states) {
        worst = worst.max((x[0] - 1.0 / (2.0 * s + 1.0).sqrt()).abs());
    }
    let covered = (rec.times.last().copied().unwrap_or(0.0) - 10.0).abs() < 1e-12;
    Ok((worst <= 1e-6 && covered, format!("max |x(s) - 1/sqrt(2s+1)| = {worst:.1e} on [0, 10]")))
}

fn run_cli(args: &[&str]) -> Result<i32, Box<dyn std::error::Error>> {
    let st = Command::new(env!("CARGO_BIN_EXE_clfstab")).args(args).output()?;
    Ok(st.status.code().unwrap_or(-1))
}

fn write_config(dir: &Path, name: &str, body: &str) -> Result<String, Box<dyn std::error::Error>> {
    let p = dir.join(name);
    std::fs::write(&p, body)?;
    Ok(p.to_string_lossy().into_owned())
}

const CLF: &str = r#"{
    "system": "cubic-damped",
    "clf": {
        "W": "abs(x1)", "p": ["signum(x1)"], "gamma": "r^3/(2*(2+r^2))",
        "region": {"r_min": 0.01, "r_max": 100, "count": 200}
    }
}"#;

fn c4_clf_certification(dir: &Path) -> Outcome {
    let cfg = write_config(dir, "clf.json", CLF)?;
    let good_dir = dir.join("clf_good");
    let bad_dir = dir.join("clf_bad");
    let good = run_cli(&["verify-clf", "--config", &cfg, "--output", good_dir.to_str().unwrap()])?;
    let bad = run_cli(&["verify-clf", "--config", &cfg, "--set", "clf.gamma=r^3", "--output", bad_dir.to_str().unwrap()])?;
    let g: serde_json::Value = serde_json::from_slice(&std::fs::read(good_dir.join("clf_report.json"))?)?;
    let b: serde_json::Value = serde_json::from_slice(&std::fs::read(bad_dir.join("clf_report.json"))?)?;
    let n = b["samples_checked"].as_u64().unwrap_or(0) as usize;
    let flagged = b["violations"].as_array().map_or(0, |v| v.len());
    let zero = g["violations"].as_array().is_some_and(|v| v.is_empty());
    Ok((
        good == 0 && zero && bad == 2 && n > 0 && flagged == n,
        format!("gamma r^3/(2(2+r^2)) exit {good}; r^3 exit {bad} with {flagged}/{n} samples flagged"),
    ))
}

fn c5_hamiltonian_equivalence() -> Outcome {
    let sys = cubic_damped();
    let mesh = 1e-3;
    // F(1, w0, w) = w0 - w, minimized at the impulsive vertex
    let he = hamiltonian_extended(&sys, &[1.0], &[1.0], &ControlGrid::simplex(&sys, mesh, 2)?)?;
    let mut ok = (he + 1.0).abs() <= mesh;
    let mut detail = format!("H_ext = {he}");
    for r_max in [10.0, 1e2, 1e3] {
        let ho = hamiltonian_original(&sys, &[1.0], &[1.0], &ControlGrid::magnitudes(&sys, r_max, 200, 2)?)?;
        // min over |u| <= R of (1 - u)/(1 + u)
        let exact = (1.0 - r_max) / (1.0 + r_max);
        let gap = (ho - he).abs();
        ok &= gap <= 2.0 / (1.0 + r_max) + 1e-3 && (ho - exact).abs() <= 1e-9;
        detail.push_str(&format!("; R_max {r_max}: gap {gap:.4e}"));
    }
    Ok((ok, detail))
}

fn c6_synthesis() -> Outcome {
    let sys = cubic_damped();
    let g = sys.growth();
    let cand = LyapunovCandidate::new(
        |x: &[f64]| x[0].abs(),
        |x: &[f64]| vec![vec![x[0].signum()]],
        |r: f64| r.powi(3) / (2.0 * (2.0 + r * r)),
    );
    // N(r) = r^2 / (2 + r^2)
    let n = |r: f64| r * r / (2.0 + r * r);
    let (mut worst, mut trip) = (0.0f64, 0.0f64);
    for x in lin(0.1, 10.0, 100) {
        let exact = 2.0 / (x * x);
        let wc = synthesize_feedback_extended(&sys, &cand, &n, &[x], 1e-3, 2)?;
        let u = project_feedback(&g, &wc)?[0];
        worst = worst.max((u - exact).abs() / exact);
        let lifted = control_to_extended(&g, &[exact])?;
        trip = trip.max((project_feedback(&g, &lifted)?[0] - exact).abs() / exact);
    }
    Ok((worst <= 0.05 && trip <= 1e-10, format!("max relative error {worst:.2e}; project-lift round trip {trip:.1e}")))
}

fn random_record(rng: &mut ChaCha8Rng) -> TrajectoryRecord {
    let n = rng.random_range(2..20);
    let mut times = vec![0.0];
    for _ in 1..n {
        let last = *times.last().unwrap();
        times.push(last + rng.random_range(0.01..2.0));
    }
    TrajectoryRecord {
        states: times.iter().map(|&t| vec![t]).collect(),
        distances: times.clone(),
        is_node: vec![true; n],
        controls: (1..n).map(|_| ControlValue::Original(vec![rng.random_range(0.0..50.0)])).collect(),
        times,
        status: Status::HorizonEnd,
        frozen_point: None,
    }
}

fn c7_round_trips() -> Outcome {
    let sys = cubic_damped();
    let g = sys.growth();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut time_err, mut fwd_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let rec = random_record(&mut rng);
        let fwd = time_change_forward(&rec, &g)?;
        // s_k = sum over intervals of (1 + |u|) * length
        let mut s = 0.0;
        for k in 0..rec.times.len() {
            if k > 0 {
                let u = match &rec.controls[k - 1] {
                    ControlValue::Original(u) => u[0].abs(),
                    _ => unreachable!(),
                };
                s += (1.0 + u) * (rec.times[k] - rec.times[k - 1]);
            }
            fwd_err = fwd_err.max((fwd.times[k] - s).abs() / s.max(1.0));
        }
        let back = time_change_backward(&fwd, &g)?;
        for (a, b) in rec.times.iter().zip(&back.times) {
            time_err = time_err.max((a - b).abs() / a.max(1.0));
        }
    }
    let (mut map_err, mut conj_err) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let x: f64 = rng.random_range(-10.0..10.0);
        let u: f64 = 10f64.powf(rng.random_range(-4.0..4.0));
        let w0: f64 = rng.random_range(1e-6..=1.0);
        let wc = ExtendedControl::new(w0, vec![1.0 - w0])?;
        let back = control_to_extended(&g, &extended_to_control(&g, &wc)?)?;
        map_err = map_err.max((back.w0() - w0).abs()).max((back.w()[0] - (1.0 - w0)).abs());
        let lifted = control_to_extended(&g, &[u])?;
        map_err = map_err.max((lifted.w0() - 1.0 / (1.0 + u)).abs());
        let a = rescaled_dynamics(&sys, &[x], &[u])?[0];
        let b = extended_dynamics(&sys, &[x], &lifted)?[0];
        let exact = (x - x.powi(3) * u) / (1.0 + u);
        conj_err = conj_err.max((a - b).abs().max((a - exact).abs()) / exact.abs().max(1.0));
    }
    Ok((
        time_err <= 1e-10 && fwd_err <= 1e-10 && map_err <= 1e-10 && conj_err <= 1e-10,
        format!("time change {time_err:.1e} (forward {fwd_err:.1e}); control maps {map_err:.1e}; conjugacy {conj_err:.1e}"),
    ))
}

fn c8_kl_machinery() -> Outcome {
    let beta = KlFunction::exponential(2.0, 0.5);
    let strips = strip_radii(&beta, -2, 2)?;
    let doubling = strips.radii() == [4.0, 2.0, 1.0, 0.5, 0.25];
    let wide = strip_radii(&beta, -6, 14)?;
    let dwell = descent_times(&beta, &wide, 100.0)?;
    // 2 r e^{-t/2} = r / 2
    let expected = 2.0 * 4f64.ln();
    let dwell_err = dwell.times.iter().map(|t| (t - expected).abs()).fold(0.0, f64::max);
    let b = piecewise_b(&wide, &dwell, 20.0)?;
    let maj = kl_majorant(&b)?;
    let (mut checked, mut dominated) = (0usize, true);
    for r in geo(1e-3, 30.0, 60) {
        for t in lin(0.0, 40.0, 40) {
            if let Ok(v) = b.eval(r, t) {
                dominated &= maj.eval(r, t) >= v;
                checked += 1;
            }
        }
    }
    let (rg, tg) = (geo(1e-3, 1e3, 40), lin(0.0, 50.0, 40));
    let clean = kl_check(&KlFunction::new(|r, t| r * (-t / 2.0).exp()), &rg, &tg).is_clean();
    let flagged = kl_check(&KlFunction::new(|r, _| r), &rg, &tg).has(KlViolationKind::NotDecreasingInT);
    Ok((
        doubling && dwell_err <= 1e-8 && dominated && checked >= 1000 && clean && flagged,
        format!(
            "doubling radii {doubling}; dwell error {dwell_err:.1e}; majorant dominates at {checked} points: {dominated}; kl_check clean {clean}, flags constant-in-t {flagged}"
        ),
    ))
}

const CERTIFY: &str = r#"{
    "system": "cubic-damped",
    "seed": 3,
    "feedback": {"u": ["2"]},
    "beta": "R*exp(-t/2)",
    "partition": {"delta": "ln(phi)"},
    "certify": {"pairs": [[2, 0.1]], "seeds_per_pair": 4, "partitions_per_seed": 2}
}"#;

fn c9_negative_certification(dir: &Path) -> Outcome {
    let cfg = write_config(dir, "certify.json", CERTIFY)?;
    let out = dir.join("certify");
    let code = run_cli(&["certify-stab", "--config", &cfg, "--output", out.to_str().unwrap()])?;
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("certify_report.json"))?)?;
    let count = rep["pairs"][0]["violation_count"].as_u64().unwrap_or(0);
    Ok((code == 2 && count > 0, format!("exit {code}; {count} violations for (R, r) = (2, 0.1)")))
}

const SIMULATE: &str = r#"{
    "system": "cubic-damped",
    "seed": 5,
    "feedback": {"u": ["2/x1^2"]},
    "beta": "R*exp(-t/2)",
    "partition": {"delta": "ln(phi)", "horizon": 10},
    "simulate": {"z": [1.0]},
    "certify": {"pairs": [[2, 0.1], [8, 0.5]], "seeds_per_pair": 4, "partitions_per_seed": 2}
}"#;

fn c10_determinism(dir: &Path) -> Outcome {
    let cfg = write_config(dir, "det.json", SIMULATE)?;
    let mut outputs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "4")] {
        let out = dir.join(format!("det_{run}"));
        let o = out.to_str().unwrap();
        run_cli(&["simulate", "--config", &cfg, "--output", o, "--svg"])?;
        run_cli(&["certify-stab", "--config", &cfg, "--output", o, "--jobs", jobs])?;
        run_cli(&["verify-clf", "--config", &write_config(dir, "det_clf.json", CLF)?, "--output", o])?;
        let mut files = Vec::new();
        for f in ["trajectory.csv", "trajectory.svg", "certify_report.json", "clf_report.json"] {
            files.push(std::fs::read(out.join(f))?);
        }
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1];
    Ok((same, "4 output files byte-identical across two runs (1 and 4 worker threads)".into()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("bounded-control floor", Box::new(c1_bounded_control_floor)),
        ("sampled stabilization", Box::new(c2_sampled_stabilization)),
        ("impulsive jump", Box::new(c3_impulsive_jump)),
        ("CLF certification", Box::new(|| c4_clf_certification(dir))),
        ("Hamiltonian equivalence", Box::new(c5_hamiltonian_equivalence)),
        ("synthesis pipeline", Box::new(c6_synthesis)),
        ("transform round trips", Box::new(c7_round_trips)),
        ("KL machinery", Box::new(c8_kl_machinery)),
        ("negative certification", Box::new(|| c9_negative_certification(dir))),
        ("determinism", Box::new(|| c10_determinism(dir))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!("{} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
