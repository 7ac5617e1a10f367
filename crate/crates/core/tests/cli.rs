//! End-to-end runs of the `clfstab` binary.

use std::path::Path;
use std::process::{Command, Output};

fn clfstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clfstab")).args(args).output().expect("spawn clfstab")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SIMULATE: &str = r#"{
    "system": "cubic-damped",
    "feedback": {"u": ["2/x1^2"]},
    "partition": {"delta": "ln(phi)", "horizon": 5},
    "simulate": {"z": [2.0]},
    "beta": "R*exp(-t/2)"
}"#;

#[test]
fn simulate_writes_trajectory_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIMULATE);
    let out = dir.path().join("out");
    let o = clfstab(&["simulate", "--config", &cfg, "--output", out.to_str().unwrap(), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,"));
    // z = 2 at t = 0, ten full steps, then the horizon node; the status comment closes the file
    assert_eq!(lines.clone().filter(|l| !l.starts_with('#')).count(), 12);
    assert_eq!(lines.last().unwrap(), "# status: HorizonEnd");
    let svg = std::fs::read_to_string(out.join("trajectory.svg")).unwrap();
    assert!(svg.contains("<polyline"));
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIMULATE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    clfstab(&["simulate", "--config", &cfg, "--output", a.to_str().unwrap()]);
    let o = clfstab(&["simulate", "--config", &cfg, "--set", "simulate.z=[-2.0]", "--output", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (ca, cb) = (
        std::fs::read_to_string(a.join("trajectory.csv")).unwrap(),
        std::fs::read_to_string(b.join("trajectory.csv")).unwrap(),
    );
    assert_ne!(ca, cb);
    assert!(cb.lines().nth(1).unwrap().contains("-2"));
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "bad.json", r#"{"system": "cubic-damped", "colour": 1}"#);
    let no_system = write(dir.path(), "none.json", r#"{"system": "no-such-system", "simulate": {"z": [1]}}"#);
    let bad_expr = write(dir.path(), "expr.json", &SIMULATE.replace("2/x1^2", "2/y^2"));
    let out = dir.path().join("out");
    for args in [
        vec!["simulate", "--config", unknown.as_str()],
        vec!["simulate", "--config", no_system.as_str()],
        vec!["simulate", "--config", bad_expr.as_str()],
        vec!["simulate"],
        vec!["frobnicate"],
    ] {
        let mut full = args.clone();
        full.extend(["--output", out.to_str().unwrap()]);
        let o = clfstab(&full);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    // nothing was computed
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn synthesize_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "syn.json",
        r#"{
            "system": "cubic-damped",
            "clf": {"W": "abs(x1)", "p": ["signum(x1)"], "gamma": "r^3/(2*(2+r^2))"},
            "synthesize": {"N": "r^2/(2+r^2)", "grid": {"from": 0.5, "to": 4, "count": 8}}
        }"#,
    );
    let out = dir.path().join("out");
    let o = clfstab(&["synthesize", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("feedback_table.csv")).unwrap();
    let mut rows = table.lines();
    assert_eq!(rows.next().unwrap(), "x_1,w0,w_1,u_1,margin");
    for row in rows {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        let exact = 2.0 / (v[0] * v[0]);
        assert!((v[3] - exact).abs() <= 0.05 * exact, "{row}");
        // margin = <p, F> + gamma(W), negative when W strictly decreases
        assert!(v[4] < 0.0);
    }
}

#[test]
fn example_command_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = clfstab(&["example", "--output", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS [")).count(), 10);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("example_report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 10);
}

#[test]
fn help_exits_zero() {
    let o = clfstab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("certify-stab"));
}
