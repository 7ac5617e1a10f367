//! Command-line front end.
//!
//! Exit codes: 0 success or certified, 1 usage or configuration error, 2
//! verification violations, 3 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::clf::{
    decrease_check, level_points, n_curve, project_feedback, strictly_decreasing, synthesize_candidate, AnnulusRegion,
    ControlGrid, DecreaseViolation, NPoint,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::gac::certify_sample_stabilizability;
use crate::kl::linear_grid;
use crate::suite;
use crate::svg::{line_plot, Series};
use crate::system::norm;
use crate::trajectory::Status;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "clfstab", version, about = "Sample-and-hold stabilization and CLF certification with unbounded controls")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a config entry by dotted path, e.g. `partition.horizon=20`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output directory (default: `output.dir` from the config, else `.`).
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Sample-and-hold simulation; writes trajectory.csv.
    Simulate,
    /// Decrease-condition check and N estimate; writes clf_report.json.
    VerifyClf,
    /// Feedback synthesis on a grid of states; writes feedback_table.csv.
    Synthesize,
    /// Empirical sample-stabilizability check; writes certify_report.json.
    CertifyStab,
    /// Runs the built-in acceptance checks on the cubic-damped system.
    Example,
}

/// Exit code and one-line summary of a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
}

impl Outcome {
    fn new(code: i32, summary: impl Into<String>) -> Self {
        Outcome {
            code,
            summary: summary.into(),
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Expression(_)
        | Error::Precondition(_)
        | Error::Domain(_)
        | Error::Dimension { .. }
        | Error::ControlSet(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, svg: bool) -> Result<Outcome> {
    let rec = cfg.run_simulation()?;
    let fail_on_blowup = cfg.simulate.as_ref().is_some_and(|s| s.fail_on_blowup);
    write_file(out, "trajectory.csv", rec.to_csv_string().as_bytes())?;
    if svg || cfg.output.svg {
        let mut series = vec![Series {
            label: "d(x(t))",
            color: "black",
            points: rec.times.iter().copied().zip(rec.distances.iter().copied()).collect(),
        }];
        if cfg.beta.is_some() {
            let beta = cfg.build_beta()?;
            let d0 = rec.distances[0];
            series.push(Series {
                label: "beta(d(z), t)",
                color: "red",
                points: linear_grid(0.0, rec.final_time(), 200)
                    .into_iter()
                    .map(|t| (t, beta.eval(d0, t)))
                    .collect(),
            });
        }
        write_file(out, "trajectory.svg", line_plot("distance to target", &series, true).as_bytes())?;
    }
    let summary = format!(
        "{} steps, {}, final d = {}",
        rec.len(),
        rec.status.describe(),
        rec.final_distance()
    );
    let code = match rec.status {
        Status::BlowUp(_) if fail_on_blowup => EXIT_RUNTIME,
        _ => EXIT_OK,
    };
    Ok(Outcome::new(code, summary))
}

#[derive(Debug, Serialize)]
struct ClfReport {
    system: String,
    region: AnnulusRegion,
    mesh: f64,
    directions: usize,
    samples_checked: usize,
    certified: bool,
    worst_margin: Option<f64>,
    violations: Vec<DecreaseViolation>,
    #[serde(rename = "N_curve")]
    n_curve: Option<Vec<NPoint>>,
    #[serde(rename = "N_error", skip_serializing_if = "Option::is_none")]
    n_error: Option<String>,
}

pub fn cmd_verify_clf(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let cand = cfg.build_clf(&sys)?;
    let spec = cfg.clf.as_ref().expect("checked by build_clf");
    let reg = spec
        .region
        .ok_or_else(|| Error::Config("verify-clf needs \"clf.region\"".into()))?;
    let region = AnnulusRegion {
        r_min: reg.r_min,
        r_max: reg.r_max,
        count: reg.count,
        seed: cfg.seed,
    };
    let samples = region.samples(sys.target(), sys.state_dim())?;
    let grid = ControlGrid::simplex(&sys, spec.mesh, spec.directions)?;
    let rep = decrease_check(&sys, &cand, &samples, &grid)?;
    let certified = rep.certified();
    let (mut n_points, mut n_error) = (None, None);
    if let (true, Some(radii)) = (certified, &spec.n_radii) {
        let mut levels = radii.clone();
        levels.push(1.0);
        let mut mesh = samples.clone();
        mesh.extend(level_points(&cand, &samples, &levels, 64));
        match n_curve(&sys, &cand, radii, &grid, &mesh) {
            Ok(c) => n_points = Some(c.points),
            Err(e) => n_error = Some(e.to_string()),
        }
    }
    let report = ClfReport {
        system: sys.name.clone(),
        region,
        mesh: spec.mesh,
        directions: spec.directions,
        samples_checked: rep.samples_checked,
        certified,
        worst_margin: rep.worst_margin,
        violations: rep.violations,
        n_curve: n_points,
        n_error,
    };
    write_file(out, "clf_report.json", &to_json(&report)?)?;
    let summary = format!(
        "{} samples, {} violations, worst margin {}",
        report.samples_checked,
        report.violations.len(),
        report.worst_margin.map_or("n/a".to_string(), |m| m.to_string())
    );
    let code = if certified && report.n_error.is_none() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    };
    Ok(Outcome::new(code, summary))
}

pub fn cmd_synthesize(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let cand = cfg.build_clf(&sys)?;
    let n_func = cfg.build_n()?;
    let spec = cfg.synthesize.as_ref().expect("checked by build_n");
    let (n, m) = (sys.state_dim(), sys.control_dim());
    let points: Vec<Vec<f64>> = match (&spec.points, &spec.grid) {
        (Some(p), _) => p.clone(),
        (None, Some(g)) if n == 1 => linear_grid(g.from, g.to, g.count).into_iter().map(|x| vec![x]).collect(),
        (None, Some(_)) => return Err(Error::Config("\"grid\" needs a one-dimensional state; use \"points\"".into())),
        (None, None) => return Err(Error::Config("synthesize needs \"points\" or \"grid\"".into())),
    };
    if points.is_empty() {
        return Err(Error::Config("no synthesis points".into()));
    }
    let g = sys.growth();
    let mut csv = String::new();
    let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    header.push("w0".into());
    header.extend((1..=m).map(|i| format!("w_{i}")));
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.push("margin".into());
    csv.push_str(&header.join(","));
    csv.push('\n');
    let mut failures = 0;
    for x in &points {
        let s = synthesize_candidate(&sys, &cand, &*n_func, x, spec.mesh, spec.directions)?;
        if !strictly_decreasing(s.value, s.gamma_w) {
            failures += 1;
        }
        let u = if norm(s.control.w()) == 0.0 {
            vec![0.0; m]
        } else {
            project_feedback(&g, &s.control)?
        };
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.push(s.control.w0().to_string());
        row.extend(s.control.w().iter().map(f64::to_string));
        row.extend(u.iter().map(f64::to_string));
        row.push(s.margin.to_string());
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_file(out, "feedback_table.csv", csv.as_bytes())?;
    let code = if failures == 0 { EXIT_OK } else { EXIT_VIOLATIONS };
    Ok(Outcome::new(
        code,
        format!("{} points, {failures} without decrease", points.len()),
    ))
}

pub fn cmd_certify_stab(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let k = cfg.build_feedback(&sys)?;
    let beta = cfg.build_beta()?;
    let delta = cfg.build_delta()?;
    let opts = cfg.certify_options()?;
    let pairs: Vec<(f64, f64)> = cfg
        .certify
        .as_ref()
        .expect("checked by certify_options")
        .pairs
        .iter()
        .map(|p| (p[0], p[1]))
        .collect();
    let sim = cfg.sim_options()?;
    let rep = certify_sample_stabilizability(&sys, cfg.form(), &k, &beta, &pairs, &*delta, &sim, &opts)?;
    write_file(out, "certify_report.json", &to_json(&rep)?)?;
    let total: usize = rep.pairs.iter().map(|p| p.violation_count).sum();
    let code = if rep.passed() { EXIT_OK } else { EXIT_VIOLATIONS };
    Ok(Outcome::new(
        code,
        format!("{} pairs, {total} violations, verdict {}", rep.pairs.len(), rep.verdict),
    ))
}

pub fn cmd_example(out: &Path) -> Result<Outcome> {
    let results = suite::run_all(out);
    for r in &results {
        println!("{}", r.line());
    }
    write_file(out, "example_report.json", &to_json(&results)?)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    let code = if failed == 0 { EXIT_OK } else { EXIT_VIOLATIONS };
    Ok(Outcome::new(code, format!("{} checks, {failed} failed", results.len())))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    if let Command::Example = cli.command {
        let out = cli.output.clone().unwrap_or_else(|| PathBuf::from("."));
        return cmd_example(&out);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let cfg = RunConfig::load(path, &cli.set)?;
    let out = cli
        .output
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg, &out, cli.svg),
        Command::VerifyClf => cmd_verify_clf(&cfg, &out),
        Command::Synthesize => cmd_synthesize(&cfg, &out),
        Command::CertifyStab => cmd_certify_stab(&cfg, &out),
        Command::Example => unreachable!("handled above"),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let work = || match dispatch(&cli) {
        Ok(o) => {
            println!("{}", o.summary);
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be positive");
            EXIT_CONFIG
        }
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_RUNTIME
            }
        },
        None => work(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> RunConfig {
        RunConfig::from_json_str(s, &[]).unwrap()
    }

    #[test]
    fn simulate_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(r#"{"system": "cubic-damped", "feedback": {"u": ["0"]},
            "partition": {"delta": 0.5, "horizon": 1}, "simulate": {"z": [1.0]}, "beta": "R*exp(-t/2)"}"#);
        let o = cmd_simulate(&c, dir.path(), true).unwrap();
        assert_eq!(o.code, EXIT_OK);
        let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("t,x_1,u_1,d_to_target\n"));
        let last = csv.lines().rfind(|l| !l.starts_with('#')).unwrap();
        let x: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert!((x - 1f64.exp()).abs() < 1e-6);
        assert!(dir.path().join("trajectory.svg").exists());
    }

    #[test]
    fn synthesize_degenerate_grid_and_forced_n() {
        let dir = tempfile::tempdir().unwrap();
        let base = r#"{"system": "cubic-damped",
            "clf": {"W": "abs(x1)", "p": ["signum(x1)"], "gamma": "r^3/(2*(2+r^2))"},
            "synthesize": {"N": "r^2/(2+r^2)", "grid": {"from": 1, "to": 1, "count": 1}}}"#;
        let o = cmd_synthesize(&cfg(base), dir.path()).unwrap();
        assert_eq!(o.code, EXIT_OK);
        let csv = fs::read_to_string(dir.path().join("feedback_table.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "x_1,w0,w_1,u_1,margin");
        let u: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
        assert!((u - 2.0).abs() < 1e-12);

        let forced = base.replace("\"N\": \"r^2/(2+r^2)\"", "\"N\": 1");
        let o = cmd_synthesize(&cfg(&forced), dir.path()).unwrap();
        assert_eq!(o.code, EXIT_VIOLATIONS);
        let csv = fs::read_to_string(dir.path().join("feedback_table.csv")).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[3], "0");
        assert!(row[4].parse::<f64>().unwrap() > 0.0);
    }

    #[test]
    fn exit_codes_from_run() {
        assert_eq!(run(["clfstab", "simulate"]), EXIT_CONFIG);
        assert_eq!(run(["clfstab", "bogus"]), EXIT_CONFIG);
        assert_eq!(run(["clfstab", "--help"]), EXIT_OK);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"system": "cubic-damped", "feedback": {"u": ["2"]}, "beta": "R*exp(-t/2)",
                "partition": {"delta": 0.4}, "certify": {"pairs": [[1, 2]]}}"#,
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let o = dir.path().to_str().unwrap();
        assert_eq!(run(["clfstab", "certify-stab", "--config", p, "--output", o]), EXIT_CONFIG);
        assert_eq!(
            run(["clfstab", "certify-stab", "--config", p, "--output", o, "--set", "certify.pairs=[[2,0.1]]", "--jobs", "2"]),
            EXIT_VIOLATIONS
        );
        assert_eq!(run(["clfstab", "certify-stab", "--config", p, "--set", "certify.bogus=1"]), EXIT_CONFIG);
    }
}
