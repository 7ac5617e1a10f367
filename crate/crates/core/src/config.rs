//! JSON run configuration for the command-line front end.
//!
//! Every block rejects unknown keys. Expressions use the syntax of
//! [`crate::expr`]; state variables are `x1..xn`, unit control directions
//! `e1..em`, and the remaining variable names are fixed per field (`r` for
//! rates, `R, t` for descent rates, `R, r` for sampling steps).
//!
//! ```json
//! {
//!   "system": "cubic-damped",
//!   "mode": "original",
//!   "feedback": { "u": ["2/x1^2"] },
//!   "partition": { "delta": "ln(phi)", "horizon": 10 },
//!   "simulate": { "z": [1.0] },
//!   "beta": "R*exp(-t/2)"
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clf::{feedback_from_extended, feedback_to_extended, LyapunovCandidate};
use crate::error::{Error, Result};
use crate::example::{self, cubic_damped};
use crate::expr::{indexed_names, Expression};
use crate::gac::CertifyOptions;
use crate::kl::KlFunction;
use crate::sampling::{simulate_sample_hold, uniform_partition, DynamicsForm, Feedback, SimOptions};
use crate::system::{ControlCone, ControlPolynomialSystem, Target, Term};
use crate::trajectory::{Partition, TrajectoryRecord};
use crate::transforms::ExtendedControl;

/// Names of the built-in systems.
pub const CATALOG: &[&str] = &[example::CATALOG_NAME];

pub fn catalog(name: &str) -> Option<ControlPolynomialSystem> {
    match name {
        example::CATALOG_NAME => Some(cubic_damped()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionSpec>,
    /// Descent rate as an expression in `R` and `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clf: Option<ClfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesize: Option<SynthesizeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Catalog(String),
    Inline(InlineSystem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub d: u32,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub cone: ConeSpec,
    #[serde(default)]
    pub target: TargetSpec,
}

/// Degree-`k` coefficient `f_k(x, e)`, one expression per state component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub k: u32,
    pub f: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeSpec {
    #[default]
    Full,
    Nonnegative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpec {
    #[default]
    Point,
    Ball { radius: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Original,
    Rescaled,
    Extended,
}

impl From<Mode> for DynamicsForm {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Original => DynamicsForm::Original,
            Mode::Rescaled => DynamicsForm::Rescaled,
            Mode::Extended => DynamicsForm::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub target_tol: f64,
    pub blowup_norm: f64,
    pub min_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SimOptions::default();
        Tolerances {
            target_tol: s.target_tol,
            blowup_norm: s.blowup_norm,
            min_step: s.min_step,
            abs_tol: s.integrator_abs_tol,
            rel_tol: s.integrator_rel_tol,
        }
    }
}

/// A feedback given in original (`u`) or extended (`w0`, `w`) coordinates;
/// it is converted to the coordinates of the selected mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeedbackSpec {
    Original(OriginalFeedbackSpec),
    Extended(ExtendedFeedbackSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginalFeedbackSpec {
    pub u: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedFeedbackSpec {
    pub w0: String,
    pub w: Vec<String>,
}

/// A number or an expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn eval(&self, vars: &[&str], values: &[f64]) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Expr(s) => Expression::parse(s, vars)?.eval_finite(values),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    /// Uniform step (constant or expression in `R, r` for certification).
    #[serde(default)]
    pub delta: Option<Scalar>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Explicit nodes; overrides `delta`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

fn default_horizon() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub z: Vec<f64>,
    #[serde(default)]
    pub record_substeps: bool,
    #[serde(default)]
    pub fail_on_blowup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClfSpec {
    /// `W` in `x1..xn`.
    #[serde(rename = "W")]
    pub w: String,
    /// Subgradient selection, one expression per state component.
    pub p: Vec<String>,
    /// Decrease rate in `r`.
    pub gamma: String,
    /// Sampling annulus for the decrease check.
    #[serde(default)]
    pub region: Option<RegionSpec>,
    #[serde(default = "default_mesh")]
    pub mesh: f64,
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Radii at which to estimate `N`; omitted means no estimate.
    #[serde(default)]
    pub n_radii: Option<Vec<f64>>,
}

fn default_mesh() -> f64 {
    1e-3
}

fn default_directions() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeSpec {
    /// Lower bound on `w0` as an expression in `r`.
    #[serde(rename = "N")]
    pub n: Scalar,
    /// Evaluation points; for one-dimensional states `grid` may be used instead.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_mesh")]
    pub mesh: f64,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

/// `count` points evenly spaced on `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    pub pairs: Vec<[f64; 2]>,
    /// Sampling step in `R, r`; defaults to `partition.delta`.
    #[serde(default)]
    pub delta: Option<Scalar>,
    #[serde(default)]
    pub seeds_per_pair: Option<usize>,
    #[serde(default)]
    pub partitions_per_seed: Option<usize>,
    #[serde(default)]
    pub horizon_factor: Option<f64>,
    #[serde(default)]
    pub max_time: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub svg: bool,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Sets `root.a.b.c = raw`, creating objects on the way. `raw` is parsed as
/// JSON when possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override {assignment:?} is not KEY=VALUE")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(config_err(format!("bad override key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(config_err(format!("override {key:?}: {part:?} is inside a non-object")));
            }
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("non-empty key")
}

impl RunConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| config_err(e.to_string()))
    }

    pub fn from_json_str(s: &str, overrides: &[String]) -> Result<Self> {
        let mut v: Value = serde_json::from_str(s).map_err(|e| config_err(format!("invalid JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text, overrides)
    }

    pub fn build_system(&self) -> Result<ControlPolynomialSystem> {
        match &self.system {
            SystemSpec::Catalog(name) => catalog(name).ok_or_else(|| {
                config_err(format!("unknown catalog system {name:?} (known: {})", CATALOG.join(", ")))
            }),
            SystemSpec::Inline(s) => build_inline(s),
        }
    }

    pub fn sim_options(&self) -> Result<SimOptions> {
        let t = &self.tolerances;
        let opts = SimOptions {
            target_tol: t.target_tol,
            blowup_norm: t.blowup_norm,
            min_step: t.min_step,
            integrator_abs_tol: t.abs_tol,
            integrator_rel_tol: t.rel_tol,
            horizon: self.partition.as_ref().map_or(default_horizon(), |p| p.horizon),
            record_substeps: self.simulate.as_ref().is_some_and(|s| s.record_substeps),
        };
        opts.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(opts)
    }

    pub fn form(&self) -> DynamicsForm {
        self.mode.into()
    }

    /// The feedback in the coordinates of `mode`.
    pub fn build_feedback(&self, sys: &ControlPolynomialSystem) -> Result<Feedback> {
        let spec = self.feedback.as_ref().ok_or_else(|| config_err("missing \"feedback\" block"))?;
        let (n, m) = (sys.state_dim(), sys.control_dim());
        let xs = indexed_names("x", n);
        let vars: Vec<&str> = xs.iter().map(String::as_str).collect();
        let parse_all = |list: &[String]| -> Result<Vec<Expression>> {
            if list.len() != m {
                return Err(config_err(format!("feedback needs {m} components, got {}", list.len())));
            }
            list.iter().map(|s| Expression::parse(s, &vars)).collect()
        };
        let fb = match spec {
            FeedbackSpec::Original(o) => {
                let es = parse_all(&o.u)?;
                Feedback::original(move |x| es.iter().map(|e| e.eval_finite(x)).collect())
            }
            FeedbackSpec::Extended(e) => {
                let w0 = Expression::parse(&e.w0, &vars)?;
                let ws = parse_all(&e.w)?;
                Feedback::extended(move |x| {
                    let w = ws.iter().map(|e| e.eval_finite(x)).collect::<Result<Vec<_>>>()?;
                    ExtendedControl::new(w0.eval_finite(x)?, w)
                })
            }
        };
        let g = sys.growth();
        match (fb.is_extended(), self.form().wants_extended()) {
            (false, true) => feedback_to_extended(&g, &fb),
            (true, false) => feedback_from_extended(&g, &fb, m),
            _ => Ok(fb),
        }
    }

    pub fn build_beta(&self) -> Result<KlFunction> {
        let src = self.beta.as_ref().ok_or_else(|| config_err("missing \"beta\""))?;
        let e = Expression::parse(src, &["R", "t"])?;
        let label = src.clone();
        Ok(KlFunction::new(move |r, t| e.eval(&[r, t]).unwrap_or(f64::NAN)).with_label(label))
    }

    pub fn build_clf(&self, sys: &ControlPolynomialSystem) -> Result<LyapunovCandidate> {
        let spec = self.clf.as_ref().ok_or_else(|| config_err("missing \"clf\" block"))?;
        let n = sys.state_dim();
        let xs = indexed_names("x", n);
        let vars: Vec<&str> = xs.iter().map(String::as_str).collect();
        let w = Expression::parse(&spec.w, &vars)?;
        if spec.p.len() != n {
            return Err(config_err(format!("\"p\" needs {n} components, got {}", spec.p.len())));
        }
        let p: Vec<Expression> = spec.p.iter().map(|s| Expression::parse(s, &vars)).collect::<Result<_>>()?;
        let gamma = Expression::parse(&spec.gamma, &["r"])?;
        Ok(LyapunovCandidate::new(
            move |x| w.eval(x).unwrap_or(f64::NAN),
            move |x| vec![p.iter().map(|e| e.eval(x).unwrap_or(f64::NAN)).collect()],
            move |r| gamma.eval(&[r]).unwrap_or(f64::NAN),
        ))
    }

    /// `N` for synthesis as a function of `r`.
    pub fn build_n(&self) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        let spec = self.synthesize.as_ref().ok_or_else(|| config_err("missing \"synthesize\" block"))?;
        Ok(match &spec.n {
            Scalar::Number(v) => {
                let v = *v;
                Arc::new(move |_| v)
            }
            Scalar::Expr(s) => {
                let e = Expression::parse(s, &["r"])?;
                Arc::new(move |r| e.eval(&[r]).unwrap_or(f64::NAN))
            }
        })
    }

    /// The sample-and-hold run described by the `simulate` block.
    pub fn run_simulation(&self) -> Result<TrajectoryRecord> {
        let sys = self.build_system()?;
        let spec = self
            .simulate
            .as_ref()
            .ok_or_else(|| Error::Config("missing \"simulate\" block".into()))?;
        let k = self.build_feedback(&sys)?;
        let partition = self.build_partition()?;
        let opts = self.sim_options()?.with_horizon(partition.end());
        simulate_sample_hold(&sys, self.form(), &k, &partition, &spec.z, &opts)
    }

    pub fn build_partition(&self) -> Result<Partition> {
        let p = self.partition.as_ref().ok_or_else(|| config_err("missing \"partition\" block"))?;
        if let Some(times) = &p.times {
            return Partition::new(times.clone()).map_err(|e| config_err(e.to_string()));
        }
        let delta = p
            .delta
            .as_ref()
            .ok_or_else(|| config_err("partition needs \"delta\" or \"times\""))?
            .eval(&[], &[])?;
        uniform_partition(delta, p.horizon).map_err(|e| config_err(e.to_string()))
    }

    /// Sampling step as a function of `(R, r)` for certification.
    pub fn build_delta(&self) -> Result<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>> {
        let scalar = self
            .certify
            .as_ref()
            .and_then(|c| c.delta.clone())
            .or_else(|| self.partition.as_ref().and_then(|p| p.delta.clone()))
            .ok_or_else(|| config_err("certification needs \"certify.delta\" or \"partition.delta\""))?;
        Ok(match scalar {
            Scalar::Number(v) => Arc::new(move |_, _| v),
            Scalar::Expr(s) => {
                let e = Expression::parse(&s, &["R", "r"])?;
                Arc::new(move |big_r, r| e.eval(&[big_r, r]).unwrap_or(f64::NAN))
            }
        })
    }

    pub fn certify_options(&self) -> Result<CertifyOptions> {
        let c = self.certify.as_ref().ok_or_else(|| config_err("missing \"certify\" block"))?;
        let d = CertifyOptions::default();
        Ok(CertifyOptions {
            seed: self.seed,
            seeds_per_pair: c.seeds_per_pair.unwrap_or(d.seeds_per_pair),
            partitions_per_seed: c.partitions_per_seed.unwrap_or(d.partitions_per_seed),
            horizon_factor: c.horizon_factor.unwrap_or(d.horizon_factor),
            max_time: c.max_time.unwrap_or(d.max_time),
            tol: c.tol.unwrap_or(d.tol),
            max_reported: d.max_reported,
        })
    }
}

fn build_inline(s: &InlineSystem) -> Result<ControlPolynomialSystem> {
    let cone = match s.cone {
        ConeSpec::Full => ControlCone::Full,
        ConeSpec::Nonnegative => ControlCone::NonNegative,
    };
    let target = match s.target {
        TargetSpec::Point => Target::Origin,
        TargetSpec::Ball { radius } => Target::ball(radius).map_err(|e| config_err(e.to_string()))?,
    };
    let name = s.name.clone().unwrap_or_else(|| "inline".to_string());
    let mut sys = ControlPolynomialSystem::new(&name, s.n, s.m, s.d, cone, target).map_err(|e| config_err(e.to_string()))?;
    let mut names = indexed_names("x", s.n);
    names.extend(indexed_names("e", s.m));
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut seen = Vec::new();
    for t in &s.terms {
        if seen.contains(&t.k) {
            return Err(config_err(format!("degree {} listed twice", t.k)));
        }
        seen.push(t.k);
        if t.f.len() != s.n {
            return Err(config_err(format!("term of degree {} needs {} components", t.k, s.n)));
        }
        let es: Vec<Expression> = t.f.iter().map(|f| Expression::parse(f, &vars)).collect::<Result<_>>()?;
        let n = s.n;
        let term = Term::new(t.k, move |x, e| {
            let mut args = Vec::with_capacity(x.len() + e.len());
            args.extend_from_slice(x);
            args.extend_from_slice(e);
            (0..n).map(|i| es[i].eval(&args).unwrap_or(f64::NAN)).collect()
        });
        sys = sys.with_term(term).map_err(|e| config_err(e.to_string()))?;
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"{
        "system": "cubic-damped",
        "feedback": { "u": ["2/x1^2"] },
        "partition": { "delta": "ln(phi)", "horizon": 5 },
        "simulate": { "z": [1.0] },
        "beta": "R*exp(-t/2)"
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::from_json_str(SIM, &[]).unwrap();
        let sys = cfg.build_system().unwrap();
        assert_eq!(sys.name, example::CATALOG_NAME);
        let p = cfg.build_partition().unwrap();
        assert!((p.times()[1] - example::delta_max()).abs() < 1e-15);
        let k = cfg.build_feedback(&sys).unwrap();
        assert_eq!(k.eval(&[2.0]).unwrap().as_original().unwrap(), &[0.5]);
        let beta = cfg.build_beta().unwrap();
        assert_eq!(beta.eval(3.0, 0.0), 3.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SIM.replace("\"horizon\": 5", "\"horizon\": 5, \"colour\": 1");
        assert!(matches!(RunConfig::from_json_str(&bad, &[]), Err(Error::Config(_))));
        let bad = SIM.replace("\"beta\"", "\"betta\"");
        assert!(matches!(RunConfig::from_json_str(&bad, &[]), Err(Error::Config(_))));
        assert!(RunConfig::from_json_str(SIM, &["simulate.zz=[1]".into()]).is_err());
    }

    #[test]
    fn overrides() {
        let cfg = RunConfig::from_json_str(SIM, &["partition.horizon=7".into(), "mode=extended".into()]).unwrap();
        assert_eq!(cfg.partition.as_ref().unwrap().horizon, 7.0);
        assert_eq!(cfg.mode, Mode::Extended);
        let sys = cfg.build_system().unwrap();
        // original feedback lifted for the extended mode
        let k = cfg.build_feedback(&sys).unwrap();
        assert!(k.is_extended());
        let wc = k.eval(&[1.0]).unwrap();
        assert!((wc.as_extended().unwrap().w0() - 1.0 / 3.0).abs() < 1e-15);
        assert!(RunConfig::from_json_str(SIM, &["novalue".into()]).is_err());
        let mut v = serde_json::json!({"a": 1});
        assert!(apply_override(&mut v, "a.b=2").is_err());
    }

    #[test]
    fn extended_feedback_projected_in_original_mode() {
        let cfg = RunConfig::from_json_str(
            r#"{"system": "cubic-damped", "feedback": {"w0": "x1^2/(2+x1^2)", "w": ["2/(2+x1^2)"]}}"#,
            &[],
        )
        .unwrap();
        let sys = cfg.build_system().unwrap();
        let k = cfg.build_feedback(&sys).unwrap();
        let u = k.eval(&[0.5]).unwrap().as_original().unwrap()[0];
        assert!((u - 8.0).abs() < 1e-12);
    }

    #[test]
    fn inline_system_matches_catalog() {
        let cfg = RunConfig::from_json_str(
            r#"{"system": {"n": 1, "m": 1, "d": 1, "cone": "nonnegative",
                "terms": [{"k": 0, "f": ["x1"]}, {"k": 1, "f": ["-x1^3*e1"]}]}}"#,
            &[],
        )
        .unwrap();
        let sys = cfg.build_system().unwrap();
        let reference = cubic_damped();
        for &(x, u) in &[(1.0, 0.0), (2.0, 1.0), (-0.5, 3.0)] {
            assert_eq!(sys.eval_dynamics(&[x], &[u]).unwrap(), reference.eval_dynamics(&[x], &[u]).unwrap());
        }
        assert!(sys.eval_dynamics(&[1.0], &[-1.0]).is_err());
        let bad = r#"{"system": {"n": 1, "m": 1, "d": 1, "terms": [{"k": 0, "f": ["y"]}]}}"#;
        assert!(RunConfig::from_json_str(bad, &[]).unwrap().build_system().is_err());
        let ball = r#"{"system": {"n": 2, "m": 1, "d": 1, "target": {"kind": "ball", "radius": 0.5},
            "terms": [{"k": 1, "f": ["e1", "0"]}]}}"#;
        let sys = RunConfig::from_json_str(ball, &[]).unwrap().build_system().unwrap();
        assert!((sys.distance(&[1.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_catalog_name() {
        let cfg = RunConfig::from_json_str(r#"{"system": "nope"}"#, &[]).unwrap();
        assert!(matches!(cfg.build_system(), Err(Error::Config(_))));
    }
}
