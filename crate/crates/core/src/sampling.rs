//! Sample-and-hold simulation: on each partition interval the feedback is
//! evaluated once at the left node and held while the ODE is integrated.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{integrate, Flow, OdeFailure, OdeOptions};
use crate::system::{ensure_finite, norm, Control, ControlPolynomialSystem, StateVector};
use crate::trajectory::{ControlValue, Partition, Status, TrajectoryRecord};
use crate::transforms::{extended_dynamics, rescaled_dynamics, ExtendedControl};

/// Which vector field a simulation integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsForm {
    /// `x' = f(x, u)`
    Original,
    /// `y' = f(y, u) / (1 + nu(|u|))`
    Rescaled,
    /// `y' = F(y, w0, w)`
    Extended,
}

impl DynamicsForm {
    pub fn wants_extended(self) -> bool {
        matches!(self, DynamicsForm::Extended)
    }
}

type OriginalFn = Arc<dyn Fn(&[f64]) -> Result<Control> + Send + Sync>;
type ExtendedFn = Arc<dyn Fn(&[f64]) -> Result<ExtendedControl> + Send + Sync>;

/// State feedback for the original system (`K`) or the extended system (`K_hat`).
#[derive(Clone)]
pub enum Feedback {
    Original(OriginalFn),
    Extended(ExtendedFn),
}

impl fmt::Debug for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feedback::Original(_) => write!(f, "Feedback::Original"),
            Feedback::Extended(_) => write!(f, "Feedback::Extended"),
        }
    }
}

impl Feedback {
    pub fn original<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Control> + Send + Sync + 'static,
    {
        Feedback::Original(Arc::new(f))
    }

    pub fn extended<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<ExtendedControl> + Send + Sync + 'static,
    {
        Feedback::Extended(Arc::new(f))
    }

    pub fn constant(u: Control) -> Self {
        Feedback::original(move |_| Ok(u.clone()))
    }

    pub fn constant_extended(wc: ExtendedControl) -> Self {
        Feedback::extended(move |_| Ok(wc.clone()))
    }

    pub fn is_extended(&self) -> bool {
        matches!(self, Feedback::Extended(_))
    }

    /// Evaluates the feedback, mapping failures and non-finite output to
    /// [`Error::FeedbackDomain`].
    pub fn eval(&self, x: &[f64]) -> Result<ControlValue> {
        let domain = |reason: String| Error::FeedbackDomain {
            state: x.to_vec(),
            reason,
        };
        match self {
            Feedback::Original(k) => {
                let u = k(x).map_err(|e| domain(e.to_string()))?;
                ensure_finite(&u, "feedback").map_err(|e| domain(e.to_string()))?;
                Ok(ControlValue::Original(u))
            }
            Feedback::Extended(k) => {
                let wc = k(x).map_err(|e| domain(e.to_string()))?;
                Ok(ControlValue::Extended(wc))
            }
        }
    }
}

/// Termination thresholds and integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    /// `TargetReached` once the distance to the target is at most this.
    pub target_tol: f64,
    /// `BlowUp` once `|x|` reaches this.
    pub blowup_norm: f64,
    /// `BlowUp` when the adaptive step falls below this.
    pub min_step: f64,
    pub horizon: f64,
    pub integrator_abs_tol: f64,
    pub integrator_rel_tol: f64,
    /// Also record every accepted integrator step, not only partition nodes.
    pub record_substeps: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            target_tol: 1e-8,
            blowup_norm: 1e9,
            min_step: 1e-12,
            horizon: 10.0,
            integrator_abs_tol: 1e-10,
            integrator_rel_tol: 1e-10,
            record_substeps: false,
        }
    }
}

impl SimOptions {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("target_tol", self.target_tol),
            ("blowup_norm", self.blowup_norm),
            ("min_step", self.min_step),
            ("horizon", self.horizon),
            ("integrator_abs_tol", self.integrator_abs_tol),
            ("integrator_rel_tol", self.integrator_rel_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            abs_tol: self.integrator_abs_tol,
            rel_tol: self.integrator_rel_tol,
            min_step: self.min_step,
            ..OdeOptions::default()
        }
    }
}

/// Nodes `0, delta, 2 delta, ...` up to `horizon`, with `horizon` appended
/// when it is not a multiple of `delta`.
pub fn uniform_partition(delta: f64, horizon: f64) -> Result<Partition> {
    if !(delta > 0.0 && horizon > 0.0) || !delta.is_finite() || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "delta and horizon must be positive and finite (delta = {delta}, horizon = {horizon})"
        )));
    }
    if delta > horizon {
        return Err(Error::Domain(format!("delta = {delta} exceeds horizon = {horizon}")));
    }
    let slack = 1e-9 * delta;
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * delta;
        if t >= horizon - slack {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(horizon);
    Partition::new(times)
}

/// Piecewise-constant open-loop control: `values[k]` is held on
/// `[partition[k], partition[k+1])`.
#[derive(Debug, Clone)]
pub struct ControlSignal {
    partition: Partition,
    values: Vec<ControlValue>,
}

impl ControlSignal {
    pub fn new(partition: Partition, values: Vec<ControlValue>) -> Result<Self> {
        let intervals = partition.times().len() - 1;
        if values.len() != intervals {
            return Err(Error::Dimension {
                what: "control signal",
                expected: intervals,
                got: values.len(),
            });
        }
        Ok(ControlSignal { partition, values })
    }

    /// The same control on every interval of `partition`.
    pub fn constant(partition: Partition, value: ControlValue) -> Self {
        let values = vec![value; partition.times().len() - 1];
        ControlSignal { partition, values }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[ControlValue] {
        &self.values
    }
}

fn vector_field<'a>(
    sys: &'a ControlPolynomialSystem,
    form: DynamicsForm,
    control: &'a ControlValue,
) -> Result<impl FnMut(&[f64], &mut [f64]) -> Result<()> + 'a> {
    // reject the control once, up front
    match (form, control) {
        (DynamicsForm::Extended, ControlValue::Extended(wc)) => {
            sys.check_control(wc.w()).map_err(|_| Error::ControlSet(wc.w().to_vec()))?;
        }
        (DynamicsForm::Original | DynamicsForm::Rescaled, ControlValue::Original(u)) => {
            sys.check_control(u)?;
        }
        _ => {
            return Err(Error::Precondition(format!(
                "control kind does not match {form:?} dynamics"
            )))
        }
    }
    Ok(move |y: &[f64], dy: &mut [f64]| {
        let v = match (form, control) {
            (DynamicsForm::Original, ControlValue::Original(u)) => sys.eval_dynamics(y, u)?,
            (DynamicsForm::Rescaled, ControlValue::Original(u)) => rescaled_dynamics(sys, y, u)?,
            (DynamicsForm::Extended, ControlValue::Extended(wc)) => extended_dynamics(sys, y, wc)?,
            _ => unreachable!("checked above"),
        };
        dy.copy_from_slice(&v);
        Ok(())
    })
}

struct Recorder {
    rec: TrajectoryRecord,
}

impl Recorder {
    fn new(z: &[f64], d: f64) -> Self {
        Recorder {
            rec: TrajectoryRecord {
                times: vec![0.0],
                states: vec![z.to_vec()],
                distances: vec![d],
                controls: Vec::new(),
                is_node: vec![true],
                status: Status::HorizonEnd,
                frozen_point: None,
            },
        }
    }

    fn push(&mut self, t: f64, x: &[f64], d: f64, node: bool, control: &ControlValue) {
        self.rec.controls.push(control.clone());
        self.rec.times.push(t);
        self.rec.states.push(x.to_vec());
        self.rec.distances.push(d);
        self.rec.is_node.push(node);
    }

    fn finish(mut self, status: Status) -> TrajectoryRecord {
        if let Status::TargetReached(_) = status {
            self.rec.frozen_point = Some(self.rec.states.last().cloned().unwrap_or_default());
        }
        self.rec.status = status;
        self.rec
    }
}

/// Shared driver: `control_at(k, x_k)` supplies the control held on interval `k`.
fn drive<C>(
    sys: &ControlPolynomialSystem,
    form: DynamicsForm,
    nodes: &[f64],
    z: &[f64],
    opts: &SimOptions,
    mut control_at: C,
) -> Result<TrajectoryRecord>
where
    C: FnMut(usize, &[f64]) -> Result<ControlValue>,
{
    opts.validate()?;
    sys.check_state(z)?;
    let d0 = sys.distance(z);
    if d0 <= opts.target_tol {
        return Err(Error::Precondition(format!(
            "initial distance {d0} is within the target tolerance"
        )));
    }
    let mut rec = Recorder::new(z, d0);
    let mut x: StateVector = z.to_vec();
    let mut ode = opts.ode();

    for k in 0..nodes.len().saturating_sub(1) {
        let (t0, t1) = (nodes[k], nodes[k + 1].min(opts.horizon));
        if t0 >= opts.horizon {
            break;
        }
        let control = control_at(k, &x)?;
        if form.wants_extended() != matches!(control, ControlValue::Extended(_)) {
            return Err(Error::Precondition(format!(
                "control kind does not match {form:?} dynamics"
            )));
        }
        let field = vector_field(sys, form, &control)?;
        let mut event: Option<Status> = None;
        let mut substeps: Vec<(f64, StateVector, f64)> = Vec::new();
        let outcome = integrate(field, t0, t1, &x, &ode, |t, y| {
            let d = sys.distance(y);
            if d <= opts.target_tol {
                event = Some(Status::TargetReached(t));
                return Flow::Stop;
            }
            if norm(y) >= opts.blowup_norm || !y.iter().all(|v| v.is_finite()) {
                event = Some(Status::BlowUp(t));
                return Flow::Stop;
            }
            if opts.record_substeps && t < t1 {
                substeps.push((t, y.to_vec(), d));
            }
            Flow::Continue
        });
        for (t, y, d) in substeps {
            rec.push(t, &y, d, false, &control);
        }
        match outcome {
            Ok(end) => {
                let d = sys.distance(&end.y);
                match event {
                    Some(status @ Status::TargetReached(_)) => {
                        rec.push(end.t, &end.y, d, end.t == t1, &control);
                        return Ok(rec.finish(status));
                    }
                    Some(status) => {
                        // the escaping sample is not a valid state; keep the last one
                        let _ = status;
                        let last = rec.rec.times.last().copied().unwrap_or(t0);
                        return Ok(rec.finish(Status::BlowUp(last)));
                    }
                    None => {}
                }
                x = end.y;
                rec.push(t1, &x, d, true, &control);
                ode.initial_step = Some(end.next_step);
            }
            Err(OdeFailure::Rhs(e)) => return Err(e),
            Err(fail) => {
                if let Some((t, y)) = fail.last_valid() {
                    if t > rec.rec.times.last().copied().unwrap_or(0.0) {
                        let d = sys.distance(y);
                        rec.push(t, y, d, false, &control);
                    }
                }
                let last = rec.rec.times.last().copied().unwrap_or(t0);
                return Ok(rec.finish(Status::BlowUp(last)));
            }
        }
    }
    Ok(rec.finish(Status::HorizonEnd))
}

/// Integrates the sampling trajectory of feedback `k` on `partition` from `z`.
///
/// `Original` and `Rescaled` dynamics take an original feedback, `Extended`
/// dynamics an extended one. The run stops at the horizon, when the distance to
/// the target drops below `target_tol` (the state is then frozen), or at blow-up.
pub fn simulate_sample_hold(
    sys: &ControlPolynomialSystem,
    form: DynamicsForm,
    k: &Feedback,
    partition: &Partition,
    z: &[f64],
    opts: &SimOptions,
) -> Result<TrajectoryRecord> {
    if form.wants_extended() != k.is_extended() {
        return Err(Error::Precondition(format!(
            "feedback kind does not match {form:?} dynamics"
        )));
    }
    drive(sys, form, partition.times(), z, opts, |_, x| k.eval(x))
}

/// Integrates the response to a piecewise-constant open-loop signal.
pub fn simulate_open_loop(
    sys: &ControlPolynomialSystem,
    form: DynamicsForm,
    signal: &ControlSignal,
    z: &[f64],
    opts: &SimOptions,
) -> Result<TrajectoryRecord> {
    drive(sys, form, signal.partition().times(), z, opts, |k, _| {
        Ok(signal.values()[k].clone())
    })
}
