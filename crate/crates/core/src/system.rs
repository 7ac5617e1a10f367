//! Control-polynomial dynamics, control cones and targets.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::growth::GrowthRate;

/// A point of the state space. Entries must be finite.
pub type StateVector = Vec<f64>;

/// A value of the original (unbounded) control.
pub type Control = Vec<f64>;

/// Euclidean norm without intermediate overflow or underflow.
pub fn norm(v: &[f64]) -> f64 {
    match v {
        [] => 0.0,
        [a] => a.abs(),
        _ => v.iter().fold(0.0, |acc: f64, a| acc.hypot(*a)),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub(crate) fn ensure_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}

type DistanceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type InteriorFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Closed target set with compact boundary, represented by its distance
/// function. The compact-boundary hypothesis is carried by
/// [`Target::boundary_radius`] and not verified.
#[derive(Clone)]
pub enum Target {
    /// The origin `{0}`.
    Origin,
    /// The closed ball of the given radius centred at the origin.
    Ball { radius: f64 },
    Custom {
        distance: DistanceFn,
        interior: InteriorFn,
        boundary_radius: f64,
    },
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Origin => write!(f, "Target::Origin"),
            Target::Ball { radius } => write!(f, "Target::Ball {{ radius: {radius} }}"),
            Target::Custom {
                boundary_radius, ..
            } => write!(f, "Target::Custom {{ boundary_radius: {boundary_radius} }}"),
        }
    }
}

impl Target {
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Target::Ball { radius })
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Target::Origin => norm(x),
            Target::Ball { radius } => (norm(x) - radius).max(0.0),
            Target::Custom { distance, .. } => distance(x),
        }
    }

    pub fn in_interior(&self, x: &[f64]) -> bool {
        match self {
            Target::Origin => false,
            Target::Ball { radius } => norm(x) < *radius,
            Target::Custom { interior, .. } => interior(x),
        }
    }

    /// Radius of a ball containing the boundary of the target.
    pub fn boundary_radius(&self) -> f64 {
        match self {
            Target::Origin => 1.0,
            Target::Ball { radius } => *radius,
            Target::Custom {
                boundary_radius, ..
            } => *boundary_radius,
        }
    }

    /// A point at distance `r` from the target along the unit direction `dir`
    /// (only for the built-in targets).
    pub fn point_at_distance(&self, dir: &[f64], r: f64) -> Option<StateVector> {
        let scale = match self {
            Target::Origin => r,
            Target::Ball { radius } => radius + r,
            Target::Custom { .. } => return None,
        };
        Some(dir.iter().map(|e| e * scale).collect())
    }
}

pub type ConeTest = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Closed cone of admissible controls.
#[derive(Clone)]
pub enum ControlCone {
    Full,
    NonNegative,
    Custom(ConeTest),
}

impl fmt::Debug for ControlCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlCone::Full => write!(f, "ControlCone::Full"),
            ControlCone::NonNegative => write!(f, "ControlCone::NonNegative"),
            ControlCone::Custom(_) => write!(f, "ControlCone::Custom"),
        }
    }
}

impl ControlCone {
    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            ControlCone::Full => true,
            ControlCone::NonNegative => u.iter().all(|&a| a >= 0.0),
            ControlCone::Custom(test) => test(u),
        }
    }
}

type CoefficientFn = Arc<dyn Fn(&[f64], &[f64]) -> StateVector + Send + Sync>;

/// One homogeneous piece `f_k(x, e) |u|^k` of the dynamics, where `e` is the
/// control direction `u / |u|` (the zero vector when `u = 0`).
#[derive(Clone)]
pub struct Term {
    pub degree: u32,
    coefficient: CoefficientFn,
}

impl Term {
    pub fn new<F>(degree: u32, coefficient: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> StateVector + Send + Sync + 'static,
    {
        Term {
            degree,
            coefficient: Arc::new(coefficient),
        }
    }

    pub fn coefficient(&self, x: &[f64], direction: &[f64]) -> StateVector {
        (self.coefficient)(x, direction)
    }
}

/// Dynamics `f(x, u) = sum_k f_k(x, u/|u|) |u|^k`, `k = 0..=d`, with controls
/// in a closed cone and growth rate `nu(r) = r^d`.
#[derive(Clone)]
pub struct ControlPolynomialSystem {
    pub name: String,
    n: usize,
    m: usize,
    degree: u32,
    terms: Vec<Term>,
    cone: ControlCone,
    target: Target,
}

impl fmt::Debug for ControlPolynomialSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlPolynomialSystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("degree", &self.degree)
            .field("terms", &self.terms.iter().map(|t| t.degree).collect::<Vec<_>>())
            .field("cone", &self.cone)
            .field("target", &self.target)
            .finish()
    }
}

impl ControlPolynomialSystem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        degree: u32,
        cone: ControlCone,
        target: Target,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain("state and control dimensions must be >= 1".into()));
        }
        if degree == 0 {
            return Err(Error::Domain("control degree must be >= 1".into()));
        }
        Ok(ControlPolynomialSystem {
            name: name.into(),
            n,
            m,
            degree,
            terms: Vec::new(),
            cone,
            target,
        })
    }

    pub fn with_term(mut self, term: Term) -> Result<Self> {
        if term.degree > self.degree {
            return Err(Error::Domain(format!(
                "term degree {} exceeds system degree {}",
                term.degree, self.degree
            )));
        }
        self.terms.push(term);
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn control_dim(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn cone(&self) -> &ControlCone {
        &self.cone
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn growth(&self) -> GrowthRate {
        GrowthRate::Power(self.degree)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.target.distance(x)
    }

    pub(crate) fn check_state(&self, x: &[f64]) -> Result<()> {
        ensure_dim("state", self.n, x.len())?;
        ensure_finite(x, "state")
    }

    pub(crate) fn check_control(&self, u: &[f64]) -> Result<()> {
        ensure_dim("control", self.m, u.len())?;
        ensure_finite(u, "control")?;
        if self.cone.contains(u) {
            Ok(())
        } else {
            Err(Error::ControlSet(u.to_vec()))
        }
    }

    /// `sum_k weight(k) f_k(x, direction)`, skipping terms with zero weight.
    pub(crate) fn weighted_sum(
        &self,
        x: &[f64],
        direction: &[f64],
        weight: impl Fn(u32) -> f64,
    ) -> Result<StateVector> {
        let mut out = vec![0.0; self.n];
        for term in &self.terms {
            let w = weight(term.degree);
            if w == 0.0 {
                continue;
            }
            let c = term.coefficient(x, direction);
            ensure_dim("coefficient", self.n, c.len())?;
            for (o, ci) in out.iter_mut().zip(&c) {
                *o += w * ci;
            }
        }
        ensure_finite(&out, "dynamics")?;
        Ok(out)
    }

    /// Evaluates `f(x, u)`.
    pub fn eval_dynamics(&self, x: &[f64], u: &[f64]) -> Result<StateVector> {
        self.check_state(x)?;
        self.check_control(u)?;
        let (direction, magnitude) = split_direction(u);
        self.weighted_sum(x, &direction, |k| magnitude.powi(k as i32))
    }
}

/// Splits `u` into `(u/|u|, |u|)` with the convention `u/|u| = 0` at `u = 0`.
pub fn split_direction(u: &[f64]) -> (Vec<f64>, f64) {
    let r = norm(u);
    if r == 0.0 {
        (vec![0.0; u.len()], 0.0)
    } else {
        (u.iter().map(|a| a / r).collect(), r)
    }
}
