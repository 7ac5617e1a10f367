//! Class-KL comparison functions `beta(r, t)` and a grid checker for the KL
//! axioms.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

type KlEval = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A two-argument comparison function used as a descent rate.
///
/// `strict_at_zero` records whether `beta(R, 0) > R` for all `R > 0`; by
/// default it is probed on a log grid over `[1e-6, 1e6]`.
#[derive(Clone)]
pub struct KlFunction {
    eval: KlEval,
    strict_at_zero: bool,
    label: String,
}

impl fmt::Debug for KlFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KlFunction")
            .field("label", &self.label)
            .field("strict_at_zero", &self.strict_at_zero)
            .finish()
    }
}

impl KlFunction {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let eval: KlEval = Arc::new(f);
        let strict_at_zero = probe_strict(&*eval, &log_grid(1e-6, 1e6, 121));
        KlFunction {
            eval,
            strict_at_zero,
            label: String::from("beta"),
        }
    }

    /// `scale * R * exp(-rate * t)`.
    pub fn exponential(scale: f64, rate: f64) -> Self {
        KlFunction::new(move |r, t| scale * r * (-rate * t).exp())
            .with_label(format!("{scale}*R*exp(-{rate}*t)"))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Overrides the probed strictness flag.
    pub fn with_strict_at_zero(mut self, strict: bool) -> Self {
        self.strict_at_zero = strict;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        (self.eval)(r, t)
    }

    pub fn strict_at_zero(&self) -> bool {
        self.strict_at_zero
    }
}

fn probe_strict(f: &(dyn Fn(f64, f64) -> f64 + Send + Sync), grid: &[f64]) -> bool {
    grid.iter().all(|&r| f(r, 0.0) > r)
}

/// `count` points log-spaced over `[lo, hi]`, both ends included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k + 1 == count {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `count` points evenly spaced over `[lo, hi]`, both ends included.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KlViolationKind {
    NonzeroAtZero,
    Negative,
    NotIncreasingInR,
    NotDecreasingInT,
    NoDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlViolation {
    pub kind: KlViolationKind,
    pub r: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlReport {
    pub violations: Vec<KlViolation>,
    /// `beta(r, 0) > r` at every positive grid radius.
    pub strict_at_zero: bool,
    pub points_checked: usize,
}

impl KlReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: KlViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Parameters of the decay test: `beta(r, limit_time) <= limit_ratio *
/// beta(r, 0)` must hold for every positive grid radius.
#[derive(Debug, Clone, Copy)]
pub struct KlCheckOptions {
    /// Defaults to `100 * max(t_grid)`.
    pub limit_time: Option<f64>,
    pub limit_ratio: f64,
}

impl Default for KlCheckOptions {
    fn default() -> Self {
        KlCheckOptions {
            limit_time: None,
            limit_ratio: 1e-2,
        }
    }
}

/// Checks the KL axioms on the product `r_grid x t_grid`.
pub fn kl_check(beta: &KlFunction, r_grid: &[f64], t_grid: &[f64]) -> KlReport {
    kl_check_with(beta, r_grid, t_grid, KlCheckOptions::default())
}

pub fn kl_check_with(
    beta: &KlFunction,
    r_grid: &[f64],
    t_grid: &[f64],
    opts: KlCheckOptions,
) -> KlReport {
    let mut rs = r_grid.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let mut violations = Vec::new();
    let mut push = |kind, r, t, value| violations.push(KlViolation { kind, r, t, value });
    let mut points = 0;

    for &t in &ts {
        let v = beta.eval(0.0, t);
        points += 1;
        if v != 0.0 {
            push(KlViolationKind::NonzeroAtZero, 0.0, t, v);
        }
    }

    // values[i][j] = beta(rs[i], ts[j])
    let values: Vec<Vec<f64>> = rs
        .iter()
        .map(|&r| ts.iter().map(|&t| beta.eval(r, t)).collect())
        .collect();
    points += rs.len() * ts.len();

    for (i, &r) in rs.iter().enumerate() {
        for (j, &t) in ts.iter().enumerate() {
            let v = values[i][j];
            if !(v >= 0.0) {
                push(KlViolationKind::Negative, r, t, v);
            }
            if i > 0 && !(v > values[i - 1][j]) {
                push(KlViolationKind::NotIncreasingInR, r, t, v);
            }
            // pairs that both underflow are not resolvable in floating point
            if r > 0.0 && j > 0 && !(v < values[i][j - 1]) && values[i][j - 1] > 1e-300 {
                push(KlViolationKind::NotDecreasingInT, r, t, v);
            }
        }
    }

    let t_max = ts.last().copied().unwrap_or(1.0).max(1.0);
    let t_limit = opts.limit_time.unwrap_or(100.0 * t_max);
    for &r in rs.iter().filter(|&&r| r > 0.0) {
        let start = beta.eval(r, 0.0);
        let end = beta.eval(r, t_limit);
        points += 2;
        if !(end <= opts.limit_ratio * start) {
            push(KlViolationKind::NoDecay, r, t_limit, end);
        }
    }

    let strict_at_zero = rs
        .iter()
        .filter(|&&r| r > 0.0)
        .all(|&r| beta.eval(r, 0.0) > r);

    KlReport {
        violations,
        strict_at_zero,
        points_checked: points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> (Vec<f64>, Vec<f64>) {
        (log_grid(1e-3, 1e3, 31), linear_grid(0.0, 20.0, 41))
    }

    #[test]
    fn exponential_decay_is_kl() {
        let (r, t) = grids();
        let rep = kl_check(&KlFunction::exponential(1.0, 0.5), &r, &t);
        assert!(rep.is_clean(), "{:?}", rep.violations);
        assert!(!rep.strict_at_zero);
    }

    #[test]
    fn constant_in_time_is_flagged() {
        let (r, t) = grids();
        let rep = kl_check(&KlFunction::new(|r, _| r), &r, &t);
        assert!(rep.has(KlViolationKind::NotDecreasingInT));
        assert!(rep.has(KlViolationKind::NoDecay));
    }

    #[test]
    fn doubled_exponential_is_strict() {
        let (r, t) = grids();
        let beta = KlFunction::exponential(2.0, 0.5);
        let rep = kl_check(&beta, &r, &t);
        assert!(rep.is_clean());
        assert!(rep.strict_at_zero);
        assert!(beta.strict_at_zero());
        assert!(!KlFunction::exponential(1.0, 0.5).strict_at_zero());
    }

    #[test]
    fn non_monotone_in_r_flagged() {
        let (r, t) = grids();
        let rep = kl_check(&KlFunction::new(|r, t| r.sin().abs() * (-t).exp()), &r, &t);
        assert!(rep.has(KlViolationKind::NotIncreasingInR));
        let rep = kl_check(&KlFunction::new(|r, t| (r + 1.0) * (-t).exp()), &r, &t);
        assert!(rep.has(KlViolationKind::NonzeroAtZero));
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = log_grid(1e-2, 1e2, 5);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[4], 1e2);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert_eq!(linear_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
