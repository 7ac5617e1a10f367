//! Arithmetic expressions over named variables, used by config files.
//!
//! Syntax is that of `meval`: `+ - * / ^` (right-associative, binding tighter
//! than unary minus), `sqrt exp ln abs signum max min sin cos ...`, and the
//! constants `pi`, `e` and `phi` (the golden ratio). Variable names are
//! validated when parsing.

use std::fmt;
use std::sync::Arc;

use meval::tokenizer::Token;
use meval::ContextProvider;

use crate::error::{Error, Result};
use crate::example::golden_ratio;

thread_local! {
    static BUILTIN: meval::Context<'static> = meval::Context::new();
}

struct Slots<'a> {
    names: &'a [String],
    values: &'a [f64],
}

impl ContextProvider for Slots<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        match self.names.iter().position(|n| n == name) {
            Some(k) => Some(self.values[k]),
            None if name == "phi" => Some(golden_ratio()),
            None => None,
        }
    }
}

/// A parsed expression bound to an ordered list of variable names.
#[derive(Clone)]
pub struct Expression {
    source: String,
    expr: meval::Expr,
    vars: Arc<[String]>,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.source)
    }
}

impl Expression {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| Error::Expression(format!("{source:?}: {e}")))?;
        let names: Arc<[String]> = vars.iter().map(|s| s.to_string()).collect();
        for tok in expr.iter() {
            match tok {
                Token::Var(name) => {
                    let known = names.iter().any(|n| n == name)
                        || name == "phi"
                        || BUILTIN.with(|b| b.get_var(name).is_some());
                    if !known {
                        return Err(Error::Expression(format!(
                            "{source:?}: unknown variable {name:?} (allowed: {})",
                            vars.join(", ")
                        )));
                    }
                }
                Token::Func(name, arity) => {
                    let args = vec![1.0; arity.unwrap_or(1)];
                    let unknown = BUILTIN.with(|b| {
                        matches!(b.eval_func(name, &args), Err(meval::FuncEvalError::UnknownFunction))
                    });
                    if unknown {
                        return Err(Error::Expression(format!("{source:?}: unknown function {name:?}")));
                    }
                }
                _ => {}
            }
        }
        Ok(Expression {
            source: source.to_string(),
            expr,
            vars: names,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with `values[k]` bound to the `k`-th variable.
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.vars.len() {
            return Err(Error::Dimension {
                what: "expression arguments",
                expected: self.vars.len(),
                got: values.len(),
            });
        }
        let slots = Slots {
            names: &self.vars,
            values,
        };
        let v = BUILTIN
            .with(|b| self.expr.eval_with_context((slots, b)))
            .map_err(|e| Error::Expression(format!("{:?}: {e}", self.source)))?;
        Ok(v)
    }

    /// Evaluates and rejects NaN or infinite results.
    pub fn eval_finite(&self, values: &[f64]) -> Result<f64> {
        let v = self.eval(values)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("{} at {values:?}", self.source)))
        }
    }
}

/// Names `prefix1, ..., prefix{count}`.
pub fn indexed_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = Expression::parse("-x^2", &["x"]).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), -4.0);
        let e = Expression::parse("2^3^2", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 512.0);
        let e = Expression::parse("r^3/(2*(2+r^2))", &["r"]).unwrap();
        assert_eq!(e.eval(&[1.0]).unwrap(), 1.0 / 6.0);
        let e = Expression::parse("R*exp(-t/2)", &["R", "t"]).unwrap();
        assert!((e.eval(&[2.0, 2.0]).unwrap() - 2.0 / 1f64.exp()).abs() < 1e-15);
        let e = Expression::parse("ln(phi)", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), golden_ratio().ln());
        let e = Expression::parse("abs(x1) + signum(x2) + max(x1, x2) + pi", &["x1", "x2"]).unwrap();
        assert_eq!(e.eval(&[-1.0, 3.0]).unwrap(), 1.0 + 1.0 + 3.0 + std::f64::consts::PI);
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(matches!(Expression::parse("y + 1", &["x"]), Err(Error::Expression(_))));
        assert!(matches!(Expression::parse("foo(x)", &["x"]), Err(Error::Expression(_))));
        assert!(matches!(Expression::parse("x +* 1", &["x"]), Err(Error::Expression(_))));
        let e = Expression::parse("1/x", &["x"]).unwrap();
        assert!(e.eval(&[0.0]).unwrap().is_infinite());
        assert!(matches!(e.eval_finite(&[0.0]), Err(Error::NonFinite(_))));
        assert!(e.eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn shareable_across_threads() {
        let e = Expression::parse("x*x", &["x"]).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let e = e.clone();
                std::thread::spawn(move || e.eval(&[k as f64]).unwrap())
            })
            .collect();
        let out: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(out, vec![0.0, 1.0, 4.0, 9.0]);
    }
}
