use std::fmt;

use crate::{Error, Result};

/// How a library term is evaluated from the state vector and an optional
/// exogenous signal `F`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermRule {
    /// `Π xᵢ^eᵢ` over the state variables.
    Monomial(Vec<u32>),
    /// `x(1 − x)` for state variable `var`.
    Logistic { var: usize },
    /// `x(1 − F·x)` for state variable `var`; requires the signal.
    CorrelatedLogistic { var: usize },
}

/// A labelled right-hand-side term. Within one library the label identifies
/// the evaluation rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TermDescriptor {
    pub label: String,
    pub rule: TermRule,
}

impl TermDescriptor {
    /// Builds a monomial; the label joins factors with `*` (`C^2`, `I*S`).
    pub fn monomial(variables: &[String], exponents: Vec<u32>) -> Self {
        assert_eq!(variables.len(), exponents.len());
        let mut factors: Vec<String> = Vec::new();
        for (v, &e) in variables.iter().zip(&exponents) {
            match e {
                0 => {}
                1 => factors.push(v.clone()),
                _ => factors.push(format!("{v}^{e}")),
            }
        }
        let label = if factors.is_empty() { "1".into() } else { factors.join("*") };
        TermDescriptor {
            label,
            rule: TermRule::Monomial(exponents),
        }
    }

    /// `x^power` of a single variable.
    pub fn power(variables: &[String], var: usize, power: u32) -> Self {
        let mut e = vec![0; variables.len()];
        e[var] = power;
        Self::monomial(variables, e)
    }

    pub fn logistic(variables: &[String], var: usize) -> Self {
        let v = &variables[var];
        TermDescriptor {
            label: format!("{v}(1-{v})"),
            rule: TermRule::Logistic { var },
        }
    }

    pub fn correlated_logistic(variables: &[String], var: usize) -> Self {
        let v = &variables[var];
        TermDescriptor {
            label: format!("{v}(1-F{v})"),
            rule: TermRule::CorrelatedLogistic { var },
        }
    }

    /// Parses a label such as `C`, `C^3`, `I*S`, `C(1-C)` or `C(1-FC)`.
    pub fn parse(label: &str, variables: &[String]) -> Result<Self> {
        let label = label.trim();
        let var_index = |name: &str| {
            variables
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::config(format!("unknown variable '{name}' in term '{label}'")))
        };
        if let Some((outer, rest)) = label.split_once("(1-") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::config(format!("malformed term '{label}'")))?;
            let var = var_index(outer)?;
            return if inner == outer {
                Ok(Self::logistic(variables, var))
            } else if inner.strip_prefix('F') == Some(outer) {
                Ok(Self::correlated_logistic(variables, var))
            } else {
                Err(Error::config(format!("unsupported composite term '{label}'")))
            };
        }
        let mut exps = vec![0u32; variables.len()];
        if label != "1" {
            for factor in label.split('*') {
                let (name, e) = match factor.split_once('^') {
                    Some((n, e)) => (
                        n,
                        e.parse::<u32>()
                            .map_err(|_| Error::config(format!("bad exponent in term '{label}'")))?,
                    ),
                    None => (factor, 1),
                };
                exps[var_index(name.trim())?] += e;
            }
        }
        Ok(Self::monomial(variables, exps))
    }

    pub fn needs_signal(&self) -> bool {
        matches!(self.rule, TermRule::CorrelatedLogistic { .. })
    }

    pub fn is_constant(&self) -> bool {
        matches!(&self.rule, TermRule::Monomial(e) if e.iter().all(|&x| x == 0))
    }

    /// Evaluates the term. `signal` is only read by correlated terms; a
    /// missing signal there yields `NaN`.
    #[inline]
    pub fn eval(&self, state: &[f64], signal: Option<f64>) -> f64 {
        match &self.rule {
            TermRule::Monomial(exps) => state
                .iter()
                .zip(exps)
                .fold(1.0, |acc, (&x, &e)| if e == 0 { acc } else { acc * x.powi(e as i32) }),
            TermRule::Logistic { var } => {
                let x = state[*var];
                x * (1.0 - x)
            }
            TermRule::CorrelatedLogistic { var } => {
                let x = state[*var];
                match signal {
                    Some(f) => x * (1.0 - f * x),
                    None => f64::NAN,
                }
            }
        }
    }

    /// `lim_{x→0} term / x_var` for a single-state model, or `None` when the
    /// term is a non-zero constant.
    pub(crate) fn per_capita_limit(&self, var: usize) -> Option<f64> {
        match &self.rule {
            TermRule::Monomial(e) => match e[var] {
                0 => None,
                1 => Some(1.0),
                _ => Some(0.0),
            },
            TermRule::Logistic { .. } | TermRule::CorrelatedLogistic { .. } => Some(1.0),
        }
    }
}

impl fmt::Display for TermDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}
