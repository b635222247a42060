use serde::{Deserialize, Serialize};

use super::terms::TermDescriptor;
use crate::{Error, Result};

/// One right-hand side: `Σ coeffᵢ·termᵢ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Equation {
    pub terms: Vec<(TermDescriptor, f64)>,
}

impl Equation {
    pub fn new(terms: Vec<(TermDescriptor, f64)>) -> Self {
        Equation { terms }
    }

    #[inline]
    pub fn eval(&self, state: &[f64], signal: Option<f64>) -> f64 {
        self.terms.iter().map(|(t, c)| c * t.eval(state, signal)).sum()
    }

    pub fn coeff(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|(t, _)| t.label == label).map(|&(_, c)| c)
    }

    /// 5-decimal rendering used in report tables, e.g. `0.00468C - 0.0095C^2`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (t, c) in &self.terms {
            let mag = format_5dp(c.abs());
            if out.is_empty() {
                if *c < 0.0 {
                    out.push('-');
                }
            } else {
                out.push_str(if *c < 0.0 { " - " } else { " + " });
            }
            out.push_str(&mag);
            if !t.is_constant() {
                out.push_str(&t.label);
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Coefficient rounded to 5 decimals with trailing zeros removed.
pub fn format_5dp(x: f64) -> String {
    let s = format!("{x:.5}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map(|p| format!("{p}.0")).unwrap_or_else(|| s.to_string());
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

/// Polynomial (library-term) ODE model, one equation per state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    pub variables: Vec<String>,
    pub equations: Vec<Equation>,
}

impl PolynomialModel {
    pub fn new(variables: Vec<String>, equations: Vec<Equation>) -> Result<Self> {
        if variables.is_empty() || variables.len() != equations.len() {
            return Err(Error::config("a model needs one equation per state variable"));
        }
        for eq in &equations {
            for (i, (t, c)) in eq.terms.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::numerical(format!("non-finite coefficient on term {}", t.label)));
                }
                if eq.terms[..i].iter().any(|(u, _)| u.rule == t.rule) {
                    return Err(Error::config(format!("duplicate term {} in one equation", t.label)));
                }
            }
        }
        Ok(PolynomialModel { variables, equations })
    }

    /// Single-state model in `C`.
    pub fn scalar(var: &str, terms: Vec<(TermDescriptor, f64)>) -> Result<Self> {
        Self::new(vec![var.to_string()], vec![Equation::new(terms)])
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn needs_signal(&self) -> bool {
        self.equations.iter().any(|e| e.terms.iter().any(|(t, _)| t.needs_signal()))
    }

    #[inline]
    pub fn rhs(&self, state: &[f64], signal: Option<f64>, out: &mut [f64]) {
        for (o, eq) in out.iter_mut().zip(&self.equations) {
            *o = eq.eval(state, signal);
        }
    }

    pub fn render(&self) -> Vec<String> {
        self.variables
            .iter()
            .zip(&self.equations)
            .map(|(v, e)| format!("d{v}/dt = {}", e.render()))
            .collect()
    }

    pub fn to_document(&self, meta: serde_json::Value) -> ModelDocument {
        ModelDocument {
            variables: self.variables.clone(),
            equations: self
                .variables
                .iter()
                .zip(&self.equations)
                .map(|(v, e)| EquationDocument {
                    lhs: format!("d{v}/dt"),
                    rendered: format!("d{v}/dt = {}", e.render()),
                    terms: e
                        .terms
                        .iter()
                        .map(|(t, c)| TermDocument {
                            label: t.label.clone(),
                            coeff: *c,
                            coeff_5dp: format_5dp(*c),
                        })
                        .collect(),
                })
                .collect(),
            meta,
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        let equations = doc
            .equations
            .iter()
            .map(|e| {
                e.terms
                    .iter()
                    .map(|t| Ok((TermDescriptor::parse(&t.label, &doc.variables)?, t.coeff)))
                    .collect::<Result<Vec<_>>>()
                    .map(Equation::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.variables.clone(), equations)
    }

    pub fn to_json(&self, meta: serde_json::Value) -> String {
        serde_json::to_string_pretty(&self.to_document(meta)).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// Serialised form: `{variables, equations: [{terms: [{label, coeff}]}], meta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub variables: Vec<String>,
    pub equations: Vec<EquationDocument>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationDocument {
    #[serde(default)]
    pub lhs: String,
    #[serde(default)]
    pub rendered: String,
    pub terms: Vec<TermDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocument {
    pub label: String,
    pub coeff: f64,
    #[serde(default)]
    pub coeff_5dp: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> PolynomialModel {
        let v = vec!["C".to_string()];
        PolynomialModel::scalar(
            "C",
            vec![
                (TermDescriptor::power(&v, 0, 1), 0.15671),
                (TermDescriptor::power(&v, 0, 2), -0.49984),
                (TermDescriptor::power(&v, 0, 3), 0.33125),
            ],
        )
        .unwrap()
    }

    #[test]
    fn render_matches_table_style() {
        assert_eq!(cubic().render()[0], "dC/dt = 0.15671C - 0.49984C^2 + 0.33125C^3");
        assert_eq!(format_5dp(0.0095), "0.0095");
        assert_eq!(format_5dp(-0.000001), "0.0");
        assert_eq!(format_5dp(0.01), "0.01");
    }

    #[test]
    fn json_round_trip_keeps_full_precision() {
        let mut m = cubic();
        m.equations[0].terms[0].1 = 0.1 + 0.2;
        let json = m.to_json(serde_json::json!({"solver": "greedy"}));
        let back = PolynomialModel::from_json(&json).unwrap();
        assert_eq!(back, m);
        assert!(json.contains("\"coeff_5dp\": \"0.3\""));
    }

    #[test]
    fn rejects_duplicate_and_nonfinite() {
        let v = vec!["C".to_string()];
        let t = TermDescriptor::power(&v, 0, 1);
        assert!(PolynomialModel::scalar("C", vec![(t.clone(), 1.0), (t.clone(), 2.0)]).is_err());
        assert!(PolynomialModel::scalar("C", vec![(t, f64::NAN)]).is_err());
    }
}
