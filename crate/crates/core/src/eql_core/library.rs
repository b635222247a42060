use nalgebra::DMatrix;

use crate::lattice_abm::Trace;
use crate::ode_models::TermDescriptor;
use crate::{Error, Result};

/// Candidate right-hand-side terms evaluated row-wise on a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryMatrix {
    /// `n × d`, column `j` is `terms[j]` evaluated at every record time.
    pub theta: DMatrix<f64>,
    pub terms: Vec<TermDescriptor>,
    /// State variables the term rules index into.
    pub variables: Vec<String>,
}

impl LibraryMatrix {
    pub fn nrows(&self) -> usize {
        self.theta.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.theta.ncols()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label.clone()).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> LibraryMatrix {
        LibraryMatrix {
            theta: self.theta.select_rows(rows),
            terms: self.terms.clone(),
            variables: self.variables.clone(),
        }
    }
}

/// Evaluates `terms` over `variables` on every row of `trace`. Terms using
/// `F` read the trace's correlation column.
pub fn build_library(trace: &Trace, variables: &[String], terms: &[TermDescriptor]) -> Result<LibraryMatrix> {
    if terms.is_empty() {
        return Err(Error::config("library needs at least one term"));
    }
    let cols: Vec<&[f64]> = variables
        .iter()
        .map(|v| trace.series(v).ok_or_else(|| Error::config(format!("trace has no species {v}"))))
        .collect::<Result<_>>()?;
    let needs_f = terms.iter().any(TermDescriptor::needs_signal);
    let f = match (needs_f, &trace.correlation) {
        (false, _) => None,
        (true, Some(f)) => {
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("correlation signal is undefined at some record times"));
            }
            Some(f.as_slice())
        }
        (true, None) => return Err(Error::config("library uses F but the trace has no correlation column")),
    };
    let n = trace.len();
    let mut state = vec![0.0; variables.len()];
    let theta = DMatrix::from_fn(n, terms.len(), |i, j| {
        for (s, c) in state.iter_mut().zip(&cols) {
            *s = c[i];
        }
        terms[j].eval(&state, f.map(|f| f[i]))
    });
    Ok(LibraryMatrix {
        theta,
        terms: terms.to_vec(),
        variables: variables.to_vec(),
    })
}

/// Parses a library description.
///
/// Presets: `poly4` (`C..C^4`), `sir` (`S, S^2, I, I^2, S*I`), `logistic`
/// (`C(1-C), C`) and `modified` (`C(1-FC), C`). Anything else is read as a
/// comma-separated list of term labels over `variables`.
pub fn parse_library(spec: &str, variables: &[String]) -> Result<Vec<TermDescriptor>> {
    let spec = spec.trim();
    let preset = |labels: &[&str], vars: &[&str]| -> Result<Vec<TermDescriptor>> {
        let vs: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        if vs != variables {
            return Err(Error::config(format!(
                "library preset `{spec}` needs variables {vars:?}, got {variables:?}"
            )));
        }
        labels.iter().map(|l| TermDescriptor::parse(l, variables)).collect()
    };
    match spec.to_ascii_lowercase().as_str() {
        "poly4" => preset(&["C", "C^2", "C^3", "C^4"], &["C"]),
        "sir" => preset(&["S", "S^2", "I", "I^2", "S*I"], &["S", "I"]),
        "logistic" => preset(&["C(1-C)", "C"], &["C"]),
        "modified" => preset(&["C(1-FC)", "C"], &["C"]),
        _ => {
            let terms: Vec<TermDescriptor> = spec
                .split(',')
                .map(|l| TermDescriptor::parse(l.trim(), variables))
                .collect::<Result<_>>()?;
            for (i, t) in terms.iter().enumerate() {
                if terms[..i].iter().any(|u| u.rule == t.rule) {
                    return Err(Error::config(format!("library lists term {} twice", t.label)));
                }
            }
            if terms.iter().any(TermDescriptor::is_constant) {
                return Err(Error::config("libraries never include a constant term"));
            }
            Ok(terms)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c_trace(c: Vec<f64>, f: Option<Vec<f64>>) -> Trace {
        let n = c.len();
        Trace::new(Trace::grid(1.0, n), vec!["C".into()], vec![c], f, 1).unwrap()
    }

    #[test]
    fn constant_trace_rows() {
        let v = vec!["C".to_string()];
        let lib = build_library(&c_trace(vec![0.5; 4], None), &v, &parse_library("C,C^2", &v).unwrap()).unwrap();
        for i in 0..4 {
            assert_eq!(lib.theta[(i, 0)], 0.5);
            assert_eq!(lib.theta[(i, 1)], 0.25);
        }
    }

    #[test]
    fn correlated_term() {
        let v = vec!["C".to_string()];
        let terms = parse_library("modified", &v).unwrap();
        let lib = build_library(&c_trace(vec![0.4; 3], Some(vec![1.25; 3])), &v, &terms).unwrap();
        assert!((lib.theta[(1, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(lib.theta[(1, 1)], 0.4);
        assert!(build_library(&c_trace(vec![0.4; 3], None), &v, &terms).is_err());
    }

    #[test]
    fn presets_and_errors() {
        let v = vec!["C".to_string()];
        assert_eq!(parse_library("poly4", &v).unwrap().len(), 4);
        let sir = vec!["S".to_string(), "I".to_string()];
        let labels: Vec<String> = parse_library("sir", &sir).unwrap().into_iter().map(|t| t.label).collect();
        assert_eq!(labels, ["S", "S^2", "I", "I^2", "S*I"]);
        assert!(parse_library("sir", &v).is_err());
        assert!(parse_library("C,C", &v).is_err());
        assert!(parse_library("1,C", &v).is_err());
        assert!(parse_library("Q", &v).is_err());
    }
}
