use super::model::PolynomialModel;
use crate::{Error, Result};

/// State magnitude beyond which an integration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// RK4 substeps per output interval.
pub const DEFAULT_SUBSTEPS: usize = 10;

/// Piecewise-linear exogenous signal, held constant outside its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::config("signal needs matching, non-empty time and value sequences"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("signal times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("signal values must be finite"));
        }
        Ok(Signal { times, values })
    }

    pub fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let j = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (t - t0) / (t1 - t0);
        self.values[j - 1] * (1.0 - w) + self.values[j] * w
    }
}

/// Model solution sampled at the requested times.
///
/// When the solution diverges the columns are truncated at the last finite,
/// in-bounds output time and `diverged` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub variables: Vec<String>,
    /// One column per variable.
    pub states: Vec<Vec<f64>>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.variables
            .iter()
            .position(|v| v == name)
            .map(|i| self.states[i].as_slice())
    }

    /// Number of output times actually reached.
    pub fn len(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Classical RK4 on `f(t, y, dy)` with `substeps` equal steps between
/// consecutive output times. Returns the per-time states and a divergence flag.
pub fn rk4<F>(f: F, y0: &[f64], times: &[f64], substeps: usize) -> (Vec<Vec<f64>>, bool)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let d = y0.len();
    let substeps = substeps.max(1);
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.to_vec();
    if !in_bounds(&y) {
        return (out, true);
    }
    out.push(y.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let t = w[0] + s as f64 * h;
            f(t, &y, &mut k1);
            for i in 0..d {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            f(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..d {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            f(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..d {
                tmp[i] = y[i] + h * k3[i];
            }
            f(t + h, &tmp, &mut k4);
            for i in 0..d {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if !in_bounds(&y) {
                return (out, true);
            }
        }
        out.push(y.clone());
    }
    (out, false)
}

fn in_bounds(y: &[f64]) -> bool {
    y.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT)
}

/// Integrates `model` from `initial` over `times` with the default substepping.
pub fn integrate_rk4(model: &PolynomialModel, initial: &[f64], times: &[f64]) -> Result<Trajectory> {
    integrate_rk4_with(model, initial, times, DEFAULT_SUBSTEPS, None)
}

pub fn integrate_rk4_with(
    model: &PolynomialModel,
    initial: &[f64],
    times: &[f64],
    substeps: usize,
    signal: Option<&Signal>,
) -> Result<Trajectory> {
    if initial.len() != model.dim() {
        return Err(Error::config(format!(
            "initial state has {} entries, model has {} variables",
            initial.len(),
            model.dim()
        )));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("integration times must be non-empty and strictly increasing"));
    }
    if model.needs_signal() && signal.is_none() {
        return Err(Error::config("model uses the correlation signal F but none was supplied"));
    }
    let (rows, diverged) = rk4(
        |t, y, dy| model.rhs(y, signal.map(|s| s.at(t)), dy),
        initial,
        times,
        substeps,
    );
    let mut states = vec![Vec::with_capacity(rows.len()); model.dim()];
    for row in &rows {
        for (col, v) in states.iter_mut().zip(row) {
            col.push(*v);
        }
    }
    Ok(Trajectory {
        times: times[..rows.len()].to_vec(),
        variables: model.variables.clone(),
        states,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_models::TermDescriptor;

    fn scalar(terms: &[(u32, f64)]) -> PolynomialModel {
        let v = vec!["C".to_string()];
        PolynomialModel::scalar(
            "C",
            terms.iter().map(|&(p, c)| (TermDescriptor::power(&v, 0, p), c)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_model_is_constant() {
        let tr = integrate_rk4(&scalar(&[(1, 0.0)]), &[0.3], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(tr.states[0], vec![0.3; 3]);
        assert!(!tr.diverged);
    }

    #[test]
    fn exponential_decay_oracle() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let tr = integrate_rk4(&scalar(&[(1, -1.0)]), &[1.0], &times).unwrap();
        for (t, c) in times.iter().zip(&tr.states[0]) {
            assert!((c - (-t).exp()).abs() < 1e-8 * t.max(1.0), "t={t}");
        }
    }

    #[test]
    fn superexponential_model_diverges() {
        let m = scalar(&[(1, 0.00802), (2, -0.02098), (3, 0.03837)]);
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 3000.0 / 99.0).collect();
        let tr = integrate_rk4(&m, &[0.05], &times).unwrap();
        assert!(tr.diverged);
        assert!(tr.len() < times.len());
        assert!(tr.states[0].iter().all(|v| v.abs() <= DIVERGENCE_LIMIT));
    }

    #[test]
    fn signal_interpolates_and_clamps() {
        let s = Signal::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.at(-1.0), 1.0);
        assert_eq!(s.at(0.5), 2.0);
        assert_eq!(s.at(1.5), 2.5);
        assert_eq!(s.at(9.0), 2.0);
    }
}
