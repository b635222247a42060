use crate::lattice_abm::uniform_step;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Forward,
    Centered,
    Backward,
}

/// Finite-difference time derivative of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
}

/// Forward difference at the first point, backward at the last and centred
/// differences everywhere else.
pub fn differentiate(values: &[f64], times: &[f64]) -> Result<DerivativeEstimate> {
    let n = values.len();
    if n < 3 {
        return Err(Error::config(format!("differentiation needs at least 3 points, got {n}")));
    }
    if times.len() != n {
        return Err(Error::config("time and value sequences differ in length"));
    }
    let dt = uniform_step(times)?;
    let mut d = Vec::with_capacity(n);
    let mut schemes = Vec::with_capacity(n);
    d.push((values[1] - values[0]) / dt);
    schemes.push(Scheme::Forward);
    for i in 1..n - 1 {
        d.push((values[i + 1] - values[i - 1]) / (2.0 * dt));
        schemes.push(Scheme::Centered);
    }
    d.push((values[n - 1] - values[n - 2]) / dt);
    schemes.push(Scheme::Backward);
    Ok(DerivativeEstimate { values: d, schemes })
}
