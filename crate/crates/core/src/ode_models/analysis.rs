use super::integrate::{integrate_rk4, Trajectory};
use super::model::{Equation, PolynomialModel};
use super::terms::{TermDescriptor, TermRule};
use crate::lattice_abm::Trace;
use crate::{Error, Result};

/// Mean-field logistic right-hand side `Pp·C(1−C) − Pd·C`.
#[inline]
pub fn logistic_rhs(c: f64, pp: f64, pd: f64) -> f64 {
    pp * c * (1.0 - c) - pd * c
}

/// Correlation-corrected logistic `Pp·C(1−F·C) − Pd·C`.
#[inline]
pub fn modified_logistic_rhs(c: f64, f: f64, pp: f64, pd: f64) -> f64 {
    pp * c * (1.0 - f * c) - pd * c
}

/// Closed-form logistic solution with `r = Pp − Pd` and `K = r/Pp`.
pub fn logistic_analytic(pp: f64, pd: f64, c0: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(pp > pd && pd >= 0.0) {
        return Err(Error::domain(format!(
            "logistic solution needs Pp > Pd >= 0 (got Pp={pp}, Pd={pd})"
        )));
    }
    if !(0.0..=1.0).contains(&c0) {
        return Err(Error::domain(format!("initial density {c0} outside [0,1]")));
    }
    let r = pp - pd;
    let k = r / pp;
    Ok(times
        .iter()
        .map(|&t| {
            let e = (r * t).exp();
            if e.is_infinite() {
                return if c0 > 0.0 { k } else { 0.0 };
            }
            k * c0 * e / (k + c0 * (e - 1.0))
        })
        .collect())
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Mean-field logistic as a polynomial model: `(Pp−Pd)C − Pp·C²`.
pub fn mean_field_logistic(pp: f64, pd: f64) -> PolynomialModel {
    let v = vars(&["C"]);
    PolynomialModel::scalar(
        "C",
        vec![
            (TermDescriptor::power(&v, 0, 1), pp - pd),
            (TermDescriptor::power(&v, 0, 2), -pp),
        ],
    )
    .expect("finite rates")
}

/// Mean-field SIR in `(S, I)`: `S' = −M·PI·S·I`, `I' = M·PI·S·I − PR·I`.
pub fn mean_field_sir_model(pi: f64, pr: f64, m: f64) -> Result<PolynomialModel> {
    if pi < 0.0 || pr < 0.0 {
        return Err(Error::domain("SIR rates must be non-negative"));
    }
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::domain(format!("occupied fraction M={m} outside (0,1]")));
    }
    let v = vars(&["S", "I"]);
    let si = TermDescriptor::monomial(&v, vec![1, 1]);
    let i = TermDescriptor::monomial(&v, vec![0, 1]);
    PolynomialModel::new(
        v,
        vec![
            Equation::new(vec![(si.clone(), -m * pi)]),
            Equation::new(vec![(si, m * pi), (i, -pr)]),
        ],
    )
}

/// Appends `R = 1 − S − I` to an `(S, I)` trajectory.
pub fn with_recovered(mut tr: Trajectory) -> Trajectory {
    let r = tr.states[0].iter().zip(&tr.states[1]).map(|(s, i)| 1.0 - s - i).collect();
    tr.variables.push("R".into());
    tr.states.push(r);
    tr
}

/// Integrates the mean-field SIR system and reports `S`, `I` and `R`.
pub fn mean_field_sir(pi: f64, pr: f64, m: f64, initial: (f64, f64), times: &[f64]) -> Result<Trajectory> {
    let (s0, i0) = initial;
    if s0 < 0.0 || i0 < 0.0 || s0 + i0 > 1.0 + 1e-12 {
        return Err(Error::domain(format!("initial state (S={s0}, I={i0}) is not a valid fraction split")));
    }
    let model = mean_field_sir_model(pi, pr, m)?;
    Ok(with_recovered(integrate_rk4(&model, &[s0, i0], times)?))
}

/// Per-capita growth `G(C) = RHS(C)/C` of a single-state model.
///
/// At `C = 0` the limit is returned when the model has no constant term.
pub fn per_capita_growth(model: &PolynomialModel, c: f64) -> Result<f64> {
    if model.dim() != 1 {
        return Err(Error::domain("per-capita growth needs a single-state model"));
    }
    if model.needs_signal() {
        return Err(Error::domain("per-capita growth is undefined for signal-driven terms"));
    }
    let eq = &model.equations[0];
    if c != 0.0 {
        return Ok(eq.eval(&[c], None) / c);
    }
    let mut g = 0.0;
    for (t, k) in &eq.terms {
        match t.per_capita_limit(0) {
            Some(l) => g += k * l,
            None if *k != 0.0 => {
                return Err(Error::domain("per-capita growth at C=0 with a non-zero constant term"))
            }
            None => {}
        }
    }
    Ok(g)
}

/// Basic reproductive number of the mean-field SIR model.
pub fn r0_mean_field(m: f64, pi: f64, pr: f64) -> f64 {
    m * pi / pr
}

/// Basic reproductive number `b/(−a)` of an `I` equation in `(S, I)` with
/// coefficient `b` on `S·I` and `a` on `I`. `None` when either term is
/// missing or `a` is not a loss.
pub fn compute_r0(i_equation: &Equation) -> Option<f64> {
    let find = |e: &[u32]| {
        i_equation.terms.iter().find_map(|(t, c)| match &t.rule {
            TermRule::Monomial(x) if x.as_slice() == e => Some(*c),
            _ => None,
        })
    };
    let b = find(&[1, 1])?;
    let a = find(&[0, 1])?;
    if a >= 0.0 {
        return None;
    }
    Some(b / -a)
}

/// Mean squared difference of two equal-length sequences.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "mse needs equal-length sequences");
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Error summary of a model replay against data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    /// `None` when the replay diverged.
    pub mse: Option<f64>,
    pub diverged: bool,
}

impl FitDiagnostics {
    pub fn new(mse: f64, diverged: bool) -> Self {
        FitDiagnostics {
            mse: if diverged { None } else { Some(mse) },
            diverged,
        }
    }

    pub fn diverged() -> Self {
        FitDiagnostics { mse: None, diverged: true }
    }
}

/// Per-species MSE of a replay against a data trace on the same grid.
pub fn trace_mse(traj: &Trajectory, data: &Trace, species: &str) -> Result<FitDiagnostics> {
    if traj.diverged {
        return Ok(FitDiagnostics::diverged());
    }
    if traj.times.len() != data.times.len()
        || traj.times.iter().zip(&data.times).any(|(a, b)| (a - b).abs() > 1e-9 * b.abs().max(1.0))
    {
        return Err(Error::config("replay and data do not share a time grid"));
    }
    let model = traj
        .series(species)
        .ok_or_else(|| Error::config(format!("replay has no variable {species}")))?;
    let obs = data
        .series(species)
        .ok_or_else(|| Error::config(format!("data has no species {species}")))?;
    Ok(FitDiagnostics::new(mse(model, obs), false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_models::integrate::rk4;
    use approx::assert_relative_eq;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * t_end / (n - 1) as f64).collect()
    }

    #[test]
    fn analytic_logistic_basics() {
        let c = logistic_analytic(0.01, 0.005, 0.05, &[0.0, 1e5]).unwrap();
        assert_eq!(c[0], 0.05);
        assert_relative_eq!(c[1], 0.5, epsilon = 1e-12);
        assert!(logistic_analytic(0.01, 0.01, 0.05, &[0.0]).is_err());
        assert!(logistic_analytic(0.01, 0.02, 0.05, &[0.0]).is_err());
    }

    #[test]
    fn rk4_matches_analytic_logistic() {
        let times = grid(3000.0, 100);
        let exact = logistic_analytic(0.01, 0.005, 0.05, &times).unwrap();
        let tr = integrate_rk4(&mean_field_logistic(0.01, 0.005), &[0.05], &times).unwrap();
        let err = exact.iter().zip(&tr.states[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn rk4_order_is_four() {
        let (pp, pd) = (0.5, 0.25);
        let times = grid(60.0, 13);
        let exact = logistic_analytic(pp, pd, 0.05, &times).unwrap();
        let err = |sub: usize| {
            let (rows, _) = rk4(|_, y, d| d[0] = logistic_rhs(y[0], pp, pd), &[0.05], &times, sub);
            rows.iter().zip(&exact).map(|(r, e)| (r[0] - e).abs()).fold(0.0, f64::max)
        };
        let p = (err(4) / err(8)).log2();
        assert!((3.5..=4.5).contains(&p), "order {p}");
    }

    #[test]
    fn modified_equals_mean_field_at_unit_correlation() {
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    let c = i as f64 / 9.0;
                    let pp = 0.001 + j as f64 * 0.07;
                    let pd = k as f64 * 0.03;
                    assert_eq!(modified_logistic_rhs(c, 1.0, pp, pd).to_bits(), logistic_rhs(c, pp, pd).to_bits());
                }
            }
        }
        assert_eq!(modified_logistic_rhs(0.0, 1.7, 0.3, 0.1), 0.0);
        assert_eq!(modified_logistic_rhs(0.5, 1.0, 0.01, 0.005), 0.0);
    }

    #[test]
    fn sir_conservation_and_epidemic_curve() {
        let times = grid(20000.0, 200);
        let tr = mean_field_sir(0.005, 0.0005, 0.5, (0.98, 0.02), &times).unwrap();
        for k in 0..tr.len() {
            let total: f64 = tr.states.iter().map(|c| c[k]).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
        let i = tr.series("I").unwrap();
        let peak = i.iter().cloned().fold(0.0, f64::max);
        assert!(peak > 0.02 && *i.last().unwrap() < peak);
        assert!(*tr.series("S").unwrap().last().unwrap() < 0.1);
    }

    #[test]
    fn sir_without_infection_is_static() {
        let tr = mean_field_sir(0.1, 0.01, 0.5, (0.98, 0.0), &grid(100.0, 11)).unwrap();
        assert!(tr.series("S").unwrap().iter().all(|&s| s == 0.98));
        assert!(tr.series("I").unwrap().iter().all(|&i| i == 0.0));
        assert!(mean_field_sir(-0.1, 0.01, 0.5, (0.98, 0.02), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn per_capita_growth_values() {
        let m = mean_field_logistic(0.01, 0.005);
        assert_relative_eq!(per_capita_growth(&m, 0.0).unwrap(), 0.005, epsilon = 1e-15);
        assert!(per_capita_growth(&m, 0.5).unwrap().abs() < 1e-15);
        let v = vars(&["C"]);
        let learned = PolynomialModel::scalar(
            "C",
            vec![
                (TermDescriptor::power(&v, 0, 1), 0.15671),
                (TermDescriptor::power(&v, 0, 2), -0.49984),
                (TermDescriptor::power(&v, 0, 3), 0.33125),
            ],
        )
        .unwrap();
        assert_relative_eq!(per_capita_growth(&learned, 0.3).unwrap(), 0.0365705, epsilon = 1e-12);
        let konst = PolynomialModel::scalar("C", vec![(TermDescriptor::power(&v, 0, 0), 0.1)]).unwrap();
        assert!(per_capita_growth(&konst, 0.0).is_err());
    }

    #[test]
    fn r0_values() {
        assert_eq!(r0_mean_field(0.5, 0.01, 0.001), 5.0);
        let v = vars(&["S", "I"]);
        let eq = |a: f64, b: f64| {
            Equation::new(vec![
                (TermDescriptor::monomial(&v, vec![0, 1]), a),
                (TermDescriptor::monomial(&v, vec![1, 1]), b),
            ])
        };
        let r0 = compute_r0(&eq(-0.00098, 0.00443)).unwrap();
        assert_eq!((r0 * 100.0).round() / 100.0, 4.52);
        assert_eq!(compute_r0(&eq(-0.3, 0.3)), Some(1.0));
        let mf = mean_field_sir_model(0.01, 0.001, 0.5).unwrap();
        assert_relative_eq!(compute_r0(&mf.equations[1]).unwrap(), 5.0, epsilon = 1e-12);
        assert_eq!(compute_r0(&Equation::new(vec![(TermDescriptor::monomial(&v, vec![0, 1]), -1.0)])), None);
    }

    #[test]
    fn mse_arithmetic() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(mse(&a, &a), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.1).collect();
        assert_relative_eq!(mse(&a, &b), 0.01, epsilon = 1e-15);
        assert_eq!(FitDiagnostics::new(0.3, true).mse, None);
    }
}
