use serde_json::json;

use super::output::{inline_config, mse_cell, num, OutputDir, Table};
use super::svg::{Plot, Series, Style, PALETTE};
use super::CaseStudySpec;
use crate::eql_core::{build_library, differentiate, parse_library, prune_and_vote, LearnedModel, SolverSpec};
use crate::lattice_abm::{run_ensemble, BdmConfig, Trace};
use crate::ode_models::{
    integrate_rk4, integrate_rk4_with, per_capita_growth, trace_mse, FitDiagnostics, PolynomialModel, Signal,
    Trajectory, DEFAULT_SUBSTEPS,
};
use crate::{Error, Result};

pub const GREEDY_TOL: f64 = 1e-4;
pub const TUTORIAL_LAMBDA: f64 = 4e-4;

/// BDM configuration for one sweep point of `spec`.
pub fn bdm_config(spec: &CaseStudySpec, pp: f64, pd: f64, seed: u64) -> BdmConfig {
    BdmConfig::new(pp, pd, 1.0)
        .with_size(spec.lattice_size)
        .with_n_record(spec.n_record)
        .with_seed(seed)
}

/// Ensemble mean over `n` replicates, seeded by the configuration's seed.
pub fn bdm_ensemble(cfg: &BdmConfig, n: usize) -> Result<Trace> {
    cfg.validate()?;
    run_ensemble(cfg, n, cfg.seed)
}

pub fn derivative(trace: &Trace, species: &str) -> Result<Vec<f64>> {
    let s = trace
        .series(species)
        .ok_or_else(|| Error::config(format!("trace has no species {species}")))?;
    Ok(differentiate(s, &trace.times)?.values)
}

/// Greedy fit of `dC/dt` over `[C, C², C³, C⁴]` with pruning and voting.
pub fn learn_poly4(trace: &Trace, n_splits: usize, seed: u64) -> Result<LearnedModel> {
    let vars = vec!["C".to_string()];
    let lib = build_library(trace, &vars, &parse_library("poly4", &vars)?)?;
    let b = derivative(trace, "C")?;
    prune_and_vote(&lib, &b, &SolverSpec::greedy(GREEDY_TOL).with_splits(n_splits), seed)
}

/// Replays a model from the first data point over `times`. Signal-driven
/// models read `F` from the trace correlation.
pub fn replay(model: &PolynomialModel, data: &Trace, times: &[f64]) -> Result<Trajectory> {
    let initial: Vec<f64> = model
        .variables
        .iter()
        .map(|v| {
            data.series(v)
                .map(|s| s[0])
                .ok_or_else(|| Error::config(format!("data has no species {v}")))
        })
        .collect::<Result<_>>()?;
    if model.needs_signal() {
        let f = data
            .correlation
            .as_ref()
            .ok_or_else(|| Error::config("model needs the correlation F but the data has none"))?;
        let signal = Signal::new(data.times.clone(), f.clone())?;
        integrate_rk4_with(model, &initial, times, DEFAULT_SUBSTEPS, Some(&signal))
    } else {
        integrate_rk4(model, &initial, times)
    }
}

/// A model, its replay on the data grid and the replay error.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub name: String,
    pub model: PolynomialModel,
    pub learned: Option<LearnedModel>,
    pub replay: Trajectory,
    /// Per state variable, in model order.
    pub mse: Vec<FitDiagnostics>,
}

impl FittedModel {
    pub fn new(name: &str, model: PolynomialModel, learned: Option<LearnedModel>, data: &Trace) -> Result<Self> {
        let replay = replay(&model, data, &data.times)?;
        let mse = model
            .variables
            .iter()
            .map(|v| trace_mse(&replay, data, v))
            .collect::<Result<_>>()?;
        Ok(FittedModel {
            name: name.into(),
            model,
            learned,
            replay,
            mse,
        })
    }

    pub fn from_learned(name: &str, learned: LearnedModel, data: &Trace) -> Result<Self> {
        let model = learned.to_model()?;
        Self::new(name, model, Some(learned), data)
    }

    pub fn equation(&self, k: usize) -> String {
        format!("d{}/dt = {}", self.model.variables[k], self.model.equations[k].render())
    }

    pub fn first_mse(&self) -> Option<f64> {
        self.mse[0].mse
    }

    pub fn json(&self, seed: u64, config: &str) -> String {
        let mut meta = json!({ "name": self.name, "seed": seed, "config": config });
        if let Some(l) = &self.learned {
            meta["solver"] = json!(l.solver.name());
            meta["votes"] = json!(l.votes);
            meta["n_splits"] = json!(l.n_splits);
            meta["hyper"] = json!(l.splits.iter().map(|s| s.hyper).collect::<Vec<_>>());
        }
        meta["mse"] = json!(self.mse.iter().map(|d| d.mse).collect::<Vec<_>>());
        meta["diverged"] = json!(self.replay.diverged);
        self.model.to_json(meta)
    }
}

pub fn nondim(times: &[f64], rate: f64) -> Vec<f64> {
    times.iter().map(|t| t * rate).collect()
}

/// Data dots with one curve per model, against nondimensional time.
pub fn trajectory_plot(title: &str, data: &Trace, species: &str, rate: f64, x_label: &str, fits: &[&FittedModel]) -> Plot {
    let mut p = Plot::new(title, x_label, species);
    if let Some(s) = data.series(species) {
        p.push(Series::new("ABM", nondim(&data.times, rate), s.to_vec(), Style::Markers, PALETTE[0]));
    }
    for (k, f) in fits.iter().enumerate() {
        if let Some(y) = f.replay.series(species) {
            let style = if k == 0 { Style::Line } else { Style::Dashed };
            p.push(Series::new(
                f.name.clone(),
                nondim(&f.replay.times, rate),
                clip_density(y),
                style,
                PALETTE[(k + 3) % PALETTE.len()],
            ));
        }
    }
    p
}

/// Densities live in `[0, 1]`; values far outside (a diverging replay)
/// are dropped from figures so the data stays readable.
pub fn clip_density(y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| if (-0.5..=1.5).contains(&v) { v } else { f64::NAN }).collect()
}

/// `G(C)` curves over `(0, c_max]` for single-state models.
pub fn per_capita_plot(title: &str, c_max: f64, models: &[(&str, &PolynomialModel)]) -> Plot {
    let cs: Vec<f64> = (1..=60).map(|k| c_max * k as f64 / 60.0).collect();
    let mut p = Plot::new(title, "C", "G(C)");
    for (k, (name, m)) in models.iter().enumerate() {
        let g: Vec<f64> = cs.iter().map(|&c| per_capita_growth(m, c).unwrap_or(f64::NAN)).collect();
        let style = if k == 0 { Style::Line } else { Style::Dashed };
        p.push(Series::new(*name, cs.clone(), g, style, PALETTE[(k + 3) % PALETTE.len()]));
    }
    p
}

/// Writes a simulation config so `simulate --config` reproduces the trace.
pub fn write_config(out: &mut OutputDir, rel: &str, kv: &str, replicates: usize) -> Result<()> {
    out.write(rel, &format!("# replicates = {replicates}\n{kv}"))?;
    Ok(())
}

/// Rows `model, votes, equation, mse, seed, config` for a set of fits.
pub fn model_table(fits: &[&FittedModel], seed: u64, config: &str) -> Table {
    let mut t = Table::new(&["model", "solver", "votes", "equation", "mse", "diverged", "seed", "config"]);
    for f in fits {
        let (solver, votes) = match &f.learned {
            Some(l) => (l.solver.name().to_string(), format!("{}/{}", l.votes, l.n_splits)),
            None => ("-".to_string(), "-".to_string()),
        };
        t.push(vec![
            f.name.clone(),
            solver,
            votes,
            f.equation(0),
            mse_cell(&f.mse[0]),
            f.replay.diverged.to_string(),
            seed.to_string(),
            inline_config(config),
        ]);
    }
    t
}

pub fn coeff_cells(learned: &LearnedModel) -> Vec<String> {
    learned.coeffs.iter().map(|&c| num(c)).collect()
}

/// Largest recorded density, floored at 1e-3.
pub fn c_max(trace: &Trace) -> f64 {
    trace
        .series("C")
        .map(|c| c.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(1.0)
        .max(1e-3)
}
