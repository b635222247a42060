use super::common::{clip_density, derivative, nondim, write_config, FittedModel};
use super::output::{inline_config, mse_cell, num, opt_cell, tag, OutputDir, Table};
use super::svg::{grid_svg, Plot, Series, Style, PALETTE};
use super::CaseStudySpec;
use crate::eql_core::{build_library, parse_library, prune_and_vote, LearnedModel, SolverSpec};
use crate::lattice_abm::{run_ensemble, SirConfig, Trace};
use crate::ode_models::{compute_r0, mean_field_sir_model, r0_mean_field, PolynomialModel};
use crate::{Error, Result};

const T_LABEL: &str = "T = PR t";

pub fn sir_config(spec: &CaseStudySpec, pi: f64, seed: u64) -> SirConfig {
    let mut cfg = SirConfig::new(pi, pi * spec.rate_ratio, 1.0)
        .with_size(spec.lattice_size)
        .with_seed(seed);
    cfg.n_record = spec.n_record;
    cfg
}

/// Lasso fits of `dS/dt` and `dI/dt` over `[S, S², I, I², S·I]`, each with
/// its own per-split λ selection, pruning and voting.
pub fn learn_sir(trace: &Trace, n_splits: usize, seed: u64) -> Result<[LearnedModel; 2]> {
    let vars = vec!["S".to_string(), "I".to_string()];
    let lib = build_library(trace, &vars, &parse_library("sir", &vars)?)?;
    let solver = SolverSpec::lasso_grid().with_splits(n_splits);
    let s = prune_and_vote(&lib, &derivative(trace, "S")?, &solver, seed)?;
    let i = prune_and_vote(&lib, &derivative(trace, "I")?, &solver, seed)?;
    Ok([s, i])
}

#[derive(Debug, Clone)]
pub struct Cs5Row {
    pub pi: f64,
    pub pr: f64,
    pub config: SirConfig,
    pub trace: Trace,
    pub mean_field: FittedModel,
    pub learned: FittedModel,
    /// S- and I-equation fits.
    pub equations: [LearnedModel; 2],
    pub mean_field_r0: f64,
    pub learned_r0: Option<f64>,
    /// Mean-field minus data `I` at the time of the data's `I` peak.
    pub peak_error: f64,
}

pub fn cs5_point(spec: &CaseStudySpec, pi: f64) -> Result<Cs5Row> {
    let config = sir_config(spec, pi, spec.seed);
    config.validate()?;
    let pr = config.recovery;
    let trace = run_ensemble(&config, spec.replicates, config.seed)?;
    let m = config.occupied_fraction();
    let mean_field = FittedModel::new("mean-field", mean_field_sir_model(pi, pr, m)?, None, &trace)?;
    let equations = learn_sir(&trace, spec.n_splits, spec.seed)?;
    let model = PolynomialModel::new(
        vec!["S".into(), "I".into()],
        vec![equations[0].equation(), equations[1].equation()],
    )?;
    let learned = FittedModel::new("learned", model, None, &trace)?;
    let learned_r0 = compute_r0(&learned.model.equations[1]);

    let data_i = trace.series("I").ok_or_else(|| Error::config("SIR trace has no I column"))?;
    let peak = (0..data_i.len()).fold(0, |k, j| if data_i[j] > data_i[k] { j } else { k });
    let mf_i = mean_field.replay.series("I").unwrap_or_default();
    let peak_error = mf_i.get(peak).map(|v| v - data_i[peak]).unwrap_or(f64::NAN);
    Ok(Cs5Row {
        pi,
        pr,
        mean_field_r0: r0_mean_field(m, pi, pr),
        config,
        trace,
        mean_field,
        learned,
        equations,
        learned_r0,
        peak_error,
    })
}

fn sir_panel(r: &Cs5Row) -> Plot {
    let t = nondim(&r.trace.times, r.pr);
    let mut p = Plot::new(format!("PI = {}, PR = {}", r.pi, r.pr), T_LABEL, "fraction");
    for (k, sp) in ["S", "I"].into_iter().enumerate() {
        let color = PALETTE[if k == 0 { 0 } else { 2 }];
        if let Some(y) = r.trace.series(sp) {
            p.push(Series::new(format!("{sp} ABM"), t.clone(), y.to_vec(), Style::Markers, color));
        }
        for (f, style) in [(&r.mean_field, Style::Line), (&r.learned, Style::Dashed)] {
            if let Some(y) = f.replay.series(sp) {
                p.push(Series::new(
                    format!("{sp} {}", f.name),
                    nondim(&f.replay.times, r.pr),
                    clip_density(y),
                    style,
                    color,
                ));
            }
        }
    }
    p
}

pub(super) fn write_cs5(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let mut table = Table::new(&[
        "pi",
        "pr",
        "pm",
        "mean_field_s",
        "mean_field_s_mse",
        "mean_field_i",
        "mean_field_i_mse",
        "mean_field_r0",
        "learned_s",
        "learned_s_mse",
        "learned_i",
        "learned_i_mse",
        "learned_r0",
        "votes_s",
        "votes_i",
        "peak_i_error",
        "seed",
        "config",
    ]);
    let mut panels = Vec::new();
    let mut r0 = (Vec::new(), Vec::new(), Vec::new());
    for &pi in &spec.rates {
        let r = cs5_point(spec, pi)?;
        let kv = r.config.to_kv();
        let t = tag(pi);
        write_config(out, &format!("configs/cs5_pi{t}.cfg"), &kv, spec.replicates)?;
        out.write(&format!("data/cs5_pi{t}.csv"), &r.trace.to_csv_string())?;
        out.write(&format!("models/cs5_pi{t}_learned.json"), &r.learned.json(spec.seed, &kv))?;
        out.write(&format!("models/cs5_pi{t}_mean_field.json"), &r.mean_field.json(spec.seed, &kv))?;
        for (e, name) in r.equations.iter().zip(["s", "i"]) {
            out.write(&format!("tables/cs5_pi{t}_{name}_splits.csv"), &e.fit_report_csv())?;
        }
        table.push(vec![
            num(pi),
            num(r.pr),
            num(r.config.migration),
            r.mean_field.equation(0),
            mse_cell(&r.mean_field.mse[0]),
            r.mean_field.equation(1),
            mse_cell(&r.mean_field.mse[1]),
            num(r.mean_field_r0),
            r.learned.equation(0),
            mse_cell(&r.learned.mse[0]),
            r.learned.equation(1),
            mse_cell(&r.learned.mse[1]),
            opt_cell(r.learned_r0),
            format!("{}/{}", r.equations[0].votes, r.equations[0].n_splits),
            format!("{}/{}", r.equations[1].votes, r.equations[1].n_splits),
            num(r.peak_error),
            spec.seed.to_string(),
            inline_config(&kv),
        ]);
        panels.push(sir_panel(&r));
        r0.0.push(pi);
        r0.1.push(r.mean_field_r0);
        r0.2.push(r.learned_r0.unwrap_or(f64::NAN));
    }
    panels.push(
        Plot::new("Basic reproductive number", "PI", "R0")
            .with(Series::new("mean-field", r0.0.clone(), r0.1, Style::Line, PALETTE[3]))
            .with(Series::new("learned", r0.0, r0.2, Style::Dashed, PALETTE[1])),
    );
    out.write_table("tables/cs5_summary.csv", &table)?;
    out.write("figures/cs5_fits.svg", &grid_svg(&panels, 2))?;
    Ok(table)
}
