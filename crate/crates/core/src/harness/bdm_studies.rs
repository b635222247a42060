use super::common::{
    bdm_config, bdm_ensemble, c_max, clip_density, coeff_cells, learn_poly4, nondim, per_capita_plot, trajectory_plot, write_config,
    FittedModel,
};
use super::output::{inline_config, mse_cell, num, opt_cell, tag, OutputDir, Table};
use super::svg::{grid_svg, Plot, Series, Style, PALETTE};
use super::transform::{split_prefix, subsample_trace};
use super::CaseStudySpec;
use crate::eql_core::{average_models, form_label, AveragedModel, LearnedModel};
use crate::lattice_abm::{BdmConfig, Trace};
use crate::ode_models::{mean_field_logistic, mse, FitDiagnostics};
use crate::rng::derive_seed;
use crate::{Error, Result};

const T_LABEL: &str = "T = (Pp - Pd) t";

#[derive(Debug, Clone)]
pub struct Cs1Row {
    pub pp: f64,
    pub pd: f64,
    pub config: BdmConfig,
    pub trace: Trace,
    pub mean_field: FittedModel,
    pub learned: FittedModel,
}

/// One proliferation rate of the parameter sweep, `Pd = ratio·Pp`.
pub fn cs1_point(spec: &CaseStudySpec, pp: f64) -> Result<Cs1Row> {
    let pd = pp * spec.rate_ratio;
    let config = bdm_config(spec, pp, pd, spec.seed);
    let trace = bdm_ensemble(&config, spec.replicates)?;
    let mean_field = FittedModel::new("mean-field", mean_field_logistic(pp, pd), None, &trace)?;
    let learned = FittedModel::from_learned("learned", learn_poly4(&trace, spec.n_splits, spec.seed)?, &trace)?;
    Ok(Cs1Row {
        pp,
        pd,
        config,
        trace,
        mean_field,
        learned,
    })
}

fn votes_cell(l: &Option<LearnedModel>) -> String {
    l.as_ref().map(|l| format!("{}/{}", l.votes, l.n_splits)).unwrap_or_else(|| "-".into())
}

pub(super) fn write_cs1(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let mut table = Table::new(&[
        "pp",
        "pd",
        "pm",
        "mean_field_model",
        "mean_field_mse",
        "learned_model",
        "learned_mse",
        "votes",
        "seed",
        "config",
    ]);
    let mut panels = Vec::new();
    for &pp in &spec.rates {
        let r = cs1_point(spec, pp)?;
        let kv = r.config.to_kv();
        let t = tag(pp);
        write_config(out, &format!("configs/cs1_pp{t}.cfg"), &kv, spec.replicates)?;
        out.write(&format!("data/cs1_pp{t}.csv"), &r.trace.to_csv_string())?;
        out.write(&format!("models/cs1_pp{t}_learned.json"), &r.learned.json(spec.seed, &kv))?;
        out.write(&format!("models/cs1_pp{t}_mean_field.json"), &r.mean_field.json(spec.seed, &kv))?;
        table.push(vec![
            num(pp),
            num(r.pd),
            num(r.config.migration),
            r.mean_field.equation(0),
            mse_cell(&r.mean_field.mse[0]),
            r.learned.equation(0),
            mse_cell(&r.learned.mse[0]),
            votes_cell(&r.learned.learned),
            spec.seed.to_string(),
            inline_config(&kv),
        ]);
        let title = format!("Pp = {pp}");
        panels.push(trajectory_plot(&title, &r.trace, "C", pp - r.pd, T_LABEL, &[&r.mean_field, &r.learned]));
        panels.push(per_capita_plot(
            &format!("{title}: per-capita growth"),
            c_max(&r.trace),
            &[("mean-field", &r.mean_field.model), ("learned", &r.learned.model)],
        ));
    }
    out.write_table("tables/cs1_summary.csv", &table)?;
    out.write("figures/cs1_fits.svg", &grid_svg(&panels, 2))?;
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct Cs2Level {
    pub n: usize,
    pub config: BdmConfig,
    pub seeds: Vec<u64>,
    pub traces: Vec<Trace>,
    pub models: Vec<LearnedModel>,
    /// Coefficients averaged over all realizations, absent terms as zero.
    pub averaged: AveragedModel,
    /// Mean over realizations of the mean-field replay MSE.
    pub mean_field_mse: f64,
    /// Mean over realizations of the averaged model's replay MSE; `None`
    /// when any replay diverged.
    pub learned_mse: Option<f64>,
}

/// Seed of realization `r` of the `n`-replicate level.
pub fn cs2_seed(master: u64, n: usize, r: usize) -> u64 {
    derive_seed(master, ((n as u64) << 20) | r as u64)
}

/// `spec.realizations` independent `n`-replicate datasets, each learned
/// separately, then averaged.
pub fn cs2_level(spec: &CaseStudySpec, n: usize) -> Result<Cs2Level> {
    let pp = spec.rates[0];
    let pd = pp * spec.rate_ratio;
    let base = bdm_config(spec, pp, pd, spec.seed);
    let mut seeds = Vec::new();
    let mut traces = Vec::new();
    let mut models = Vec::new();
    for r in 0..spec.realizations {
        let seed = cs2_seed(spec.seed, n, r);
        let trace = bdm_ensemble(&base.clone().with_seed(seed), n)?;
        models.push(learn_poly4(&trace, spec.n_splits, seed)?);
        seeds.push(seed);
        traces.push(trace);
    }
    let averaged = average_models(&models)?;
    let avg_model = averaged.model.to_model()?;
    let mf = mean_field_logistic(pp, pd);
    let mut mf_sum = 0.0;
    let mut learned_sum = Some(0.0);
    for t in &traces {
        mf_sum += FittedModel::new("mean-field", mf.clone(), None, t)?.first_mse().unwrap_or(f64::NAN);
        let fit = FittedModel::new("learned", avg_model.clone(), None, t)?;
        learned_sum = learned_sum.zip(fit.first_mse()).map(|(a, b)| a + b);
    }
    let k = traces.len() as f64;
    Ok(Cs2Level {
        n,
        config: base,
        seeds,
        traces,
        models,
        averaged,
        mean_field_mse: mf_sum / k,
        learned_mse: learned_sum.map(|s| s / k),
    })
}

/// `‖ξ̂ᵃ − ξ̂ᵇ‖₂` over a shared library.
pub fn xi_change(a: &LearnedModel, b: &LearnedModel) -> f64 {
    a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(super) fn write_cs2(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let mut table = Table::new(&[
        "n_replicates",
        "mean_field_model",
        "mean_field_mse",
        "learned_model",
        "learned_mse",
        "xi_change",
        "seeds",
        "config",
    ]);
    let mut dist = Table::new(&["n_replicates", "term", "min", "q1", "median", "q3", "max", "iqr"]);
    let mut raw: Option<Table> = None;
    let mut levels: Vec<Cs2Level> = Vec::new();
    for &n in &spec.replicate_levels {
        let lvl = cs2_level(spec, n)?;
        let kv = lvl.config.to_kv();
        write_config(out, &format!("configs/cs2_n{n}.cfg"), &kv, n)?;
        let raw = raw.get_or_insert_with(|| {
            let mut h = vec!["n_replicates".to_string(), "realization".into(), "seed".into(), "form".into()];
            h.extend(lvl.averaged.model.labels());
            Table::new(&h)
        });
        for (r, (m, seed)) in lvl.models.iter().zip(&lvl.seeds).enumerate() {
            let mut row = vec![n.to_string(), r.to_string(), seed.to_string(), form_label(&m.terms, &m.form())];
            row.extend(coeff_cells(m));
            raw.push(row);
        }
        for d in &lvl.averaged.distributions {
            dist.push(vec![
                n.to_string(),
                d.label.clone(),
                num(d.min),
                num(d.q1),
                num(d.median),
                num(d.q3),
                num(d.max),
                num(d.iqr()),
            ]);
        }
        let change = levels.last().map(|p| xi_change(&lvl.averaged.model, &p.averaged.model));
        let pp = lvl.config.proliferation;
        let pd = lvl.config.death;
        let seeds: Vec<String> = lvl.seeds.iter().map(|s| s.to_string()).collect();
        table.push(vec![
            n.to_string(),
            format!("dC/dt = {}", mean_field_logistic(pp, pd).equations[0].render()),
            num(lvl.mean_field_mse),
            format!("dC/dt = {}", lvl.averaged.model.equation().render()),
            opt_cell(lvl.learned_mse),
            opt_cell(change),
            seeds.join(";"),
            inline_config(&kv),
        ]);
        let doc = lvl.averaged.model.to_model()?.to_json(serde_json::json!({
            "n_replicates": n,
            "seeds": lvl.seeds,
            "config": kv,
        }));
        out.write(&format!("models/cs2_n{n}_averaged.json"), &doc)?;
        levels.push(lvl);
    }
    out.write_table("tables/cs2_summary.csv", &table)?;
    out.write_table("tables/cs2_coefficient_distributions.csv", &dist)?;
    if let Some(raw) = &raw {
        out.write_table("tables/cs2_realizations.csv", raw)?;
    }
    out.write("figures/cs2_coefficients.svg", &grid_svg(&coefficient_panels(&levels), 2))?;

    let mut fits = Vec::new();
    for lvl in &levels {
        let t = &lvl.traces[0];
        let rate = lvl.config.proliferation - lvl.config.death;
        let mf = FittedModel::new("mean-field", mean_field_logistic(lvl.config.proliferation, lvl.config.death), None, t)?;
        let avg = FittedModel::new("learned (averaged)", lvl.averaged.model.to_model()?, None, t)?;
        fits.push(trajectory_plot(&format!("N = {}", lvl.n), t, "C", rate, T_LABEL, &[&mf, &avg]));
    }
    out.write("figures/cs2_fits.svg", &grid_svg(&fits, 2))?;
    Ok(table)
}

fn coefficient_panels(levels: &[Cs2Level]) -> Vec<Plot> {
    let Some(first) = levels.first() else {
        return Vec::new();
    };
    let ns: Vec<f64> = levels.iter().map(|l| l.n as f64).collect();
    (0..first.averaged.distributions.len())
        .map(|j| {
            let pick = |f: fn(&crate::eql_core::CoeffDistribution) -> f64| {
                levels.iter().map(|l| f(&l.averaged.distributions[j])).collect::<Vec<_>>()
            };
            Plot::new(format!("{} coefficient", first.averaged.distributions[j].label), "N", "value")
                .with(Series::new("median", ns.clone(), pick(|d| d.median), Style::Line, PALETTE[0]))
                .with(Series::new("q1", ns.clone(), pick(|d| d.q1), Style::Dashed, PALETTE[1]))
                .with(Series::new("q3", ns.clone(), pick(|d| d.q3), Style::Dashed, PALETTE[2]))
                .with(Series::new("min/max", ns.clone(), pick(|d| d.min), Style::Markers, PALETTE[3]))
                .with(Series::new("", ns.clone(), pick(|d| d.max), Style::Markers, PALETTE[3]))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Cs3Row {
    /// Retained samples (cs3a) or training fraction (cs3b).
    pub level: f64,
    pub n_train: usize,
    pub learned: FittedModel,
    /// Replay error: against the full trace (cs3a) or the held-out points
    /// only (cs3b). `None` when the replay diverged.
    pub mse: FitDiagnostics,
}

/// Single ensemble, learned from each subsampled copy and scored on the
/// full grid.
pub fn cs3a_rows(spec: &CaseStudySpec) -> Result<(BdmConfig, Trace, Vec<Cs3Row>)> {
    let pp = spec.rates[0];
    let config = bdm_config(spec, pp, pp * spec.rate_ratio, spec.seed);
    let trace = bdm_ensemble(&config, spec.replicates)?;
    let mut rows = Vec::new();
    for &n in &spec.sample_counts {
        let sub = subsample_trace(&trace, n)?;
        let learned = FittedModel::from_learned("learned", learn_poly4(&sub, spec.n_splits, spec.seed)?, &trace)?;
        rows.push(Cs3Row {
            level: n as f64,
            n_train: sub.len(),
            mse: learned.mse[0],
            learned,
        });
    }
    Ok((config, trace, rows))
}

/// Learns from the leading `fraction` of `trace`, replays from its first
/// point over the whole grid and scores the held-out points.
pub fn cs3b_fit(trace: &Trace, fraction: f64, n_splits: usize, seed: u64) -> Result<Cs3Row> {
    let (train, _) = split_prefix(trace, fraction)?;
    let k = train.len();
    let learned = FittedModel::from_learned("learned", learn_poly4(&train, n_splits, seed)?, trace)?;
    let mse = if learned.replay.diverged {
        FitDiagnostics::diverged()
    } else {
        let model = learned
            .replay
            .series("C")
            .ok_or_else(|| Error::numerical("replay lost its state variable"))?;
        let data = trace.series("C").ok_or_else(|| Error::config("trace has no species C"))?;
        FitDiagnostics::new(mse(&model[k..], &data[k..]), false)
    };
    Ok(Cs3Row {
        level: fraction,
        n_train: k,
        learned,
        mse,
    })
}

fn cs3_table(level: &str) -> Table {
    Table::new(&[level, "n_train", "learned_model", "mse", "diverged", "votes", "seed", "config"])
}

fn cs3_push(t: &mut Table, r: &Cs3Row, seed: u64, kv: &str) {
    t.push(vec![
        num(r.level),
        r.n_train.to_string(),
        r.learned.equation(0),
        mse_cell(&r.mse),
        r.mse.diverged.to_string(),
        votes_cell(&r.learned.learned),
        seed.to_string(),
        inline_config(kv),
    ]);
}

pub(super) fn write_cs3a(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let (config, trace, rows) = cs3a_rows(spec)?;
    let kv = config.to_kv();
    write_config(out, "configs/cs3a.cfg", &kv, spec.replicates)?;
    out.write("data/cs3a_trace.csv", &trace.to_csv_string())?;
    let mut table = cs3_table("n_samples");
    let rate = config.proliferation - config.death;
    let mut panels = Vec::new();
    for r in &rows {
        cs3_push(&mut table, r, spec.seed, &kv);
        let n = r.level as usize;
        out.write(&format!("models/cs3a_n{n}.json"), &r.learned.json(spec.seed, &kv))?;
        let sub = subsample_trace(&trace, n)?;
        panels.push(trajectory_plot(&format!("n = {n}"), &sub, "C", rate, T_LABEL, &[&r.learned]));
    }
    out.write_table("tables/cs3a_summary.csv", &table)?;
    out.write("figures/cs3a_fits.svg", &grid_svg(&panels, 2))?;
    Ok(table)
}

pub(super) fn write_cs3b(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let pp = spec.rates[0];
    let config = bdm_config(spec, pp, pp * spec.rate_ratio, spec.seed);
    let trace = bdm_ensemble(&config, spec.replicates)?;
    let kv = config.to_kv();
    write_config(out, "configs/cs3b.cfg", &kv, spec.replicates)?;
    out.write("data/cs3b_trace.csv", &trace.to_csv_string())?;
    let mut table = cs3_table("train_fraction");
    let rate = config.proliferation - config.death;
    let mut panels = Vec::new();
    for &f in &spec.fractions {
        let r = cs3b_fit(&trace, f, spec.n_splits, spec.seed)?;
        cs3_push(&mut table, &r, spec.seed, &kv);
        out.write(&format!("models/cs3b_f{}.json", tag(f)), &r.learned.json(spec.seed, &kv))?;
        let k = r.n_train;
        let c = trace.series("C").unwrap_or_default();
        let t = nondim(&trace.times, rate);
        let mut p = Plot::new(format!("first {}% for training", f * 100.0), T_LABEL, "C")
            .with(Series::new("training", t[..k].to_vec(), c[..k].to_vec(), Style::Markers, PALETTE[0]))
            .with(Series::new("testing", t[k..].to_vec(), c[k..].to_vec(), Style::Markers, PALETTE[2]));
        if let Some(y) = r.learned.replay.series("C") {
            p.push(Series::new(
                if r.mse.diverged { "learned (diverged)" } else { "learned" },
                nondim(&r.learned.replay.times, rate),
                clip_density(y),
                Style::Dashed,
                PALETTE[1],
            ));
        }
        panels.push(p);
    }
    out.write_table("tables/cs3b_summary.csv", &table)?;
    out.write("figures/cs3b_fits.svg", &grid_svg(&panels, 2))?;
    Ok(table)
}
