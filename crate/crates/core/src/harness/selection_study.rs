use super::common::{bdm_config, bdm_ensemble, derivative, trajectory_plot, write_config, FittedModel};
use super::output::{inline_config, mse_cell, num, tag, OutputDir, Table};
use super::svg::grid_svg;
use super::CaseStudySpec;
use crate::lattice_abm::{BdmConfig, Trace};
use crate::model_selection::{build_candidate_libraries, vote_select, SelectionResult};
use crate::ode_models::{mean_field_logistic, Equation, PolynomialModel};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Cs4Row {
    pub pp: f64,
    pub pd: f64,
    pub config: BdmConfig,
    pub trace: Trace,
    pub selection: SelectionResult,
    /// Winning library with its averaged coefficients.
    pub selected: FittedModel,
    pub mean_field: FittedModel,
}

/// Mean-field vs correlation-corrected library vote at one `Pp`.
pub fn cs4_point(spec: &CaseStudySpec, pp: f64) -> Result<Cs4Row> {
    let pd = pp * spec.rate_ratio;
    let config = bdm_config(spec, pp, pd, spec.seed);
    let trace = bdm_ensemble(&config, spec.replicates)?;
    let b = derivative(&trace, "C")?;
    let (l1, l2) = build_candidate_libraries(&trace, &trace)?;
    let selection = vote_select(&l1, &l2, &b, spec.selection_splits, spec.seed)?;
    let lib = if selection.winner == 0 { &l1 } else { &l2 };
    let eq = Equation::new(lib.terms.iter().cloned().zip(selection.winner_coeffs().iter().copied()).collect());
    let model = PolynomialModel::new(lib.variables.clone(), vec![eq])?;
    let selected = FittedModel::new(selection.winner_name(), model, None, &trace)?;
    let mean_field = FittedModel::new("mean-field (Pp, Pd)", mean_field_logistic(pp, pd), None, &trace)?;
    Ok(Cs4Row {
        pp,
        pd,
        config,
        trace,
        selection,
        selected,
        mean_field,
    })
}

pub(super) fn write_cs4(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let mut table = Table::new(&[
        "pp",
        "pd",
        "selected",
        "votes",
        "selected_model",
        "estimated_pp",
        "estimated_pd",
        "selected_mse",
        "ties",
        "seed",
        "config",
    ]);
    let mut panels = Vec::new();
    for &pp in &spec.rates {
        let r = cs4_point(spec, pp)?;
        let kv = r.config.to_kv();
        let t = tag(pp);
        write_config(out, &format!("configs/cs4_pp{t}.cfg"), &kv, spec.replicates)?;
        out.write(&format!("data/cs4_pp{t}.csv"), &r.trace.to_csv_string())?;
        out.write(&format!("models/cs4_pp{t}_selection.json"), &r.selection.to_json()?)?;
        out.write(&format!("tables/cs4_pp{t}_residuals.csv"), &r.selection.residuals_csv())?;
        out.write(&format!("models/cs4_pp{t}_selected.json"), &r.selected.json(spec.seed, &kv))?;
        let (est_pp, est_pd) = r.selection.estimated_rates().unwrap_or((f64::NAN, f64::NAN));
        table.push(vec![
            num(pp),
            num(r.pd),
            r.selection.winner_name().to_string(),
            format!("{}/{}", r.selection.votes[r.selection.winner], r.selection.n_splits()),
            r.selected.equation(0),
            num(est_pp),
            num(est_pd),
            mse_cell(&r.selected.mse[0]),
            r.selection.ties.to_string(),
            spec.seed.to_string(),
            inline_config(&kv),
        ]);
        panels.push(trajectory_plot(
            &format!("Pp = {pp}: {} selected", r.selection.winner_name()),
            &r.trace,
            "C",
            pp - r.pd,
            "T = (Pp - Pd) t",
            &[&r.mean_field, &r.selected],
        ));
    }
    out.write_table("tables/cs4_summary.csv", &table)?;
    out.write("figures/cs4_fits.svg", &grid_svg(&panels, 2))?;
    Ok(table)
}
