use super::common::{bdm_config, bdm_ensemble, derivative, model_table, trajectory_plot, write_config, FittedModel, GREEDY_TOL, TUTORIAL_LAMBDA};
use super::output::{OutputDir, Table};
use super::svg::grid_svg;
use super::CaseStudySpec;
use crate::eql_core::{build_library, fit_all, parse_library, prune_and_vote, SolverSpec};
use crate::lattice_abm::{BdmConfig, Trace};
use crate::ode_models::mean_field_logistic;
use crate::Result;

#[derive(Debug, Clone)]
pub struct TutorialResult {
    pub config: BdmConfig,
    pub trace: Trace,
    pub mean_field: FittedModel,
    /// Least squares on all rows.
    pub lstsq: FittedModel,
    /// Lasso at the fixed tutorial λ on all rows.
    pub lasso: FittedModel,
    /// Greedy at the tutorial tolerance on all rows.
    pub greedy: FittedModel,
    /// Lasso with per-split λ selection, pruning and voting.
    pub lasso_voted: FittedModel,
}

impl TutorialResult {
    pub fn fits(&self) -> [&FittedModel; 5] {
        [&self.mean_field, &self.lstsq, &self.lasso, &self.greedy, &self.lasso_voted]
    }
}

/// BDM ensemble at `(Pp, Pd, Pm) = (spec.rates[0], ratio·Pp, 1)`, library
/// `[C, C², C³, C⁴]`, and the tutorial fits.
pub fn run_tutorial(spec: &CaseStudySpec) -> Result<TutorialResult> {
    let pp = spec.rates[0];
    let pd = pp * spec.rate_ratio;
    let config = bdm_config(spec, pp, pd, spec.seed);
    let trace = bdm_ensemble(&config, spec.replicates)?;
    let vars = vec!["C".to_string()];
    let lib = build_library(&trace, &vars, &parse_library("poly4", &vars)?)?;
    let b = derivative(&trace, "C")?;

    let mean_field = FittedModel::new("mean-field", mean_field_logistic(pp, pd), None, &trace)?;
    let lstsq = FittedModel::from_learned("least-squares", fit_all(&lib, &b, &SolverSpec::least_squares())?, &trace)?;
    let lasso = FittedModel::from_learned("lasso", fit_all(&lib, &b, &SolverSpec::lasso(TUTORIAL_LAMBDA))?, &trace)?;
    let greedy = FittedModel::from_learned("greedy", fit_all(&lib, &b, &SolverSpec::greedy(GREEDY_TOL))?, &trace)?;
    let voted = prune_and_vote(&lib, &b, &SolverSpec::lasso_grid().with_splits(spec.n_splits), spec.seed)?;
    let lasso_voted = FittedModel::from_learned("lasso-grid-voted", voted, &trace)?;
    Ok(TutorialResult {
        config,
        trace,
        mean_field,
        lstsq,
        lasso,
        greedy,
        lasso_voted,
    })
}

pub(super) fn write(spec: &CaseStudySpec, out: &mut OutputDir) -> Result<Table> {
    let r = run_tutorial(spec)?;
    let kv = r.config.to_kv();
    write_config(out, "configs/tutorial.cfg", &kv, spec.replicates)?;
    out.write("data/tutorial_trace.csv", &r.trace.to_csv_string())?;
    for f in r.fits() {
        out.write(&format!("models/{}.json", f.name), &f.json(spec.seed, &kv))?;
    }
    if let Some(l) = &r.lasso_voted.learned {
        out.write("tables/tutorial_lasso_splits.csv", &l.fit_report_csv())?;
    }
    let table = model_table(&r.fits(), spec.seed, &kv);
    out.write_table("tables/tutorial_models.csv", &table)?;

    let rate = r.config.proliferation - r.config.death;
    let x = "T = (Pp - Pd) t";
    let panels = [
        trajectory_plot("Least squares", &r.trace, "C", rate, x, &[&r.mean_field, &r.lstsq]),
        trajectory_plot("Lasso", &r.trace, "C", rate, x, &[&r.mean_field, &r.lasso]),
        trajectory_plot("Greedy", &r.trace, "C", rate, x, &[&r.mean_field, &r.greedy]),
        trajectory_plot("Lasso, voted", &r.trace, "C", rate, x, &[&r.mean_field, &r.lasso_voted]),
    ];
    out.write("figures/tutorial_fits.svg", &grid_svg(&panels, 2))?;
    Ok(table)
}
