use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use abm_eql::eql_core::{build_library, fit_all, log_grid, parse_library, prune_and_vote, SolverKind, SolverSpec};
use abm_eql::harness::{self, derivative, replay, CaseStudyId, CaseStudySpec, OutputDir, Scale};
use abm_eql::lattice_abm::{run_ensemble, ModelConfig, Trace};
use abm_eql::model_selection::{build_candidate_libraries, vote_select};
use abm_eql::ode_models::{trace_mse, PolynomialModel};
use abm_eql::{Error, Result};

#[derive(Parser)]
#[command(name = "abm-eql", version, about = "Lattice agent-based simulation and sparse ODE learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Bdm,
    Sir,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble from a `key = value` config and write its mean trace.
    Simulate {
        model: ModelKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Master seed; defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a sparse right-hand side for each variable of a trace.
    Learn(LearnArgs),
    /// Vote between the mean-field and correlation-corrected logistic libraries.
    Select {
        #[arg(long)]
        data: PathBuf,
        /// Trace holding `F`; defaults to `--data`.
        #[arg(long)]
        corr: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        splits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the tutorial or a case study end to end.
    Casestudy {
        id: CaseStudyId,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Scale::Paper)]
        scale: Scale,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Override the replicate count per ensemble.
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the lattice size.
        #[arg(long)]
        lattice_size: Option<usize>,
    },
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    data: PathBuf,
    /// Preset (`poly4`, `sir`, `logistic`, `modified`) or comma-separated term labels.
    #[arg(long)]
    library: String,
    /// State variables, comma-separated; defaults to `C` or `S,I`.
    #[arg(long)]
    variables: Option<String>,
    #[arg(long, default_value = "greedy")]
    solver: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    grid_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    grid_max: f64,
    #[arg(long, default_value_t = 100)]
    grid_count: usize,
    /// Pruning threshold in percent.
    #[arg(long, default_value_t = 5.0)]
    prune_pct: f64,
    /// Train/test splits for pruning and voting; 0 fits once on all rows.
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate {
            model,
            config,
            replicates,
            seed,
            out,
        } => simulate(model, &config, replicates, seed, &out),
        Command::Learn(args) => learn(&args),
        Command::Select {
            data,
            corr,
            splits,
            seed,
            out,
        } => select(&data, corr.as_deref(), splits, seed, out.as_deref()),
        Command::Casestudy {
            id,
            out,
            scale,
            seed,
            replicates,
            lattice_size,
        } => {
            let mut spec = CaseStudySpec::new(id, scale, seed);
            if let Some(n) = replicates {
                spec = spec.with_replicates(n);
            }
            if let Some(x) = lattice_size {
                spec = spec.with_lattice_size(x);
            }
            let report = harness::run_case_study(&spec, &out)?;
            print!("{}", report.table.to_csv()?);
            eprintln!("{}: wrote {} files to {}", report.id, report.files.len(), out.display());
            Ok(())
        }
    }
}

fn simulate(kind: ModelKind, path: &Path, replicates: usize, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = ModelConfig::load(path)?;
    let mut dir = OutputDir::create(out)?;
    let (trace, kv) = match (kind, cfg) {
        (ModelKind::Bdm, ModelConfig::Bdm(c)) => {
            let c = c.clone().with_seed(seed.unwrap_or(c.seed));
            (run_ensemble(&c, replicates, c.seed)?, c.to_kv())
        }
        (ModelKind::Sir, ModelConfig::Sir(c)) => {
            let c = c.clone().with_seed(seed.unwrap_or(c.seed));
            (run_ensemble(&c, replicates, c.seed)?, c.to_kv())
        }
        _ => return Err(Error::config("config model does not match the simulate subcommand")),
    };
    dir.write("trace.csv", &trace.to_csv_string())?;
    dir.write("config.cfg", &format!("# replicates = {replicates}\n{kv}"))?;
    eprintln!("wrote {} ({} points, {} replicates)", out.join("trace.csv").display(), trace.len(), replicates);
    Ok(())
}

fn learn(a: &LearnArgs) -> Result<()> {
    let trace = Trace::load(&a.data)?;
    let vars: Vec<String> = match &a.variables {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        None if trace.series("C").is_some() => vec!["C".into()],
        None => vec!["S".into(), "I".into()],
    };
    let kind: SolverKind = a.solver.parse()?;
    let spec = match kind {
        SolverKind::LeastSquares => SolverSpec::least_squares(),
        SolverKind::Greedy => SolverSpec::greedy(a.tol),
        SolverKind::Lasso => match a.lambda {
            Some(l) => SolverSpec::lasso(l),
            None => SolverSpec::lasso_grid().with_grid(log_grid(a.grid_min, a.grid_max, a.grid_count)),
        },
    }
    .with_prune(a.prune_pct / 100.0);
    let spec = if a.splits > 0 { spec.with_splits(a.splits) } else { spec };
    spec.validate()?;
    let lib = build_library(&trace, &vars, &parse_library(&a.library, &vars)?)?;

    let mut dir = OutputDir::create(&a.out)?;
    let mut equations = Vec::new();
    for v in &vars {
        let b = derivative(&trace, v)?;
        let m = if a.splits == 0 {
            fit_all(&lib, &b, &spec)?
        } else {
            prune_and_vote(&lib, &b, &spec, a.seed)?
        };
        dir.write(&format!("fit_report_{v}.csv"), &m.fit_report_csv())?;
        equations.push(m.equation());
    }
    let model = PolynomialModel::new(vars.clone(), equations)?;
    let traj = replay(&model, &trace, &trace.times)?;
    let mut mses = serde_json::Map::new();
    for v in &vars {
        mses.insert(v.clone(), json!(trace_mse(&traj, &trace, v)?.mse));
    }
    let meta = json!({
        "data": a.data.display().to_string(),
        "library": a.library,
        "solver": kind.name(),
        "lambda": spec.lambda,
        "tol": spec.tol,
        "prune_threshold": spec.prune_threshold,
        "splits": a.splits,
        "seed": a.seed,
        "replay_mse": mses,
        "diverged": traj.diverged,
    });
    dir.write("model.json", &model.to_json(meta))?;
    for line in model.render() {
        println!("{line}");
    }
    Ok(())
}

fn select(data: &Path, corr: Option<&Path>, splits: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let c = Trace::load(data)?;
    let f = match corr {
        Some(p) => Trace::load(p)?,
        None => c.clone(),
    };
    let (l1, l2) = build_candidate_libraries(&c, &f)?;
    let b = derivative(&c, "C")?;
    let result = vote_select(&l1, &l2, &b, splits, seed)?;
    let report = result.to_json()?;
    if let Some(dir) = out {
        let mut dir = OutputDir::create(dir)?;
        dir.write("selection.json", &report)?;
        dir.write("residuals.csv", &result.residuals_csv())?;
    }
    println!("{report}");
    Ok(())
}
