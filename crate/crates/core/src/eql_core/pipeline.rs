use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::seq::SliceRandom;

use super::library::LibraryMatrix;
use super::regression::{greedy_fb, lasso_fista, least_squares, residual_norm, LASSO_ITER_MAX};
use crate::ode_models::{Equation, PolynomialModel, TermDescriptor};
use crate::parallel::{map_indexed, Execution};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    LeastSquares,
    Lasso,
    Greedy,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::LeastSquares => "lstsq",
            SolverKind::Lasso => "lasso",
            SolverKind::Greedy => "greedy",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lstsq" | "least_squares" | "ls" => Ok(SolverKind::LeastSquares),
            "lasso" => Ok(SolverKind::Lasso),
            "greedy" => Ok(SolverKind::Greedy),
            other => Err(Error::config(format!("unknown solver `{other}` (lstsq, lasso, greedy)"))),
        }
    }
}

/// Default Lasso grid: `λ = 0` plus 100 log-spaced values in `[1e-5, 1e-3]`.
pub fn default_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(1e-5, 1e-3, 100));
    g
}

pub fn log_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Regression back-end and the settings of the split/prune/vote loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub kind: SolverKind,
    /// Fixed Lasso λ; `None` selects λ from `grid` on every split.
    pub lambda: Option<f64>,
    /// Greedy tolerance.
    pub tol: Option<f64>,
    pub iter_max: usize,
    /// Relative increase in test residual a term must cause to survive pruning.
    pub prune_threshold: f64,
    pub n_splits: usize,
    pub grid: Vec<f64>,
}

impl SolverSpec {
    fn base(kind: SolverKind) -> Self {
        SolverSpec {
            kind,
            lambda: None,
            tol: None,
            iter_max: LASSO_ITER_MAX,
            prune_threshold: 0.05,
            n_splits: 10,
            grid: default_grid(),
        }
    }

    pub fn least_squares() -> Self {
        Self::base(SolverKind::LeastSquares)
    }

    pub fn lasso(lambda: f64) -> Self {
        SolverSpec {
            lambda: Some(lambda),
            ..Self::base(SolverKind::Lasso)
        }
    }

    pub fn lasso_grid() -> Self {
        Self::base(SolverKind::Lasso)
    }

    pub fn greedy(tol: f64) -> Self {
        SolverSpec {
            tol: Some(tol),
            ..Self::base(SolverKind::Greedy)
        }
    }

    pub fn with_prune(mut self, threshold: f64) -> Self {
        self.prune_threshold = threshold;
        self
    }

    pub fn with_splits(mut self, n: usize) -> Self {
        self.n_splits = n;
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_iter_max(mut self, iter_max: usize) -> Self {
        self.iter_max = iter_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SolverKind::LeastSquares => {
                if self.lambda.is_some() || self.tol.is_some() {
                    return Err(Error::config("least squares takes neither lambda nor tol"));
                }
            }
            SolverKind::Lasso => {
                if self.tol.is_some() {
                    return Err(Error::config("lasso takes lambda, not tol"));
                }
                match self.lambda {
                    Some(l) if !(l >= 0.0 && l.is_finite()) => {
                        return Err(Error::config(format!("lambda must be >= 0, got {l}")))
                    }
                    None if self.grid.is_empty() || self.grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) => {
                        return Err(Error::config("lambda grid must be non-empty and non-negative"))
                    }
                    _ => {}
                }
                if self.iter_max == 0 {
                    return Err(Error::config("iter_max must be positive"));
                }
            }
            SolverKind::Greedy => {
                if self.lambda.is_some() {
                    return Err(Error::config("greedy takes tol, not lambda"));
                }
                match self.tol {
                    Some(t) if t > 0.0 && t.is_finite() => {}
                    _ => return Err(Error::config("greedy needs a positive tol")),
                }
            }
        }
        if !(self.prune_threshold >= 0.0 && self.prune_threshold.is_finite()) {
            return Err(Error::config("pruning threshold must be >= 0"));
        }
        if self.n_splits == 0 {
            return Err(Error::config("need at least one split"));
        }
        Ok(())
    }
}

/// Row partition; both halves ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform random half split of `0..n`. With odd `n` the extra row trains.
pub fn random_split<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_train = n.div_ceil(2);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Split { train, test }
}

/// Split `k` of a run seeded with `seed`.
pub fn seeded_split(n: usize, seed: u64, k: usize) -> Split {
    random_split(n, &mut rng_from_seed(derive_seed(seed, k as u64)))
}

fn rows(b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| b[i]))
}

/// One fit with hyperparameter `param` (λ or tol; ignored for least squares).
/// Lasso with `λ = 0` is solved directly as least squares.
pub fn fit_coeffs(
    kind: SolverKind,
    theta: &nalgebra::DMatrix<f64>,
    b: &DVector<f64>,
    param: f64,
    iter_max: usize,
) -> Result<DVector<f64>> {
    match kind {
        SolverKind::LeastSquares => Ok(least_squares(theta, b)),
        SolverKind::Lasso if param == 0.0 => Ok(least_squares(theta, b)),
        SolverKind::Lasso => Ok(lasso_fista(theta, b, param, iter_max)?.coeffs),
        SolverKind::Greedy => Ok(greedy_fb(theta, b, param)?.coeffs),
    }
}

/// Fits every grid value on `split.train` and returns the one with the
/// smallest test residual norm; ties go to the smaller λ.
pub fn select_on_split(
    lib: &LibraryMatrix,
    b: &DVector<f64>,
    split: &Split,
    grid: &[f64],
    iter_max: usize,
) -> Result<(f64, DVector<f64>)> {
    if grid.is_empty() {
        return Err(Error::config("hyperparameter grid is empty"));
    }
    let (tr, te) = (lib.theta.select_rows(&split.train), lib.theta.select_rows(&split.test));
    let (btr, bte) = (rows(b, &split.train), rows(b, &split.test));
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, DVector<f64>, f64)> = None;
    for &lam in &sorted {
        let xi = fit_coeffs(SolverKind::Lasso, &tr, &btr, lam, iter_max)?;
        let r = residual_norm(&te, &bte, &xi);
        if best.as_ref().is_none_or(|(_, _, br)| r < *br) {
            best = Some((lam, xi, r));
        }
    }
    let (lam, xi, _) = best.expect("grid is non-empty");
    Ok((lam, xi))
}

/// Grid search for λ on one seeded 50/50 split.
pub fn select_hyperparameter(lib: &LibraryMatrix, b: &[f64], grid: &[f64], seed: u64) -> Result<f64> {
    let n = lib.nrows();
    if n < 4 {
        return Err(Error::config("hyperparameter selection needs at least 4 rows"));
    }
    let b = DVector::from_column_slice(b);
    Ok(select_on_split(lib, &b, &seeded_split(n, seed, 0), grid, LASSO_ITER_MAX)?.0)
}

/// Zeroes each nonzero coefficient whose removal raises the squared test
/// residual by no more than `threshold` (relative). All terms are judged
/// against the unpruned vector.
pub fn prune(theta_test: &nalgebra::DMatrix<f64>, b_test: &DVector<f64>, xi: &DVector<f64>, threshold: f64) -> DVector<f64> {
    let base = (b_test - theta_test * xi).norm_squared();
    let mut out = xi.clone();
    for j in 0..xi.len() {
        if xi[j] == 0.0 {
            continue;
        }
        let mut z = xi.clone();
        z[j] = 0.0;
        let r = (b_test - theta_test * &z).norm_squared();
        if r - base <= threshold * base {
            out[j] = 0.0;
        }
    }
    out
}

/// Outcome of one train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub split_id: usize,
    /// λ for Lasso, tol for greedy, 0 for least squares.
    pub hyper: f64,
    pub form: Vec<bool>,
    pub coeffs: Vec<f64>,
    pub test_residual: f64,
}

/// Sparse learned right-hand side over a fixed library.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    pub terms: Vec<TermDescriptor>,
    pub variables: Vec<String>,
    /// Same length as `terms`; zero marks an excluded term.
    pub coeffs: Vec<f64>,
    pub solver: SolverKind,
    /// Splits (or models) that produced the reported form.
    pub votes: usize,
    pub n_splits: usize,
    pub splits: Vec<SplitRecord>,
}

impl LearnedModel {
    pub fn form(&self) -> Vec<bool> {
        self.coeffs.iter().map(|&c| c != 0.0).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label.clone()).collect()
    }

    pub fn coeff(&self, label: &str) -> Option<f64> {
        self.terms.iter().position(|t| t.label == label).map(|i| self.coeffs[i])
    }

    /// The included terms as an equation.
    pub fn equation(&self) -> Equation {
        Equation::new(
            self.terms
                .iter()
                .zip(&self.coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(t, &c)| (t.clone(), c))
                .collect(),
        )
    }

    /// Single-equation model for a one-variable library.
    pub fn to_model(&self) -> Result<PolynomialModel> {
        PolynomialModel::new(self.variables.clone(), vec![self.equation()])
    }

    /// Per-split fit report: `split_id,lambda,form,<coeffs>,test_residual`.
    pub fn fit_report_csv(&self) -> String {
        let mut out = format!("split_id,lambda,form,{},test_residual\n", self.labels().join(","));
        for s in &self.splits {
            let coeffs: Vec<String> = s.coeffs.iter().map(|c| format!("{c:e}")).collect();
            out.push_str(&format!(
                "{},{:e},{},{},{:e}\n",
                s.split_id,
                s.hyper,
                form_label(&self.terms, &s.form),
                coeffs.join(","),
                s.test_residual
            ));
        }
        out
    }
}

/// `C+C^2` style name of a form; `0` when empty.
pub fn form_label(terms: &[TermDescriptor], form: &[bool]) -> String {
    let parts: Vec<&str> = terms.iter().zip(form).filter(|(_, &f)| f).map(|(t, _)| t.label.as_str()).collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

fn fit_split(lib: &LibraryMatrix, b: &DVector<f64>, spec: &SolverSpec, split_id: usize, split: &Split) -> Result<SplitRecord> {
    let (tr, te) = (lib.theta.select_rows(&split.train), lib.theta.select_rows(&split.test));
    let (btr, bte) = (rows(b, &split.train), rows(b, &split.test));
    let (hyper, xi) = match spec.kind {
        SolverKind::LeastSquares => (0.0, least_squares(&tr, &btr)),
        SolverKind::Lasso => match spec.lambda {
            Some(l) => (l, fit_coeffs(SolverKind::Lasso, &tr, &btr, l, spec.iter_max)?),
            None => select_on_split(lib, b, split, &spec.grid, spec.iter_max)?,
        },
        SolverKind::Greedy => {
            let tol = spec.tol.expect("validated");
            (tol, greedy_fb(&tr, &btr, tol)?.coeffs)
        }
    };
    let xi = prune(&te, &bte, &xi, spec.prune_threshold);
    Ok(SplitRecord {
        split_id,
        hyper,
        form: xi.iter().map(|&c| c != 0.0).collect(),
        test_residual: residual_norm(&te, &bte, &xi),
        coeffs: xi.iter().copied().collect(),
    })
}

/// Fits on `n_splits` seeded random halves, prunes each fit on its test
/// half and reports the most frequent form with coefficients averaged over
/// the splits that produced it. Ties between forms go to the one with
/// fewer terms, then to the one seen first.
pub fn prune_and_vote(lib: &LibraryMatrix, b: &[f64], spec: &SolverSpec, seed: u64) -> Result<LearnedModel> {
    prune_and_vote_with(lib, b, spec, seed, Execution::Auto)
}

pub fn prune_and_vote_with(
    lib: &LibraryMatrix,
    b: &[f64],
    spec: &SolverSpec,
    seed: u64,
    exec: Execution,
) -> Result<LearnedModel> {
    spec.validate()?;
    let n = lib.nrows();
    if b.len() != n {
        return Err(Error::config("derivative length differs from library rows"));
    }
    if n < 4 {
        return Err(Error::config("split fitting needs at least 4 rows"));
    }
    let bv = DVector::from_column_slice(b);
    let splits: Vec<SplitRecord> = map_indexed(spec.n_splits, exec, |k| {
        fit_split(lib, &bv, spec, k, &seeded_split(n, seed, k))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut forms: Vec<(Vec<bool>, usize)> = Vec::new();
    for s in &splits {
        match forms.iter_mut().find(|(f, _)| *f == s.form) {
            Some((_, c)) => *c += 1,
            None => forms.push((s.form.clone(), 1)),
        }
    }
    let size = |f: &[bool]| f.iter().filter(|&&x| x).count();
    let mut winner = 0;
    for (i, (f, c)) in forms.iter().enumerate() {
        let (wf, wc) = &forms[winner];
        if *c > *wc || (*c == *wc && size(f) < size(wf)) {
            winner = i;
        }
    }
    let (form, votes) = forms[winner].clone();
    let d = lib.ncols();
    let mut coeffs = vec![0.0; d];
    for s in splits.iter().filter(|s| s.form == form) {
        for (c, x) in coeffs.iter_mut().zip(&s.coeffs) {
            *c += x / votes as f64;
        }
    }
    Ok(LearnedModel {
        terms: lib.terms.clone(),
        variables: lib.variables.clone(),
        coeffs,
        solver: spec.kind,
        votes,
        n_splits: spec.n_splits,
        splits,
    })
}

/// Single fit on all rows without splitting or pruning. Lasso needs a fixed λ.
pub fn fit_all(lib: &LibraryMatrix, b: &[f64], spec: &SolverSpec) -> Result<LearnedModel> {
    spec.validate()?;
    if b.len() != lib.nrows() {
        return Err(Error::config("derivative length differs from library rows"));
    }
    let param = match spec.kind {
        SolverKind::LeastSquares => 0.0,
        SolverKind::Lasso => spec
            .lambda
            .ok_or_else(|| Error::config("a single Lasso fit needs a fixed lambda"))?,
        SolverKind::Greedy => spec.tol.expect("validated"),
    };
    let bv = DVector::from_column_slice(b);
    let xi = fit_coeffs(spec.kind, &lib.theta, &bv, param, spec.iter_max)?;
    Ok(LearnedModel {
        terms: lib.terms.clone(),
        variables: lib.variables.clone(),
        coeffs: xi.iter().copied().collect(),
        solver: spec.kind,
        votes: 1,
        n_splits: 1,
        splits: vec![SplitRecord {
            split_id: 0,
            hyper: param,
            form: xi.iter().map(|&c| c != 0.0).collect(),
            coeffs: xi.iter().copied().collect(),
            test_residual: residual_norm(&lib.theta, &bv, &xi),
        }],
    })
}

/// Five-number summary of one coefficient across models.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffDistribution {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl CoeffDistribution {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedModel {
    pub model: LearnedModel,
    pub distributions: Vec<CoeffDistribution>,
}

/// Term-wise mean of models over a shared library; excluded terms count as 0.
pub fn average_models(models: &[LearnedModel]) -> Result<AveragedModel> {
    let first = models.first().ok_or_else(|| Error::config("nothing to average"))?;
    if models.iter().any(|m| m.terms != first.terms) {
        return Err(Error::config("models to average must share one library"));
    }
    let d = first.terms.len();
    let k = models.len() as f64;
    let mut coeffs = vec![0.0; d];
    let mut distributions = Vec::with_capacity(d);
    for j in 0..d {
        let mut v: Vec<f64> = models.iter().map(|m| m.coeffs[j]).collect();
        coeffs[j] = v.iter().sum::<f64>() / k;
        v.sort_by(f64::total_cmp);
        distributions.push(CoeffDistribution {
            label: first.terms[j].label.clone(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        });
    }
    Ok(AveragedModel {
        model: LearnedModel {
            terms: first.terms.clone(),
            variables: first.variables.clone(),
            coeffs,
            solver: first.solver,
            votes: models.len(),
            n_splits: models.len(),
            splits: Vec::new(),
        },
        distributions,
    })
}
