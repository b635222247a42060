//! Equation learning: finite-difference derivatives, term libraries and
//! sparse regression with split-based hyperparameter selection, pruning
//! and voting.

mod derivative;
mod library;
mod pipeline;
mod regression;

pub use derivative::{differentiate, DerivativeEstimate, Scheme};
pub use library::{build_library, parse_library, LibraryMatrix};
pub use pipeline::{
    average_models, default_grid, fit_all, fit_coeffs, form_label, log_grid, prune, prune_and_vote, prune_and_vote_with,
    random_split, seeded_split, select_hyperparameter, select_on_split, AveragedModel, CoeffDistribution, LearnedModel,
    SolverKind, SolverSpec, Split, SplitRecord,
};
pub use regression::{
    column_norms, greedy_fb, lasso_fista, lasso_kkt_residual, lasso_objective, least_squares, least_squares_on,
    power_iteration, residual_norm, GreedyFit, LassoFit, LASSO_ITER_MAX, LASSO_REL_TOL,
};
