//! Polynomial ODE models: term evaluation, RK4 replay and the mean-field
//! reference models with their derived quantities.

mod analysis;
mod integrate;
mod model;
mod terms;

pub use analysis::{
    compute_r0, logistic_analytic, logistic_rhs, mean_field_logistic, mean_field_sir, mean_field_sir_model,
    modified_logistic_rhs, mse, per_capita_growth, r0_mean_field, trace_mse, with_recovered, FitDiagnostics,
};
pub use integrate::{integrate_rk4, integrate_rk4_with, rk4, Signal, Trajectory, DEFAULT_SUBSTEPS, DIVERGENCE_LIMIT};
pub use model::{format_5dp, Equation, EquationDocument, ModelDocument, PolynomialModel, TermDocument};
pub use terms::{TermDescriptor, TermRule};
