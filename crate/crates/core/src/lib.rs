//! Lattice agent-based models and sparse equation learning.
//!
//! The crate is organised around the pipeline it implements:
//!
//! * [`lattice_abm`] simulates birth–death–migration and SIR dynamics on a
//!   square lattice with volume exclusion, using exact stochastic simulation.
//! * [`ode_models`] holds polynomial ODE models, the mean-field reference
//!   models, a fixed-step RK4 integrator and trajectory diagnostics.
//! * [`eql_core`] learns sparse right-hand sides from averaged simulation
//!   output: finite differences, library construction, least squares,
//!   FISTA Lasso, greedy forward–backward selection, and hyperparameter
//!   search with pruning and split voting.
//! * [`model_selection`] chooses between the mean-field and the
//!   correlation-corrected logistic library by train/test voting.
//! * [`harness`] runs the tutorial and the case studies end to end.

pub mod eql_core;
pub mod error;
pub mod harness;
pub mod lattice_abm;
pub mod model_selection;
pub mod ode_models;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
