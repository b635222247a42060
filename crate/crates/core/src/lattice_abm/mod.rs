//! Two-dimensional lattice agent-based models.
//!
//! Sites hold at most one agent and the boundary is reflecting: a move or
//! placement aimed off the lattice is aborted, so every direction keeps its
//! rate `P/4`. Simulations record on an equispaced grid using the state at
//! the last event at or before each grid time.

mod bdm;
mod config;
mod ensemble;
mod lattice;
mod sir;
mod trace;

pub use bdm::{simulate_bdm, BdmEvent, BdmSimulation};
pub use config::{BdmConfig, ModelConfig, SirConfig, BDM_NONDIM_HORIZON, SIR_NONDIM_HORIZON};
pub use ensemble::{replicate_seed, run_ensemble, run_ensemble_with, run_replicates, LatticeModel};
pub use lattice::{Direction, Lattice, SiteState};
pub use sir::{simulate_sir, SirEvent, SirSimulation};
pub use trace::{uniform_step, Trace};

/// Outcome of a single simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step<E> {
    Event { time: f64, event: E },
    /// The next event falls after the requested limit; the clock now sits at it.
    Horizon,
    /// No further state change is possible.
    Absorbed,
}

/// Initial lattice for a configuration.
pub fn init_lattice<M: LatticeModel>(model: &M) -> crate::Result<Lattice> {
    model.init_lattice()
}
