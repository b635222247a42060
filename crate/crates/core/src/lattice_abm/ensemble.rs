use super::bdm::BdmSimulation;
use super::config::{BdmConfig, SirConfig};
use super::lattice::Lattice;
use super::sir::SirSimulation;
use super::trace::Trace;
use crate::parallel::{map_indexed, Execution};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// A lattice model that can be initialised and simulated from a seed.
pub trait LatticeModel: Sync {
    /// Initial lattice for the configured seed.
    fn init_lattice(&self) -> Result<Lattice>;
    /// One realisation using `seed` in place of the configured seed.
    fn simulate_seeded(&self, seed: u64) -> Result<Trace>;
}

impl LatticeModel for BdmConfig {
    fn init_lattice(&self) -> Result<Lattice> {
        Ok(BdmSimulation::new(self)?.lattice().clone())
    }

    fn simulate_seeded(&self, seed: u64) -> Result<Trace> {
        super::simulate_bdm(&self.clone().with_seed(seed))
    }
}

impl LatticeModel for SirConfig {
    fn init_lattice(&self) -> Result<Lattice> {
        Ok(SirSimulation::new(self)?.lattice().clone())
    }

    fn simulate_seeded(&self, seed: u64) -> Result<Trace> {
        super::simulate_sir(&self.clone().with_seed(seed))
    }
}

/// Seed used for replicate `k` of an ensemble with `master_seed`.
pub fn replicate_seed(master_seed: u64, k: usize) -> u64 {
    derive_seed(master_seed, k as u64)
}

/// Runs `n` independent replicates, returned in replicate order.
pub fn run_replicates<M: LatticeModel>(model: &M, n: usize, master_seed: u64, exec: Execution) -> Result<Vec<Trace>> {
    if n == 0 {
        return Err(Error::config("ensemble needs at least one replicate"));
    }
    map_indexed(n, exec, |k| model.simulate_seeded(replicate_seed(master_seed, k)))
        .into_iter()
        .collect()
}

/// Pointwise ensemble mean over `n` replicates. Bit-identical for a fixed
/// `(model, n, master_seed)` whatever the execution mode.
pub fn run_ensemble<M: LatticeModel>(model: &M, n: usize, master_seed: u64) -> Result<Trace> {
    run_ensemble_with(model, n, master_seed, Execution::Auto)
}

pub fn run_ensemble_with<M: LatticeModel>(model: &M, n: usize, master_seed: u64, exec: Execution) -> Result<Trace> {
    Trace::mean(&run_replicates(model, n, master_seed, exec)?)
}
