//! Exact stochastic simulation of the birth–death–migration process.
//!
//! Each step picks a uniformly random agent, draws the waiting time from the
//! total propensity `a = (Pp + Pm + Pd)·C` and selects the event from
//! `R = a·γ`: proliferation for `R < Pp·C`, migration for
//! `R ≤ (Pp + Pm)·C`, death otherwise. Proliferation and migration target one
//! of the four neighbours chosen uniformly and are aborted when the target is
//! occupied or off the lattice.

use rand::Rng;

use super::config::BdmConfig;
use super::lattice::{Direction, Lattice, SiteState};
use super::trace::Trace;
use super::Step;
use crate::rng::{open01, rng_from_seed, SimRng};
use crate::Result;

const NO_AGENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdmEvent {
    /// Daughter placed at the given site, or `None` when aborted.
    Proliferation(Option<usize>),
    /// Agent moved to the given site, or `None` when aborted.
    Migration(Option<usize>),
    Death(usize),
}

#[derive(Debug, Clone)]
pub struct BdmSimulation {
    proliferation: f64,
    death: f64,
    migration: f64,
    lattice: Lattice,
    agents: Vec<u32>,
    slot: Vec<u32>,
    time: f64,
    rng: SimRng,
}

impl BdmSimulation {
    /// Validates `cfg` and places the initial agents uniformly at random.
    pub fn new(cfg: &BdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let lattice = Lattice::random(cfg.lattice_size, &[(SiteState::Agent, cfg.initial_agents())], &mut rng)?;
        Ok(Self::with_lattice(cfg, lattice, rng))
    }

    /// Starts from a given lattice; any occupied site is treated as an agent.
    pub fn from_lattice(cfg: &BdmConfig, lattice: Lattice) -> Self {
        Self::with_lattice(cfg, lattice, rng_from_seed(cfg.seed))
    }

    fn with_lattice(cfg: &BdmConfig, mut lattice: Lattice, rng: SimRng) -> Self {
        let mut agents = Vec::with_capacity(lattice.n_sites());
        let mut slot = vec![NO_AGENT; lattice.n_sites()];
        for idx in 0..lattice.n_sites() {
            if lattice.get(idx).is_occupied() {
                lattice.set(idx, SiteState::Agent);
                slot[idx] = agents.len() as u32;
                agents.push(idx as u32);
            }
        }
        BdmSimulation {
            proliferation: cfg.proliferation,
            death: cfg.death,
            migration: cfg.migration,
            lattice,
            agents,
            slot,
            time: 0.0,
            rng,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn density(&self) -> f64 {
        self.agents.len() as f64 / self.lattice.n_sites() as f64
    }

    /// Checks the agent index against the lattice. Used by tests.
    pub fn index_consistent(&self) -> bool {
        self.agents.len() == self.lattice.occupied()
            && self.lattice.census() == self.lattice.cached_counts()
            && self
                .agents
                .iter()
                .enumerate()
                .all(|(k, &s)| self.slot[s as usize] == k as u32 && self.lattice.get(s as usize) == SiteState::Agent)
    }

    /// Advances by one event unless the next event would occur after
    /// `t_limit`, in which case the clock is set to `t_limit` and no event is
    /// applied. The waiting time is memoryless, so resuming from `t_limit`
    /// leaves the process law unchanged.
    pub fn step(&mut self, t_limit: f64) -> Step<BdmEvent> {
        let c = self.agents.len();
        let total_rate = self.proliferation + self.migration + self.death;
        if c == 0 || c == self.lattice.n_sites() || total_rate <= 0.0 {
            return Step::Absorbed;
        }
        let k = self.rng.random_range(0..c);
        let site = self.agents[k] as usize;
        let cf = c as f64;
        let a = total_rate * cf;
        let tau = -open01(&mut self.rng).ln() / a;
        let t_next = self.time + tau;
        if t_next > t_limit {
            self.time = t_limit;
            return Step::Horizon;
        }
        self.time = t_next;
        let r = a * open01(&mut self.rng);
        let event = if r < self.proliferation * cf {
            let target = self.free_neighbor(site);
            if let Some(t) = target {
                self.add_agent(t);
            }
            BdmEvent::Proliferation(target)
        } else if r <= (self.proliferation + self.migration) * cf {
            let target = self.free_neighbor(site);
            if let Some(t) = target {
                self.move_agent(k, site, t);
            }
            BdmEvent::Migration(target)
        } else {
            self.remove_agent(k, site);
            BdmEvent::Death(site)
        };
        Step::Event { time: t_next, event }
    }

    #[inline]
    fn free_neighbor(&mut self, site: usize) -> Option<usize> {
        let dir = Direction::random(&mut self.rng);
        self.lattice
            .neighbor(site, dir)
            .filter(|&t| self.lattice.get(t) == SiteState::Empty)
    }

    #[inline]
    fn add_agent(&mut self, site: usize) {
        self.lattice.set(site, SiteState::Agent);
        self.slot[site] = self.agents.len() as u32;
        self.agents.push(site as u32);
    }

    #[inline]
    fn move_agent(&mut self, k: usize, from: usize, to: usize) {
        self.lattice.set(from, SiteState::Empty);
        self.lattice.set(to, SiteState::Agent);
        self.slot[from] = NO_AGENT;
        self.slot[to] = k as u32;
        self.agents[k] = to as u32;
    }

    #[inline]
    fn remove_agent(&mut self, k: usize, site: usize) {
        self.lattice.set(site, SiteState::Empty);
        self.slot[site] = NO_AGENT;
        self.agents.swap_remove(k);
        if let Some(&moved) = self.agents.get(k) {
            self.slot[moved as usize] = k as u32;
        }
    }

    /// Runs to the end of the record grid, recording density and occupancy
    /// correlation at each grid time (zero-order hold on the event sequence).
    pub fn record(mut self, times: &[f64]) -> Trace {
        let n = times.len();
        let mut density = Vec::with_capacity(n);
        let mut corr = Vec::with_capacity(n);
        let mut absorbed = false;
        for &t in times {
            while !absorbed {
                match self.step(t) {
                    Step::Event { .. } => {}
                    Step::Horizon => break,
                    Step::Absorbed => absorbed = true,
                }
            }
            density.push(self.density());
            corr.push(self.lattice.occupancy_correlation().unwrap_or(f64::NAN));
        }
        Trace {
            times: times.to_vec(),
            species: vec!["C".into()],
            density: vec![density],
            correlation: Some(corr),
            n_replicates: 1,
        }
    }
}

/// Single BDM realisation recorded on `cfg.n_record` equispaced times.
pub fn simulate_bdm(cfg: &BdmConfig) -> Result<Trace> {
    let sim = BdmSimulation::new(cfg)?;
    Ok(sim.record(&Trace::grid(cfg.t_end, cfg.n_record)))
}
