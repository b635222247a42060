//! Exact stochastic simulation of the lattice SIR model.
//!
//! Every agent attempts to move at rate `Pm`; every infected agent attempts
//! an infection at rate `PI` (one random neighbour, converted only when it is
//! susceptible) and recovers at rate `PR`. With total propensity
//! `a = Pm·N + (PI + PR)·I` a single uniform draw picks the event class, then
//! a uniform agent of the matching class.

use rand::Rng;

use super::config::SirConfig;
use super::lattice::{Direction, Lattice, SiteState};
use super::trace::Trace;
use super::Step;
use crate::rng::{open01, rng_from_seed, SimRng};
use crate::Result;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SirEvent {
    Migration(Option<usize>),
    /// Site that became infected, or `None` when the target was not susceptible.
    Infection(Option<usize>),
    Recovery(usize),
}

#[derive(Debug, Clone)]
pub struct SirSimulation {
    infection: f64,
    recovery: f64,
    migration: f64,
    lattice: Lattice,
    agents: Vec<u32>,
    agent_slot: Vec<u32>,
    infected: Vec<u32>,
    infected_slot: Vec<u32>,
    time: f64,
    rng: SimRng,
}

impl SirSimulation {
    pub fn new(cfg: &SirConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let (s, i) = cfg.initial_counts();
        let lattice = Lattice::random(
            cfg.lattice_size,
            &[(SiteState::Susceptible, s), (SiteState::Infected, i)],
            &mut rng,
        )?;
        Ok(Self::with_lattice(cfg, lattice, rng))
    }

    /// Starts from a given SIR lattice. `Agent` sites are not allowed.
    pub fn from_lattice(cfg: &SirConfig, lattice: Lattice) -> Self {
        assert_eq!(lattice.count(SiteState::Agent), 0, "SIR lattice holds BDM agents");
        Self::with_lattice(cfg, lattice, rng_from_seed(cfg.seed))
    }

    fn with_lattice(cfg: &SirConfig, lattice: Lattice, rng: SimRng) -> Self {
        let n = lattice.n_sites();
        let mut sim = SirSimulation {
            infection: cfg.infection,
            recovery: cfg.recovery,
            migration: cfg.migration,
            agents: Vec::with_capacity(lattice.occupied()),
            agent_slot: vec![NONE; n],
            infected: Vec::new(),
            infected_slot: vec![NONE; n],
            lattice,
            time: 0.0,
            rng,
        };
        for idx in 0..n {
            let st = sim.lattice.get(idx);
            if st.is_occupied() {
                sim.agent_slot[idx] = sim.agents.len() as u32;
                sim.agents.push(idx as u32);
            }
            if st == SiteState::Infected {
                sim.infected_slot[idx] = sim.infected.len() as u32;
                sim.infected.push(idx as u32);
            }
        }
        sim
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

    /// Fractions `(S, I, R)` of the agent population.
    pub fn fractions(&self) -> [f64; 3] {
        let n = self.agents.len() as f64;
        [
            self.lattice.count(SiteState::Susceptible) as f64 / n,
            self.lattice.count(SiteState::Infected) as f64 / n,
            self.lattice.count(SiteState::Recovered) as f64 / n,
        ]
    }

    pub fn index_consistent(&self) -> bool {
        let l = &self.lattice;
        self.agents.len() == l.occupied()
            && self.infected.len() == l.count(SiteState::Infected)
            && l.census() == l.cached_counts()
            && self
                .agents
                .iter()
                .enumerate()
                .all(|(k, &s)| self.agent_slot[s as usize] == k as u32 && l.get(s as usize).is_occupied())
            && self
                .infected
                .iter()
                .enumerate()
                .all(|(k, &s)| self.infected_slot[s as usize] == k as u32 && l.get(s as usize) == SiteState::Infected)
    }

    /// Same contract as [`super::BdmSimulation::step`]. The process is
    /// absorbed once no infected agents remain, since movement alone does not
    /// change the recorded fractions.
    pub fn step(&mut self, t_limit: f64) -> Step<SirEvent> {
        let n_inf = self.infected.len();
        let movers = self.migration * self.agents.len() as f64;
        let a = movers + (self.infection + self.recovery) * n_inf as f64;
        if n_inf == 0 || a <= 0.0 {
            return Step::Absorbed;
        }
        let tau = -open01(&mut self.rng).ln() / a;
        let t_next = self.time + tau;
        if t_next > t_limit {
            self.time = t_limit;
            return Step::Horizon;
        }
        self.time = t_next;
        let r = a * open01(&mut self.rng);
        let event = if r < movers {
            let k = self.rng.random_range(0..self.agents.len());
            SirEvent::Migration(self.try_move(k))
        } else {
            let j = self.rng.random_range(0..n_inf);
            let site = self.infected[j] as usize;
            if r < movers + self.infection * n_inf as f64 {
                let dir = Direction::random(&mut self.rng);
                let target = self
                    .lattice
                    .neighbor(site, dir)
                    .filter(|&t| self.lattice.get(t) == SiteState::Susceptible);
                if let Some(t) = target {
                    self.lattice.set(t, SiteState::Infected);
                    self.infected_slot[t] = self.infected.len() as u32;
                    self.infected.push(t as u32);
                }
                SirEvent::Infection(target)
            } else {
                self.lattice.set(site, SiteState::Recovered);
                self.infected_slot[site] = NONE;
                self.infected.swap_remove(j);
                if let Some(&moved) = self.infected.get(j) {
                    self.infected_slot[moved as usize] = j as u32;
                }
                SirEvent::Recovery(site)
            }
        };
        Step::Event { time: t_next, event }
    }

    fn try_move(&mut self, k: usize) -> Option<usize> {
        let from = self.agents[k] as usize;
        let dir = Direction::random(&mut self.rng);
        let to = self
            .lattice
            .neighbor(from, dir)
            .filter(|&t| self.lattice.get(t) == SiteState::Empty)?;
        let state = self.lattice.get(from);
        self.lattice.set(to, state);
        self.lattice.set(from, SiteState::Empty);
        self.agents[k] = to as u32;
        self.agent_slot[to] = k as u32;
        self.agent_slot[from] = NONE;
        if state == SiteState::Infected {
            let j = self.infected_slot[from];
            self.infected[j as usize] = to as u32;
            self.infected_slot[to] = j;
            self.infected_slot[from] = NONE;
        }
        Some(to)
    }

    pub fn record(mut self, times: &[f64]) -> Trace {
        let mut cols = [
            Vec::with_capacity(times.len()),
            Vec::with_capacity(times.len()),
            Vec::with_capacity(times.len()),
        ];
        let mut absorbed = false;
        for &t in times {
            while !absorbed {
                match self.step(t) {
                    Step::Event { .. } => {}
                    Step::Horizon => break,
                    Step::Absorbed => absorbed = true,
                }
            }
            for (col, v) in cols.iter_mut().zip(self.fractions()) {
                col.push(v);
            }
        }
        Trace {
            times: times.to_vec(),
            species: vec!["S".into(), "I".into(), "R".into()],
            density: cols.into(),
            correlation: None,
            n_replicates: 1,
        }
    }
}

/// Single SIR realisation recorded on `cfg.n_record` equispaced times.
pub fn simulate_sir(cfg: &SirConfig) -> Result<Trace> {
    let sim = SirSimulation::new(cfg)?;
    Ok(sim.record(&Trace::grid(cfg.t_end, cfg.n_record)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(pi: f64, pr: f64) -> SirConfig {
        SirConfig::new(pi, pr, 1.0).with_size(12).with_t_end(40.0)
    }

    #[test]
    fn no_infected_means_no_change() {
        let tr = simulate_sir(&small(0.5, 0.05).with_fractions(0.5, 0.0)).unwrap();
        assert!(tr.density[0].iter().all(|&s| s == 1.0));
        assert!(tr.density[1].iter().all(|&i| i == 0.0));
        assert!(tr.density[2].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn fractions_sum_to_one() {
        let tr = simulate_sir(&small(0.5, 0.05).with_fractions(0.4, 0.1).with_seed(3)).unwrap();
        for i in 0..tr.len() {
            let s: f64 = tr.density.iter().map(|c| c[i]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(tr.density[2].last().unwrap() > &0.0);
    }

    #[test]
    fn census_and_conservation_every_event() {
        let cfg = small(0.8, 0.1).with_fractions(0.45, 0.05).with_seed(21);
        let mut sim = SirSimulation::new(&cfg).unwrap();
        let n0 = sim.agent_count();
        let mut events = 0;
        while let Step::Event { .. } = sim.step(100.0) {
            events += 1;
            assert_eq!(sim.lattice().occupied(), n0);
            assert!(sim.index_consistent(), "index broken after {events} events");
        }
        assert!(events > 100);
    }

    #[test]
    fn infection_only_reaches_susceptibles() {
        let mut l = Lattice::empty(3).unwrap();
        l.set(4, SiteState::Infected);
        l.set(1, SiteState::Recovered);
        l.set(3, SiteState::Susceptible);
        let cfg = SirConfig::new(1.0, 0.0, 0.0).with_size(3).with_fractions(0.2, 0.1);
        let mut sim = SirSimulation::from_lattice(&cfg, l);
        while let Step::Event { event, .. } = sim.step(50.0) {
            if let SirEvent::Infection(Some(t)) = event {
                assert_eq!(t, 3);
            }
        }
        assert_eq!(sim.lattice().get(1), SiteState::Recovered);
        assert_eq!(sim.lattice().get(3), SiteState::Infected);
    }
}
