use rand::seq::index::sample;
use rand::Rng;

use crate::{Error, Result};

/// State of one lattice site. BDM lattices use `Empty`/`Agent`; SIR
/// lattices use `Empty`/`Susceptible`/`Infected`/`Recovered`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SiteState {
    Empty = 0,
    Agent = 1,
    Susceptible = 2,
    Infected = 3,
    Recovered = 4,
}

impl SiteState {
    pub const ALL: [SiteState; 5] = [
        SiteState::Empty,
        SiteState::Agent,
        SiteState::Susceptible,
        SiteState::Infected,
        SiteState::Recovered,
    ];

    #[inline]
    pub fn is_occupied(self) -> bool {
        self != SiteState::Empty
    }
}

/// One of the four von Neumann directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    #[inline]
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Direction {
        Direction::ALL[rng.random_range(0..4)]
    }
}

/// Square `size × size` lattice with at most one agent per site and cached
/// per-state counts. Sites are stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    size: usize,
    sites: Vec<SiteState>,
    counts: [usize; 5],
}

impl Lattice {
    pub fn empty(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::config(format!("lattice size must be at least 2, got {size}")));
        }
        let n = size
            .checked_mul(size)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::config(format!("lattice size {size} is too large")))?;
        let mut counts = [0; 5];
        counts[SiteState::Empty as usize] = n;
        Ok(Lattice {
            size,
            sites: vec![SiteState::Empty; n],
            counts,
        })
    }

    /// Places `count` agents of each listed state on distinct sites chosen
    /// uniformly at random without replacement.
    pub fn random<R: Rng + ?Sized>(size: usize, placements: &[(SiteState, usize)], rng: &mut R) -> Result<Self> {
        let mut lattice = Lattice::empty(size)?;
        let total: usize = placements.iter().map(|&(_, c)| c).sum();
        if total > lattice.n_sites() {
            return Err(Error::config(format!(
                "cannot place {total} agents on {} sites",
                lattice.n_sites()
            )));
        }
        let chosen = sample(rng, lattice.n_sites(), total);
        let mut picks = chosen.iter();
        for &(state, count) in placements {
            for idx in picks.by_ref().take(count) {
                lattice.set(idx, state);
            }
        }
        Ok(lattice)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn sites(&self) -> &[SiteState] {
        &self.sites
    }

    #[inline]
    pub fn get(&self, idx: usize) -> SiteState {
        self.sites[idx]
    }

    pub fn at(&self, row: usize, col: usize) -> SiteState {
        self.sites[row * self.size + col]
    }

    /// Overwrites a site, keeping the cached counts in step.
    #[inline]
    pub fn set(&mut self, idx: usize, state: SiteState) {
        let old = std::mem::replace(&mut self.sites[idx], state);
        self.counts[old as usize] -= 1;
        self.counts[state as usize] += 1;
    }

    #[inline]
    pub fn count(&self, state: SiteState) -> usize {
        self.counts[state as usize]
    }

    #[inline]
    pub fn occupied(&self) -> usize {
        self.n_sites() - self.count(SiteState::Empty)
    }

    /// Full recount of the sites, independent of the cached counts.
    pub fn census(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for &s in &self.sites {
            counts[s as usize] += 1;
        }
        counts
    }

    pub fn cached_counts(&self) -> [usize; 5] {
        self.counts
    }

    /// Neighbouring site in `dir`, or `None` when it lies off the lattice.
    #[inline]
    pub fn neighbor(&self, idx: usize, dir: Direction) -> Option<usize> {
        let x = self.size;
        let (row, col) = (idx / x, idx % x);
        match dir {
            Direction::Up if row > 0 => Some(idx - x),
            Direction::Down if row + 1 < x => Some(idx + x),
            Direction::Left if col > 0 => Some(idx - 1),
            Direction::Right if col + 1 < x => Some(idx + 1),
            _ => None,
        }
    }

    /// Number of unordered adjacent site pairs, `2X(X-1)`.
    pub fn adjacent_pairs(&self) -> usize {
        2 * self.size * (self.size - 1)
    }

    /// Number of unordered adjacent pairs in which both sites are occupied.
    pub fn jointly_occupied_pairs(&self) -> usize {
        let x = self.size;
        let mut pairs = 0;
        for row in 0..x {
            let base = row * x;
            for col in 0..x {
                if !self.sites[base + col].is_occupied() {
                    continue;
                }
                if col + 1 < x && self.sites[base + col + 1].is_occupied() {
                    pairs += 1;
                }
                if row + 1 < x && self.sites[base + x + col].is_occupied() {
                    pairs += 1;
                }
            }
        }
        pairs
    }

    /// Nearest-neighbour occupancy correlation `C2·X⁴ / (χ²·C²)`, where `C2`
    /// counts jointly occupied adjacent pairs and `χ²` all adjacent pairs.
    /// `None` on an empty lattice.
    pub fn occupancy_correlation(&self) -> Option<f64> {
        let c = self.occupied();
        if c == 0 {
            return None;
        }
        let x4 = (self.n_sites() as f64).powi(2);
        let c = c as f64;
        Some(self.jointly_occupied_pairs() as f64 * x4 / (self.adjacent_pairs() as f64 * c * c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn rejects_tiny_lattice() {
        assert!(matches!(Lattice::empty(1), Err(Error::Config(_))));
        assert!(Lattice::empty(2).is_ok());
    }

    #[test]
    fn boundary_neighbors_are_off_lattice() {
        let l = Lattice::empty(3).unwrap();
        assert_eq!(l.neighbor(0, Direction::Up), None);
        assert_eq!(l.neighbor(0, Direction::Left), None);
        assert_eq!(l.neighbor(0, Direction::Right), Some(1));
        assert_eq!(l.neighbor(0, Direction::Down), Some(3));
        assert_eq!(l.neighbor(8, Direction::Down), None);
        assert_eq!(l.neighbor(8, Direction::Right), None);
        assert_eq!(l.neighbor(4, Direction::Up), Some(1));
        assert_eq!(l.neighbor(5, Direction::Right), None);
    }

    #[test]
    fn full_lattice_correlation_is_one() {
        let mut l = Lattice::empty(7).unwrap();
        for i in 0..l.n_sites() {
            l.set(i, SiteState::Agent);
        }
        assert_eq!(l.jointly_occupied_pairs(), l.adjacent_pairs());
        assert_eq!(l.occupancy_correlation(), Some(1.0));
    }

    #[test]
    fn checkerboard_correlation_is_zero() {
        let mut l = Lattice::empty(8).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                if (r + c) % 2 == 0 {
                    l.set(r * 8 + c, SiteState::Agent);
                }
            }
        }
        assert_eq!(l.occupied(), 32);
        assert_eq!(l.occupancy_correlation(), Some(0.0));
    }

    #[test]
    fn empty_lattice_correlation_undefined() {
        assert_eq!(Lattice::empty(5).unwrap().occupancy_correlation(), None);
    }

    #[test]
    fn random_placement_counts() {
        let mut rng = rng_from_seed(3);
        let l = Lattice::random(
            10,
            &[(SiteState::Susceptible, 49), (SiteState::Infected, 1)],
            &mut rng,
        )
        .unwrap();
        assert_eq!(l.count(SiteState::Susceptible), 49);
        assert_eq!(l.count(SiteState::Infected), 1);
        assert_eq!(l.census(), l.cached_counts());
        assert!(Lattice::random(3, &[(SiteState::Agent, 10)], &mut rng).is_err());
    }
}
