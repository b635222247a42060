//! End-to-end runs of the tutorial and the case studies.
//!
//! Each study simulates its ensembles, learns models, replays them with RK4
//! and writes CSV tables, JSON models, reproducible simulation configs and
//! SVG figures below one output directory. Every table row carries the seed
//! and configuration that produced it.

mod bdm_studies;
mod common;
mod output;
mod selection_study;
mod sir_study;
mod svg;
mod transform;
mod tutorial;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use bdm_studies::{cs1_point, cs2_level, cs3a_rows, cs3b_fit, Cs1Row, Cs2Level, Cs3Row};
pub use common::{bdm_config, bdm_ensemble, derivative, learn_poly4, replay, FittedModel, GREEDY_TOL, TUTORIAL_LAMBDA};
pub use output::{inline_config, num, OutputDir, Table};
pub use selection_study::{cs4_point, Cs4Row};
pub use sir_study::{cs5_point, learn_sir, sir_config, Cs5Row};
pub use svg::{grid_svg, nice_ticks, Plot, Series, Style};
pub use transform::{prefix_len, split_prefix, subsample_indices, subsample_trace};
pub use tutorial::{run_tutorial, TutorialResult};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum CaseStudyId {
    Tutorial,
    Cs1,
    Cs2,
    Cs3a,
    Cs3b,
    Cs4,
    Cs5,
}

impl CaseStudyId {
    pub const ALL: [CaseStudyId; 7] = [
        CaseStudyId::Tutorial,
        CaseStudyId::Cs1,
        CaseStudyId::Cs2,
        CaseStudyId::Cs3a,
        CaseStudyId::Cs3b,
        CaseStudyId::Cs4,
        CaseStudyId::Cs5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseStudyId::Tutorial => "tutorial",
            CaseStudyId::Cs1 => "cs1",
            CaseStudyId::Cs2 => "cs2",
            CaseStudyId::Cs3a => "cs3a",
            CaseStudyId::Cs3b => "cs3b",
            CaseStudyId::Cs4 => "cs4",
            CaseStudyId::Cs5 => "cs5",
        }
    }

    pub fn is_sir(self) -> bool {
        self == CaseStudyId::Cs5
    }
}

impl fmt::Display for CaseStudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseStudyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseStudyId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::config(format!("unknown case study '{s}'")))
    }
}

/// `Paper` runs BDM studies on `X = 120`; `Desk` shrinks the BDM
/// lattice to `X = 60` so every study runs on a laptop in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, clap::ValueEnum)]
pub enum Scale {
    #[default]
    Paper,
    Desk,
}

pub const BDM_MIN_RELIABLE_SIZE: usize = 50;
pub const SIR_MIN_RELIABLE_SIZE: usize = 30;

/// Parameters of one study run.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudySpec {
    pub id: CaseStudyId,
    pub scale: Scale,
    /// `Pp` values (BDM) or `PI` values (SIR).
    pub rates: Vec<f64>,
    /// `Pd/Pp` for BDM studies, `PR/PI` for the SIR study.
    pub rate_ratio: f64,
    pub replicates: usize,
    /// cs2: replicate counts per averaged dataset.
    pub replicate_levels: Vec<usize>,
    /// cs2: independent datasets per replicate count.
    pub realizations: usize,
    /// cs3a: retained time samples.
    pub sample_counts: Vec<usize>,
    /// cs3b: leading fractions used for training.
    pub fractions: Vec<f64>,
    pub lattice_size: usize,
    pub n_record: usize,
    /// Splits for pruning and voting in equation learning.
    pub n_splits: usize,
    /// cs4: train/test splits for model selection.
    pub selection_splits: usize,
    pub seed: u64,
}

impl CaseStudySpec {
    pub fn new(id: CaseStudyId, scale: Scale, seed: u64) -> Self {
        let bdm_size = match scale {
            Scale::Paper => 120,
            Scale::Desk => 60,
        };
        let mut spec = CaseStudySpec {
            id,
            scale,
            rates: vec![0.01],
            rate_ratio: 0.5,
            replicates: 50,
            replicate_levels: Vec::new(),
            realizations: 0,
            sample_counts: Vec::new(),
            fractions: Vec::new(),
            lattice_size: bdm_size,
            n_record: 100,
            n_splits: 10,
            selection_splits: 100,
            seed,
        };
        match id {
            CaseStudyId::Tutorial | CaseStudyId::Cs3b => {}
            CaseStudyId::Cs1 => spec.rates = vec![0.01, 0.05, 0.1, 0.5],
            CaseStudyId::Cs2 => {
                spec.replicate_levels = vec![1, 5, 10, 25];
                spec.realizations = 10;
            }
            CaseStudyId::Cs3a => {
                spec.rates = vec![0.05];
                spec.rate_ratio = 0.25;
                spec.sample_counts = vec![13, 25, 50, 100];
            }
            CaseStudyId::Cs4 => spec.rates = vec![0.005, 0.01, 0.05, 0.1, 0.5],
            CaseStudyId::Cs5 => {
                spec.rates = vec![0.005, 0.01, 0.05, 0.1];
                spec.rate_ratio = 0.1;
                spec.replicates = 25;
                spec.lattice_size = 40;
            }
        }
        if id == CaseStudyId::Cs3b {
            spec.fractions = vec![0.1, 0.2, 0.25, 0.5];
        }
        spec
    }

    pub fn with_lattice_size(mut self, x: usize) -> Self {
        self.lattice_size = x;
        self
    }

    pub fn with_replicates(mut self, n: usize) -> Self {
        self.replicates = n;
        self
    }

    pub fn with_rates(mut self, rates: Vec<f64>) -> Self {
        self.rates = rates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::config("rate sweep must be a non-empty list of positive rates"));
        }
        if !(self.rate_ratio > 0.0 && self.rate_ratio < 1.0) {
            return Err(Error::config("rate ratio must lie in (0, 1)"));
        }
        if self.replicates == 0 || self.n_splits == 0 || self.selection_splits == 0 {
            return Err(Error::config("replicates and split counts must be positive"));
        }
        if self.n_record < 4 {
            return Err(Error::config("at least 4 record times are needed"));
        }
        match self.id {
            CaseStudyId::Cs2 if self.replicate_levels.is_empty() || self.replicate_levels.contains(&0) => {
                return Err(Error::config("cs2 needs a non-empty list of positive replicate counts"))
            }
            CaseStudyId::Cs2 if self.realizations == 0 => {
                return Err(Error::config("cs2 needs at least one realization per level"))
            }
            CaseStudyId::Cs3a => {
                if self.sample_counts.is_empty() {
                    return Err(Error::config("cs3a needs a non-empty list of sample counts"));
                }
                for &n in &self.sample_counts {
                    subsample_indices(self.n_record, n)?;
                }
            }
            CaseStudyId::Cs3b => {
                if self.fractions.is_empty() {
                    return Err(Error::config("cs3b needs a non-empty list of training fractions"));
                }
                for &f in &self.fractions {
                    prefix_len(self.n_record, f)?;
                }
            }
            _ => {}
        }
        let min = if self.id.is_sir() { SIR_MIN_RELIABLE_SIZE } else { BDM_MIN_RELIABLE_SIZE };
        if self.lattice_size < min {
            eprintln!(
                "warning: lattice size {} is below {min}; stochastic tolerances widen on small lattices",
                self.lattice_size
            );
        }
        Ok(())
    }
}

/// Files written by a study and its main table.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub id: CaseStudyId,
    pub table: Table,
    pub files: Vec<PathBuf>,
}

/// Runs a study and writes its outputs below `out`.
pub fn run_case_study(spec: &CaseStudySpec, out: &Path) -> Result<StudyReport> {
    spec.validate()?;
    let mut dir = OutputDir::create(out)?;
    let table = match spec.id {
        CaseStudyId::Tutorial => tutorial::write(spec, &mut dir)?,
        CaseStudyId::Cs1 => bdm_studies::write_cs1(spec, &mut dir)?,
        CaseStudyId::Cs2 => bdm_studies::write_cs2(spec, &mut dir)?,
        CaseStudyId::Cs3a => bdm_studies::write_cs3a(spec, &mut dir)?,
        CaseStudyId::Cs3b => bdm_studies::write_cs3b(spec, &mut dir)?,
        CaseStudyId::Cs4 => selection_study::write_cs4(spec, &mut dir)?,
        CaseStudyId::Cs5 => sir_study::write_cs5(spec, &mut dir)?,
    };
    Ok(StudyReport {
        id: spec.id,
        table,
        files: dir.written().to_vec(),
    })
}
