//! Choosing between the mean-field logistic library `[C(1-C), C]` and the
//! correlation-corrected library `[C(1-FC), C]` by repeated train/test
//! voting.
//!
//! Each split partitions the rows uniformly at random into halves, fits both
//! candidates by least squares on the training half and gives one vote to
//! the candidate with the smaller test residual `‖Θξ − b‖₂`. An exact tie
//! goes to the mean-field candidate, as does a tie in the vote count.

use nalgebra::DVector;
use serde::Serialize;

use crate::eql_core::{build_library, least_squares, parse_library, residual_norm, seeded_split, LibraryMatrix};
use crate::lattice_abm::Trace;
use crate::parallel::{map_indexed, Execution};
use crate::{Error, Result};

pub const MEAN_FIELD: &str = "mean-field";
pub const MODIFIED: &str = "modified";

const GRID_TOL: f64 = 1e-9;

/// Builds `Θ₁ = [C(1-C), C]` and `Θ₂ = [C(1-FC), C]`.
///
/// `f` supplies the correlation either through its `correlation` column or
/// a species named `F`; `c` must contain species `C`.
pub fn build_candidate_libraries(c: &Trace, f: &Trace) -> Result<(LibraryMatrix, LibraryMatrix)> {
    if c.len() != f.len() || c.times.iter().zip(&f.times).any(|(a, b)| (a - b).abs() > GRID_TOL) {
        return Err(Error::config("density and correlation traces must share the time grid"));
    }
    let corr = match (&f.correlation, f.series("F")) {
        (Some(v), _) => v.clone(),
        (None, Some(v)) => v.to_vec(),
        (None, None) => return Err(Error::config("correlation trace has no F column")),
    };
    let density = c
        .series("C")
        .ok_or_else(|| Error::config("density trace has no C column"))?
        .to_vec();
    let merged = Trace::new(c.times.clone(), vec!["C".into()], vec![density], Some(corr), c.n_replicates)?;
    let vars = vec!["C".to_string()];
    let theta1 = build_library(&merged, &vars, &parse_library("logistic", &vars)?)?;
    let theta2 = build_library(&merged, &vars, &parse_library("modified", &vars)?)?;
    Ok((theta1, theta2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteRecord {
    pub split_id: usize,
    /// Test residual of each candidate.
    pub residuals: [f64; 2],
    /// Index of the candidate that received the vote.
    pub vote: usize,
    pub tie: bool,
    #[serde(skip)]
    coeffs: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub names: [String; 2],
    pub labels: [Vec<String>; 2],
    pub votes: [usize; 2],
    pub winner: usize,
    /// Coefficient-wise mean of each candidate's fits over the splits it won;
    /// empty for a candidate with no votes.
    pub mean_coeffs: [Vec<f64>; 2],
    pub records: Vec<VoteRecord>,
    pub ties: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct CandidateReport<'a> {
    name: &'a str,
    votes: usize,
    labels: &'a [String],
    mean_coeffs: &'a [f64],
}

#[derive(Serialize)]
struct SelectionReport<'a> {
    candidates: Vec<CandidateReport<'a>>,
    winner: &'a str,
    seed: u64,
    n_splits: usize,
    ties: usize,
}

impl SelectionResult {
    pub fn n_splits(&self) -> usize {
        self.records.len()
    }

    pub fn winner_name(&self) -> &str {
        &self.names[self.winner]
    }

    pub fn winner_coeffs(&self) -> &[f64] {
        &self.mean_coeffs[self.winner]
    }

    /// `(Pp, Pd)` read off the winner: the coefficient of the logistic term
    /// and minus the coefficient of `C`.
    pub fn estimated_rates(&self) -> Option<(f64, f64)> {
        let c = self.winner_coeffs();
        let labels = &self.labels[self.winner];
        let pc = labels.iter().position(|l| l == "C")?;
        let pl = labels.iter().position(|l| l != "C")?;
        Some((*c.get(pl)?, -*c.get(pc)?))
    }

    pub fn to_json(&self) -> Result<String> {
        let report = SelectionReport {
            candidates: (0..2)
                .map(|k| CandidateReport {
                    name: &self.names[k],
                    votes: self.votes[k],
                    labels: &self.labels[k],
                    mean_coeffs: &self.mean_coeffs[k],
                })
                .collect(),
            winner: self.winner_name(),
            seed: self.seed,
            n_splits: self.n_splits(),
            ties: self.ties,
        };
        Ok(serde_json::to_string_pretty(&report)?)
    }

    pub fn residuals_csv(&self) -> String {
        let mut out = format!("split_id,{},{},vote,tie\n", self.names[0], self.names[1]);
        for r in &self.records {
            out.push_str(&format!(
                "{},{:e},{:e},{},{}\n",
                r.split_id, r.residuals[0], r.residuals[1], self.names[r.vote], r.tie
            ));
        }
        out
    }
}

/// Votes between `theta1` (mean-field) and `theta2` (modified) over
/// `n_splits` seeded half splits of the rows.
pub fn vote_select(
    theta1: &LibraryMatrix,
    theta2: &LibraryMatrix,
    b: &[f64],
    n_splits: usize,
    seed: u64,
) -> Result<SelectionResult> {
    vote_select_with(theta1, theta2, b, n_splits, seed, Execution::Auto)
}

pub fn vote_select_with(
    theta1: &LibraryMatrix,
    theta2: &LibraryMatrix,
    b: &[f64],
    n_splits: usize,
    seed: u64,
    exec: Execution,
) -> Result<SelectionResult> {
    let n = b.len();
    if n < 4 {
        return Err(Error::config("model selection needs at least 4 rows"));
    }
    if theta1.nrows() != n || theta2.nrows() != n {
        return Err(Error::config("library rows must match the derivative length"));
    }
    if n_splits == 0 {
        return Err(Error::config("model selection needs at least one split"));
    }
    let b = DVector::from_column_slice(b);
    let libs = [theta1, theta2];
    let records: Vec<VoteRecord> = map_indexed(n_splits, exec, |k| {
        let split = seeded_split(n, seed, k);
        let b_train = b.select_rows(&split.train);
        let b_test = b.select_rows(&split.test);
        let mut residuals = [0.0; 2];
        let mut coeffs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (j, lib) in libs.iter().enumerate() {
            let xi = least_squares(&lib.theta.select_rows(&split.train), &b_train);
            residuals[j] = residual_norm(&lib.theta.select_rows(&split.test), &b_test, &xi);
            coeffs[j] = xi.iter().copied().collect();
        }
        let tie = residuals[0] == residuals[1];
        let vote = if residuals[1] < residuals[0] { 1 } else { 0 };
        VoteRecord {
            split_id: k,
            residuals,
            vote,
            tie,
            coeffs,
        }
    });
    if records.iter().any(|r| r.residuals.iter().any(|x| !x.is_finite())) {
        return Err(Error::numerical("non-finite test residual during model selection"));
    }

    let mut votes = [0usize; 2];
    let mut sums = [vec![0.0; theta1.ncols()], vec![0.0; theta2.ncols()]];
    for r in &records {
        votes[r.vote] += 1;
        for (s, c) in sums[r.vote].iter_mut().zip(&r.coeffs[r.vote]) {
            *s += c;
        }
    }
    let mean_coeffs = [0, 1].map(|j| {
        if votes[j] == 0 {
            Vec::new()
        } else {
            sums[j].iter().map(|s| s / votes[j] as f64).collect()
        }
    });
    let winner = if votes[1] > votes[0] { 1 } else { 0 };
    let ties = records.iter().filter(|r| r.tie).count();
    Ok(SelectionResult {
        names: [MEAN_FIELD.into(), MODIFIED.into()],
        labels: [theta1.labels(), theta2.labels()],
        votes,
        winner,
        mean_coeffs,
        records,
        ties,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_with(c: Vec<f64>, f: Vec<f64>) -> Trace {
        let n = c.len();
        Trace::new(Trace::grid(1.0, n), vec!["C".into()], vec![c], Some(f), 1).unwrap()
    }

    #[test]
    fn unit_correlation_gives_identical_libraries() {
        let c: Vec<f64> = (0..20).map(|i| 0.05 + 0.02 * i as f64).collect();
        let t = trace_with(c, vec![1.0; 20]);
        let (a, b) = build_candidate_libraries(&t, &t).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.labels(), vec!["C(1-C)", "C"]);
        assert_eq!(b.labels(), vec!["C(1-FC)", "C"]);
    }

    #[test]
    fn correlated_row_arithmetic() {
        let t = trace_with(vec![0.5, 0.5, 0.5], vec![2.0, 2.0, 2.0]);
        let (_, b) = build_candidate_libraries(&t, &t).unwrap();
        assert_eq!(b.theta[(0, 0)], 0.0);
        assert_eq!(b.theta[(0, 1)], 0.5);
    }

    #[test]
    fn correlation_from_species_column() {
        let c = trace_with(vec![0.5, 0.5, 0.5], vec![f64::NAN; 3]);
        let f = Trace::new(c.times.clone(), vec!["F".into()], vec![vec![2.0; 3]], None, 1).unwrap();
        let (_, b) = build_candidate_libraries(&c, &f).unwrap();
        assert_eq!(b.theta[(2, 0)], 0.0);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = trace_with(vec![0.1; 5], vec![1.0; 5]);
        let mut b = a.clone();
        b.times = Trace::grid(2.0, 5);
        assert!(build_candidate_libraries(&a, &b).is_err());
    }

    #[test]
    fn identical_libraries_tie_to_mean_field() {
        let c: Vec<f64> = (0..30).map(|i| 0.05 + 0.015 * i as f64).collect();
        let b: Vec<f64> = c.iter().map(|&x| 0.01 * x * (1.0 - x) - 0.005 * x).collect();
        let t = trace_with(c, vec![1.0; 30]);
        let (l1, l2) = build_candidate_libraries(&t, &t).unwrap();
        let r = vote_select(&l1, &l2, &b, 100, 3).unwrap();
        assert_eq!(r.votes, [100, 0]);
        assert_eq!(r.ties, 100);
        assert_eq!(r.winner_name(), MEAN_FIELD);
        let (pp, pd) = r.estimated_rates().unwrap();
        assert!((pp - 0.01).abs() < 1e-9 && (pd - 0.005).abs() < 1e-9);
    }

    #[test]
    fn modified_data_selects_modified() {
        let n = 40;
        let c: Vec<f64> = (0..n).map(|i| 0.05 + 0.01 * i as f64).collect();
        let f: Vec<f64> = (0..n).map(|i| 1.6 - 0.01 * i as f64).collect();
        let b: Vec<f64> = c.iter().zip(&f).map(|(&x, &g)| 0.5 * x * (1.0 - g * x) - 0.25 * x).collect();
        let t = trace_with(c, f);
        let (l1, l2) = build_candidate_libraries(&t, &t).unwrap();
        let r = vote_select(&l1, &l2, &b, 50, 9).unwrap();
        assert_eq!(r.votes[0] + r.votes[1], 50);
        assert_eq!(r.winner_name(), MODIFIED);
        let (pp, pd) = r.estimated_rates().unwrap();
        assert!((pp - 0.5).abs() < 1e-8 && (pd - 0.25).abs() < 1e-8);
        assert!(r.to_json().unwrap().contains("\"winner\": \"modified\""));
        assert_eq!(r.residuals_csv().lines().count(), 51);
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let n = 25;
        let c: Vec<f64> = (0..n).map(|i| 0.1 + 0.02 * i as f64).collect();
        let f: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i * 7 % 5) as f64 / 5.0)).collect();
        let b: Vec<f64> = (0..n).map(|i| 0.001 * ((i * 13 % 7) as f64 - 3.0)).collect();
        let t = trace_with(c, f);
        let (l1, l2) = build_candidate_libraries(&t, &t).unwrap();
        let a = vote_select_with(&l1, &l2, &b, 20, 4, Execution::Sequential).unwrap();
        let p = vote_select_with(&l1, &l2, &b, 20, 4, Execution::Parallel).unwrap();
        assert_eq!(a, p);
    }

    #[test]
    fn too_few_rows() {
        let t = trace_with(vec![0.1, 0.2, 0.3], vec![1.0; 3]);
        let (l1, l2) = build_candidate_libraries(&t, &t).unwrap();
        assert!(vote_select(&l1, &l2, &[0.0; 3], 10, 0).is_err());
    }
}
