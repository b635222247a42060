use crate::lattice_abm::Trace;
use crate::{Error, Result};

/// Indices kept by [`subsample_trace`], and whether the tail was truncated.
pub fn subsample_indices(n: usize, n_target: usize) -> Result<(Vec<usize>, bool)> {
    if n_target < 3 {
        return Err(Error::config(format!("subsample target {n_target} is below 3 points")));
    }
    if n_target > n {
        return Err(Error::config(format!("cannot subsample {n} points up to {n_target}")));
    }
    let stride = (n - 1) / (n_target - 1);
    let idx: Vec<usize> = (0..n_target).map(|k| k * stride).collect();
    let truncated = idx[n_target - 1] != n - 1;
    Ok((idx, truncated))
}

/// Keeps `n_target` equispaced points starting at the first one.
///
/// The stride is `⌊(n−1)/(n_target−1)⌋`. When it does not divide the grid
/// the last few points are dropped and a warning is printed, so the result
/// stays exactly equispaced.
pub fn subsample_trace(trace: &Trace, n_target: usize) -> Result<Trace> {
    let (idx, truncated) = subsample_indices(trace.len(), n_target)?;
    if truncated {
        eprintln!(
            "warning: {} points do not divide into {n_target} equispaced samples; ending at t={} instead of t={}",
            trace.len(),
            trace.times[idx[n_target - 1]],
            trace.times[trace.len() - 1]
        );
    }
    Ok(trace.select_rows(&idx))
}

/// Number of leading points used for training by [`split_prefix`].
pub fn prefix_len(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!("training fraction {fraction} must lie in (0, 1)")));
    }
    let k = (fraction * n as f64 - 1e-9).ceil() as usize;
    if k < 3 {
        return Err(Error::config(format!("training prefix of {k} points is too short")));
    }
    if k >= n {
        return Err(Error::config("training prefix leaves no test points"));
    }
    Ok(k)
}

/// First `⌈fraction·n⌉` points for training, the rest for testing.
pub fn split_prefix(trace: &Trace, fraction: f64) -> Result<(Trace, Trace)> {
    let n = trace.len();
    let k = prefix_len(n, fraction)?;
    let train: Vec<usize> = (0..k).collect();
    let test: Vec<usize> = (k..n).collect();
    Ok((trace.select_rows(&train), trace.select_rows(&test)))
}
