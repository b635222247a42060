use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Equispaced record of per-species densities, optionally with the
/// occupancy correlation `F`, averaged over `n_replicates` simulations.
///
/// An undefined correlation (empty lattice) is stored as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub species: Vec<String>,
    /// One sequence per entry of `species`, each the same length as `times`.
    pub density: Vec<Vec<f64>>,
    pub correlation: Option<Vec<f64>>,
    pub n_replicates: usize,
}

impl Trace {
    pub fn new(
        times: Vec<f64>,
        species: Vec<String>,
        density: Vec<Vec<f64>>,
        correlation: Option<Vec<f64>>,
        n_replicates: usize,
    ) -> Result<Self> {
        let t = Trace {
            times,
            species,
            density,
            correlation,
            n_replicates,
        };
        t.check_shape()?;
        Ok(t)
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.times.len();
        if self.species.len() != self.density.len() {
            return Err(Error::config("species names and density columns differ in number"));
        }
        if self.density.iter().any(|d| d.len() != n) || self.correlation.as_ref().is_some_and(|f| f.len() != n) {
            return Err(Error::config("trace columns must all have the same length"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("trace times must be strictly increasing"));
        }
        if self.n_replicates == 0 {
            return Err(Error::config("n_replicates must be at least 1"));
        }
        Ok(())
    }

    /// Equispaced grid with `n` points on `[0, t_end]`.
    pub fn grid(t_end: f64, n: usize) -> Vec<f64> {
        let dt = t_end / (n - 1) as f64;
        (0..n).map(|i| i as f64 * dt).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.species
            .iter()
            .position(|s| s == name)
            .map(|i| self.density[i].as_slice())
    }

    /// Uniform time step, or an error when the grid is not equispaced.
    pub fn dt(&self) -> Result<f64> {
        uniform_step(&self.times)
    }

    /// Restriction of the trace to the given row indices (ascending).
    pub fn select_rows(&self, rows: &[usize]) -> Trace {
        let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Trace {
            times: pick(&self.times),
            species: self.species.clone(),
            density: self.density.iter().map(|d| pick(d)).collect(),
            correlation: self.correlation.as_deref().map(pick),
            n_replicates: self.n_replicates,
        }
    }

    /// Pointwise mean of traces sharing one time grid and species list.
    /// Correlations are averaged over the replicates where they are defined.
    pub fn mean(traces: &[Trace]) -> Result<Trace> {
        let first = traces
            .first()
            .ok_or_else(|| Error::config("cannot average an empty set of traces"))?;
        let n = first.len();
        for t in traces {
            if t.times != first.times || t.species != first.species {
                return Err(Error::config("traces must share the time grid and species"));
            }
            if t.correlation.is_some() != first.correlation.is_some() {
                return Err(Error::config("traces disagree on correlation recording"));
            }
        }
        let weight: usize = traces.iter().map(|t| t.n_replicates).sum();
        let mut density = vec![vec![0.0; n]; first.species.len()];
        for t in traces {
            let w = t.n_replicates as f64;
            for (acc, col) in density.iter_mut().zip(&t.density) {
                for (a, v) in acc.iter_mut().zip(col) {
                    *a += w * v;
                }
            }
        }
        for col in &mut density {
            for a in col.iter_mut() {
                *a /= weight as f64;
            }
        }
        let correlation = first.correlation.as_ref().map(|_| {
            (0..n)
                .map(|i| {
                    let (mut s, mut w) = (0.0, 0.0);
                    for t in traces {
                        let v = t.correlation.as_ref().unwrap()[i];
                        if v.is_finite() {
                            s += t.n_replicates as f64 * v;
                            w += t.n_replicates as f64;
                        }
                    }
                    if w > 0.0 {
                        s / w
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        });
        Ok(Trace {
            times: first.times.clone(),
            species: first.species.clone(),
            density,
            correlation,
            n_replicates: weight,
        })
    }

    /// Writes `t,<species...>[,F],n_replicates` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.species.iter().cloned());
        if self.correlation.is_some() {
            header.push("F".into());
        }
        header.push("n_replicates".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![fmt17(self.times[i])];
            row.extend(self.density.iter().map(|d| fmt17(d[i])));
            if let Some(f) = &self.correlation {
                row.push(fmt17(f[i]));
            }
            row.push(self.n_replicates.to_string());
            wr.write_record(&row)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Trace> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header.first().map(String::as_str) != Some("t") {
            return Err(Error::config("trace csv must start with a 't' column"));
        }
        let has_reps = header.last().map(String::as_str) == Some("n_replicates");
        let end = if has_reps { header.len() - 1 } else { header.len() };
        let has_f = header[..end].last().map(String::as_str) == Some("F");
        let species_end = if has_f { end - 1 } else { end };
        let species: Vec<String> = header[1..species_end].to_vec();
        let mut times = Vec::new();
        let mut density = vec![Vec::new(); species.len()];
        let mut correlation = has_f.then(Vec::new);
        let mut n_replicates = 1;
        for rec in rd.records() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                let s = rec.get(j).unwrap_or("").trim();
                s.parse()
                    .map_err(|_| Error::config(format!("invalid number '{s}' in trace csv")))
            };
            times.push(num(0)?);
            for (k, col) in density.iter_mut().enumerate() {
                col.push(num(k + 1)?);
            }
            if let Some(f) = correlation.as_mut() {
                f.push(num(species_end)?);
            }
            if has_reps {
                n_replicates = rec
                    .get(end)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| Error::config("invalid n_replicates in trace csv"))?;
            }
        }
        Trace::new(times, species, density, correlation, n_replicates)
    }

    pub fn load(path: &Path) -> Result<Trace> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

pub(crate) fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Step of an equispaced grid, checked to a relative tolerance of 1e-9.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::config("a time grid needs at least two points"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::config("time grid must be increasing"));
    }
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1e-300)) {
        return Err(Error::config("time grid is not uniformly spaced"));
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(v: f64, reps: usize) -> Trace {
        Trace::new(
            Trace::grid(2.0, 3),
            vec!["C".into()],
            vec![vec![v; 3]],
            Some(vec![1.0, f64::NAN, 2.0]),
            reps,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = toy(0.1, 3);
        t.density[0] = vec![0.1, 1.0 / 3.0, std::f64::consts::PI];
        let text = t.to_csv_string();
        assert!(text.starts_with("t,C,F,n_replicates\n"));
        let back = Trace::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.density, t.density);
        assert_eq!(back.times, t.times);
        assert!(back.correlation.as_ref().unwrap()[1].is_nan());
        assert_eq!(back.n_replicates, 3);
    }

    #[test]
    fn mean_of_two_constant_traces() {
        let m = Trace::mean(&[toy(0.2, 1), toy(0.4, 1)]).unwrap();
        for v in &m.density[0] {
            assert!((v - 0.3).abs() < 1e-15);
        }
        assert_eq!(m.n_replicates, 2);
        assert!(m.correlation.as_ref().unwrap()[1].is_nan());
    }

    #[test]
    fn non_uniform_grid_rejected() {
        assert!(uniform_step(&[0.0, 1.0, 3.0]).is_err());
        assert!((uniform_step(&[0.0, 0.5, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }
}
