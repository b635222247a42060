use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Horizon in nondimensional time used by the BDM case studies, `T = (Pp − Pd)·t`.
pub const BDM_NONDIM_HORIZON: f64 = 15.0;
/// Horizon in nondimensional time used by the SIR case studies, `T = PR·t`.
pub const SIR_NONDIM_HORIZON: f64 = 10.0;

/// Birth–death–migration model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BdmConfig {
    /// Proliferation rate `Pp`.
    pub proliferation: f64,
    /// Death rate `Pd`.
    pub death: f64,
    /// Migration rate `Pm`.
    pub migration: f64,
    pub lattice_size: usize,
    pub init_fraction: f64,
    pub t_end: f64,
    pub n_record: usize,
    pub seed: u64,
}

impl BdmConfig {
    /// Default set-up: `X = 120`, 5% initial occupancy, 100 record times up to
    /// `T = 15` in units of `1/(Pp − Pd)` (or `t = 100` when `Pp ≤ Pd`).
    pub fn new(proliferation: f64, death: f64, migration: f64) -> Self {
        let r = proliferation - death;
        let t_end = if r > 0.0 { BDM_NONDIM_HORIZON / r } else { 100.0 };
        BdmConfig {
            proliferation,
            death,
            migration,
            lattice_size: 120,
            init_fraction: 0.05,
            t_end,
            n_record: 100,
            seed: 0,
        }
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.lattice_size = size;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_init_fraction(mut self, f: f64) -> Self {
        self.init_fraction = f;
        self
    }

    pub fn with_n_record(mut self, n: usize) -> Self {
        self.n_record = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("proliferation_rate", self.proliferation)?;
        check_rate("death_rate", self.death)?;
        check_rate("migration_rate", self.migration)?;
        check_common(self.lattice_size, self.t_end, self.n_record)?;
        check_fraction("init_fraction", self.init_fraction)
    }

    pub fn initial_agents(&self) -> usize {
        round_count(self.init_fraction, self.lattice_size)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::from("model = bdm\n");
        let _ = writeln!(s, "proliferation_rate = {:?}", self.proliferation);
        let _ = writeln!(s, "death_rate = {:?}", self.death);
        let _ = writeln!(s, "migration_rate = {:?}", self.migration);
        let _ = writeln!(s, "lattice_size = {}", self.lattice_size);
        let _ = writeln!(s, "init_fraction = {:?}", self.init_fraction);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "n_record = {}", self.n_record);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    fn from_map(map: &KvMap) -> Result<Self> {
        let pp = map.f64(&["proliferation_rate", "pp"])?;
        let pd = map.f64(&["death_rate", "pd"])?;
        let pm = map.f64(&["migration_rate", "pm"])?;
        let mut cfg = BdmConfig::new(pp, pd, pm);
        if let Some(x) = map.opt_usize(&["lattice_size", "x"])? {
            cfg.lattice_size = x;
        }
        if let Some(f) = map.opt_f64(&["init_fraction"])? {
            cfg.init_fraction = f;
        }
        if let Some(t) = map.opt_f64(&["t_end"])? {
            cfg.t_end = t;
        } else if pp <= pd {
            return Err(Error::config("t_end is required when proliferation_rate <= death_rate"));
        }
        if let Some(n) = map.opt_usize(&["n_record"])? {
            cfg.n_record = n;
        }
        if let Some(s) = map.opt_u64(&["seed"])? {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// SIR model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SirConfig {
    /// Infection rate `PI`.
    pub infection: f64,
    /// Recovery rate `PR`.
    pub recovery: f64,
    /// Migration rate `Pm`.
    pub migration: f64,
    pub lattice_size: usize,
    pub init_s_fraction: f64,
    pub init_i_fraction: f64,
    pub t_end: f64,
    pub n_record: usize,
    pub seed: u64,
}

impl SirConfig {
    /// Default set-up: `X = 40`, 49% susceptible and 1% infected sites,
    /// 100 record times up to `T = PR·t = 10` (or `t = 100` when `PR = 0`).
    pub fn new(infection: f64, recovery: f64, migration: f64) -> Self {
        let t_end = if recovery > 0.0 { SIR_NONDIM_HORIZON / recovery } else { 100.0 };
        SirConfig {
            infection,
            recovery,
            migration,
            lattice_size: 40,
            init_s_fraction: 0.49,
            init_i_fraction: 0.01,
            t_end,
            n_record: 100,
            seed: 0,
        }
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.lattice_size = size;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_fractions(mut self, s: f64, i: f64) -> Self {
        self.init_s_fraction = s;
        self.init_i_fraction = i;
        self
    }

    /// Fixed occupied proportion `M = s + i`.
    pub fn occupied_fraction(&self) -> f64 {
        self.init_s_fraction + self.init_i_fraction
    }

    pub fn initial_counts(&self) -> (usize, usize) {
        (
            round_count(self.init_s_fraction, self.lattice_size),
            round_count(self.init_i_fraction, self.lattice_size),
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("infection_rate", self.infection)?;
        check_rate("recovery_rate", self.recovery)?;
        check_rate("migration_rate", self.migration)?;
        check_common(self.lattice_size, self.t_end, self.n_record)?;
        check_fraction("init_s_fraction", self.init_s_fraction)?;
        check_fraction("init_i_fraction", self.init_i_fraction)?;
        if self.occupied_fraction() > 1.0 {
            return Err(Error::config("init_s_fraction + init_i_fraction must not exceed 1"));
        }
        let (s, i) = self.initial_counts();
        if s + i == 0 {
            return Err(Error::config("SIR lattice must hold at least one agent"));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::from("model = sir\n");
        let _ = writeln!(s, "infection_rate = {:?}", self.infection);
        let _ = writeln!(s, "recovery_rate = {:?}", self.recovery);
        let _ = writeln!(s, "migration_rate = {:?}", self.migration);
        let _ = writeln!(s, "lattice_size = {}", self.lattice_size);
        let _ = writeln!(s, "init_s_fraction = {:?}", self.init_s_fraction);
        let _ = writeln!(s, "init_i_fraction = {:?}", self.init_i_fraction);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "n_record = {}", self.n_record);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    fn from_map(map: &KvMap) -> Result<Self> {
        let pi = map.f64(&["infection_rate", "pi"])?;
        let pr = map.f64(&["recovery_rate", "pr"])?;
        let pm = map.f64(&["migration_rate", "pm"])?;
        let mut cfg = SirConfig::new(pi, pr, pm);
        if let Some(x) = map.opt_usize(&["lattice_size", "x"])? {
            cfg.lattice_size = x;
        }
        if let Some(f) = map.opt_f64(&["init_s_fraction"])? {
            cfg.init_s_fraction = f;
        }
        if let Some(f) = map.opt_f64(&["init_i_fraction"])? {
            cfg.init_i_fraction = f;
        }
        if let Some(t) = map.opt_f64(&["t_end"])? {
            cfg.t_end = t;
        } else if pr <= 0.0 {
            return Err(Error::config("t_end is required when recovery_rate is 0"));
        }
        if let Some(n) = map.opt_usize(&["n_record"])? {
            cfg.n_record = n;
        }
        if let Some(s) = map.opt_u64(&["seed"])? {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A parsed model configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Bdm(BdmConfig),
    Sir(SirConfig),
}

impl ModelConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// keys are case-insensitive. `model` selects `bdm` or `sir`; when absent
    /// it is inferred from the rate keys present.
    pub fn parse(text: &str) -> Result<Self> {
        let map = KvMap::parse(text)?;
        let model = match map.get("model") {
            Some(m) => m.to_ascii_lowercase(),
            None if map.get("infection_rate").is_some() || map.get("pi").is_some() => "sir".into(),
            None => "bdm".into(),
        };
        match model.as_str() {
            "bdm" => Ok(ModelConfig::Bdm(BdmConfig::from_map(&map)?)),
            "sir" => Ok(ModelConfig::Sir(SirConfig::from_map(&map)?)),
            other => Err(Error::config(format!("unknown model '{other}'"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

struct KvMap(BTreeMap<String, (usize, String)>);

impl KvMap {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = k.trim().to_ascii_lowercase();
            if map.insert(key.clone(), (lineno + 1, v.trim().to_string())).is_some() {
                return Err(Error::config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(KvMap(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(_, v)| v.as_str())
    }

    fn lookup(&self, keys: &[&str]) -> Option<&(usize, String)> {
        keys.iter().find_map(|k| self.0.get(*k))
    }

    fn opt_parse<T: std::str::FromStr>(&self, keys: &[&str]) -> Result<Option<T>> {
        match self.lookup(keys) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("line {line}: invalid value '{v}' for '{}'", keys[0]))),
        }
    }

    fn f64(&self, keys: &[&str]) -> Result<f64> {
        self.opt_f64(keys)?
            .ok_or_else(|| Error::config(format!("missing required key '{}'", keys[0])))
    }

    fn opt_f64(&self, keys: &[&str]) -> Result<Option<f64>> {
        self.opt_parse(keys)
    }

    fn opt_usize(&self, keys: &[&str]) -> Result<Option<usize>> {
        self.opt_parse(keys)
    }

    fn opt_u64(&self, keys: &[&str]) -> Result<Option<u64>> {
        self.opt_parse(keys)
    }
}

fn round_count(fraction: f64, size: usize) -> usize {
    (fraction * (size * size) as f64).round() as usize
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::config(format!("{name} must be finite and non-negative, got {v}")));
    }
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::config(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_common(size: usize, t_end: f64, n_record: usize) -> Result<()> {
    if size < 2 {
        return Err(Error::config(format!("lattice_size must be at least 2, got {size}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::config(format!("t_end must be positive, got {t_end}")));
    }
    if n_record < 2 {
        return Err(Error::config(format!("n_record must be at least 2, got {n_record}")));
    }
    Ok(())
}
