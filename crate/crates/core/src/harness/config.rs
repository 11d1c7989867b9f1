//! Experiment configuration and the flat `key = value` config file format.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Keys match the long CLI flags with either `-` or `_`
//! (`p_max` and `p-max` are the same key).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::schedule::{ScheduleKind, ScheduleSpec};
use crate::losses::LossKind;
use crate::megd::DEFAULT_D;

pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_REFERENCE_ITERS: usize = 120;
/// Reference solver step is `base / T` on the gradient of the summed loss.
pub const DEFAULT_REFERENCE_BASE_RATE: f64 = 0.01;

/// Learning rate: a fixed number or the rate from the regret bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaSpec {
    Fixed(f64),
    Theoretical,
}

impl fmt::Display for EtaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaSpec::Fixed(x) => write!(f, "{x}"),
            EtaSpec::Theoretical => f.write_str("theoretical"),
        }
    }
}

impl FromStr for EtaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("theoretical") {
            return Ok(EtaSpec::Theoretical);
        }
        let x: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("eta must be a number or 'theoretical', got '{s}'")))?;
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Config(format!("eta must be positive, got {x}")));
        }
        Ok(EtaSpec::Fixed(x))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub schedule: ScheduleSpec,
    pub loss: LossKind,
    pub eta: EtaSpec,
    pub d_const: f64,
    pub reference_iters: usize,
    pub reference_base_rate: f64,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec::default(),
            loss: LossKind::TraceDistance,
            eta: EtaSpec::Fixed(DEFAULT_ETA),
            d_const: DEFAULT_D,
            reference_iters: DEFAULT_REFERENCE_ITERS,
            reference_base_rate: DEFAULT_REFERENCE_BASE_RATE,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if let EtaSpec::Fixed(x) = self.eta {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Config(format!("eta must be positive, got {x}")));
            }
        }
        if self.reference_iters == 0 {
            return Err(Error::Config("ref_iters must be at least 1".into()));
        }
        if !(self.reference_base_rate > 0.0) || !self.reference_base_rate.is_finite() {
            return Err(Error::Config(format!(
                "ref_base must be positive, got {}",
                self.reference_base_rate
            )));
        }
        if !self.d_const.is_finite() {
            return Err(Error::Config("d_const must be finite".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match normalize_key(key).as_str() {
            "loss" => self.loss = v.parse()?,
            "p_max" => self.schedule.p_max = parse_num(key, v)?,
            "p_min" => self.schedule.p_min = parse_num(key, v)?,
            "horizon" => self.schedule.horizon = parse_num(key, v)?,
            "eta" => self.eta = v.parse()?,
            "seed" => self.schedule.seed = parse_num(key, v)?,
            "stream" => self.schedule.stream = parse_num(key, v)?,
            "d_const" => self.d_const = parse_num(key, v)?,
            "ref_iters" => self.reference_iters = parse_num(key, v)?,
            "ref_base" => self.reference_base_rate = parse_num(key, v)?,
            "out" => self.output_path = Some(PathBuf::from(v)),
            "schedule" => {
                let kind: ScheduleKind = v.parse()?;
                // keep an already supplied probability list
                if !matches!((&kind, &self.schedule.kind), (ScheduleKind::Custom(_), ScheduleKind::Custom(_))) {
                    self.schedule.kind = kind;
                }
            }
            "probabilities" => self.schedule.kind = ScheduleKind::Custom(parse_list(key, v)?),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies several settings. A probability list goes in before
    /// `schedule = custom` regardless of the order given.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        let (probs, rest): (Vec<_>, Vec<_>) = pairs
            .into_iter()
            .partition(|(k, _)| normalize_key(k) == "probabilities");
        for (k, v) in probs.into_iter().chain(rest) {
            self.set(k, v)?;
        }
        Ok(())
    }
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

pub fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for {key}")))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Parses a flat config file into normalized key/value pairs.
pub fn parse_config_str(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}
