//! Adversarial dephasing schedules.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)` and
//! switched to stream `stream` (`set_stream`), so independent cells of a sweep
//! draw from disjoint, reproducible streams regardless of execution order.
//! A uniform draw on `[p_min, p_max)` is `p_min + u (p_max − p_min)` with
//! `u` the generator's standard 53-bit float in `[0, 1)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default lower end of the dephasing interval.
pub const DEFAULT_P_MIN: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    UniformIid,
    Constant,
    /// Explicit probabilities; the horizon is the list length.
    Custom(Vec<f64>),
}

impl ScheduleKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleKind::UniformIid => "uniform",
            ScheduleKind::Constant => "constant",
            ScheduleKind::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "uniform_iid" | "iid" => Ok(ScheduleKind::UniformIid),
            "constant" => Ok(ScheduleKind::Constant),
            "custom" | "custom_list" => Ok(ScheduleKind::Custom(Vec::new())),
            other => Err(Error::Config(format!("unknown schedule kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub p_min: f64,
    pub p_max: f64,
    pub horizon: usize,
    pub seed: u64,
    pub stream: u64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::UniformIid,
            p_min: DEFAULT_P_MIN,
            p_max: 0.8,
            horizon: 150,
            seed: 0,
            stream: 0,
        }
    }
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if let ScheduleKind::Custom(list) = &self.kind {
            if list.is_empty() {
                return Err(Error::InvalidRange("custom schedule is empty".into()));
            }
            if let Some(p) = list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidRange(format!("probability {p} outside [0, 1]")));
            }
            return Ok(());
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max && self.p_max <= 1.0) {
            return Err(Error::InvalidRange(format!(
                "need 0 <= p_min <= p_max <= 1, got p_min = {}, p_max = {}",
                self.p_min, self.p_max
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidRange("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_horizon(&self) -> usize {
        match &self.kind {
            ScheduleKind::Custom(list) => list.len(),
            _ => self.horizon,
        }
    }
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Dephasing probabilities `p^1..p^T`.
pub fn gen_schedule(spec: &ScheduleSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    match &spec.kind {
        ScheduleKind::Custom(list) => Ok(list.clone()),
        ScheduleKind::Constant => Ok(vec![spec.p_min; spec.horizon]),
        ScheduleKind::UniformIid => {
            if spec.p_min == spec.p_max {
                return Ok(vec![spec.p_min; spec.horizon]);
            }
            let mut rng = stream_rng(spec.seed, spec.stream);
            let width = spec.p_max - spec.p_min;
            Ok((0..spec.horizon)
                .map(|_| {
                    let u: f64 = rng.random();
                    let p = spec.p_min + u * width;
                    // rounding can land exactly on p_max
                    if p >= spec.p_max {
                        spec.p_max.next_down()
                    } else {
                        p
                    }
                })
                .collect())
        }
    }
}
