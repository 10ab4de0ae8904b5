//! Finite time partitions `π = {0 = t_0 < t_1 < … < t_m}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    times: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = crate::Error;
    fn try_from(times: Vec<f64>) -> Result<Self> {
        Partition::new(times)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Vec<f64> {
        p.times
    }
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        match times.first() {
            None => return Err(invalid("partition must contain 0")),
            Some(&t0) if t0 != 0.0 => return Err(invalid(format!("partition must start at 0, got {t0}"))),
            _ => {}
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("partition times must be finite"));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(invalid(format!("partition times must increase strictly: {} then {}", w[0], w[1])));
        }
        Ok(Partition { times })
    }

    /// `{0}`.
    pub fn trivial() -> Self {
        Partition { times: vec![0.0] }
    }

    /// `{k t / m : k = 0..m}`; for `t = 0` the trivial partition.
    pub fn uniform(t: f64, m: usize) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("horizon must be finite and nonnegative, got {t}")));
        }
        if m == 0 {
            return Err(invalid("uniform partition needs at least one step"));
        }
        if t == 0.0 {
            return Ok(Self::trivial());
        }
        // t·k/m keeps dyadic levels nested exactly: t·(2k)/(2m) == t·k/m
        let times = (0..=m).map(|k| t * k as f64 / m as f64).collect();
        Ok(Partition { times })
    }

    pub fn dyadic(t: f64, level: u32) -> Result<Self> {
        if level > 30 {
            return Err(invalid(format!("dyadic level {level} is too deep")));
        }
        Self::uniform(t, 1usize << level)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn endpoint(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `|π|_∞`, zero for the trivial partition.
    pub fn mesh(&self) -> f64 {
        self.gaps().into_iter().fold(0.0, f64::max)
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn union(&self, other: &Partition) -> Partition {
        let mut times: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        Partition { times }
    }

    pub fn is_subset_of(&self, other: &Partition) -> bool {
        self.times.iter().all(|t| other.times.contains(t))
    }

    /// Adds `extra` random points in `(0, endpoint)` to `self` (or in `(0, horizon)`
    /// for the trivial partition).
    pub fn random_refinement(&self, horizon: f64, extra: usize, rng: &mut impl Rng) -> Partition {
        let end = if self.steps() == 0 { horizon } else { self.endpoint() };
        let mut times = self.times.clone();
        if self.steps() == 0 {
            times.push(end);
        }
        for _ in 0..extra {
            let t = rng.random::<f64>() * end;
            if t > 0.0 && t < end {
                times.push(t);
            }
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        Partition { times }
    }
}
