//! Monte Carlo evaluation of policy values `E[u(X_t)]` under a control policy.
//!
//! Path `i` draws from its own ChaCha stream `i` of the configured seed, so
//! estimates are reproducible bit for bit regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{policy_value, ControlPolicy};
use crate::envelope::{nisio_value, Refine};
use crate::error::{config, invalid, Result};
use crate::grid::{GridFunction, State};
use crate::operator::SemigroupFamily;

/// Axis-aligned box; states leaving it are clamped and the path is flagged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyBox {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub policy: ControlPolicy,
    pub paths: usize,
    pub seed: u64,
    pub safety: Option<SafetyBox>,
}

impl SamplerSpec {
    pub fn validate(&self, family: &SemigroupFamily) -> Result<()> {
        self.policy.validate(family)?;
        if self.paths == 0 {
            return Err(invalid("sampler needs at least one path"));
        }
        for stage in &self.policy.stages {
            let mut used: Vec<usize> = stage.selector.clone();
            used.sort_unstable();
            used.dedup();
            for k in used {
                let m = &family.members()[k];
                if !m.has_sampler() {
                    return Err(config(format!("{} has no exact path sampler", m.label())));
                }
            }
        }
        if let Some(b) = self.safety {
            if !(b.lo < b.hi) {
                return Err(config(format!("safety box [{}, {}] is empty", b.lo, b.hi)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOutcome {
    pub terminal: State,
    pub truncated: bool,
}

fn clamp_to_box(state: State, b: SafetyBox) -> (State, bool) {
    let clamp = |v: f64| (v.clamp(b.lo, b.hi), v < b.lo || v > b.hi);
    match state {
        State::Real(x) => {
            let (y, hit) = clamp(x);
            (State::Real(y), hit)
        }
        State::Plane([x, y]) => {
            let (a, h0) = clamp(x);
            let (c, h1) = clamp(y);
            (State::Plane([a, c]), h0 || h1)
        }
        State::Label(_) => (state, false),
    }
}

/// Simulates one path: at stage `k` the member chosen by the selector at the
/// grid point nearest to the current state drives the state for `h_k`.
pub fn sample_controlled_path(
    family: &SemigroupFamily,
    spec: &SamplerSpec,
    x0: State,
    rng: &mut ChaCha8Rng,
) -> Result<PathOutcome> {
    let grid = family.grid();
    let mut state = x0;
    let mut truncated = false;
    for stage in &spec.policy.stages {
        let idx = grid.nearest(state)?;
        let member = &family.members()[stage.selector[idx]];
        state = member.sample_step(state, stage.h, rng)?;
        if let Some(b) = spec.safety {
            let (s, hit) = clamp_to_box(state, b);
            state = s;
            truncated |= hit;
        }
    }
    Ok(PathOutcome { terminal: state, truncated })
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub truncated: usize,
}

/// Sample mean and standard error of `u(X_t)` over `spec.paths` paths.
pub fn mc_value(
    family: &SemigroupFamily,
    spec: &SamplerSpec,
    x0: State,
    u: &(dyn Fn(State) -> f64 + Sync),
) -> Result<McEstimate> {
    spec.validate(family)?;
    if spec.paths < 100 {
        return Err(invalid(format!("Monte Carlo needs at least 100 paths, got {}", spec.paths)));
    }
    let outcomes: Vec<(f64, bool)> = (0..spec.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(spec.seed, i);
            let o = sample_controlled_path(family, spec, x0, &mut rng)?;
            Ok((u(o.terminal), o.truncated))
        })
        .collect::<Result<_>>()?;
    let n = outcomes.len() as f64;
    // Shifted by the first sample so that identical outcomes give exactly zero variance.
    let shift = outcomes[0].0;
    let d_sum = outcomes.iter().map(|(v, _)| v - shift).sum::<f64>();
    let mean = shift + d_sum / n;
    let d_sq = outcomes.iter().map(|(v, _)| (v - shift).powi(2)).sum::<f64>();
    let var = ((d_sq - d_sum * d_sum / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        paths: spec.paths,
        truncated: outcomes.iter().filter(|(_, t)| *t).count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub mc: McEstimate,
    /// Policy value on the grid at `x0`.
    pub grid: f64,
    /// Envelope value at `x0`.
    pub nisio: f64,
    /// `(grid − mc)/SE`; absent when the standard error is zero.
    pub z_score: Option<f64>,
    /// `|grid − mc| > 3·SE + eps`.
    pub flagged: bool,
    /// `mc − 3·SE ≤ nisio + eps`.
    pub lower_bound_holds: bool,
}

pub fn mc_compare(
    family: &SemigroupFamily,
    spec: &SamplerSpec,
    x0: State,
    payoff: &GridFunction,
    u: &(dyn Fn(State) -> f64 + Sync),
    refine: Refine,
    eps: f64,
) -> Result<McComparison> {
    let mc = mc_value(family, spec, x0, u)?;
    let grid = policy_value(family, &spec.policy, payoff)?.interpolate(x0)?;
    let nisio = nisio_value(family, spec.policy.horizon(), payoff, refine)?.value.interpolate(x0)?;
    let diff = grid - mc.estimate;
    let z_score = (mc.std_error > 0.0).then(|| diff / mc.std_error);
    Ok(McComparison {
        flagged: diff.abs() > 3.0 * mc.std_error + eps,
        lower_bound_holds: mc.estimate - 3.0 * mc.std_error <= nisio + eps,
        mc,
        grid,
        nisio,
        z_score,
    })
}
