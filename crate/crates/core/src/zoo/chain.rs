//! Finite-state Markov chains: `P(t) = exp(tQ)` by uniformization.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{config, Result};
use crate::grid::{GridFunction, Kappa, Layout, State, WeightedGrid};
use crate::operator::{check_grid, check_time, FamilyBounds, GeneratorField, TransitionOperator};

const TAIL: f64 = 1e-12;
const MAX_RATE_TIME: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct Chain {
    grid: Arc<WeightedGrid>,
    q: Vec<Vec<f64>>,
    rate: f64,
    // uniformized jump matrix I + Q/rate, entrywise nonnegative
    jump: Vec<Vec<f64>>,
    conservative: bool,
    bounds: FamilyBounds,
}

impl Chain {
    pub fn new(grid: Arc<WeightedGrid>, q: Vec<Vec<f64>>) -> Result<Self> {
        let n = match grid.layout() {
            Layout::Labels { len } => *len,
            _ => return Err(config("chain members need a label grid")),
        };
        if !matches!(grid.kappa_kind(), Kappa::Constant { .. }) {
            return Err(config("chain members need a constant weight"));
        }
        if q.len() != n || q.iter().any(|r| r.len() != n) {
            return Err(config(format!("rate matrix must be {n}x{n}")));
        }
        for (i, row) in q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(config(format!("Q[{i}][{j}] is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(config(format!("off-diagonal rate Q[{i}][{j}] = {v} is negative")));
                }
                if i == j && v > 0.0 {
                    return Err(config(format!("diagonal rate Q[{i}][{i}] = {v} is positive")));
                }
            }
        }
        let rate = q.iter().enumerate().map(|(i, r)| -r[i]).fold(0.0, f64::max);
        let row_sums: Vec<f64> = q.iter().map(|r| r.iter().sum()).collect();
        let scale = q.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let conservative = row_sums.iter().all(|s| s.abs() <= 1e-12 * scale);
        let excess = row_sums.iter().fold(0.0f64, |m, &s| m.max(s));
        let bounds = if conservative {
            FamilyBounds::default()
        } else {
            FamilyBounds { alpha: excess, beta: excess.max(rate) }
        };
        let jump = q
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if rate == 0.0 {
                            f64::from(u8::from(i == j))
                        } else if i == j {
                            (1.0 + v / rate).max(0.0)
                        } else {
                            v / rate
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Chain { grid, q, rate, jump, conservative, bounds })
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.q
    }

    fn q_times(&self, v: &[f64]) -> Vec<f64> {
        self.q.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `exp(tQ) v` for `qt <= 10` by a truncated Poisson mixture of `(I + Q/q)^k v`.
    fn uniformized(&self, t: f64, v: &[f64]) -> Vec<f64> {
        let lam = self.rate * t;
        let step = |w: &[f64]| -> Vec<f64> {
            self.jump.iter().map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
        };
        let mut term = v.to_vec();
        let mut weight = (-lam).exp();
        let mut acc: Vec<f64> = term.iter().map(|x| weight * x).collect();
        let mut mass = weight;
        let mut k = 0u32;
        while 1.0 - mass > TAIL && k < 10_000 {
            k += 1;
            term = step(&term);
            weight *= lam / k as f64;
            mass += weight;
            acc.iter_mut().zip(&term).for_each(|(a, x)| *a += weight * x);
        }
        acc
    }

    fn propagate(&self, t: f64, v: &[f64]) -> Vec<f64> {
        let pieces = ((self.rate * t) / MAX_RATE_TIME).ceil().max(1.0);
        let h = t / pieces;
        let mut w = v.to_vec();
        for _ in 0..pieces as usize {
            w = self.uniformized(h, &w);
        }
        w
    }
}

impl TransitionOperator for Chain {
    fn label(&self) -> String {
        format!("chain(n={}, rate={})", self.q.len(), self.rate)
    }

    fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    fn apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        check_time(t)?;
        check_grid(self, u)?;
        if t == 0.0 || self.rate == 0.0 {
            return Ok(u.clone());
        }
        let num = self.propagate(t, u.values());
        let values = if self.conservative {
            // dividing by P(t)1 (equal to one up to rounding) makes constants exact
            let den = self.propagate(t, &vec![1.0; u.len()]);
            num.iter().zip(den).map(|(a, b)| a / b).collect()
        } else {
            num
        };
        Ok(GridFunction::from_parts(self.grid.clone(), values))
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        check_grid(self, u)?;
        Ok(GeneratorField::all_valid(self.q_times(u.values())))
    }

    fn growth_bounds(&self) -> FamilyBounds {
        self.bounds
    }

    fn propagates_lipschitz(&self) -> bool {
        self.conservative
    }

    fn sample_step(&self, state: State, h: f64, rng: &mut dyn RngCore) -> Result<State> {
        check_time(h)?;
        if !self.conservative {
            return Err(config("path sampling needs a conservative rate matrix"));
        }
        let State::Label(mut i) = state else {
            return Err(config("chain sampler needs a label state"));
        };
        if i >= self.q.len() {
            return Err(config(format!("label {i} out of range")));
        }
        let mut clock = 0.0;
        loop {
            let exit = -self.q[i][i];
            if exit <= 0.0 {
                return Ok(State::Label(i));
            }
            let u: f64 = rng.random();
            clock += -(1.0 - u).ln() / exit;
            if clock > h {
                return Ok(State::Label(i));
            }
            let mut pick = rng.random::<f64>() * exit;
            let mut next = i;
            for (j, &r) in self.q[i].iter().enumerate() {
                if j == i || r <= 0.0 {
                    continue;
                }
                next = j;
                if pick < r {
                    break;
                }
                pick -= r;
            }
            i = next;
        }
    }

    fn has_sampler(&self) -> bool {
        self.conservative
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state() -> (Arc<WeightedGrid>, Chain) {
        let g = WeightedGrid::labels(2).unwrap().into_shared();
        let c = Chain::new(g.clone(), vec![vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        (g, c)
    }

    #[test]
    fn two_state_closed_form() {
        let (g, c) = two_state();
        let u = GridFunction::new(g, vec![1.0, 0.0]).unwrap();
        for &t in &[0.1, 1.0, 7.5] {
            let v = c.apply(t, &u).unwrap();
            let e = (-2.0 * t).exp();
            assert!((v.values()[0] - (1.0 + e) / 2.0).abs() < 1e-12);
            assert!((v.values()[1] - (1.0 - e) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rates_and_constants() {
        let g = WeightedGrid::labels(3).unwrap().into_shared();
        let z = Chain::new(g.clone(), vec![vec![0.0; 3]; 3]).unwrap();
        let u = GridFunction::new(g.clone(), vec![1.0, -2.0, 5.0]).unwrap();
        assert_eq!(z.apply(3.0, &u).unwrap(), u);
        let c = Chain::new(
            g.clone(),
            vec![vec![-3.0, 2.0, 1.0], vec![0.5, -0.5, 0.0], vec![4.0, 4.0, -8.0]],
        )
        .unwrap();
        let one = c.apply(2.3, &GridFunction::constant(g, 1.0)).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn long_horizons_are_split() {
        let (g, c) = two_state();
        let c = Chain::new(g.clone(), c.q.iter().map(|r| r.iter().map(|v| 40.0 * v).collect()).collect()).unwrap();
        let u = GridFunction::new(g, vec![1.0, 0.0]).unwrap();
        let v = c.apply(1.0, &u).unwrap();
        assert!((v.values()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_rates() {
        let g = WeightedGrid::labels(2).unwrap().into_shared();
        assert!(Chain::new(g.clone(), vec![vec![-1.0, -1.0], vec![1.0, -1.0]]).is_err());
        assert!(Chain::new(g.clone(), vec![vec![1.0, 0.0], vec![1.0, -1.0]]).is_err());
        assert!(Chain::new(g, vec![vec![-1.0]]).is_err());
    }

    #[test]
    fn sampler_needs_conservative_rates() {
        let g = WeightedGrid::labels(2).unwrap().into_shared();
        let leaky = Chain::new(g, vec![vec![-2.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(leaky.sample_step(State::Label(0), 1.0, &mut rng).is_err());
        let (_, c) = two_state();
        assert!(matches!(c.sample_step(State::Label(0), 1.0, &mut rng), Ok(State::Label(_))));
    }
}
