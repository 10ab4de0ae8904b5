//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use nisio::zoo::{Chain, Heat};
use nisio::{BoundaryPolicy, GridFunction, SemigroupFamily, TransitionOperator, WeightedGrid};

/// Heat family with volatilities spread evenly over `[0.5, 1.0]` on `[-8, 8]`.
pub fn heat_family(step: f64, members: usize) -> SemigroupFamily {
    let grid = WeightedGrid::line(-8.0, 8.0, step)
        .expect("valid grid")
        .with_boundary(BoundaryPolicy::Reflect)
        .into_shared();
    let ops = (0..members)
        .map(|k| {
            let s = if members == 1 { 0.5 } else { 0.5 + 0.5 * k as f64 / (members - 1) as f64 };
            Arc::new(Heat::new(grid.clone(), s).expect("valid sigma")) as Arc<dyn TransitionOperator>
        })
        .collect();
    SemigroupFamily::new(ops).expect("nonempty family")
}

/// Birth-death chain on `n` labels with two rate scales.
pub fn chain_family(n: usize) -> SemigroupFamily {
    let grid = WeightedGrid::labels(n).expect("valid labels").into_shared();
    let ops = [1.0, 3.0]
        .iter()
        .map(|&r| {
            let mut q = vec![vec![0.0; n]; n];
            for i in 0..n {
                if i > 0 {
                    q[i][i - 1] = r;
                }
                if i + 1 < n {
                    q[i][i + 1] = r;
                }
                q[i][i] = -q[i].iter().sum::<f64>();
            }
            Arc::new(Chain::new(grid.clone(), q).expect("valid generator")) as Arc<dyn TransitionOperator>
        })
        .collect();
    SemigroupFamily::new(ops).expect("nonempty family")
}

pub fn quadratic(family: &SemigroupFamily) -> GridFunction {
    GridFunction::from_fn(family.grid().clone(), |s| s.norm().powi(2)).expect("finite values")
}
