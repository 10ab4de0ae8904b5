//! Discretized state spaces and the functions sampled on them.
//!
//! A [`WeightedGrid`] is a finite set of states together with a strictly
//! positive, bounded weight `κ`. Values living on a grid are carried by
//! [`GridFunction`], which exposes the weighted sup-norm `‖κ u‖_∞` and a
//! discrete Lipschitz seminorm.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, invalid, Error, Result};

/// A point of the state space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum State {
    Real(f64),
    Plane([f64; 2]),
    Label(usize),
}

impl State {
    pub fn real(self) -> Option<f64> {
        match self {
            State::Real(x) => Some(x),
            _ => None,
        }
    }

    /// Euclidean norm for continuous states, label index for chains.
    pub fn norm(self) -> f64 {
        match self {
            State::Real(x) => x.abs(),
            State::Plane([x, y]) => x.hypot(y),
            State::Label(i) => i as f64,
        }
    }
}

/// Weight function `κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Kappa {
    /// `κ ≡ c` with `c > 0`.
    Constant { value: f64 },
    /// `κ(x) = (1 + |x|)^{-p}`.
    Polynomial { p: f64 },
    /// `κ(x) = (1 + |x|²)^{-q}`, smooth at the origin.
    InverseQuadratic { q: f64 },
}

impl Default for Kappa {
    fn default() -> Self {
        Kappa::Constant { value: 1.0 }
    }
}

impl Kappa {
    pub fn eval(&self, state: State) -> f64 {
        match *self {
            Kappa::Constant { value } => value,
            Kappa::Polynomial { p } => (1.0 + state.norm()).powf(-p),
            Kappa::InverseQuadratic { q } => (1.0 + state.norm().powi(2)).powf(-q),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Kappa::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                Err(config(format!("constant weight must be positive, got {value}")))
            }
            Kappa::Polynomial { p } if !(p >= 0.0 && p.is_finite()) => {
                Err(config(format!("polynomial weight exponent must be >= 0, got {p}")))
            }
            Kappa::InverseQuadratic { q } if !(q >= 0.0 && q.is_finite()) => {
                Err(config(format!("inverse-quadratic weight exponent must be >= 0, got {q}")))
            }
            _ => Ok(()),
        }
    }
}

/// How kernels that reach past the edge of a bounded grid are closed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Drop the out-of-grid part of the kernel and rescale the row to mass one.
    #[default]
    MassRenormalize,
    /// Fold kernel mass back into the grid by mirroring at the end points.
    Reflect,
}

/// One uniform coordinate axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(config(format!("grid spacing must be positive, got {step}")));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(config(format!("grid bounds must satisfy min < max, got [{min}, {max}]")));
        }
        let cells = ((max - min) / step).round();
        if ((min + cells * step) - max).abs() > 1e-9 * step.max(max.abs()) {
            return Err(config(format!(
                "spacing {step} does not divide [{min}, {max}] into whole cells"
            )));
        }
        Ok(Axis { min, step, len: cells as usize + 1 })
    }

    pub fn max(&self) -> f64 {
        self.coord(self.len - 1)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    /// Nearest node, ties resolved towards the lower index.
    pub fn nearest(&self, x: f64) -> usize {
        let s = (x - self.min) / self.step;
        if s <= 0.0 {
            return 0;
        }
        let idx = (s - 0.5).ceil().max(0.0) as usize;
        idx.min(self.len - 1)
    }

    /// Cell index and fractional offset for linear interpolation with constant extrapolation.
    #[inline]
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.min) / self.step;
        if !(s > 0.0) {
            return (0, 0.0);
        }
        let last = (self.len - 1) as f64;
        if s >= last {
            return (self.len - 1, 0.0);
        }
        // Snap coordinates that are nodes up to rounding.
        let r = s.round();
        if (s - r).abs() <= 1e-9 {
            return (r as usize, 0.0);
        }
        let j = s.floor();
        (j as usize, s - j)
    }
}

/// Arrangement of the states of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Layout {
    /// Uniform 1D grid. When `periodic` is set the last node is identified
    /// with `min + len * step` (one full period of length `len * step`).
    Line { axis: Axis, periodic: bool },
    /// Tensor product of two uniform axes, row-major in `x`.
    Plane { x: Axis, y: Axis },
    /// Finite label set with the discrete metric.
    Labels { len: usize },
}

/// Finite state space with weight `κ` and boundary closure rule.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGrid {
    layout: Layout,
    kappa_kind: Kappa,
    kappa: Vec<f64>,
    boundary: BoundaryPolicy,
}

impl WeightedGrid {
    /// Uniform grid `min, min + dx, …, max`.
    pub fn line(min: f64, max: f64, dx: f64) -> Result<Self> {
        let axis = Axis::new(min, max, dx)?;
        Self::from_layout(Layout::Line { axis, periodic: false })
    }

    /// One period `[min, max)` sampled with spacing `dx`; `max` itself is not a node.
    pub fn periodic(min: f64, max: f64, dx: f64) -> Result<Self> {
        let mut axis = Axis::new(min, max, dx)?;
        axis.len -= 1;
        if axis.len < 2 {
            return Err(config("periodic grid needs at least two nodes"));
        }
        Self::from_layout(Layout::Line { axis, periodic: true })
    }

    pub fn plane(x: Axis, y: Axis) -> Result<Self> {
        Self::from_layout(Layout::Plane { x, y })
    }

    pub fn labels(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(config("label set must be nonempty"));
        }
        Self::from_layout(Layout::Labels { len })
    }

    pub fn from_layout(layout: Layout) -> Result<Self> {
        let mut grid = WeightedGrid {
            layout,
            kappa_kind: Kappa::default(),
            kappa: Vec::new(),
            boundary: BoundaryPolicy::default(),
        };
        grid.fill_kappa();
        Ok(grid)
    }

    pub fn with_kappa(mut self, kappa: Kappa) -> Result<Self> {
        kappa.validate()?;
        self.kappa_kind = kappa;
        self.fill_kappa();
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: BoundaryPolicy) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    fn fill_kappa(&mut self) {
        let kappa_kind = self.kappa_kind;
        self.kappa = (0..self.len()).map(|i| kappa_kind.eval(self.state(i))).collect();
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn kappa_kind(&self) -> Kappa {
        self.kappa_kind
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn boundary(&self) -> BoundaryPolicy {
        self.boundary
    }

    pub fn len(&self) -> usize {
        match &self.layout {
            Layout::Line { axis, .. } => axis.len,
            Layout::Plane { x, y } => x.len * y.len,
            Layout::Labels { len } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match &self.layout {
            Layout::Line { .. } => 1,
            Layout::Plane { .. } => 2,
            Layout::Labels { .. } => 0,
        }
    }

    /// The axis of a 1D grid.
    pub fn line_axis(&self) -> Option<&Axis> {
        match &self.layout {
            Layout::Line { axis, .. } => Some(axis),
            _ => None,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.layout, Layout::Line { periodic: true, .. })
    }

    pub fn state(&self, i: usize) -> State {
        match &self.layout {
            Layout::Line { axis, .. } => State::Real(axis.coord(i)),
            Layout::Plane { x, y } => State::Plane([x.coord(i / y.len), y.coord(i % y.len)]),
            Layout::Labels { .. } => State::Label(i),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    /// Nodes of a 1D grid.
    pub fn xs(&self) -> Vec<f64> {
        match &self.layout {
            Layout::Line { axis, .. } => (0..axis.len).map(|i| axis.coord(i)).collect(),
            _ => Vec::new(),
        }
    }

    pub fn distance(&self, a: State, b: State) -> f64 {
        match (a, b) {
            (State::Real(x), State::Real(y)) => (x - y).abs(),
            (State::Plane([x0, y0]), State::Plane([x1, y1])) => (x0 - x1).hypot(y0 - y1),
            (State::Label(i), State::Label(j)) => f64::from(u8::from(i != j)),
            _ => f64::INFINITY,
        }
    }

    /// Index of the grid node nearest to `state` (ties to the lower index).
    pub fn nearest(&self, state: State) -> Result<usize> {
        match (&self.layout, state) {
            (Layout::Line { axis, .. }, State::Real(x)) => Ok(axis.nearest(x)),
            (Layout::Plane { x, y }, State::Plane([a, b])) => Ok(x.nearest(a) * y.len + y.nearest(b)),
            (Layout::Labels { len }, State::Label(i)) if i < *len => Ok(i),
            _ => Err(invalid(format!("state {state:?} does not belong to this grid"))),
        }
    }

    /// Clamps a state into the bounding box of the grid. Returns the clamped
    /// state and whether clamping was necessary.
    pub fn clamp(&self, state: State) -> (State, bool) {
        fn clamp_axis(axis: &Axis, v: f64) -> (f64, bool) {
            let (lo, hi) = (axis.min, axis.max());
            if v < lo {
                (lo, true)
            } else if v > hi {
                (hi, true)
            } else {
                (v, false)
            }
        }
        match (&self.layout, state) {
            (Layout::Line { axis, .. }, State::Real(x)) => {
                let (v, hit) = clamp_axis(axis, x);
                (State::Real(v), hit)
            }
            (Layout::Plane { x, y }, State::Plane([a, b])) => {
                let (u, h0) = clamp_axis(x, a);
                let (v, h1) = clamp_axis(y, b);
                (State::Plane([u, v]), h0 || h1)
            }
            _ => (state, false),
        }
    }

    pub(crate) fn same_as(&self, other: &WeightedGrid) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

impl fmt::Display for WeightedGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.layout {
            Layout::Line { axis, periodic } => write!(
                f,
                "line[{}, {}] dx={} n={}{}",
                axis.min,
                axis.max(),
                axis.step,
                axis.len,
                if *periodic { " periodic" } else { "" }
            ),
            Layout::Plane { x, y } => write!(f, "plane {}x{}", x.len, y.len),
            Layout::Labels { len } => write!(f, "labels n={len}"),
        }
    }
}

/// A subset of grid nodes on which diagnostics are evaluated.
///
/// Kernels truncated at the edge of a bounded grid are not translation
/// invariant there; diagnostics that probe interior behaviour use a region to
/// exclude that layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    #[default]
    Full,
    /// Nodes whose coordinates all lie in `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Nodes at distance at least `width` from the edge of the bounding box.
    Margin { width: f64 },
}

impl Region {
    pub fn mask(&self, grid: &WeightedGrid) -> Vec<bool> {
        let inside = |v: f64, axis: &Axis| match *self {
            Region::Full => true,
            Region::Interval { lo, hi } => v >= lo - 1e-12 && v <= hi + 1e-12,
            Region::Margin { width } => {
                v >= axis.min + width - 1e-12 && v <= axis.max() - width + 1e-12
            }
        };
        match grid.layout() {
            Layout::Line { axis, .. } => (0..axis.len).map(|i| inside(axis.coord(i), axis)).collect(),
            Layout::Plane { x, y } => (0..grid.len())
                .map(|i| inside(x.coord(i / y.len), x) && inside(y.coord(i % y.len), y))
                .collect(),
            Layout::Labels { len } => vec![true; *len],
        }
    }
}

/// Real values sampled on a [`WeightedGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<WeightedGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<WeightedGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value {} at node {i}", values[i])));
        }
        Ok(GridFunction { grid, values })
    }

    /// Internal constructor for values produced by operators on the same grid.
    pub(crate) fn from_parts(grid: Arc<WeightedGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn from_fn(grid: Arc<WeightedGrid>, f: impl Fn(State) -> f64) -> Result<Self> {
        let values = grid.states().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<WeightedGrid>, c: f64) -> Self {
        let n = grid.len();
        GridFunction { grid, values: vec![c; n] }
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub(crate) fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(invalid("grid functions live on different grids"))
        }
    }

    /// `‖u‖_κ = max_x κ(x)|u(x)|`.
    pub fn weighted_norm(&self) -> Result<f64> {
        self.weighted_norm_on(&Region::Full)
    }

    pub fn weighted_norm_on(&self, region: &Region) -> Result<f64> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at node {i}")));
        }
        let mask = region.mask(&self.grid);
        Ok(self
            .values
            .iter()
            .zip(self.grid.kappa())
            .zip(mask)
            .filter(|(_, m)| *m)
            .map(|((v, k), _)| k * v.abs())
            .fold(0.0, f64::max))
    }

    /// Discrete Lipschitz constant: largest difference quotient over adjacent
    /// nodes. On label sets (discrete metric) this is the oscillation.
    pub fn lip_seminorm(&self) -> Result<f64> {
        self.lip_seminorm_on(&Region::Full)
    }

    pub fn lip_seminorm_on(&self, region: &Region) -> Result<f64> {
        if self.values.len() < 2 {
            return Err(Error::UndefinedSeminorm("grid has a single node".into()));
        }
        let mask = region.mask(&self.grid);
        let v = &self.values;
        let quotient = |i: usize, j: usize, d: f64| -> f64 {
            if mask[i] && mask[j] {
                (v[j] - v[i]).abs() / d
            } else {
                0.0
            }
        };
        let lip = match self.grid.layout() {
            Layout::Line { axis, .. } => (0..axis.len - 1)
                .map(|i| quotient(i, i + 1, axis.step))
                .fold(0.0, f64::max),
            Layout::Plane { x, y } => {
                let mut best = 0.0f64;
                for i in 0..x.len {
                    for j in 0..y.len {
                        let k = i * y.len + j;
                        if j + 1 < y.len {
                            best = best.max(quotient(k, k + 1, y.step));
                        }
                        if i + 1 < x.len {
                            best = best.max(quotient(k, k + y.len, x.step));
                        }
                    }
                }
                best
            }
            Layout::Labels { .. } => {
                let (lo, hi) = v
                    .iter()
                    .zip(&mask)
                    .filter(|(_, m)| **m)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&x, _)| {
                        (lo.min(x), hi.max(x))
                    });
                if hi >= lo {
                    hi - lo
                } else {
                    0.0
                }
            }
        };
        Ok(lip)
    }

    /// Evaluates the piecewise-linear interpolant (constant beyond the grid).
    pub fn interpolate(&self, state: State) -> Result<f64> {
        match (self.grid.layout(), state) {
            (Layout::Line { axis, .. }, State::Real(x)) => Ok(interp_line(axis, &self.values, x)),
            (Layout::Plane { x, y }, State::Plane([a, b])) => Ok(interp_plane(x, y, &self.values, a, b)),
            (Layout::Labels { len }, State::Label(i)) if i < *len => Ok(self.values[i]),
            _ => Err(invalid(format!("cannot evaluate at {state:?}"))),
        }
    }
}

/// Monotone linear interpolation with constant extrapolation.
#[inline]
pub(crate) fn interp_line(axis: &Axis, values: &[f64], x: f64) -> f64 {
    let (j, theta) = axis.locate(x);
    if theta == 0.0 {
        values[j]
    } else {
        values[j] + theta * (values[j + 1] - values[j])
    }
}

#[inline]
pub(crate) fn interp_plane(ax: &Axis, ay: &Axis, values: &[f64], a: f64, b: f64) -> f64 {
    let (i, s) = ax.locate(a);
    let (j, t) = ay.locate(b);
    let ny = ay.len;
    let i1 = if s == 0.0 { i } else { i + 1 };
    let j1 = if t == 0.0 { j } else { j + 1 };
    let v00 = values[i * ny + j];
    let v01 = values[i * ny + j1];
    let v10 = values[i1 * ny + j];
    let v11 = values[i1 * ny + j1];
    let lo = v00 + t * (v01 - v00);
    let hi = v10 + t * (v11 - v10);
    lo + s * (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(min: f64, max: f64, dx: f64) -> Arc<WeightedGrid> {
        WeightedGrid::line(min, max, dx).unwrap().into_shared()
    }

    #[test]
    fn weighted_norm_of_zero_and_one() {
        let g = line(-1.0, 1.0, 0.5);
        assert_eq!(GridFunction::constant(g.clone(), 0.0).weighted_norm().unwrap(), 0.0);
        assert_eq!(GridFunction::constant(g, 1.0).weighted_norm().unwrap(), 1.0);
    }

    #[test]
    fn weighted_norm_quadratic_under_polynomial_weight() {
        let g = WeightedGrid::line(-2.0, 2.0, 0.01)
            .unwrap()
            .with_kappa(Kappa::Polynomial { p: 2.0 })
            .unwrap()
            .into_shared();
        let u = GridFunction::from_fn(g.clone(), |s| s.real().unwrap().powi(2)).unwrap();
        // direct evaluation: x²/(1+|x|)² is increasing in |x|, largest at the end points
        let oracle = g
            .xs()
            .iter()
            .map(|x| x * x / (1.0 + x.abs()).powi(2))
            .fold(0.0, f64::max);
        assert!((oracle - 4.0 / 9.0).abs() < 1e-15);
        assert!((u.weighted_norm().unwrap() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = line(0.0, 1.0, 0.5);
        assert!(matches!(
            GridFunction::new(g, vec![0.0, f64::NAN, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn lip_seminorm_examples() {
        let g = line(-3.0, 3.0, 0.01);
        let c = GridFunction::constant(g.clone(), 4.2);
        assert_eq!(c.lip_seminorm().unwrap(), 0.0);
        let id = GridFunction::from_fn(g.clone(), |s| s.real().unwrap()).unwrap();
        assert!((id.lip_seminorm().unwrap() - 1.0).abs() < 1e-12);
        let sin = GridFunction::from_fn(g, |s| s.real().unwrap().sin()).unwrap();
        // |sin(x+h) - sin(x)|/h = |cos(x + h/2)| sin(h/2)/(h/2); the midpoint nearest 0 is h/2
        let h: f64 = 0.01;
        let oracle = (0.5 * h).cos() * (0.5 * h).sin() / (0.5 * h);
        assert!((sin.lip_seminorm().unwrap() - oracle).abs() < 1e-9);
        assert!((sin.lip_seminorm().unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn lip_seminorm_single_point_is_error() {
        let g = WeightedGrid::labels(1).unwrap().into_shared();
        let u = GridFunction::constant(g, 1.0);
        assert!(matches!(u.lip_seminorm(), Err(Error::UndefinedSeminorm(_))));
    }

    #[test]
    fn axis_rejects_bad_spacing() {
        assert!(Axis::new(0.0, 1.0, 0.0).is_err());
        assert!(Axis::new(0.0, 1.0, 0.3).is_err());
        assert!(Axis::new(1.0, 0.0, 0.1).is_err());
        assert_eq!(Axis::new(-8.0, 8.0, 0.01).unwrap().len, 1601);
    }

    #[test]
    fn nearest_ties_go_left() {
        let a = Axis::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(a.nearest(0.25), 0);
        assert_eq!(a.nearest(0.2500001), 1);
        assert_eq!(a.nearest(-3.0), 0);
        assert_eq!(a.nearest(9.0), 2);
    }

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let g = line(-1.0, 1.0, 0.1);
        let u = GridFunction::from_fn(g, |s| 3.0 * s.real().unwrap() - 1.0).unwrap();
        for &x in &[-0.93, 0.0, 0.377, 0.999] {
            assert!((u.interpolate(State::Real(x)).unwrap() - (3.0 * x - 1.0)).abs() < 1e-13);
        }
        // constant extrapolation
        assert_eq!(u.interpolate(State::Real(5.0)).unwrap(), u.values()[20]);
    }

    #[test]
    fn region_masks() {
        let g = line(-2.0, 2.0, 1.0);
        assert_eq!(Region::Full.mask(&g), vec![true; 5]);
        assert_eq!(
            Region::Interval { lo: -1.0, hi: 1.0 }.mask(&g),
            vec![false, true, true, true, false]
        );
        assert_eq!(
            Region::Margin { width: 2.0 }.mask(&g),
            vec![false, false, true, false, false]
        );
    }

    #[test]
    fn periodic_grid_drops_endpoint() {
        let g = WeightedGrid::periodic(0.0, 1.0, 0.25).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.is_periodic());
    }
}
