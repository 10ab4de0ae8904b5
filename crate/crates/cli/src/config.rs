//! Run configuration: the TOML schema and its validation into ready-to-run objects.
//!
//! Everything that can be checked without running a solver is checked here, so
//! a rejected configuration never leaves partial outputs behind.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use nisio::diagnostics::SuiteOptions;
use nisio::grid::{Axis, BoundaryPolicy, GridFunction, Kappa, Layout, Region, State, WeightedGrid};
use nisio::mc::SafetyBox;
use nisio::operator::SemigroupFamily;
use nisio::{MemberSpec, Probe, Refine};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub family: FamilySection,
    pub initial: InitialSection,
    #[serde(default)]
    pub solve: SolveSection,
    pub dpp: Option<DppSection>,
    pub control: Option<ControlSection>,
    pub mc: Option<McSection>,
    pub properties: Option<PropertiesSection>,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub domain: Domain,
    #[serde(default)]
    pub kappa: Kappa,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Line { min: f64, max: f64, dx: f64 },
    /// `[min, max)` with the end point identified with `min`.
    Periodic { min: f64, max: f64, dx: f64 },
    Plane { x_min: f64, x_max: f64, dx: f64, y_min: f64, y_max: f64, dy: f64 },
    Labels { len: usize },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub members: Option<Vec<MemberSpec>>,
    pub range: Option<RangeSpec>,
}

/// `count` copies of `template` with the numeric field `parameter` spread evenly over `[lo, hi]`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub template: MemberSpec,
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub probe: Option<Probe>,
    /// Table with one row per grid point in grid order; the last column holds the values.
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_level")]
    pub max_level: u32,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection { t: 1.0, tol: default_tol(), max_level: default_max_level() }
    }
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_level() -> u32 {
    12
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DppSection {
    pub s: f64,
    pub t: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    /// Number of uniform stages of the greedy policy.
    pub m: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Start point: `[x]`, `[x, y]` or `[label]`.
    pub x0: Vec<f64>,
    /// Stages of the greedy policy that drives the paths.
    #[serde(default = "default_stages")]
    pub m: usize,
    pub safety: Option<SafetyBox>,
}

fn default_stages() -> usize {
    64
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesSection {
    pub horizons: Vec<f64>,
    #[serde(default = "default_depth")]
    pub depth: u32,
    #[serde(default = "default_pairs")]
    pub partition_pairs: usize,
    #[serde(default)]
    pub region: Region,
    /// Defaults to the initial data together with `sin` and `cos`.
    pub probes: Option<Vec<Probe>>,
    #[serde(default)]
    pub seed: u64,
}

fn default_depth() -> u32 {
    5
}

fn default_pairs() -> usize {
    4
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// `solve`: the dyadic refinement met `solve.tol`.
    #[serde(default)]
    pub require_converged: bool,
    /// `solve`: largest allowed `max |u_T − oracle|`, with the oracle given as a probe.
    pub max_error: Option<f64>,
    pub oracle: Option<OracleSpec>,
    /// `properties`: every structural check passed.
    #[serde(default)]
    pub properties_pass: bool,
    pub max_dpp_defect: Option<f64>,
    pub max_duality_gap: Option<f64>,
    /// `mc`: grid value within `3·SE + ε` of the estimate and the envelope bound holds.
    #[serde(default)]
    pub mc_consistent: bool,
}

/// Reference solution `scale · probe`, compared on `region`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub probe: Probe,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub region: Region,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; the `--out` flag takes precedence.
    pub dir: Option<PathBuf>,
}

/// Validated configuration with the grid, family and initial data built.
pub struct Setup {
    pub config: RunConfig,
    pub hash: String,
    pub grid: Arc<WeightedGrid>,
    pub family: SemigroupFamily,
    pub u0: GridFunction,
    pub refine: Refine,
}

fn positive(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive and finite, got {v}");
    }
    Ok(())
}

fn nonnegative(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        bail!("{name} must be nonnegative and finite, got {v}");
    }
    Ok(())
}

impl Domain {
    fn build(&self) -> anyhow::Result<WeightedGrid> {
        Ok(match *self {
            Domain::Line { min, max, dx } => WeightedGrid::line(min, max, dx)?,
            Domain::Periodic { min, max, dx } => WeightedGrid::periodic(min, max, dx)?,
            Domain::Plane { x_min, x_max, dx, y_min, y_max, dy } => {
                WeightedGrid::plane(Axis::new(x_min, x_max, dx)?, Axis::new(y_min, y_max, dy)?)?
            }
            Domain::Labels { len } => WeightedGrid::labels(len)?,
        })
    }
}

impl RangeSpec {
    fn expand(&self) -> anyhow::Result<Vec<MemberSpec>> {
        if self.count == 0 {
            bail!("family range needs count >= 1");
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            bail!("family range needs finite lo <= hi, got [{}, {}]", self.lo, self.hi);
        }
        let template = serde_json::to_value(&self.template)?;
        match template.get(&self.parameter) {
            Some(v) if v.is_number() => {}
            _ => bail!("family range parameter `{}` is not a numeric field of the template", self.parameter),
        }
        (0..self.count)
            .map(|k| {
                let v = if self.count == 1 {
                    self.lo
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
                };
                let mut spec = template.clone();
                spec[&self.parameter] = serde_json::json!(v);
                Ok(serde_json::from_value(spec)?)
            })
            .collect()
    }
}

/// Start point of the Monte Carlo paths in the grid's state space.
pub fn start_state(layout: &Layout, x0: &[f64]) -> anyhow::Result<State> {
    match (layout, x0) {
        (Layout::Line { .. }, [x]) => Ok(State::Real(*x)),
        (Layout::Plane { .. }, [x, y]) => Ok(State::Plane([*x, *y])),
        (Layout::Labels { len }, [l]) if *l >= 0.0 && l.fract() == 0.0 && (*l as usize) < *len => {
            Ok(State::Label(*l as usize))
        }
        _ => Err(anyhow!("mc.x0 {x0:?} does not name a state of the grid")),
    }
}

fn read_table(path: &Path, len: usize) -> anyhow::Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::with_capacity(len);
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record.iter().next_back().ok_or_else(|| anyhow!("row {} of {} is empty", row + 1, path.display()))?;
        let v: f64 = cell
            .trim()
            .parse()
            .with_context(|| format!("row {} of {}: `{cell}` is not a number", row + 1, path.display()))?;
        values.push(v);
    }
    if values.len() != len {
        bail!("{} has {} rows, the grid has {len} points", path.display(), values.len());
    }
    Ok(values)
}

impl Setup {
    /// Parses and validates `text`; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path, seed: Option<u64>) -> anyhow::Result<Setup> {
        let mut config: RunConfig = toml::from_str(text).context("config does not match the schema")?;
        if let Some(seed) = seed {
            if let Some(mc) = config.mc.as_mut() {
                mc.seed = seed;
            }
            if let Some(p) = config.properties.as_mut() {
                p.seed = seed;
            }
        }
        let hash = hex::encode(Sha256::digest(text.as_bytes()));

        let grid = config
            .grid
            .domain
            .build()?
            .with_kappa(config.grid.kappa)?
            .with_boundary(config.grid.boundary)
            .into_shared();

        let specs = match (&config.family.members, &config.family.range) {
            (Some(m), None) => m.clone(),
            (None, Some(r)) => r.expand()?,
            _ => bail!("family needs exactly one of `members` or `range`"),
        };
        if specs.is_empty() {
            bail!("family has no members");
        }
        let members = specs.iter().map(|s| s.build(&grid)).collect::<Result<Vec<_>, _>>()?;
        let family = SemigroupFamily::new(members)?;

        let u0 = match (&config.initial.probe, &config.initial.csv) {
            (Some(p), None) => p.sample(&grid)?,
            (None, Some(path)) => GridFunction::new(grid.clone(), read_table(&base.join(path), grid.len())?)?,
            _ => bail!("initial needs exactly one of `probe` or `csv`"),
        };

        let s = &config.solve;
        nonnegative("solve.t", s.t)?;
        let refine = Refine::new(s.max_level, s.tol)?;
        if let Some(d) = &config.dpp {
            nonnegative("dpp.s", d.s)?;
            nonnegative("dpp.t", d.t)?;
        }
        if let Some(c) = &config.control {
            if c.m == 0 {
                bail!("control.m must be at least 1");
            }
            positive("solve.t (control horizon)", s.t)?;
        }
        if let Some(mc) = &config.mc {
            if mc.paths < 100 {
                bail!("mc.paths must be at least 100, got {}", mc.paths);
            }
            if mc.m == 0 {
                bail!("mc.m must be at least 1");
            }
            positive("solve.t (mc horizon)", s.t)?;
            start_state(grid.layout(), &mc.x0)?;
            if let Some(b) = mc.safety {
                if !(b.lo < b.hi) {
                    bail!("mc.safety must have lo < hi");
                }
            }
            for m in family.members() {
                if !m.has_sampler() {
                    bail!("{} has no exact path sampler", m.label());
                }
            }
        }
        if let Some(p) = &config.properties {
            if p.horizons.is_empty() {
                bail!("properties.horizons is empty");
            }
            for &t in &p.horizons {
                positive("properties horizon", t)?;
            }
            if let Some(probes) = &p.probes {
                if probes.is_empty() {
                    bail!("properties.probes is empty");
                }
                for probe in probes {
                    probe.sample(&grid)?;
                }
            }
        }
        let a = &config.assertions;
        if a.max_error.is_some() != a.oracle.is_some() {
            bail!("assertions.max_error and assertions.oracle go together");
        }
        if let Some(o) = &a.oracle {
            o.probe.sample(&grid)?;
        }
        Ok(Setup { config, hash, grid, family, u0, refine })
    }

    pub fn suite_options(&self) -> Option<SuiteOptions> {
        let p = self.config.properties.as_ref()?;
        Some(SuiteOptions {
            region: p.region,
            refine: self.refine,
            depth: p.depth,
            partition_pairs: p.partition_pairs,
            seed: p.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[grid]
boundary = "reflect"
[grid.domain]
kind = "line"
min = -4.0
max = 4.0
dx = 0.05

[family.range]
template = { kind = "heat", sigma = 0.0 }
parameter = "sigma"
lo = 0.5
hi = 1.0
count = 3

[initial]
probe = { kind = "quadratic" }
"#;

    #[test]
    fn range_expands_evenly() {
        let s = Setup::parse(BASE, Path::new("."), None).unwrap();
        assert_eq!(s.family.labels(), vec!["heat(sigma=0.5)", "heat(sigma=0.75)", "heat(sigma=1)"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("[initial]", "[initial]\nextra = 1");
        assert!(Setup::parse(&text, Path::new("."), None).is_err());
        let text = BASE.replace("boundary = \"reflect\"", "boundary = \"reflect\"\nweight = 2");
        assert!(Setup::parse(&text, Path::new("."), None).is_err());
    }

    #[test]
    fn bad_range_parameter_is_rejected() {
        let text = BASE.replace("parameter = \"sigma\"", "parameter = \"mu\"");
        assert!(Setup::parse(&text, Path::new("."), None).is_err());
    }

    #[test]
    fn hash_tracks_the_text() {
        let a = Setup::parse(BASE, Path::new("."), None).unwrap().hash;
        let b = Setup::parse(&format!("{BASE}\n"), Path::new("."), None).unwrap().hash;
        assert_eq!(a.len(), 64);
        assert_ne!(a, b);
    }
}
