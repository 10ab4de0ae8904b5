//! Subcommands. Each one computes, writes its artifacts and returns the outcome
//! of the assertions it is responsible for.

use std::fs;
use std::path::Path;

use anyhow::Context;
use nisio::control::{duality_gap, greedy_policy};
use nisio::diagnostics::property_suite;
use nisio::envelope::{dpp_check, nisio_value};
use nisio::grid::{GridFunction, Layout, State};
use nisio::mc::{mc_compare, SamplerSpec};
use nisio::tolerance::quadrature_tolerance;
use nisio::{Probe, Region};
use serde::{Deserialize, Serialize};

use crate::config::{start_state, Setup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Properties,
    Dpp,
    Control,
    Mc,
    Report,
}

/// One evaluated assertion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn limit(name: &str, value: f64, limit: f64) -> Check {
        Check { name: name.into(), passed: value <= limit, detail: format!("{value:e} <= {limit:e}") }
    }

    fn flag(name: &str, passed: bool, detail: String) -> Check {
        Check { name: name.into(), passed, detail }
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    result: T,
    assertions: &'a [Check],
    passed: bool,
}

fn write_json(dir: &Path, file: &str, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(file), text).with_context(|| format!("writing {file}"))
}

fn record<T: Serialize>(setup: &Setup, dir: &Path, file: &str, command: &str, result: T, checks: &[Check]) -> anyhow::Result<()> {
    let rec = Record {
        command,
        config_hash: &setup.hash,
        result,
        assertions: checks,
        passed: checks.iter().all(|c| c.passed),
    };
    write_json(dir, file, &rec)
}

/// Round-trip decimal formatting.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_values(dir: &Path, u0: &GridFunction, ut: &GridFunction) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(dir.join("values.csv"))?;
    let grid = u0.grid();
    let header: &[&str] = match grid.layout() {
        Layout::Line { .. } => &["x", "u0", "u_T"],
        Layout::Plane { .. } => &["x", "y", "u0", "u_T"],
        Layout::Labels { .. } => &["label", "u0", "u_T"],
    };
    w.write_record(header)?;
    for (i, (a, b)) in u0.values().iter().zip(ut.values()).enumerate() {
        let mut row = match grid.state(i) {
            State::Real(x) => vec![num(x)],
            State::Plane([x, y]) => vec![num(x), num(y)],
            State::Label(l) => vec![l.to_string()],
        };
        row.push(num(*a));
        row.push(num(*b));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Convergence<'a> {
    t: f64,
    max_level: u32,
    tol: f64,
    final_level: u32,
    converged: bool,
    increments: &'a [f64],
    monotone_defect: f64,
}

fn solve(setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    let t = setup.config.solve.t;
    let nv = nisio_value(&setup.family, t, &setup.u0, setup.refine)?;
    let mut checks = Vec::new();
    let a = &setup.config.assertions;
    if a.require_converged {
        let last = nv.increments.last().copied().unwrap_or(0.0);
        checks.push(Check::flag("converged", nv.converged, format!("last increment {last:e}, tol {:e}", setup.refine.tol)));
    }
    if let (Some(limit), Some(o)) = (a.max_error, &a.oracle) {
        let oracle = o.probe.sample(&setup.grid)?;
        let mask = o.region.mask(&setup.grid);
        let err = nv
            .value
            .values()
            .iter()
            .zip(oracle.values())
            .zip(&mask)
            .filter(|(_, m)| **m)
            .map(|((v, r), _)| (v - (o.scale * r + o.shift)).abs())
            .fold(0.0, f64::max);
        checks.push(Check::limit("max_error", err, limit));
    }
    write_values(dir, &setup.u0, &nv.value)?;
    let conv = Convergence {
        t,
        max_level: setup.refine.max_level,
        tol: setup.refine.tol,
        final_level: nv.final_level(),
        converged: nv.converged,
        increments: &nv.increments,
        monotone_defect: nv.monotone_defect,
    };
    record(setup, dir, "convergence.json", "solve", conv, &checks)?;
    Ok(checks)
}

fn properties(setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    let section = setup.config.properties.as_ref().context("the properties command needs a [properties] section")?;
    let probes: Vec<(String, GridFunction)> = match &section.probes {
        Some(list) => list.iter().map(|p| Ok((p.name(), p.sample(&setup.grid)?))).collect::<anyhow::Result<_>>()?,
        None => vec![
            ("initial".to_string(), setup.u0.clone()),
            ("sin".to_string(), Probe::Sin.sample(&setup.grid)?),
            ("cos".to_string(), Probe::Cos.sample(&setup.grid)?),
        ],
    };
    let options = setup.suite_options().expect("section present");
    let report = property_suite(&setup.family, &probes, &section.horizons, &options)?;
    let mut checks = Vec::new();
    if setup.config.assertions.properties_pass {
        let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed).map(|c| format!("{}:{}@{}", c.property, c.probe, c.t)).collect();
        checks.push(Check::flag("properties_pass", report.passed, format!("eps_q {:e}, failed {failed:?}", report.eps_q)));
    }
    record(setup, dir, "properties.json", "properties", &report, &checks)?;
    Ok(checks)
}

fn dpp(setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    let section = setup.config.dpp.as_ref().context("the dpp command needs a [dpp] section")?;
    let report = dpp_check(&setup.family, section.s, section.t, &setup.u0, setup.refine)?;
    let mut checks = Vec::new();
    if let Some(limit) = setup.config.assertions.max_dpp_defect {
        checks.push(Check::limit("max_dpp_defect", report.defect, limit));
    }
    record(setup, dir, "dpp.json", "dpp", &report, &checks)?;
    Ok(checks)
}

fn control(setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    let section = setup.config.control.as_ref().context("the control command needs a [control] section")?;
    let t = setup.config.solve.t;
    let greedy = greedy_policy(&setup.family, t, &setup.u0, section.m)?;
    let gap = duality_gap(&setup.family, t, &setup.u0, setup.refine, section.m)?;
    let mut checks = Vec::new();
    if let Some(limit) = setup.config.assertions.max_duality_gap {
        checks.push(Check::limit("max_duality_gap", gap.gap, limit));
    }
    write_json(dir, "policy.json", &greedy.policy)?;
    record(setup, dir, "gap.json", "control", &gap, &checks)?;
    Ok(checks)
}

fn mc(setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    let section = setup.config.mc.as_ref().context("the mc command needs a [mc] section")?;
    let t = setup.config.solve.t;
    let x0 = start_state(setup.grid.layout(), &section.x0)?;
    let greedy = greedy_policy(&setup.family, t, &setup.u0, section.m)?;
    let spec = SamplerSpec { policy: greedy.policy, paths: section.paths, seed: section.seed, safety: section.safety };
    // Exact payoff for probes, grid interpolation for tabulated data.
    let payoff = |s: State| match &setup.config.initial.probe {
        Some(p) => p.eval(s),
        None => setup.u0.interpolate(s).unwrap_or(f64::NAN),
    };
    let eps = quadrature_tolerance(&setup.family, t, 4, Region::Full)?.eps;
    let cmp = mc_compare(&setup.family, &spec, x0, &setup.u0, &payoff, setup.refine, eps)?;
    let mut checks = Vec::new();
    if setup.config.assertions.mc_consistent {
        checks.push(Check::flag(
            "mc_consistent",
            !cmp.flagged && cmp.lower_bound_holds,
            format!("estimate {:e} SE {:e} grid {:e} envelope {:e}", cmp.mc.estimate, cmp.mc.std_error, cmp.grid, cmp.nisio),
        ));
    }
    #[derive(Serialize)]
    struct McRecord<'a> {
        seed: u64,
        x0: &'a [f64],
        eps_q: f64,
        comparison: &'a nisio::mc::McComparison,
    }
    let out = McRecord { seed: section.seed, x0: &section.x0, eps_q: eps, comparison: &cmp };
    record(setup, dir, "mc.json", "mc", out, &checks)?;
    Ok(checks)
}

#[derive(Serialize)]
struct Section {
    file: String,
    stale: bool,
    record: serde_json::Value,
}

fn report(setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    let mut sections = Vec::new();
    let mut checks = Vec::new();
    for file in ["convergence.json", "properties.json", "dpp.json", "gap.json", "mc.json"] {
        let path = dir.join(file);
        if !path.exists() {
            continue;
        }
        let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path)?).with_context(|| format!("parsing {file}"))?;
        let stale = record.get("config_hash").and_then(|h| h.as_str()) != Some(setup.hash.as_str());
        if let Some(list) = record.get("assertions") {
            let list: Vec<Check> = serde_json::from_value(list.clone()).with_context(|| format!("assertions in {file}"))?;
            checks.extend(list);
        }
        sections.push(Section { file: file.to_string(), stale, record });
    }
    if sections.iter().any(|s| s.stale) {
        let stale: Vec<&str> = sections.iter().filter(|s| s.stale).map(|s| s.file.as_str()).collect();
        checks.push(Check::flag("fresh", false, format!("written for another config: {stale:?}")));
    }
    record(setup, dir, "report.json", "report", &sections, &checks)?;
    Ok(checks)
}

pub fn run(command: Command, setup: &Setup, dir: &Path) -> anyhow::Result<Vec<Check>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match command {
        Command::Solve => solve(setup, dir),
        Command::Properties => properties(setup, dir),
        Command::Dpp => dpp(setup, dir),
        Command::Control => control(setup, dir),
        Command::Mc => mc(setup, dir),
        Command::Report => report(setup, dir),
    }
}

/// Sections the command reads; checked before anything is written.
pub fn required_section(command: Command, setup: &Setup) -> anyhow::Result<()> {
    let c = &setup.config;
    let missing = match command {
        Command::Properties => c.properties.is_none().then_some("properties"),
        Command::Dpp => c.dpp.is_none().then_some("dpp"),
        Command::Control => c.control.is_none().then_some("control"),
        Command::Mc => c.mc.is_none().then_some("mc"),
        Command::Solve | Command::Report => None,
    };
    match missing {
        Some(name) => anyhow::bail!("the {command:?} command needs a [{name}] section"),
        None => Ok(()),
    }
}
