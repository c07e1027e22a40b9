//! Running scenarios into result directories, re-verifying them, and
//! parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::metrics::{
    read_csv, render_summary, summarize, write_csv, CwndRow, FlowRow, JobRow, LinkRow, QueueRow, RunTables, SummaryRow,
    CWND_CSV, CWND_HEADER, FLOWS_CSV, FLOW_HEADER, JOBS_CSV, JOB_HEADER, LINKS_CSV, LINK_HEADER, QUEUES_CSV,
    QUEUE_HEADER, RUN_META, SUMMARY_CSV,
};
use crate::sim::{mix64, SimTime, RNG_ALGORITHM};
use crate::workload::build_driver;
use crate::world::{RunOutput, Sim};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "AMPSIM_OUT";
pub const SWEEP_INDEX: &str = "sweep_index.csv";

/// Identity and outcome of a run, stored next to its tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub end_time_ns: u64,
    pub events: u64,
    /// Hex digest of every dispatched event; equal digests mean equal runs.
    pub trace_digest: String,
    pub data_drops: u64,
    pub ack_drops: u64,
    pub floor_violations: u64,
    pub window_violations: u64,
    pub suppressions: u64,
    pub releases: u64,
    pub config: ScenarioConfig,
}

/// Validates and simulates `cfg`; nothing is written.
pub fn execute(cfg: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    cfg.validate()?;
    let sim = Sim::new(cfg)?;
    let mut driver = build_driver(cfg, &sim)?;
    Ok(sim.run(driver.as_mut(), cfg.duration))
}

pub fn tables(out: &RunOutput) -> RunTables {
    RunTables {
        end_time: out.end_time,
        flows: out.flows.clone(),
        jobs: out.jobs.clone(),
        links: out.links.clone(),
        queues: out.queues.clone(),
    }
}

/// Simulates `cfg` and writes every table plus `run_meta.toml` into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> anyhow::Result<RunOutput> {
    let out = execute(cfg)?;
    write_run_dir(dir, cfg, &out)?;
    Ok(out)
}

pub fn write_run_dir(dir: &Path, cfg: &ScenarioConfig, out: &RunOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_csv(&dir.join(FLOWS_CSV), FLOW_HEADER, out.flows.iter().map(FlowRow::from))?;
    write_csv(&dir.join(JOBS_CSV), JOB_HEADER, out.jobs.iter().map(JobRow::from))?;
    write_csv(&dir.join(LINKS_CSV), LINK_HEADER, out.links.iter().map(LinkRow::from))?;
    let names: Vec<(&str, &str)> = out.links.iter().map(|l| (l.from.as_str(), l.to.as_str())).collect();
    write_csv(
        &dir.join(QUEUES_CSV),
        QUEUE_HEADER,
        out.queues.iter().map(|q| {
            let (from, to) = names[q.link as usize];
            QueueRow {
                time_ns: q.time.0,
                link: q.link,
                from: from.into(),
                to: to.into(),
                occupancy: q.occupancy,
                marked: q.marked,
                dropped: q.dropped,
                duration_ns: q.duration.0,
            }
        }),
    )?;
    write_csv(&dir.join(CWND_CSV), CWND_HEADER, out.cwnd.iter().map(CwndRow::from))?;
    fs::write(dir.join(SUMMARY_CSV), render_summary(&summarize(&tables(out))))?;
    let s = out.stats;
    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION").into(),
        rng: RNG_ALGORITHM.into(),
        seed: cfg.seed,
        end_time_ns: out.end_time.0,
        events: s.events,
        trace_digest: format!("{:016x}", s.trace_digest),
        data_drops: s.data_drops,
        ack_drops: s.ack_drops,
        floor_violations: s.floor_violations,
        window_violations: s.window_violations,
        suppressions: s.suppressions,
        releases: s.releases,
        config: cfg.clone(),
    };
    fs::write(dir.join(RUN_META), toml::to_string(&meta)?)?;
    Ok(())
}

pub fn read_meta(dir: &Path) -> anyhow::Result<RunMeta> {
    let p = dir.join(RUN_META);
    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

/// Loads the tables of a run directory back into records.
pub fn load_run_dir(dir: &Path) -> anyhow::Result<RunTables> {
    let meta = read_meta(dir)?;
    let flows =
        read_csv::<FlowRow>(&dir.join(FLOWS_CSV))?.into_iter().map(TryInto::try_into).collect::<Result<_, _>>()?;
    let jobs = read_csv::<JobRow>(&dir.join(JOBS_CSV))?.into_iter().map(Into::into).collect();
    let links =
        read_csv::<LinkRow>(&dir.join(LINKS_CSV))?.into_iter().map(TryInto::try_into).collect::<Result<_, _>>()?;
    let queues = read_csv::<QueueRow>(&dir.join(QUEUES_CSV))?.into_iter().map(Into::into).collect();
    Ok(RunTables { end_time: SimTime(meta.end_time_ns), flows, jobs, links, queues })
}

pub fn read_summary(dir: &Path) -> anyhow::Result<Vec<SummaryRow>> {
    read_csv(&dir.join(SUMMARY_CSV))
}

/// Outcome of recomputing a run directory's summary from its tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub rows: usize,
    /// `(scope, metric, stored, recomputed)`; a missing side is empty.
    pub mismatches: Vec<(String, String, String, String)>,
    pub identical_bytes: bool,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.identical_bytes && self.mismatches.is_empty()
    }
}

pub fn verify(dir: &Path) -> anyhow::Result<VerifyReport> {
    let stored_text =
        fs::read_to_string(dir.join(SUMMARY_CSV)).with_context(|| format!("reading summary in {}", dir.display()))?;
    let stored = read_summary(dir)?;
    let fresh = summarize(&load_run_dir(dir)?);
    let identical_bytes = render_summary(&fresh) == stored_text;
    let key = |r: &SummaryRow| (r.scope.clone(), r.metric.clone());
    let mut mismatches = Vec::new();
    for r in &stored {
        match fresh.iter().find(|f| key(f) == key(r)) {
            Some(f) if f.value == r.value => {}
            Some(f) => mismatches.push((r.scope.clone(), r.metric.clone(), r.value.clone(), f.value.clone())),
            None => mismatches.push((r.scope.clone(), r.metric.clone(), r.value.clone(), String::new())),
        }
    }
    for f in &fresh {
        if !stored.iter().any(|r| key(r) == key(f)) {
            mismatches.push((f.scope.clone(), f.metric.clone(), String::new(), f.value.clone()));
        }
    }
    Ok(VerifyReport { rows: stored.len(), mismatches, identical_bytes })
}

/// One swept configuration key and its values.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDim {
    pub key: String,
    pub values: Vec<toml::Value>,
}

/// Parses `key=v1,v2;key2=lo..hi`. Ranges are inclusive integer ranges;
/// values are TOML literals, or strings when they do not parse as one.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<GridDim>> {
    let mut dims: Vec<GridDim> = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, vals) = part.split_once('=').ok_or_else(|| anyhow!("grid dimension `{part}` lacks `=`"))?;
        let key = key.trim();
        if key.is_empty() {
            bail!("grid dimension `{part}` has an empty key");
        }
        if dims.iter().any(|d| d.key == key) {
            bail!("grid key `{key}` appears twice");
        }
        let mut values = Vec::new();
        for v in split_values(vals) {
            if v.is_empty() {
                bail!("grid key `{key}` has an empty value");
            }
            match v.split_once("..") {
                Some((lo, hi)) if lo.parse::<i64>().is_ok() && hi.parse::<i64>().is_ok() => {
                    let (lo, hi) = (lo.parse::<i64>()?, hi.parse::<i64>()?);
                    if lo > hi {
                        bail!("grid range `{v}` is empty");
                    }
                    values.extend((lo..=hi).map(toml::Value::Integer));
                }
                _ => values.push(parse_literal(v)),
            }
        }
        dims.push(GridDim { key: key.into(), values });
    }
    Ok(dims)
}

/// Splits on commas outside brackets and quotes.
fn split_values(s: &str) -> Vec<&str> {
    let (mut depth, mut quoted, mut start) = (0i32, false, 0);
    let mut out = Vec::new();
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn parse_literal(v: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {v}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.into()))
}

/// Every combination of the grid, first dimension varying slowest. An
/// empty grid has exactly one (empty) point.
pub fn grid_points(dims: &[GridDim]) -> Vec<Vec<(String, toml::Value)>> {
    let mut points = vec![Vec::new()];
    for d in dims {
        points = points
            .into_iter()
            .flat_map(|p| {
                d.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((d.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn render_value(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Canonical `key=value,...` label of a point.
pub fn point_label(point: &[(String, toml::Value)]) -> String {
    point.iter().map(|(k, v)| format!("{k}={}", render_value(v))).collect::<Vec<_>>().join(",")
}

/// Sets a dotted key (`classes.mp.tau`, `workload.flows.0.count`) on a copy
/// of `cfg`. Missing intermediate tables are created.
pub fn apply_override(cfg: &ScenarioConfig, key: &str, value: toml::Value) -> anyhow::Result<ScenarioConfig> {
    let mut root = toml::Value::try_from(cfg)?;
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = &mut root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            toml::Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), value);
                    break;
                }
                t.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize = part.parse().map_err(|_| anyhow!("`{key}`: `{part}` is not an array index"))?;
                let len = a.len();
                let slot = a.get_mut(idx).ok_or_else(|| anyhow!("`{key}`: index {idx} out of range ({len})"))?;
                if last {
                    *slot = value;
                    break;
                }
                slot
            }
            _ => bail!("`{key}`: `{part}` is not inside a table"),
        };
    }
    let text = toml::to_string(&root)?;
    ScenarioConfig::from_toml_str(&text).map_err(|e| anyhow!("`{key}`: {e}"))
}

/// Seed of a grid point: the base seed mixed with a hash of the point's
/// own assignments, so a point's run does not depend on its neighbours.
/// An explicit `seed` assignment wins; the empty point keeps the base seed.
/// Seeds stay below 2^63 so they fit a TOML integer.
pub fn point_seed(base: u64, point: &[(String, toml::Value)]) -> u64 {
    if point.is_empty() {
        return base;
    }
    let label = point_label(point);
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    (base ^ mix64(h)) & i64::MAX as u64
}

fn dir_name(point: &[(String, toml::Value)]) -> String {
    if point.is_empty() {
        return "base".into();
    }
    point_label(point).chars().map(|c| if c.is_ascii_alphanumeric() || "._=,-".contains(c) { c } else { '_' }).collect()
}

/// Result of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointOutcome {
    pub label: String,
    pub dir: PathBuf,
    pub seed: u64,
    pub error: Option<String>,
}

/// Resolves a grid point's full configuration.
pub fn point_config(base: &ScenarioConfig, point: &[(String, toml::Value)]) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = base.clone();
    cfg.seed = point_seed(base.seed, point);
    for (k, v) in point {
        cfg = apply_override(&cfg, k, v.clone())?;
    }
    Ok(cfg)
}

/// Runs every grid point into its own subdirectory of `root` with at most
/// `parallel` concurrent runs, then writes `sweep_index.csv`. Failing
/// points are recorded and do not stop the sweep.
pub fn run_sweep(
    base: &ScenarioConfig,
    dims: &[GridDim],
    parallel: usize,
    root: &Path,
) -> anyhow::Result<Vec<PointOutcome>> {
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    let points = grid_points(dims);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel.max(1)).build()?;
    let outcomes: Vec<PointOutcome> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let dir = root.join(dir_name(p));
                let res = point_config(base, p).and_then(|cfg| run_scenario(&cfg, &dir).map(|_| cfg.seed));
                let (seed, error) = match res {
                    Ok(seed) => (seed, None),
                    Err(e) => (point_seed(base.seed, p), Some(format!("{e:#}"))),
                };
                PointOutcome { label: point_label(p), dir, seed, error }
            })
            .collect()
    });
    let mut header = vec!["point", "dir", "seed", "status", "error"];
    header.extend(dims.iter().map(|d| d.key.as_str()));
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .zip(&points)
        .enumerate()
        .map(|(i, (o, p))| {
            let mut r = vec![
                i.to_string(),
                o.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                o.seed.to_string(),
                if o.error.is_none() { "ok".into() } else { "failed".into() },
                o.error.clone().unwrap_or_default(),
            ];
            r.extend(p.iter().map(|(_, v)| render_value(v)));
            r
        })
        .collect();
    write_csv(&root.join(SWEEP_INDEX), &header, rows)?;
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_products_and_ranges() {
        let d = parse_grid("classes.x.subflows=2..4; classes.x.tau=2,8").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].values.len(), 3);
        let p = grid_points(&d);
        assert_eq!(p.len(), 6);
        assert_eq!(point_label(&p[1]), "classes.x.subflows=2,classes.x.tau=8");
        assert_eq!(grid_points(&parse_grid("").unwrap()), vec![Vec::<(String, toml::Value)>::new()]);
    }

    #[test]
    fn grid_errors() {
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("a=1;a=2").is_err());
        assert!(parse_grid("a=5..2").is_err());
        assert!(parse_grid("a=1,,2").is_err());
    }

    #[test]
    fn arrays_are_single_values() {
        let d = parse_grid("metrics.cwnd.flows=[0,2],[1]").unwrap();
        assert_eq!(d[0].values.len(), 2);
    }

    #[test]
    fn literals_and_strings() {
        let d = parse_grid("x=1.5,true,amp,\"q\"").unwrap();
        assert_eq!(
            d[0].values,
            vec![
                toml::Value::Float(1.5),
                toml::Value::Boolean(true),
                toml::Value::String("amp".into()),
                toml::Value::String("q".into())
            ]
        );
    }

    #[test]
    fn seeds_depend_only_on_the_point() {
        let a = vec![("tau".to_string(), toml::Value::Integer(4))];
        let b = vec![("tau".to_string(), toml::Value::Integer(6))];
        assert_eq!(point_seed(7, &[]), 7);
        assert_eq!(point_seed(7, &a), point_seed(7, &a));
        assert_ne!(point_seed(7, &a), point_seed(7, &b));
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut cfg = ScenarioConfig::default();
        cfg.classes.insert("x".into(), crate::config::ClassConfig::of(crate::cc::Algorithm::Amp));
        let c = apply_override(&cfg, "classes.x.tau", toml::Value::Integer(6)).unwrap();
        assert_eq!(c.classes["x"].tau, Some(6));
        let c = apply_override(&c, "queue.threshold", toml::Value::Integer(20)).unwrap();
        assert_eq!(c.queue.threshold, 20);
        assert!(apply_override(&c, "queue.bogus", toml::Value::Integer(1)).is_err());
        assert!(apply_override(&c, "seed.x", toml::Value::Integer(1)).is_err());
    }
}
