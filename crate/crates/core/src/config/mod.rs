//! Scenario files: a single TOML document fully describing one run.

mod units;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use units::{BitRate, ByteSize};

use crate::cc::{Algorithm, CcParams};
use crate::net::{LinkParams, Preset, Tier, Topology, TopologyError};
use crate::sim::SimTime;
use crate::transport::TransportConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    /// Hard stop; workloads may end the run earlier.
    pub duration: SimTime,
    pub topology: TopologyConfig,
    pub queue: QueueConfig,
    pub transport: TransportConfig,
    /// Defaults for every class; classes override individual fields.
    pub cc: CcParams,
    pub classes: BTreeMap<String, ClassConfig>,
    pub workload: WorkloadConfig,
    pub metrics: MetricsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 1,
            duration: SimTime::from_secs(1),
            topology: TopologyConfig::default(),
            queue: QueueConfig::default(),
            transport: TransportConfig::default(),
            cc: CcParams::default(),
            classes: BTreeMap::new(),
            workload: WorkloadConfig::Static(StaticSpec::default()),
            metrics: MetricsConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Star,
    Parallel2,
    Fattree,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub preset: TopologyKind,
    /// Star only.
    pub senders: usize,
    /// Fat-tree only.
    pub k: u32,
    pub rate: BitRate,
    pub delay: SimTime,
    /// Extra latency when a packet is handed to a host's stack.
    pub host_delay: SimTime,
    /// Upper bound of a uniform random addition to `host_delay`, drawn per
    /// packet; arrivals over one link stay in order.
    pub host_jitter: SimTime,
    /// Custom only.
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            preset: TopologyKind::Star,
            senders: 9,
            k: 8,
            rate: BitRate(10_000_000_000),
            delay: SimTime::from_micros(2),
            host_delay: SimTime::ZERO,
            host_jitter: SimTime::ZERO,
            nodes: vec![],
            links: vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    pub tier: Tier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub rate: Option<BitRate>,
    #[serde(default)]
    pub delay: Option<SimTime>,
}

impl TopologyConfig {
    pub fn link_params(&self) -> LinkParams {
        LinkParams { rate_bps: self.rate.0, delay: self.delay }
    }

    pub fn build(&self) -> Result<Topology, TopologyError> {
        let params = self.link_params();
        match self.preset {
            TopologyKind::Star => Topology::build_preset(&Preset::Star { senders: self.senders }, params),
            TopologyKind::Parallel2 => Topology::build_preset(&Preset::Parallel2, params),
            TopologyKind::Fattree => Topology::build_preset(&Preset::FatTree { k: self.k as usize }, params),
            TopologyKind::Custom => {
                let mut t = Topology::new("custom");
                for n in &self.nodes {
                    t.add_node(n.name.clone(), n.tier)?;
                }
                for l in &self.links {
                    let a = t.lookup(&l.a)?;
                    let b = t.lookup(&l.b)?;
                    let p = LinkParams {
                        rate_bps: l.rate.map_or(params.rate_bps, |r| r.0),
                        delay: l.delay.unwrap_or(params.delay),
                    };
                    t.connect(a, b, p)?;
                }
                Ok(t)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueConfig {
    /// Packets.
    pub capacity: usize,
    /// Marking threshold K in packets.
    pub threshold: usize,
    pub marking: bool,
}

impl Default for QueueConfig {
    fn default() -> Self {
        Self { capacity: 100, threshold: 10, marking: true }
    }
}

/// A traffic class: which algorithm its flows run and with what knobs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassConfig {
    pub algorithm: Option<Algorithm>,
    /// Subflows per connection; 4 for multipath algorithms, 1 for DCTCP.
    pub subflows: Option<usize>,
    pub beta: Option<f64>,
    pub g: Option<f64>,
    pub alpha_init: Option<f64>,
    pub gamma: Option<u32>,
    pub tau: Option<u32>,
    pub ssr: Option<bool>,
    pub pin_epsilon: Option<f64>,
    pub cwnd_min: Option<f64>,
}

impl ClassConfig {
    pub fn of(algorithm: Algorithm) -> Self {
        Self { algorithm: Some(algorithm), ..Self::default() }
    }

    pub fn with_subflows(mut self, r: usize) -> Self {
        self.subflows = Some(r);
        self
    }
}

/// A class with every default applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedClass {
    pub name: String,
    pub algorithm: Algorithm,
    pub subflows: usize,
    pub params: CcParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadConfig {
    Static(StaticSpec),
    Incast(IncastSpec),
    Jobs(JobsSpec),
    General(GeneralSpec),
    Cdf(CdfSpec),
}

impl WorkloadConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            WorkloadConfig::Static(_) => "static",
            WorkloadConfig::Incast(_) => "incast",
            WorkloadConfig::Jobs(_) => "jobs",
            WorkloadConfig::General(_) => "general",
            WorkloadConfig::Cdf(_) => "cdf",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticSpec {
    pub flows: Vec<StaticFlow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticFlow {
    pub src: String,
    pub dst: String,
    pub class: String,
    /// Bytes; unbounded when absent.
    #[serde(default)]
    pub size: Option<ByteSize>,
    #[serde(default)]
    pub start: SimTime,
    #[serde(default)]
    pub stop: Option<SimTime>,
    /// Equal-cost candidate index per subflow instead of ECMP hashing.
    #[serde(default)]
    pub paths: Option<Vec<usize>>,
    /// Identical copies of this flow.
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncastSpec {
    /// Senders per batch.
    pub k: usize,
    pub flow_size: ByteSize,
    pub batch_period: SimTime,
    pub gap: SimTime,
    /// Batches to issue; as many as fit in the run when absent.
    pub batches: Option<u32>,
    pub receiver: String,
    pub class: String,
}

impl Default for IncastSpec {
    fn default() -> Self {
        Self {
            k: 30,
            flow_size: ByteSize(128 * 1024),
            batch_period: SimTime::from_secs(1),
            gap: SimTime::from_micros(50),
            batches: None,
            receiver: "recv".into(),
            class: "incast".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoSpec {
    pub shape: f64,
    pub mean: ByteSize,
    /// Completed long flows that end the run.
    pub count_to_complete: u64,
}

impl Default for ParetoSpec {
    fn default() -> Self {
        Self { shape: 1.5, mean: ByteSize(19_200 * 1024), count_to_complete: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobsSpec {
    pub fan_in: usize,
    pub request_size: ByteSize,
    pub response_size: ByteSize,
    pub parallel_jobs: usize,
    pub job_class: String,
    pub background_class: String,
    pub background: ParetoSpec,
}

impl Default for JobsSpec {
    fn default() -> Self {
        Self {
            fan_in: 10,
            request_size: ByteSize(2 * 1024),
            response_size: ByteSize(64 * 1024),
            parallel_jobs: 8,
            job_class: "short".into(),
            background_class: "long".into(),
            background: ParetoSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralSpec {
    /// Share of hosts running one long flow each.
    pub long_fraction: f64,
    /// Aggregate arrival rate of short flows, flows per second.
    pub lambda: f64,
    pub short_min: ByteSize,
    pub short_max: ByteSize,
    /// Long flows run for this long; the whole run when absent.
    pub long_duration: Option<SimTime>,
    pub long_class: String,
    pub short_class: String,
}

impl Default for GeneralSpec {
    fn default() -> Self {
        Self {
            long_fraction: 0.5,
            lambda: 64.0,
            short_min: ByteSize(1024),
            short_max: ByteSize(1024 * 1024),
            long_duration: None,
            long_class: "long".into(),
            short_class: "short".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdfSpec {
    /// CDF file, one `size_bytes probability` pair per line. Relative paths
    /// resolve against the scenario file.
    pub file: Option<PathBuf>,
    /// Inline alternative to `file`.
    pub points: Vec<(u64, f64)>,
    /// Per-host Poisson arrival rate, flows per second.
    pub rate_per_host: f64,
    /// Flows smaller than this are short.
    pub short_threshold: ByteSize,
    pub short_class: String,
    pub long_class: String,
}

impl Default for CdfSpec {
    fn default() -> Self {
        Self {
            file: None,
            points: vec![],
            rate_per_host: 1280.0,
            short_threshold: ByteSize(100 * 1024),
            short_class: "short".into(),
            long_class: "long".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QueueSelect {
    /// `"all"`, `"none"`, `"switch"` (switch egress) or `"host-downlinks"`.
    Keyword(String),
    /// Explicit `"a->b"` link names.
    Links(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub queues: QueueSelect,
    pub queue_decimation: SimTime,
    pub cwnd: Option<CwndTraceConfig>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { queues: QueueSelect::Keyword("host-downlinks".into()), queue_decimation: SimTime::ZERO, cwnd: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CwndTraceConfig {
    /// Flow ids to trace; every multipath flow when empty.
    pub flows: Vec<u32>,
    pub start: SimTime,
    /// End of the run when absent.
    pub end: Option<SimTime>,
    pub decimation: SimTime,
}

impl Default for CwndTraceConfig {
    fn default() -> Self {
        Self { flows: vec![], start: SimTime::ZERO, end: None, decimation: SimTime::ZERO }
    }
}

/// One problem with a field of the scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Parse { path: PathBuf::from("<string>"), message: e.to_string() })
    }

    /// Reads a scenario file and resolves a relative CDF path against it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.into(), source: e })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?;
        if let WorkloadConfig::Cdf(spec) = &mut cfg.workload {
            if let Some(f) = &spec.file {
                if f.is_relative() {
                    if let Some(dir) = path.parent() {
                        spec.file = Some(dir.join(f));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Applies class overrides over the global defaults.
    pub fn class(&self, name: &str) -> Option<ResolvedClass> {
        let c = self.classes.get(name)?;
        let algorithm = c.algorithm?;
        let mut p = self.cc;
        p.beta = c.beta.unwrap_or(p.beta);
        p.g = c.g.unwrap_or(p.g);
        p.alpha_init = c.alpha_init.unwrap_or(p.alpha_init);
        p.gamma = c.gamma.unwrap_or(p.gamma);
        p.tau = c.tau.unwrap_or(p.tau);
        p.ssr = c.ssr.unwrap_or(p.ssr);
        p.pin_epsilon = c.pin_epsilon.unwrap_or(p.pin_epsilon);
        p.cwnd_min = c.cwnd_min.unwrap_or(p.cwnd_min);
        let subflows = match algorithm {
            Algorithm::Dctcp => 1,
            _ => c.subflows.unwrap_or(4),
        };
        Some(ResolvedClass { name: name.to_string(), algorithm, subflows, params: p })
    }

    fn referenced_classes(&self) -> Vec<(String, String)> {
        match &self.workload {
            WorkloadConfig::Static(s) => s
                .flows
                .iter()
                .enumerate()
                .map(|(i, f)| (format!("workload.flows[{i}].class"), f.class.clone()))
                .collect(),
            WorkloadConfig::Incast(s) => vec![("workload.class".into(), s.class.clone())],
            WorkloadConfig::Jobs(s) => vec![
                ("workload.job_class".into(), s.job_class.clone()),
                ("workload.background_class".into(), s.background_class.clone()),
            ],
            WorkloadConfig::General(s) => vec![
                ("workload.long_class".into(), s.long_class.clone()),
                ("workload.short_class".into(), s.short_class.clone()),
            ],
            WorkloadConfig::Cdf(s) => vec![
                ("workload.short_class".into(), s.short_class.clone()),
                ("workload.long_class".into(), s.long_class.clone()),
            ],
        }
    }

    /// Field-level validation; every problem is reported, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut err = |field: &str, message: String| errs.push(FieldError { field: field.into(), message });

        if self.duration == SimTime::ZERO {
            err("duration", "must be positive".into());
        }
        if self.seed > i64::MAX as u64 {
            err("seed", "must be below 2^63".into());
        }
        let t = &self.topology;
        if t.rate.0 == 0 {
            err("topology.rate", "must be positive".into());
        }
        let topo = match t.build() {
            Ok(topo) => Some(topo),
            Err(e) => {
                let field = match t.preset {
                    TopologyKind::Star => "topology.senders",
                    TopologyKind::Fattree => "topology.k",
                    _ => "topology",
                };
                err(field, e.to_string());
                None
            }
        };
        let q = &self.queue;
        if q.capacity == 0 {
            err("queue.capacity", "must be positive".into());
        }
        if q.threshold >= q.capacity {
            err("queue.threshold", format!("must be below capacity ({})", q.capacity));
        }
        let tr = &self.transport;
        if tr.mss == 0 {
            err("transport.mss", "must be positive".into());
        }
        if tr.dupack_threshold == 0 {
            err("transport.dupack_threshold", "must be positive".into());
        }
        if tr.min_rto == SimTime::ZERO {
            err("transport.min_rto", "must be positive".into());
        }
        if let Some(w) = tr.initial_cwnd {
            if !(w.is_finite() && w >= 1.0) {
                err("transport.initial_cwnd", "must be at least 1 packet".into());
            }
        }
        check_params("cc", &self.cc, &mut err);
        for (name, c) in &self.classes {
            let f = |k: &str| format!("classes.{name}.{k}");
            if c.algorithm.is_none() {
                err(&f("algorithm"), "is required".into());
                continue;
            }
            if let Some(r) = c.subflows {
                if r == 0 || r > 64 {
                    err(&f("subflows"), "must be between 1 and 64".into());
                }
                if c.algorithm == Some(Algorithm::Dctcp) && r != 1 {
                    err(&f("subflows"), "dctcp runs exactly one subflow".into());
                }
            }
            if let Some(p) = self.class(name) {
                check_params(&format!("classes.{name}"), &p.params, &mut err);
            }
        }
        for (field, class) in self.referenced_classes() {
            if !self.classes.contains_key(&class) {
                err(&field, format!("unknown class `{class}`"));
            }
        }
        if let Some(topo) = &topo {
            self.validate_workload(topo, &mut err);
            if let QueueSelect::Links(names) = &self.metrics.queues {
                for (i, n) in names.iter().enumerate() {
                    if parse_link_name(topo, n).is_none() {
                        err(&format!("metrics.queues[{i}]"), format!("no link named `{n}` (expected `a->b`)"));
                    }
                }
            }
        }
        if let QueueSelect::Keyword(k) = &self.metrics.queues {
            if !matches!(k.as_str(), "all" | "none" | "switch" | "host-downlinks") {
                err("metrics.queues", format!("unknown selector `{k}` (all, none, switch, host-downlinks)"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn validate_workload(&self, topo: &Topology, err: &mut impl FnMut(&str, String)) {
        let host = |n: &str| topo.lookup(n).ok().filter(|&id| topo.node(id).tier.is_host());
        let hosts = topo.hosts().len();
        match &self.workload {
            WorkloadConfig::Static(s) => {
                for (i, f) in s.flows.iter().enumerate() {
                    for (k, n) in [("src", &f.src), ("dst", &f.dst)] {
                        if host(n).is_none() {
                            err(&format!("workload.flows[{i}].{k}"), format!("`{n}` is not a host"));
                        }
                    }
                    if f.src == f.dst {
                        err(&format!("workload.flows[{i}].dst"), "must differ from src".into());
                    }
                    if f.count == 0 {
                        err(&format!("workload.flows[{i}].count"), "must be at least 1".into());
                    }
                    if f.size.is_some_and(|s| s.0 == 0) {
                        err(&format!("workload.flows[{i}].size"), "must be positive".into());
                    }
                    if let Some(stop) = f.stop {
                        if stop <= f.start {
                            err(&format!("workload.flows[{i}].stop"), "must be after start".into());
                        }
                    }
                    if let (Some(p), Some(c)) = (&f.paths, self.class(&f.class)) {
                        if p.len() != c.subflows {
                            err(
                                &format!("workload.flows[{i}].paths"),
                                format!("needs one entry per subflow ({})", c.subflows),
                            );
                        }
                    }
                }
            }
            WorkloadConfig::Incast(s) => {
                if s.k == 0 {
                    err("workload.k", "must be at least 1".into());
                }
                if host(&s.receiver).is_none() {
                    err("workload.receiver", format!("`{}` is not a host", s.receiver));
                } else if hosts < 2 {
                    err("workload.receiver", "needs at least one other host".into());
                }
                if s.flow_size.0 == 0 {
                    err("workload.flow_size", "must be positive".into());
                }
                if s.batch_period == SimTime::ZERO {
                    err("workload.batch_period", "must be positive".into());
                }
            }
            WorkloadConfig::Jobs(s) => {
                if s.fan_in == 0 || s.fan_in + 1 > hosts {
                    err("workload.fan_in", format!("must be between 1 and {}", hosts.saturating_sub(1)));
                }
                if s.parallel_jobs == 0 {
                    err("workload.parallel_jobs", "must be at least 1".into());
                }
                if s.request_size.0 == 0 || s.response_size.0 == 0 {
                    err("workload.request_size", "request and response sizes must be positive".into());
                }
                check_pareto(&s.background, err);
            }
            WorkloadConfig::General(s) => {
                if !(s.long_fraction > 0.0 && s.long_fraction < 1.0) {
                    err("workload.long_fraction", "must be strictly between 0 and 1".into());
                }
                if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
                    err("workload.lambda", "must be a non-negative rate".into());
                }
                if s.short_min.0 == 0 || s.short_min > s.short_max {
                    err("workload.short_min", "must be positive and at most short_max".into());
                }
                let longs = (hosts as f64 * s.long_fraction).round() as usize;
                if longs < 2 || longs >= hosts {
                    err("workload.long_fraction", format!("leaves {longs} long-flow hosts of {hosts}"));
                }
            }
            WorkloadConfig::Cdf(s) => {
                if s.file.is_none() && s.points.is_empty() {
                    err("workload.file", "a CDF file or inline points are required".into());
                }
                if !s.points.is_empty() {
                    if let Err(e) = crate::workload::EmpiricalCdf::new(s.points.clone()) {
                        err("workload.points", e.to_string());
                    }
                }
                if let Some(f) = &s.file {
                    if let Err(e) = crate::workload::EmpiricalCdf::load(f) {
                        err("workload.file", e.to_string());
                    }
                }
                if !(s.rate_per_host > 0.0 && s.rate_per_host.is_finite()) {
                    err("workload.rate_per_host", "must be a positive rate".into());
                }
            }
        }
    }
}

fn check_pareto(p: &ParetoSpec, err: &mut impl FnMut(&str, String)) {
    if !(p.shape > 1.0 && p.shape.is_finite()) {
        err("workload.background.shape", "must exceed 1 so the mean exists".into());
    }
    if p.mean.0 == 0 {
        err("workload.background.mean", "must be positive".into());
    }
    if p.count_to_complete == 0 {
        err("workload.background.count_to_complete", "must be at least 1".into());
    }
}

fn check_params(scope: &str, p: &CcParams, err: &mut impl FnMut(&str, String)) {
    let f = |k: &str| format!("{scope}.{k}");
    if !(p.beta > 1.0 && p.beta.is_finite()) {
        err(&f("beta"), "must exceed 1".into());
    }
    if !(p.g > 0.0 && p.g <= 1.0) {
        err(&f("g"), "must be in (0, 1]".into());
    }
    if !(0.0..=1.0).contains(&p.alpha_init) {
        err(&f("alpha_init"), "must be in [0, 1]".into());
    }
    if p.gamma == 0 {
        err(&f("gamma"), "must be at least 1".into());
    }
    if p.tau == 0 {
        err(&f("tau"), "must be at least 1".into());
    }
    if !(p.cwnd_min >= 1.0 && p.cwnd_min.is_finite()) {
        err(&f("cwnd_min"), "must be at least 1 packet".into());
    }
    if !(p.pin_epsilon >= 0.0 && p.pin_epsilon.is_finite()) {
        err(&f("pin_epsilon"), "must be non-negative".into());
    }
}

/// Resolves `"a->b"` to a link id.
pub fn parse_link_name(topo: &Topology, name: &str) -> Option<u32> {
    let (a, b) = name.split_once("->")?;
    let a = topo.lookup(a.trim()).ok()?;
    let b = topo.lookup(b.trim()).ok()?;
    topo.out_links(a).iter().copied().find(|&l| topo.link(l).dst == b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.classes.insert("mp".into(), ClassConfig::of(Algorithm::Amp));
        c.workload = WorkloadConfig::Static(StaticSpec {
            flows: vec![StaticFlow {
                src: "s0".into(),
                dst: "recv".into(),
                class: "mp".into(),
                size: Some(ByteSize(1000)),
                start: SimTime::ZERO,
                stop: None,
                paths: None,
                count: 1,
            }],
        });
        c
    }

    #[test]
    fn toml_round_trip() {
        let c = base();
        let s = c.to_toml();
        let back = ScenarioConfig::from_toml_str(&s).unwrap();
        assert_eq!(back, c);
        back.validate().unwrap();
    }

    #[test]
    fn units_in_files() {
        let s = r#"
            duration = "20ms"
            [topology]
            preset = "star"
            senders = 4
            rate = "1Gbps"
            delay = "2us"
            [classes.x]
            algorithm = "mptcp-ecn-beta"
            subflows = 3
            [workload]
            kind = "incast"
            k = 4
            flow_size = "64KB"
            class = "x"
        "#;
        let c = ScenarioConfig::from_toml_str(s).unwrap();
        c.validate().unwrap();
        assert_eq!(c.duration, SimTime::from_millis(20));
        assert_eq!(c.topology.rate, BitRate(1_000_000_000));
        let x = c.class("x").unwrap();
        assert_eq!((x.algorithm, x.subflows), (Algorithm::MptcpEcnBeta, 3));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ScenarioConfig::from_toml_str("bogus = 1").is_err());
        assert!(ScenarioConfig::from_toml_str("[queue]\ncapacty = 5").is_err());
    }

    #[test]
    fn reports_every_field_error() {
        let mut c = base();
        c.queue.threshold = 200;
        c.cc.beta = 0.5;
        c.classes.insert(
            "bad".into(),
            ClassConfig { algorithm: Some(Algorithm::Dctcp), subflows: Some(2), ..Default::default() },
        );
        if let WorkloadConfig::Static(s) = &mut c.workload {
            s.flows[0].class = "nope".into();
            s.flows[0].dst = "sw".into();
        }
        let ConfigError::Invalid(errs) = c.validate().unwrap_err() else { panic!() };
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        for f in
            ["queue.threshold", "cc.beta", "classes.bad.subflows", "workload.flows[0].class", "workload.flows[0].dst"]
        {
            assert!(fields.contains(&f), "missing {f} in {fields:?}");
        }
    }

    #[test]
    fn class_overrides_apply() {
        let mut c = base();
        c.classes
            .insert("t".into(), ClassConfig { algorithm: Some(Algorithm::Amp), tau: Some(6), ..Default::default() });
        let r = c.class("t").unwrap();
        assert_eq!(r.params.tau, 6);
        assert_eq!(r.params.gamma, 2);
        assert_eq!(r.subflows, 4);
    }

    #[test]
    fn link_names_resolve() {
        let t = base().topology.build().unwrap();
        assert!(parse_link_name(&t, "sw->recv").is_some());
        assert!(parse_link_name(&t, "recv->s0").is_none());
    }
}
