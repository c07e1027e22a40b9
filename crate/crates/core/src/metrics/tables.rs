//! CSV schemas of a run directory. Times are integer nanoseconds.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::records::{CwndSample, FlowRecord, FlowStatus, JobRecord, LinkRecord, Role};
use crate::net::{Layer, QueueCounters, QueueSample};
use crate::sim::SimTime;

pub const FLOWS_CSV: &str = "flows.csv";
pub const JOBS_CSV: &str = "jobs.csv";
pub const QUEUES_CSV: &str = "queues.csv";
pub const LINKS_CSV: &str = "links.csv";
pub const CWND_CSV: &str = "cwnd.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const RUN_META: &str = "run_meta.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub flow_id: u32,
    pub role: String,
    pub class: String,
    pub algorithm: String,
    pub src: String,
    pub dst: String,
    pub size_bytes: Option<u64>,
    pub start_ns: u64,
    pub end_ns: u64,
    pub fct_ns: u64,
    pub bytes_acked: u64,
    pub bytes_delivered: u64,
    pub bytes_sent: u64,
    pub goodput_bps: f64,
    pub status: String,
    pub timeouts: u64,
    pub retransmits: u64,
    pub subflows: u32,
    pub episodes: u32,
    pub job_id: Option<u32>,
}

impl From<&FlowRecord> for FlowRow {
    fn from(r: &FlowRecord) -> Self {
        FlowRow {
            flow_id: r.flow_id,
            role: r.role.name().into(),
            class: r.class.clone(),
            algorithm: r.algorithm.name().into(),
            src: r.src.clone(),
            dst: r.dst.clone(),
            size_bytes: r.size,
            start_ns: r.start.0,
            end_ns: r.end.0,
            fct_ns: r.fct().0,
            bytes_acked: r.bytes_acked,
            bytes_delivered: r.bytes_delivered,
            bytes_sent: r.bytes_sent,
            goodput_bps: r.goodput_bps(),
            status: r.status.name().into(),
            timeouts: r.timeouts,
            retransmits: r.retransmits,
            subflows: r.subflows,
            episodes: r.episodes,
            job_id: r.job,
        }
    }
}

impl TryFrom<FlowRow> for FlowRecord {
    type Error = anyhow::Error;
    fn try_from(r: FlowRow) -> anyhow::Result<Self> {
        Ok(FlowRecord {
            flow_id: r.flow_id,
            role: Role::parse(&r.role).ok_or_else(|| anyhow!("flow {}: unknown role `{}`", r.flow_id, r.role))?,
            class: r.class,
            algorithm: r.algorithm.parse().map_err(|e: String| anyhow!("flow {}: {e}", r.flow_id))?,
            src: r.src,
            dst: r.dst,
            size: r.size_bytes,
            start: SimTime(r.start_ns),
            end: SimTime(r.end_ns),
            bytes_acked: r.bytes_acked,
            bytes_delivered: r.bytes_delivered,
            bytes_sent: r.bytes_sent,
            status: FlowStatus::parse(&r.status)
                .ok_or_else(|| anyhow!("flow {}: unknown status `{}`", r.flow_id, r.status))?,
            timeouts: r.timeouts,
            retransmits: r.retransmits,
            subflows: r.subflows,
            episodes: r.episodes,
            job: r.job_id,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRow {
    pub job_id: u32,
    pub slot: u32,
    pub client: String,
    pub fan_in: u32,
    pub start_ns: u64,
    pub end_ns: u64,
    pub jct_ns: u64,
}

impl From<&JobRecord> for JobRow {
    fn from(j: &JobRecord) -> Self {
        JobRow {
            job_id: j.job_id,
            slot: j.slot,
            client: j.client.clone(),
            fan_in: j.fan_in,
            start_ns: j.start.0,
            end_ns: j.end.0,
            jct_ns: j.jct().0,
        }
    }
}

impl From<JobRow> for JobRecord {
    fn from(j: JobRow) -> Self {
        JobRecord {
            job_id: j.job_id,
            slot: j.slot,
            client: j.client,
            fan_in: j.fan_in,
            start: SimTime(j.start_ns),
            end: SimTime(j.end_ns),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRow {
    pub link: u32,
    pub from: String,
    pub to: String,
    pub layer: String,
    pub rate_bps: u64,
    pub arrivals: u64,
    pub enqueued: u64,
    pub marked: u64,
    pub dropped: u64,
    pub bytes: u64,
}

impl From<&LinkRecord> for LinkRow {
    fn from(l: &LinkRecord) -> Self {
        LinkRow {
            link: l.link,
            from: l.from.clone(),
            to: l.to.clone(),
            layer: l.layer.name().into(),
            rate_bps: l.rate_bps,
            arrivals: l.counters.arrivals,
            enqueued: l.counters.enqueued,
            marked: l.counters.marked,
            dropped: l.counters.dropped,
            bytes: l.counters.bytes,
        }
    }
}

impl TryFrom<LinkRow> for LinkRecord {
    type Error = anyhow::Error;
    fn try_from(l: LinkRow) -> anyhow::Result<Self> {
        Ok(LinkRecord {
            link: l.link,
            layer: Layer::parse(&l.layer).ok_or_else(|| anyhow!("link {}: unknown layer `{}`", l.link, l.layer))?,
            from: l.from,
            to: l.to,
            rate_bps: l.rate_bps,
            counters: QueueCounters {
                arrivals: l.arrivals,
                enqueued: l.enqueued,
                marked: l.marked,
                dropped: l.dropped,
                bytes: l.bytes,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueRow {
    pub time_ns: u64,
    pub link: u32,
    pub from: String,
    pub to: String,
    pub occupancy: u32,
    pub marked: u64,
    pub dropped: u64,
    pub duration_ns: u64,
}

impl From<QueueRow> for QueueSample {
    fn from(q: QueueRow) -> Self {
        QueueSample {
            time: SimTime(q.time_ns),
            link: q.link,
            occupancy: q.occupancy,
            marked: q.marked,
            dropped: q.dropped,
            duration: SimTime(q.duration_ns),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwndRow {
    pub time_ns: u64,
    pub flow_id: u32,
    pub subflow: u8,
    pub cwnd: f64,
    pub active: bool,
}

impl From<&CwndSample> for CwndRow {
    fn from(c: &CwndSample) -> Self {
        CwndRow { time_ns: c.time.0, flow_id: c.flow_id, subflow: c.subflow, cwnd: c.cwnd, active: c.active }
    }
}

impl From<CwndRow> for CwndSample {
    fn from(c: CwndRow) -> Self {
        CwndSample { time: SimTime(c.time_ns), flow_id: c.flow_id, subflow: c.subflow, cwnd: c.cwnd, active: c.active }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scope: String,
    pub metric: String,
    pub value: String,
}

/// Writes rows with a header even when `rows` is empty.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(f));
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::Reader::from_reader(BufReader::new(f));
    r.deserialize().map(|row| row.with_context(|| format!("parsing {}", path.display()))).collect()
}

pub const FLOW_HEADER: &[&str] = &[
    "flow_id",
    "role",
    "class",
    "algorithm",
    "src",
    "dst",
    "size_bytes",
    "start_ns",
    "end_ns",
    "fct_ns",
    "bytes_acked",
    "bytes_delivered",
    "bytes_sent",
    "goodput_bps",
    "status",
    "timeouts",
    "retransmits",
    "subflows",
    "episodes",
    "job_id",
];
pub const JOB_HEADER: &[&str] = &["job_id", "slot", "client", "fan_in", "start_ns", "end_ns", "jct_ns"];
pub const LINK_HEADER: &[&str] =
    &["link", "from", "to", "layer", "rate_bps", "arrivals", "enqueued", "marked", "dropped", "bytes"];
pub const QUEUE_HEADER: &[&str] = &["time_ns", "link", "from", "to", "occupancy", "marked", "dropped", "duration_ns"];
pub const CWND_HEADER: &[&str] = &["time_ns", "flow_id", "subflow", "cwnd", "active"];
pub const SUMMARY_HEADER: &[&str] = &["scope", "metric", "value"];

/// Renders summary rows exactly as they are written to `summary.csv`.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    let mut out = w.into_inner().expect("in-memory flush");
    out.flush().expect("vec flush");
    String::from_utf8(out).expect("utf-8")
}
