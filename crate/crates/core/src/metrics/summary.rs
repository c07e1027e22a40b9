use std::collections::BTreeMap;

use super::records::{FlowRecord, FlowStatus, JobRecord, LinkRecord};
use super::stats::{jain_index, mean, percentile, weighted_mean, weighted_percentile};
use super::tables::SummaryRow;
use crate::net::{Layer, QueueSample};
use crate::sim::SimTime;

/// Everything summary statistics are computed from; exactly what the CSV
/// files of a run directory hold.
#[derive(Clone, Debug, Default)]
pub struct RunTables {
    pub end_time: SimTime,
    pub flows: Vec<FlowRecord>,
    pub jobs: Vec<JobRecord>,
    pub links: Vec<LinkRecord>,
    pub queues: Vec<QueueSample>,
}

struct Rows(Vec<SummaryRow>);

impl Rows {
    fn push(&mut self, scope: &str, metric: &str, value: impl ToString) {
        self.0.push(SummaryRow { scope: scope.into(), metric: metric.into(), value: value.to_string() });
    }
}

fn flow_group(rows: &mut Rows, scope: &str, flows: &[&FlowRecord]) {
    let done: Vec<u64> = flows.iter().filter(|f| f.status == FlowStatus::Completed).map(|f| f.fct().0).collect();
    rows.push(scope, "flows", flows.len());
    rows.push(scope, "completed", done.len());
    rows.push(scope, "failed", flows.iter().filter(|f| f.status == FlowStatus::Failed).count());
    if let Some(m) = mean(&done.iter().map(|&x| x as f64).collect::<Vec<_>>()) {
        rows.push(scope, "mean_fct_ns", m);
        for (name, p) in [("p50_fct_ns", 0.5), ("p90_fct_ns", 0.9), ("p99_fct_ns", 0.99), ("max_fct_ns", 1.0)] {
            rows.push(scope, name, percentile(&done, p).expect("non-empty"));
        }
    }
    let gp: Vec<f64> = flows.iter().map(|f| f.goodput_bps()).collect();
    if let Some(m) = mean(&gp) {
        rows.push(scope, "mean_goodput_bps", m);
        rows.push(scope, "total_goodput_bps", gp.iter().sum::<f64>());
    }
    if let Ok(j) = jain_index(&gp) {
        rows.push(scope, "jain_goodput", j);
    }
    rows.push(scope, "bytes_acked", flows.iter().map(|f| f.bytes_acked).sum::<u64>());
    rows.push(scope, "timeouts", flows.iter().map(|f| f.timeouts).sum::<u64>());
    rows.push(scope, "flows_with_timeouts", flows.iter().filter(|f| f.timeouts > 0).count());
    rows.push(scope, "ssr_episodes", flows.iter().map(|f| f.episodes as u64).sum::<u64>());
}

/// Aggregates in a fixed order: run, per role, per class, per algorithm,
/// per destination (Jain across flows sharing a receiver downlink), jobs,
/// monitored queues, and per-layer utilization.
pub fn summarize(t: &RunTables) -> Vec<SummaryRow> {
    let mut rows = Rows(Vec::new());
    rows.push("run", "end_time_ns", t.end_time.0);
    let all: Vec<&FlowRecord> = t.flows.iter().collect();
    flow_group(&mut rows, "run", &all);
    rows.push("run", "data_drops", t.links.iter().map(|l| l.counters.dropped).sum::<u64>());

    let keys: [fn(&FlowRecord) -> String; 3] = [
        |f| format!("role:{}", f.role.name()),
        |f| format!("class:{}", f.class),
        |f| format!("alg:{}", f.algorithm.name()),
    ];
    for key in keys {
        let mut by: BTreeMap<String, Vec<&FlowRecord>> = BTreeMap::new();
        for f in &t.flows {
            by.entry(key(f)).or_default().push(f);
        }
        for (scope, v) in &by {
            flow_group(&mut rows, scope, v);
        }
    }

    let mut dst: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for f in &t.flows {
        dst.entry(f.dst.as_str()).or_default().push(f.goodput_bps());
    }
    for (d, gp) in dst {
        if gp.len() >= 2 {
            if let Ok(j) = jain_index(&gp) {
                rows.push(&format!("dst:{d}"), "jain_goodput", j);
            }
        }
    }

    if !t.jobs.is_empty() {
        let jct: Vec<u64> = t.jobs.iter().map(|j| j.jct().0).collect();
        rows.push("jobs", "count", jct.len());
        rows.push("jobs", "mean_jct_ns", mean(&jct.iter().map(|&x| x as f64).collect::<Vec<_>>()).expect("non-empty"));
        for (name, p) in [("p50_jct_ns", 0.5), ("p90_jct_ns", 0.9), ("p99_jct_ns", 0.99), ("max_jct_ns", 1.0)] {
            rows.push("jobs", name, percentile(&jct, p).expect("non-empty"));
        }
    }

    let mut per_link: BTreeMap<u32, Vec<(u64, u64)>> = BTreeMap::new();
    for q in &t.queues {
        per_link.entry(q.link).or_default().push((q.occupancy as u64, q.duration.0));
    }
    for (link, s) in per_link {
        let Some(l) = t.links.iter().find(|l| l.link == link) else { continue };
        let scope = format!("queue:{}->{}", l.from, l.to);
        if let Some(m) = weighted_mean(&s) {
            rows.push(&scope, "mean_occupancy", m);
            rows.push(&scope, "median_occupancy", weighted_percentile(&s, 0.5).expect("weighted"));
            rows.push(&scope, "p90_occupancy", weighted_percentile(&s, 0.9).expect("weighted"));
        }
        rows.push(&scope, "max_occupancy", s.iter().map(|x| x.0).max().unwrap_or(0));
        rows.push(&scope, "marked", l.counters.marked);
        rows.push(&scope, "dropped", l.counters.dropped);
    }

    let secs = t.end_time.as_secs_f64();
    if secs > 0.0 {
        for layer in Layer::ALL {
            let u: Vec<f64> = t
                .links
                .iter()
                .filter(|l| l.layer == layer)
                .map(|l| link_utilization(l.counters.bytes, l.rate_bps, t.end_time))
                .collect();
            if let Some(m) = mean(&u) {
                rows.push(&format!("layer:{}", layer.name()), "utilization", m);
            }
        }
    }
    rows.0
}

/// Carried bits over capacity for the whole run.
pub fn link_utilization(bytes: u64, rate_bps: u64, duration: SimTime) -> f64 {
    let cap = rate_bps as f64 * duration.as_secs_f64();
    if cap <= 0.0 {
        0.0
    } else {
        bytes as f64 * 8.0 / cap
    }
}

/// Looks up one summary value.
pub fn lookup<'a>(rows: &'a [SummaryRow], scope: &str, metric: &str) -> Option<&'a str> {
    rows.iter().find(|r| r.scope == scope && r.metric == metric).map(|r| r.value.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utilization_bounds() {
        assert_eq!(link_utilization(0, 10_000_000_000, SimTime::from_secs(1)), 0.0);
        assert_eq!(link_utilization(1_250_000_000, 10_000_000_000, SimTime::from_secs(1)), 1.0);
    }
}
