//! Per-flow, per-job, per-queue and per-window records, the CSV schemas a
//! run directory is made of, and summary statistics derived from them.

mod records;
mod stats;
mod summary;
mod tables;

pub use records::{CwndSample, FlowRecord, FlowStatus, JobRecord, LinkRecord, Role};
pub use stats::{jain_index, mean, percentile, percentile_sorted, weighted_mean, weighted_percentile, StatsError};
pub use summary::{link_utilization, lookup, summarize, RunTables};
pub use tables::*;
