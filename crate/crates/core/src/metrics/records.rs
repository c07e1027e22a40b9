use serde::{Deserialize, Serialize};

use crate::cc::Algorithm;
use crate::net::{Layer, QueueCounters};
use crate::sim::SimTime;

/// What a flow is for within its workload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Flow,
    Incast,
    Short,
    Long,
    Background,
    Request,
    Response,
}

impl Role {
    pub const ALL: [Role; 7] =
        [Role::Flow, Role::Incast, Role::Short, Role::Long, Role::Background, Role::Request, Role::Response];

    pub fn name(self) -> &'static str {
        match self {
            Role::Flow => "flow",
            Role::Incast => "incast",
            Role::Short => "short",
            Role::Long => "long",
            Role::Background => "background",
            Role::Request => "request",
            Role::Response => "response",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowStatus {
    Completed,
    Failed,
    /// Ended by its configured stop time.
    Stopped,
    /// Still open when the run ended.
    Running,
}

impl FlowStatus {
    pub fn name(self) -> &'static str {
        match self {
            FlowStatus::Completed => "completed",
            FlowStatus::Failed => "failed",
            FlowStatus::Stopped => "stopped",
            FlowStatus::Running => "running",
        }
    }

    pub fn parse(s: &str) -> Option<FlowStatus> {
        [FlowStatus::Completed, FlowStatus::Failed, FlowStatus::Stopped, FlowStatus::Running]
            .into_iter()
            .find(|x| x.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRecord {
    pub flow_id: u32,
    pub role: Role,
    pub class: String,
    pub algorithm: Algorithm,
    pub src: String,
    pub dst: String,
    /// `None` for unbounded flows.
    pub size: Option<u64>,
    pub start: SimTime,
    pub end: SimTime,
    pub bytes_acked: u64,
    pub bytes_delivered: u64,
    pub bytes_sent: u64,
    pub status: FlowStatus,
    pub timeouts: u64,
    pub retransmits: u64,
    pub subflows: u32,
    pub episodes: u32,
    pub job: Option<u32>,
}

impl FlowRecord {
    pub fn fct(&self) -> SimTime {
        self.end.saturating_sub(self.start)
    }

    /// Acknowledged bits per second over the flow's lifetime.
    pub fn goodput_bps(&self) -> f64 {
        let t = self.fct().as_secs_f64();
        if t <= 0.0 {
            0.0
        } else {
            self.bytes_acked as f64 * 8.0 / t
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobRecord {
    pub job_id: u32,
    pub slot: u32,
    pub client: String,
    pub fan_in: u32,
    pub start: SimTime,
    pub end: SimTime,
}

impl JobRecord {
    pub fn jct(&self) -> SimTime {
        self.end.saturating_sub(self.start)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkRecord {
    pub link: u32,
    pub from: String,
    pub to: String,
    pub layer: Layer,
    pub rate_bps: u64,
    pub counters: QueueCounters,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CwndSample {
    pub time: SimTime,
    pub flow_id: u32,
    pub subflow: u8,
    pub cwnd: f64,
    pub active: bool,
}
