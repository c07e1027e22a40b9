//! Topology, ECN-marking output queues, per-flow ECMP routing.

mod packet;
mod queue;
mod routing;
mod topology;

pub use packet::{FlowId, Packet};
pub use queue::{serialization_time, EcnQueue, EnqueueOutcome, QueueCounters, QueueMonitor, QueueSample};
pub use routing::{ecmp_select, FiveTuple, PathSelector, RouteArena, RouteError, RouteTable};
pub use topology::{Layer, Link, LinkId, LinkParams, Node, NodeId, Preset, Tier, Topology, TopologyError};

use crate::sim::SimTime;

/// Run-time network state: the topology plus one queue per directed link.
#[derive(Clone, Debug)]
pub struct Network {
    pub topo: Topology,
    pub routes: RouteTable,
    pub arena: RouteArena,
    pub queues: Vec<EcnQueue>,
}

impl Network {
    pub fn new(topo: Topology, capacity: usize, threshold: usize) -> Self {
        let routes = RouteTable::new(&topo);
        let queues = topo.links().iter().map(|l| EcnQueue::new(capacity, threshold, l.rate_bps, l.delay)).collect();
        Self { topo, routes, arena: RouteArena::default(), queues }
    }

    pub fn route(&mut self, src: NodeId, dst: NodeId, selector: PathSelector) -> Result<u32, RouteError> {
        let p = self.routes.path(&self.topo, src, dst, selector)?;
        Ok(self.arena.intern(p))
    }

    pub fn finalize(&mut self, t_end: SimTime) {
        for q in &mut self.queues {
            q.finalize(t_end);
        }
    }

    /// Smallest link rate along an interned route.
    pub fn route_min_rate(&self, route: u32) -> u64 {
        self.arena.get(route).iter().map(|&l| self.topo.link(l).rate_bps).min().unwrap_or(0)
    }
}
