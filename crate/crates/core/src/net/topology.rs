use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

pub type NodeId = u32;
pub type LinkId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Host,
    Tor,
    Agg,
    Core,
    Switch,
}

impl Tier {
    pub fn is_host(self) -> bool {
        self == Tier::Host
    }
}

/// Network layer a link belongs to, for utilization accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    /// Host to first switch, either direction.
    Edge,
    /// ToR to aggregation.
    Aggregation,
    /// Aggregation to core.
    Core,
    /// Any other switch-to-switch link.
    Fabric,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Edge, Layer::Aggregation, Layer::Core, Layer::Fabric];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Edge => "edge",
            Layer::Aggregation => "aggregation",
            Layer::Core => "core",
            Layer::Fabric => "fabric",
        }
    }

    pub fn parse(s: &str) -> Option<Layer> {
        Layer::ALL.into_iter().find(|l| l.name() == s)
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub tier: Tier,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_bps: u64,
    pub delay: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkParams {
    pub rate_bps: u64,
    pub delay: SimTime,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("fat-tree parameter k must be even and at least 2, got {0}")]
    InvalidFatTreeK(usize),
    #[error("star topology needs at least one sender")]
    EmptyStar,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("a link may not connect `{0}` to itself")]
    SelfLoop(String),
}

/// Named preset shapes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `senders` hosts and one receiver on a single switch.
    Star {
        senders: usize,
    },
    /// Two edge-disjoint paths between a dual-homed source/sink pair, each
    /// shared with one single-path source/sink pair.
    Parallel2,
    FatTree {
        k: usize,
    },
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Star { senders } => write!(f, "star({senders})"),
            Preset::Parallel2 => f.write_str("parallel2"),
            Preset::FatTree { k } => write!(f, "fattree({k})"),
        }
    }
}

/// Hosts, switches and directed links. Every `connect` creates a link in
/// each direction; each directed link owns one output queue at run time.
#[derive(Clone, Debug, Default)]
pub struct Topology {
    pub preset: String,
    nodes: Vec<Node>,
    links: Vec<Link>,
    out_links: Vec<Vec<LinkId>>,
    by_name: HashMap<String, NodeId>,
}

impl Topology {
    pub fn new(preset: impl Into<String>) -> Self {
        Self { preset: preset.into(), ..Default::default() }
    }

    pub fn add_node(&mut self, name: impl Into<String>, tier: Tier) -> Result<NodeId, TopologyError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(TopologyError::DuplicateNode(name));
        }
        let id = self.nodes.len() as NodeId;
        self.by_name.insert(name.clone(), id);
        self.nodes.push(Node { name, tier });
        self.out_links.push(Vec::new());
        Ok(id)
    }

    /// Adds the two directed links `a -> b` and `b -> a`; returns `a -> b`.
    pub fn connect(&mut self, a: NodeId, b: NodeId, params: LinkParams) -> Result<LinkId, TopologyError> {
        if a == b {
            return Err(TopologyError::SelfLoop(self.nodes[a as usize].name.clone()));
        }
        let fwd = self.links.len() as LinkId;
        for (src, dst) in [(a, b), (b, a)] {
            let id = self.links.len() as LinkId;
            self.links.push(Link { src, dst, rate_bps: params.rate_bps, delay: params.delay });
            self.out_links[src as usize].push(id);
        }
        Ok(fwd)
    }

    pub fn build_preset(preset: &Preset, params: LinkParams) -> Result<Topology, TopologyError> {
        match *preset {
            Preset::Star { senders } => star(senders, params),
            Preset::Parallel2 => parallel2(params),
            Preset::FatTree { k } => fat_tree(k, params),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id as usize]
    }

    pub fn out_links(&self, n: NodeId) -> &[LinkId] {
        &self.out_links[n as usize]
    }

    pub fn lookup(&self, name: &str) -> Result<NodeId, TopologyError> {
        self.by_name.get(name).copied().ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    pub fn hosts(&self) -> Vec<NodeId> {
        self.ids_of(|t| t.is_host())
    }

    pub fn count(&self, tier: Tier) -> usize {
        self.nodes.iter().filter(|n| n.tier == tier).count()
    }

    fn ids_of(&self, f: impl Fn(Tier) -> bool) -> Vec<NodeId> {
        (0..self.nodes.len() as NodeId).filter(|&i| f(self.nodes[i as usize].tier)).collect()
    }

    pub fn layer(&self, link: LinkId) -> Layer {
        let l = &self.links[link as usize];
        let (a, b) = (self.nodes[l.src as usize].tier, self.nodes[l.dst as usize].tier);
        match (a, b) {
            (Tier::Host, _) | (_, Tier::Host) => Layer::Edge,
            (Tier::Tor, Tier::Agg) | (Tier::Agg, Tier::Tor) => Layer::Aggregation,
            (Tier::Agg, Tier::Core) | (Tier::Core, Tier::Agg) => Layer::Core,
            _ => Layer::Fabric,
        }
    }
}

fn star(senders: usize, params: LinkParams) -> Result<Topology, TopologyError> {
    if senders == 0 {
        return Err(TopologyError::EmptyStar);
    }
    let mut t = Topology::new(Preset::Star { senders }.to_string());
    let sw = t.add_node("sw", Tier::Tor)?;
    for i in 0..senders {
        let h = t.add_node(format!("s{i}"), Tier::Host)?;
        t.connect(h, sw, params)?;
    }
    let r = t.add_node("recv", Tier::Host)?;
    t.connect(sw, r, params)?;
    Ok(t)
}

/// `S2` and `D2` are dual-homed; path `a` is `S2 - a_in - a_out - D2`,
/// path `b` is `S2 - b_in - b_out - D2`. `S3 -> D3` shares the
/// `a_in -> a_out` link and `S1 -> D1` shares `b_in -> b_out`.
fn parallel2(params: LinkParams) -> Result<Topology, TopologyError> {
    let mut t = Topology::new(Preset::Parallel2.to_string());
    let a_in = t.add_node("a_in", Tier::Switch)?;
    let a_out = t.add_node("a_out", Tier::Switch)?;
    let b_in = t.add_node("b_in", Tier::Switch)?;
    let b_out = t.add_node("b_out", Tier::Switch)?;
    let s: Vec<NodeId> = (1..=3).map(|i| t.add_node(format!("S{i}"), Tier::Host)).collect::<Result<_, _>>()?;
    let d: Vec<NodeId> = (1..=3).map(|i| t.add_node(format!("D{i}"), Tier::Host)).collect::<Result<_, _>>()?;
    t.connect(a_in, a_out, params)?;
    t.connect(b_in, b_out, params)?;
    t.connect(s[1], a_in, params)?;
    t.connect(s[1], b_in, params)?;
    t.connect(a_out, d[1], params)?;
    t.connect(b_out, d[1], params)?;
    t.connect(s[2], a_in, params)?;
    t.connect(a_out, d[2], params)?;
    t.connect(s[0], b_in, params)?;
    t.connect(b_out, d[0], params)?;
    Ok(t)
}

/// Three-tier k-ary fat-tree: k pods of k/2 ToR and k/2 aggregation
/// switches, (k/2)^2 core switches, k/2 hosts per ToR.
fn fat_tree(k: usize, params: LinkParams) -> Result<Topology, TopologyError> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(TopologyError::InvalidFatTreeK(k));
    }
    let half = k / 2;
    let mut t = Topology::new(Preset::FatTree { k }.to_string());
    let mut core = Vec::with_capacity(half * half);
    for i in 0..half * half {
        core.push(t.add_node(format!("core{i}"), Tier::Core)?);
    }
    let mut host_index = 0;
    for pod in 0..k {
        let aggs: Vec<NodeId> =
            (0..half).map(|j| t.add_node(format!("agg{pod}_{j}"), Tier::Agg)).collect::<Result<_, _>>()?;
        for (j, &agg) in aggs.iter().enumerate() {
            for c in 0..half {
                t.connect(agg, core[j * half + c], params)?;
            }
        }
        for e in 0..half {
            let tor = t.add_node(format!("tor{pod}_{e}"), Tier::Tor)?;
            for &agg in &aggs {
                t.connect(tor, agg, params)?;
            }
            for _ in 0..half {
                let h = t.add_node(format!("h{host_index}"), Tier::Host)?;
                host_index += 1;
                t.connect(h, tor, params)?;
            }
        }
    }
    Ok(t)
}
