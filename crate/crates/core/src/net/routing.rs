use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use super::topology::{LinkId, NodeId, Topology};
use crate::sim::mix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FiveTuple {
    pub src: NodeId,
    pub dst: NodeId,
    pub sport: u16,
    pub dport: u16,
    pub proto: u8,
}

impl FiveTuple {
    fn key(&self) -> u64 {
        let a = (self.src as u64) << 32 | self.dst as u64;
        let b = (self.sport as u64) << 24 | (self.dport as u64) << 8 | self.proto as u64;
        mix64(mix64(a) ^ b)
    }
}

/// Per-flow ECMP choice among `candidates` next hops. Deterministic for a
/// given tuple and salt; subflows differ in source port and so hash
/// independently.
pub fn ecmp_select(tuple: &FiveTuple, salt: u64, candidates: usize) -> usize {
    assert!(candidates >= 1, "ECMP needs at least one candidate");
    if candidates == 1 {
        return 0;
    }
    (mix64(tuple.key() ^ salt) % candidates as u64) as usize
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("no path from node {src} to node {dst}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error("node {0} is not a host")]
    NotAHost(NodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathSelector {
    Ecmp {
        tuple: FiveTuple,
        salt: u64,
    },
    /// Takes candidate `index mod n` at every branching node.
    Pinned {
        index: usize,
    },
}

/// Shortest-path next-hop candidate sets toward every host.
#[derive(Clone, Debug)]
pub struct RouteTable {
    host_slot: HashMap<NodeId, usize>,
    /// `next[host_slot][node]` lists out-links on a shortest path.
    next: Vec<Vec<Vec<LinkId>>>,
}

impl RouteTable {
    pub fn new(topo: &Topology) -> Self {
        let n = topo.nodes().len();
        let hosts = topo.hosts();
        let mut host_slot = HashMap::new();
        let mut next = Vec::with_capacity(hosts.len());
        for (slot, &h) in hosts.iter().enumerate() {
            host_slot.insert(h, slot);
            let mut dist = vec![u32::MAX; n];
            dist[h as usize] = 0;
            let mut q = VecDeque::from([h]);
            // Links are bidirectional, so BFS over out-links from the
            // destination gives distances toward it.
            while let Some(u) = q.pop_front() {
                for &l in topo.out_links(u) {
                    let v = topo.link(l).dst;
                    // Hosts do not forward transit traffic.
                    if dist[v as usize] == u32::MAX {
                        dist[v as usize] = dist[u as usize] + 1;
                        if !topo.node(v).tier.is_host() {
                            q.push_back(v);
                        }
                    }
                }
            }
            let mut table = vec![Vec::new(); n];
            for u in 0..n as NodeId {
                if u == h || dist[u as usize] == u32::MAX {
                    continue;
                }
                let mut c: Vec<LinkId> = topo
                    .out_links(u)
                    .iter()
                    .copied()
                    .filter(|&l| {
                        let v = topo.link(l).dst;
                        dist[v as usize] != u32::MAX
                            && dist[v as usize] + 1 == dist[u as usize]
                            && (v == h || !topo.node(v).tier.is_host())
                    })
                    .collect();
                c.sort_unstable();
                table[u as usize] = c;
            }
            next.push(table);
        }
        Self { host_slot, next }
    }

    pub fn candidates(&self, at: NodeId, dst: NodeId) -> &[LinkId] {
        match self.host_slot.get(&dst) {
            Some(&s) => &self.next[s][at as usize],
            None => &[],
        }
    }

    /// Walks from `src` to `dst`, picking among equal-cost candidates at
    /// each node with `selector`.
    pub fn path(
        &self,
        topo: &Topology,
        src: NodeId,
        dst: NodeId,
        selector: PathSelector,
    ) -> Result<Vec<LinkId>, RouteError> {
        let slot = *self.host_slot.get(&dst).ok_or(RouteError::NotAHost(dst))?;
        let mut at = src;
        let mut path = Vec::new();
        while at != dst {
            let c = &self.next[slot][at as usize];
            if c.is_empty() || path.len() > topo.nodes().len() {
                return Err(RouteError::Unreachable { src, dst });
            }
            let i = match selector {
                PathSelector::Ecmp { tuple, salt } => ecmp_select(&tuple, salt ^ mix64(at as u64 + 1), c.len()),
                PathSelector::Pinned { index } => index % c.len(),
            };
            let l = c[i];
            path.push(l);
            at = topo.link(l).dst;
        }
        Ok(path)
    }
}

/// Interned paths, referenced from packets by index.
#[derive(Clone, Debug, Default)]
pub struct RouteArena {
    paths: Vec<Box<[LinkId]>>,
    index: HashMap<Box<[LinkId]>, u32>,
}

impl RouteArena {
    pub fn intern(&mut self, path: Vec<LinkId>) -> u32 {
        let path = path.into_boxed_slice();
        if let Some(&i) = self.index.get(&path) {
            return i;
        }
        let i = self.paths.len() as u32;
        self.paths.push(path.clone());
        self.index.insert(path, i);
        i
    }

    pub fn get(&self, id: u32) -> &[LinkId] {
        &self.paths[id as usize]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::topology::{LinkParams, Preset};
    use crate::sim::SimTime;

    fn topo(p: Preset) -> Topology {
        Topology::build_preset(&p, LinkParams { rate_bps: 10_000_000_000, delay: SimTime::from_micros(2) }).unwrap()
    }

    fn tuple(sport: u16) -> FiveTuple {
        FiveTuple { src: 1, dst: 2, sport, dport: 80, proto: 6 }
    }

    #[test]
    fn ecmp_is_deterministic() {
        let t = tuple(1000);
        assert_eq!(ecmp_select(&t, 9, 16), ecmp_select(&t, 9, 16));
        assert_eq!(ecmp_select(&t, 9, 1), 0);
        assert!(ecmp_select(&t, 9, 7) < 7);
    }

    #[test]
    fn fattree_interpod_has_sixteen_paths() {
        let t = topo(Preset::FatTree { k: 8 });
        let rt = RouteTable::new(&t);
        let (a, b) = (t.lookup("h0").unwrap(), t.lookup("h127").unwrap());
        let mut seen = std::collections::HashSet::new();
        for sport in 0..2000u16 {
            let sel = PathSelector::Ecmp { tuple: FiveTuple { src: a, dst: b, sport, dport: 5000, proto: 6 }, salt: 3 };
            let p = rt.path(&t, a, b, sel).unwrap();
            assert_eq!(p.len(), 6);
            seen.insert(p);
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn same_tor_path_is_two_hops() {
        let t = topo(Preset::FatTree { k: 8 });
        let rt = RouteTable::new(&t);
        let (a, b) = (t.lookup("h0").unwrap(), t.lookup("h1").unwrap());
        let p = rt.path(&t, a, b, PathSelector::Pinned { index: 0 }).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn parallel2_has_two_edge_disjoint_paths() {
        let t = topo(Preset::Parallel2);
        let rt = RouteTable::new(&t);
        let (s, d) = (t.lookup("S2").unwrap(), t.lookup("D2").unwrap());
        assert_eq!(rt.candidates(s, d).len(), 2);
        let p0 = rt.path(&t, s, d, PathSelector::Pinned { index: 0 }).unwrap();
        let p1 = rt.path(&t, s, d, PathSelector::Pinned { index: 1 }).unwrap();
        assert!(p0.iter().all(|l| !p1.contains(l)));
        // The single-path pairs each share the middle link of one path.
        let s3 =
            rt.path(&t, t.lookup("S3").unwrap(), t.lookup("D3").unwrap(), PathSelector::Pinned { index: 0 }).unwrap();
        let s1 =
            rt.path(&t, t.lookup("S1").unwrap(), t.lookup("D1").unwrap(), PathSelector::Pinned { index: 0 }).unwrap();
        assert_eq!(s3.iter().filter(|l| p0.contains(l)).count(), 1);
        assert_eq!(s1.iter().filter(|l| p1.contains(l)).count(), 1);
    }

    #[test]
    fn hosts_do_not_transit() {
        let t = topo(Preset::Parallel2);
        let rt = RouteTable::new(&t);
        let p = rt
            .path(&t, t.lookup("S3").unwrap(), t.lookup("D1").unwrap(), PathSelector::Pinned { index: 0 })
            .unwrap_err();
        assert!(matches!(p, RouteError::Unreachable { .. }));
    }

    #[test]
    fn arena_dedupes() {
        let mut a = RouteArena::default();
        assert_eq!(a.intern(vec![1, 2]), 0);
        assert_eq!(a.intern(vec![3]), 1);
        assert_eq!(a.intern(vec![1, 2]), 0);
        assert_eq!(a.get(1), &[3]);
    }
}
