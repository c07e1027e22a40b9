//! Traffic generators: static flow lists, synchronized incast batches,
//! fan-in jobs over Pareto background traffic, permutation plus Poisson
//! short flows, and empirical-CDF sizes.

mod dist;
mod jobs;

use rand::seq::SliceRandom;
use rand::Rng;

pub use dist::{pareto_scale, CdfError, EmpiricalCdf, ParetoSizes, PoissonArrivals};
pub use jobs::JobsDriver;

use crate::config::{CdfSpec, GeneralSpec, IncastSpec, ScenarioConfig, StaticSpec, WorkloadConfig};
use crate::metrics::Role;
use crate::net::NodeId;
use crate::sim::{RngStream, SimTime};
use crate::world::{Driver, FlowRequest, Sim};

/// A flow decided before the run, independent of the simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub size: Option<u64>,
    pub start: SimTime,
    pub stop: Option<SimTime>,
    pub role: Role,
}

/// Batch `b` starts at `b * period`; flow `i` of a batch at
/// `batch_start + i * gap`, sent by `senders[i mod n]`.
pub fn incast_schedule(spec: &IncastSpec, senders: &[NodeId], receiver: NodeId, duration: SimTime) -> Vec<PlannedFlow> {
    let fit = (duration.0.saturating_sub(1) / spec.batch_period.0.max(1)) as u32 + 1;
    let batches = spec.batches.unwrap_or(fit);
    let mut out = Vec::with_capacity(batches as usize * spec.k);
    for b in 0..batches as u64 {
        let t0 = SimTime(b * spec.batch_period.0);
        for i in 0..spec.k {
            out.push(PlannedFlow {
                src: senders[i % senders.len()],
                dst: receiver,
                size: Some(spec.flow_size.0),
                start: t0 + spec.gap.saturating_mul(i as u64),
                stop: None,
                role: Role::Incast,
            });
        }
    }
    out
}

/// Each of `hosts` sends to exactly one other and receives from exactly
/// one: a random cyclic order over the shuffled hosts.
pub fn permutation_pairs<R: Rng + ?Sized>(hosts: &[NodeId], rng: &mut R) -> Vec<(NodeId, NodeId)> {
    let mut h = hosts.to_vec();
    h.shuffle(rng);
    let m = h.len();
    (0..m).map(|i| (h[i], h[(i + 1) % m])).collect()
}

/// Arrival times of a Poisson process on `[0, until)`.
pub fn poisson_times<R: Rng + ?Sized>(rate: f64, until: SimTime, rng: &mut R) -> Vec<SimTime> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let arr = PoissonArrivals::new(rate);
    let mut t = 0u64;
    loop {
        t += arr.gap_ns(rng);
        if t >= until.0 {
            return out;
        }
        out.push(SimTime(t));
    }
}

fn other_host<R: Rng + ?Sized>(hosts: &[NodeId], not: NodeId, rng: &mut R) -> NodeId {
    loop {
        let h = hosts[rng.random_range(0..hosts.len())];
        if h != not {
            return h;
        }
    }
}

/// Long flows on a random `long_fraction` of hosts in a permutation, and
/// Poisson short flows from the remaining hosts to random destinations.
pub fn general_schedule(spec: &GeneralSpec, hosts: &[NodeId], duration: SimTime, rng: &RngStream) -> Vec<PlannedFlow> {
    let mut pick = rng.fork("general.long-hosts");
    let mut shuffled = hosts.to_vec();
    shuffled.shuffle(&mut pick);
    let n_long = ((hosts.len() as f64 * spec.long_fraction).round() as usize).clamp(2, hosts.len() - 1);
    let (long, short) = shuffled.split_at(n_long);
    let mut long = long.to_vec();
    long.sort_unstable();
    let mut short = short.to_vec();
    short.sort_unstable();
    let stop = spec.long_duration.filter(|&d| d < duration);
    let mut out: Vec<PlannedFlow> = permutation_pairs(&long, &mut rng.fork("general.permutation"))
        .into_iter()
        .map(|(src, dst)| PlannedFlow { src, dst, size: None, start: SimTime::ZERO, stop, role: Role::Long })
        .collect();
    let mut arrivals = rng.fork("general.arrivals");
    let mut placement = rng.fork("general.placement");
    let mut sizes = rng.fork("general.sizes");
    for t in poisson_times(spec.lambda, duration, &mut arrivals) {
        let src = short[placement.random_range(0..short.len())];
        let dst = other_host(hosts, src, &mut placement);
        let size = sizes.random_range(spec.short_min.0..=spec.short_max.0);
        out.push(PlannedFlow { src, dst, size: Some(size), start: t, stop: None, role: Role::Short });
    }
    out
}

/// Per-host Poisson arrivals with CDF-drawn sizes; flows below the
/// threshold are short.
pub fn cdf_schedule(
    spec: &CdfSpec,
    cdf: &EmpiricalCdf,
    hosts: &[NodeId],
    duration: SimTime,
    rng: &RngStream,
) -> Vec<PlannedFlow> {
    let mut out = Vec::new();
    for (i, &src) in hosts.iter().enumerate() {
        let mut r = rng.fork_indexed("cdf.host", i as u64);
        for t in poisson_times(spec.rate_per_host, duration, &mut r) {
            let dst = other_host(hosts, src, &mut r);
            let size = cdf.sample(&mut r);
            let role = if size < spec.short_threshold.0 { Role::Short } else { Role::Long };
            out.push(PlannedFlow { src, dst, size: Some(size), start: t, stop: None, role });
        }
    }
    out.sort_by_key(|f| (f.start, f.src));
    out
}

/// Spawns a fixed list of flows at start-up.
pub struct PlannedDriver {
    flows: Vec<(PlannedFlow, String, Option<Vec<usize>>)>,
}

impl PlannedDriver {
    pub fn new(flows: Vec<(PlannedFlow, String, Option<Vec<usize>>)>) -> Self {
        Self { flows }
    }
}

impl Driver for PlannedDriver {
    fn start(&mut self, sim: &mut Sim) {
        for (f, class, paths) in self.flows.drain(..) {
            let class = sim.class_id(&class).expect("validated class");
            sim.spawn(FlowRequest {
                src: f.src,
                dst: f.dst,
                class,
                role: f.role,
                size: f.size,
                start: f.start,
                stop: f.stop,
                paths,
                job: None,
            });
        }
    }
}

fn static_flows(spec: &StaticSpec, sim: &Sim) -> Vec<(PlannedFlow, String, Option<Vec<usize>>)> {
    let topo = &sim.network().topo;
    spec.flows
        .iter()
        .flat_map(|f| std::iter::repeat_n(f, f.count))
        .map(|f| {
            let p = PlannedFlow {
                src: topo.lookup(&f.src).expect("validated"),
                dst: topo.lookup(&f.dst).expect("validated"),
                size: f.size.map(|s| s.0),
                start: f.start,
                stop: f.stop,
                role: if f.size.is_some() { Role::Flow } else { Role::Long },
            };
            (p, f.class.clone(), f.paths.clone())
        })
        .collect()
}

/// Builds the driver for the scenario's workload.
pub fn build_driver(cfg: &ScenarioConfig, sim: &Sim) -> anyhow::Result<Box<dyn Driver>> {
    let topo = &sim.network().topo;
    let hosts = topo.hosts();
    let rng = sim.rng("workload");
    Ok(match &cfg.workload {
        WorkloadConfig::Static(s) => Box::new(PlannedDriver::new(static_flows(s, sim))),
        WorkloadConfig::Incast(s) => {
            let recv = topo.lookup(&s.receiver)?;
            let senders: Vec<NodeId> = hosts.iter().copied().filter(|&h| h != recv).collect();
            let flows = incast_schedule(s, &senders, recv, cfg.duration);
            Box::new(PlannedDriver::new(flows.into_iter().map(|f| (f, s.class.clone(), None)).collect()))
        }
        WorkloadConfig::General(s) => {
            let flows = general_schedule(s, &hosts, cfg.duration, &rng);
            Box::new(PlannedDriver::new(
                flows
                    .into_iter()
                    .map(|f| {
                        let c = if f.role == Role::Long { s.long_class.clone() } else { s.short_class.clone() };
                        (f, c, None)
                    })
                    .collect(),
            ))
        }
        WorkloadConfig::Cdf(s) => {
            let cdf = match &s.file {
                Some(f) => EmpiricalCdf::load(f)?,
                None => EmpiricalCdf::new(s.points.clone())?,
            };
            let flows = cdf_schedule(s, &cdf, &hosts, cfg.duration, &rng);
            Box::new(PlannedDriver::new(
                flows
                    .into_iter()
                    .map(|f| {
                        let c = if f.role == Role::Long { s.long_class.clone() } else { s.short_class.clone() };
                        (f, c, None)
                    })
                    .collect(),
            ))
        }
        WorkloadConfig::Jobs(s) => Box::new(JobsDriver::new(s.clone(), hosts, &rng)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ByteSize;

    #[test]
    fn incast_batches_and_gaps() {
        let spec = IncastSpec { k: 30, ..IncastSpec::default() };
        let senders: Vec<NodeId> = (0..30).collect();
        let s = incast_schedule(&spec, &senders, 99, SimTime::from_secs(20));
        assert_eq!(s.len(), 600);
        assert_eq!(s[0].start, SimTime::ZERO);
        assert_eq!(s[1].start, SimTime::from_micros(50));
        assert_eq!(s[29].start, SimTime::from_micros(50 * 29));
        assert_eq!(s[30].start, SimTime::from_secs(1));
        assert!(s.iter().all(|f| f.dst == 99 && f.size == Some(131_072)));
    }

    #[test]
    fn incast_single_sender() {
        let spec = IncastSpec { k: 1, batches: Some(3), ..IncastSpec::default() };
        let s = incast_schedule(&spec, &[4], 9, SimTime::from_secs(20));
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|f| f.src == 4));
    }

    #[test]
    fn permutation_is_a_derangement() {
        let hosts: Vec<NodeId> = (0..64).collect();
        let mut r = RngStream::new(3);
        let p = permutation_pairs(&hosts, &mut r);
        assert_eq!(p.len(), 64);
        let mut recv: Vec<NodeId> = p.iter().map(|x| x.1).collect();
        recv.sort_unstable();
        recv.dedup();
        assert_eq!(recv.len(), 64);
        assert!(p.iter().all(|(a, b)| a != b));
    }

    #[test]
    fn general_splits_hosts() {
        let hosts: Vec<NodeId> = (0..16).collect();
        let spec =
            GeneralSpec { lambda: 100.0, short_min: ByteSize(10), short_max: ByteSize(20), ..GeneralSpec::default() };
        let s = general_schedule(&spec, &hosts, SimTime::from_secs(1), &RngStream::new(5));
        let longs: Vec<_> = s.iter().filter(|f| f.role == Role::Long).collect();
        assert_eq!(longs.len(), 8);
        let long_src: Vec<NodeId> = longs.iter().map(|f| f.src).collect();
        for f in s.iter().filter(|f| f.role == Role::Short) {
            assert!(!long_src.contains(&f.src));
            assert_ne!(f.src, f.dst);
            assert!((10..=20).contains(&f.size.unwrap()));
        }
    }
}
