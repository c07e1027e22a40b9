//! The simulation proper: packets moving through ECN queues, connections
//! reacting to ACKs and timers, and a workload driver spawning flows.

use std::collections::HashMap;

use rand::RngCore;

use crate::cc::SsrTransition;
use crate::config::{parse_link_name, QueueSelect, ResolvedClass, ScenarioConfig};
use crate::metrics::{CwndSample, FlowRecord, FlowStatus, JobRecord, LinkRecord, Role};
use crate::net::{
    EnqueueOutcome, FiveTuple, FlowId, Network, NodeId, Packet, PathSelector, QueueMonitor, QueueSample, RouteError,
    Tier,
};
use crate::sim::{mix64, Engine, EventHandle, RngStream, SimTime};
use crate::transport::{Connection, Receiver, TimeoutOutcome, TransportConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    /// A packet reaches the input of hop `hop` of its route, or its
    /// destination host when `hop` equals the route length.
    Hop(Packet),
    Rto {
        flow: FlowId,
        subflow: u8,
    },
    FlowStart(FlowId),
    FlowStop(FlowId),
    /// Workload-defined timer.
    Timer(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRequest {
    pub src: NodeId,
    pub dst: NodeId,
    pub class: usize,
    pub role: Role,
    pub size: Option<u64>,
    pub start: SimTime,
    pub stop: Option<SimTime>,
    /// Candidate index per subflow; ECMP hashing when absent.
    pub paths: Option<Vec<usize>>,
    pub job: Option<u32>,
}

struct FlowSlot {
    req: FlowRequest,
    conn: Option<Connection>,
    recv: Receiver,
    ack_routes: Vec<u32>,
    timers: Vec<Option<(SimTime, EventHandle)>>,
    started_at: SimTime,
    traced: bool,
    finished: bool,
    arrived: u64,
    dropped: u64,
}

/// Payload bytes of one flow at an instant. Conservation requires
/// `sent == arrived + dropped + in_flight`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ByteLedger {
    /// Counted by the sender, retransmissions included.
    pub sent: u64,
    /// Reached the destination host, duplicates included.
    pub arrived: u64,
    /// Tail-dropped at some queue.
    pub dropped: u64,
    /// Carried by pending packet events.
    pub in_flight: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    pub trace_digest: u64,
    pub data_drops: u64,
    pub ack_drops: u64,
    /// Windows observed below `cwnd_min` after a stimulus.
    pub floor_violations: u64,
    /// Sends that left more than `ceil(cwnd)` packets in flight.
    pub window_violations: u64,
    pub suppressions: u64,
    pub releases: u64,
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub end_time: SimTime,
    pub flows: Vec<FlowRecord>,
    pub jobs: Vec<JobRecord>,
    pub links: Vec<LinkRecord>,
    pub queues: Vec<QueueSample>,
    pub cwnd: Vec<CwndSample>,
    pub stats: RunStats,
}

/// Reacts to the run starting, its own timers, and flows ending.
pub trait Driver {
    fn start(&mut self, sim: &mut Sim);
    fn on_timer(&mut self, _sim: &mut Sim, _tag: u64) {}
    fn on_flow_end(&mut self, _sim: &mut Sim, _flow: FlowId) {}
}

struct CwndTracer {
    flows: Vec<u32>,
    start: SimTime,
    end: SimTime,
    decimation: SimTime,
    last: HashMap<u32, SimTime>,
    samples: Vec<CwndSample>,
}

/// Simulation state visible to workload drivers.
pub struct Sim {
    engine: Engine<Event>,
    net: Network,
    classes: Vec<ResolvedClass>,
    class_index: HashMap<String, usize>,
    transport: TransportConfig,
    host_delay: SimTime,
    host_jitter: u64,
    jitter: RngStream,
    /// Latest scheduled host arrival per link, keeping jittered arrivals FIFO.
    last_arrival: Vec<SimTime>,
    ecmp_salt: u64,
    port_seed: u64,
    rng: RngStream,
    flows: Vec<FlowSlot>,
    records: Vec<Option<FlowRecord>>,
    jobs: Vec<JobRecord>,
    ended: Vec<FlowId>,
    scratch: Vec<Packet>,
    tracer: Option<CwndTracer>,
    stats: RunStats,
    stopped: bool,
}

impl Sim {
    /// Builds the network and classes; the config must already be valid.
    pub fn new(cfg: &ScenarioConfig) -> anyhow::Result<Self> {
        let topo = cfg.topology.build()?;
        let mut net = Network::new(topo, cfg.queue.capacity, cfg.queue.threshold);
        for q in &mut net.queues {
            q.marking = cfg.queue.marking;
        }
        let monitored: Vec<u32> = match &cfg.metrics.queues {
            QueueSelect::Keyword(k) => (0..net.topo.links().len() as u32)
                .filter(|&l| {
                    let link = net.topo.link(l);
                    let from_switch = !net.topo.node(link.src).tier.is_host();
                    match k.as_str() {
                        "all" => true,
                        "switch" => from_switch,
                        "host-downlinks" => from_switch && net.topo.node(link.dst).tier == Tier::Host,
                        _ => false,
                    }
                })
                .collect(),
            QueueSelect::Links(names) => names.iter().filter_map(|n| parse_link_name(&net.topo, n)).collect(),
        };
        for l in monitored {
            net.queues[l as usize].attach_monitor(QueueMonitor::new(l, cfg.metrics.queue_decimation));
        }
        let mut classes = Vec::new();
        let mut class_index = HashMap::new();
        for name in cfg.classes.keys() {
            let c = cfg.class(name).ok_or_else(|| anyhow::anyhow!("class `{name}` has no algorithm"))?;
            class_index.insert(name.clone(), classes.len());
            classes.push(c);
        }
        let link_count = net.topo.links().len();
        let rng = RngStream::new(cfg.seed);
        let mut salt_rng = rng.fork("ecmp");
        let ecmp_salt = salt_rng.next_u64();
        let port_seed = salt_rng.next_u64();
        let tracer = cfg.metrics.cwnd.as_ref().map(|c| CwndTracer {
            flows: c.flows.clone(),
            start: c.start,
            end: c.end.unwrap_or(SimTime::MAX),
            decimation: c.decimation,
            last: HashMap::new(),
            samples: Vec::new(),
        });
        Ok(Self {
            engine: Engine::new(),
            net,
            classes,
            class_index,
            transport: cfg.transport,
            host_delay: cfg.topology.host_delay,
            host_jitter: cfg.topology.host_jitter.0,
            jitter: rng.fork("host-jitter"),
            last_arrival: vec![SimTime::ZERO; link_count],
            ecmp_salt,
            port_seed,
            rng,
            flows: Vec::new(),
            records: Vec::new(),
            jobs: Vec::new(),
            ended: Vec::new(),
            scratch: Vec::new(),
            tracer,
            stats: RunStats::default(),
            stopped: false,
        })
    }

    pub fn now(&self) -> SimTime {
        self.engine.now()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_index.get(name).copied()
    }

    pub fn class(&self, id: usize) -> &ResolvedClass {
        &self.classes[id]
    }

    /// Independent random stream for a workload component.
    pub fn rng(&self, label: &str) -> RngStream {
        self.rng.fork(label)
    }

    pub fn stop(&mut self) {
        self.stopped = true;
    }

    pub fn schedule_timer(&mut self, at: SimTime, tag: u64) {
        let at = at.max(self.now());
        self.engine.schedule(at, Event::Timer(tag)).expect("timer not in the past");
    }

    pub fn record_job(&mut self, job: JobRecord) {
        self.jobs.push(job);
    }

    pub fn record(&self, flow: FlowId) -> Option<&FlowRecord> {
        self.records.get(flow as usize).and_then(|r| r.as_ref())
    }

    pub fn connection(&self, flow: FlowId) -> Option<&Connection> {
        self.flows.get(flow as usize).and_then(|f| f.conn.as_ref())
    }

    /// Byte accounting for every flow spawned so far.
    pub fn byte_ledgers(&self) -> Vec<ByteLedger> {
        let mut out: Vec<ByteLedger> = self
            .flows
            .iter()
            .zip(&self.records)
            .map(|(slot, rec)| ByteLedger {
                sent: match (&slot.conn, rec) {
                    (Some(c), _) => c.subflows().iter().map(|s| s.stats.bytes_sent).sum(),
                    (None, Some(r)) => r.bytes_sent,
                    (None, None) => 0,
                },
                arrived: slot.arrived,
                dropped: slot.dropped,
                in_flight: 0,
            })
            .collect();
        for ev in self.engine.pending_events() {
            if let Event::Hop(p) = ev {
                if !p.is_ack {
                    out[p.flow_id as usize].in_flight += p.payload as u64;
                }
            }
        }
        out
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    /// Registers a flow; it starts at `req.start` (or now, if earlier).
    pub fn spawn(&mut self, req: FlowRequest) -> FlowId {
        let id = self.flows.len() as FlowId;
        let class = &self.classes[req.class];
        let traced = match &self.tracer {
            Some(t) if t.flows.is_empty() => class.subflows > 1,
            Some(t) => t.flows.contains(&id),
            None => false,
        };
        let start = req.start.max(self.now());
        let subflows = class.subflows;
        self.flows.push(FlowSlot {
            req,
            conn: None,
            recv: Receiver::new(subflows),
            ack_routes: Vec::new(),
            timers: vec![None; subflows],
            started_at: start,
            traced,
            finished: false,
            arrived: 0,
            dropped: 0,
        });
        self.records.push(None);
        if start == self.now() {
            self.start_flow(id);
        } else {
            self.engine.schedule(start, Event::FlowStart(id)).expect("future start");
        }
        id
    }

    fn route_for(
        &mut self,
        src: NodeId,
        dst: NodeId,
        flow: FlowId,
        sf: usize,
        pin: Option<usize>,
    ) -> Result<u32, RouteError> {
        let sel = match pin {
            Some(index) => PathSelector::Pinned { index },
            None => {
                let sport = 1024 + (mix64(self.port_seed ^ ((flow as u64) << 8 | sf as u64)) % 60000) as u16;
                let tuple = FiveTuple { src, dst, sport, dport: 5001, proto: 6 };
                PathSelector::Ecmp { tuple, salt: self.ecmp_salt }
            }
        };
        self.net.route(src, dst, sel)
    }

    fn start_flow(&mut self, id: FlowId) {
        let now = self.now();
        let slot = &self.flows[id as usize];
        let (src, dst) = (slot.req.src, slot.req.dst);
        let class = self.classes[slot.req.class].clone();
        let pins = slot.req.paths.clone();
        let size = slot.req.size.unwrap_or(u64::MAX);
        let mut data = Vec::with_capacity(class.subflows);
        let mut acks = Vec::with_capacity(class.subflows);
        for sf in 0..class.subflows {
            let pin = pins.as_ref().map(|p| p[sf]);
            data.push(self.route_for(src, dst, id, sf, pin).expect("validated endpoints are connected"));
            acks.push(self.route_for(dst, src, id, sf, pin).expect("validated endpoints are connected"));
        }
        let conn = Connection::new(id, class.algorithm, class.params, self.transport, size, &data);
        let slot = &mut self.flows[id as usize];
        slot.conn = Some(conn);
        slot.ack_routes = acks;
        slot.started_at = now;
        if let Some(stop) = slot.req.stop {
            self.engine.schedule(stop.max(now), Event::FlowStop(id)).expect("future stop");
        }
        let mut out = std::mem::take(&mut self.scratch);
        self.flows[id as usize].conn.as_mut().unwrap().start(now, &mut out);
        self.after_conn_call(id, &mut out);
        self.scratch = out;
        self.trace(id);
    }

    fn forward(&mut self, mut p: Packet) {
        let now = self.now();
        let path = self.net.arena.get(p.route);
        let link = path[p.hop as usize] as usize;
        let last = p.hop as usize + 1 == path.len();
        match self.net.queues[link].enqueue(now, &mut p) {
            EnqueueOutcome::Enqueued { departs, .. } => {
                p.hop += 1;
                let at = if last {
                    let mut at = departs + self.host_delay;
                    if self.host_jitter > 0 {
                        at = (at + SimTime(self.jitter.next_u64() % (self.host_jitter + 1)))
                            .max(self.last_arrival[link]);
                        self.last_arrival[link] = at;
                    }
                    at
                } else {
                    departs
                };
                self.engine.schedule(at, Event::Hop(p)).expect("departures are in the future");
            }
            EnqueueOutcome::Dropped => {
                if p.is_ack {
                    self.stats.ack_drops += 1;
                } else {
                    self.stats.data_drops += 1;
                    self.flows[p.flow_id as usize].dropped += p.payload as u64;
                }
            }
        }
    }

    /// Sends queued packets, re-arms timers and checks window invariants.
    fn after_conn_call(&mut self, id: FlowId, out: &mut Vec<Packet>) {
        for p in out.drain(..) {
            self.forward(p);
        }
        let slot = &mut self.flows[id as usize];
        let Some(conn) = slot.conn.as_ref() else { return };
        let min = conn.cc().params().cwnd_min;
        for (s, st) in conn.subflows().iter().enumerate() {
            if conn.windows()[s].cwnd < min {
                self.stats.floor_violations += 1;
            }
            let Some(d) = st.rto_deadline else { continue };
            match slot.timers[s] {
                Some((t, _)) if t <= d => {}
                prev => {
                    if let Some((_, h)) = prev {
                        self.engine.cancel(h);
                    }
                    let h = self.engine.schedule(d, Event::Rto { flow: id, subflow: s as u8 }).expect("deadline ahead");
                    slot.timers[s] = Some((d, h));
                }
            }
        }
    }

    fn deliver(&mut self, p: Packet) {
        let id = p.flow_id;
        let now = self.now();
        let slot = &mut self.flows[id as usize];
        if !p.is_ack {
            slot.arrived += p.payload as u64;
        }
        if slot.finished {
            return;
        }
        if !p.is_ack {
            let ack_no = slot.recv.on_data(p.subflow_id as usize, p.seq, p.payload);
            let mut a = Packet::ack(id, p.subflow_id, ack_no, self.transport.ack_size);
            a.ece_echo = p.ecn_ce;
            a.ts = p.ts;
            a.route = slot.ack_routes[p.subflow_id as usize];
            self.forward(a);
            return;
        }
        let mut out = std::mem::take(&mut self.scratch);
        let outcome = slot.conn.as_mut().expect("started").on_ack(now, &p, &mut out);
        self.after_conn_call(id, &mut out);
        self.scratch = out;
        match outcome.ssr {
            Some(SsrTransition::Suppressed) => self.stats.suppressions += 1,
            Some(SsrTransition::Released) => self.stats.releases += 1,
            None => {}
        }
        if outcome.processed {
            self.trace(id);
        }
        if outcome.completed {
            self.finish(id, FlowStatus::Completed);
        }
    }

    fn on_rto(&mut self, id: FlowId, s: usize) {
        let now = self.now();
        let slot = &mut self.flows[id as usize];
        slot.timers[s] = None;
        if slot.finished {
            return;
        }
        let conn = slot.conn.as_mut().expect("started");
        match conn.subflows()[s].rto_deadline {
            None => {}
            Some(d) if d > now => {
                let mut out = std::mem::take(&mut self.scratch);
                self.after_conn_call(id, &mut out);
                self.scratch = out;
            }
            Some(_) => {
                let mut out = std::mem::take(&mut self.scratch);
                let r = conn.on_timeout(now, s, &mut out);
                self.after_conn_call(id, &mut out);
                self.scratch = out;
                self.trace(id);
                if r == TimeoutOutcome::Aborted {
                    self.finish(id, FlowStatus::Failed);
                }
            }
        }
    }

    fn trace(&mut self, id: FlowId) {
        let now = self.now();
        let slot = &self.flows[id as usize];
        let Some(t) = self.tracer.as_mut() else { return };
        if !slot.traced || now < t.start || now > t.end {
            return;
        }
        if let Some(&last) = t.last.get(&id) {
            if now < last + t.decimation {
                return;
            }
        }
        t.last.insert(id, now);
        let Some(conn) = slot.conn.as_ref() else { return };
        for (s, w) in conn.windows().iter().enumerate() {
            t.samples.push(CwndSample { time: now, flow_id: id, subflow: s as u8, cwnd: w.cwnd, active: w.active });
        }
    }

    fn make_record(&self, id: FlowId, status: FlowStatus, end: SimTime) -> FlowRecord {
        let slot = &self.flows[id as usize];
        let class = &self.classes[slot.req.class];
        let topo = &self.net.topo;
        let (acked, sent, timeouts, retransmits, episodes) = match &slot.conn {
            Some(c) => (
                c.acked(),
                c.subflows().iter().map(|s| s.stats.bytes_sent).sum(),
                c.timeouts(),
                c.subflows().iter().map(|s| s.stats.retransmits).sum(),
                c.episodes(),
            ),
            None => (0, 0, 0, 0, 0),
        };
        FlowRecord {
            flow_id: id,
            role: slot.req.role,
            class: class.name.clone(),
            algorithm: class.algorithm,
            src: topo.node(slot.req.src).name.clone(),
            dst: topo.node(slot.req.dst).name.clone(),
            size: slot.req.size,
            start: slot.started_at,
            end: end.max(slot.started_at),
            bytes_acked: acked,
            bytes_delivered: slot.recv.delivered(),
            bytes_sent: sent,
            status,
            timeouts,
            retransmits,
            subflows: class.subflows as u32,
            episodes,
            job: slot.req.job,
        }
    }

    fn finish(&mut self, id: FlowId, status: FlowStatus) {
        let now = self.now();
        let slot = &mut self.flows[id as usize];
        if slot.finished {
            return;
        }
        slot.finished = true;
        for t in slot.timers.iter_mut() {
            if let Some((_, h)) = t.take() {
                self.engine.cancel(h);
            }
        }
        if let Some(c) = &slot.conn {
            self.stats.window_violations += c.subflows().iter().map(|s| s.stats.window_violations).sum::<u64>();
        }
        let rec = self.make_record(id, status, now);
        self.records[id as usize] = Some(rec);
        self.ended.push(id);
        // Send buffers are not needed once the record exists.
        self.flows[id as usize].conn = None;
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::Hop(p) => {
                if p.hop as usize == self.net.arena.get(p.route).len() {
                    self.deliver(p);
                } else {
                    self.forward(p);
                }
            }
            Event::Rto { flow, subflow } => self.on_rto(flow, subflow as usize),
            Event::FlowStart(id) => self.start_flow(id),
            Event::FlowStop(id) => self.finish(id, FlowStatus::Stopped),
            Event::Timer(_) => unreachable!("timers go to the driver"),
        }
    }
}

/// Runs `driver` against a fresh simulation of `cfg` until the configured
/// duration or until the driver stops it.
pub fn simulate(cfg: &ScenarioConfig, driver: &mut dyn Driver) -> anyhow::Result<RunOutput> {
    Ok(Sim::new(cfg)?.run(driver, cfg.duration))
}

impl Sim {
    pub fn run(mut self, driver: &mut dyn Driver, t_end: SimTime) -> RunOutput {
        driver.start(&mut self);
        flush_ended(&mut self, driver);
        while !self.stopped {
            let Some((_, ev)) = self.engine.pop_until(t_end) else { break };
            match ev {
                Event::Timer(tag) => driver.on_timer(&mut self, tag),
                ev => self.handle(ev),
            }
            flush_ended(&mut self, driver);
        }
        let end = if self.stopped { self.now() } else { t_end };
        self.engine.advance_to(end);
        finalize(self, end)
    }
}

fn flush_ended(sim: &mut Sim, driver: &mut dyn Driver) {
    while !sim.ended.is_empty() {
        let batch = std::mem::take(&mut sim.ended);
        for id in batch {
            driver.on_flow_end(sim, id);
        }
    }
}

fn finalize(mut sim: Sim, end: SimTime) -> RunOutput {
    for id in 0..sim.flows.len() as FlowId {
        if !sim.flows[id as usize].finished {
            if let Some(c) = &sim.flows[id as usize].conn {
                sim.stats.window_violations += c.subflows().iter().map(|s| s.stats.window_violations).sum::<u64>();
            }
            let r = sim.make_record(id, FlowStatus::Running, end);
            sim.records[id as usize] = Some(r);
        }
    }
    sim.net.finalize(end);
    let topo = &sim.net.topo;
    let links = sim
        .net
        .queues
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let l = topo.link(i as u32);
            LinkRecord {
                link: i as u32,
                from: topo.node(l.src).name.clone(),
                to: topo.node(l.dst).name.clone(),
                layer: topo.layer(i as u32),
                rate_bps: l.rate_bps,
                counters: q.counters(),
            }
        })
        .collect();
    let queues = sim.net.queues.iter().filter_map(|q| q.monitor()).flat_map(|m| m.samples().iter().copied()).collect();
    let stats =
        RunStats { events: sim.engine.stats().dispatched, trace_digest: sim.engine.trace_digest(), ..sim.stats };
    RunOutput {
        end_time: end,
        flows: sim.records.into_iter().map(|r| r.expect("every flow recorded")).collect(),
        jobs: sim.jobs,
        links,
        queues,
        cwnd: sim.tracer.map(|t| t.samples).unwrap_or_default(),
        stats,
    }
}
