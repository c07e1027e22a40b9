use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;

use super::dist::ParetoSizes;
use crate::config::JobsSpec;
use crate::metrics::{JobRecord, Role};
use crate::net::{FlowId, NodeId};
use crate::sim::{RngStream, SimTime};
use crate::world::{Driver, FlowRequest, Sim};

#[derive(Clone, Copy, Debug)]
enum Owner {
    Request { job: usize, server: NodeId },
    Response { job: usize },
    Background { host: usize },
}

#[derive(Clone, Debug)]
struct Job {
    id: u32,
    slot: u32,
    client: NodeId,
    start: SimTime,
    outstanding: usize,
}

/// Parallel fan-in jobs: a client sends a request to each of `fan_in`
/// servers, each answers with a response; the next job on the same slot
/// starts once every response has arrived. Every host also keeps one
/// Pareto-sized background flow running to a random host. The run stops
/// after `count_to_complete` background flows finish.
pub struct JobsDriver {
    spec: JobsSpec,
    hosts: Vec<NodeId>,
    slot_rng: Vec<RngStream>,
    host_rng: Vec<RngStream>,
    sizes: ParetoSizes,
    jobs: Vec<Job>,
    owners: HashMap<FlowId, Owner>,
    completed_background: u64,
    job_class: usize,
    bg_class: usize,
}

impl JobsDriver {
    pub fn new(spec: JobsSpec, hosts: Vec<NodeId>, rng: &RngStream) -> Self {
        let slot_rng = (0..spec.parallel_jobs).map(|i| rng.fork_indexed("jobs.slot", i as u64)).collect();
        let host_rng = (0..hosts.len()).map(|i| rng.fork_indexed("jobs.background", i as u64)).collect();
        let sizes = ParetoSizes::new(spec.background.mean.0 as f64, spec.background.shape);
        Self {
            spec,
            hosts,
            slot_rng,
            host_rng,
            sizes,
            jobs: Vec::new(),
            owners: HashMap::new(),
            completed_background: 0,
            job_class: 0,
            bg_class: 0,
        }
    }

    fn start_job(&mut self, sim: &mut Sim, slot: usize) {
        let rng = &mut self.slot_rng[slot];
        let n = self.hosts.len();
        let picks = sample(rng, n, self.spec.fan_in + 1);
        let client = self.hosts[picks.index(0)];
        let job = self.jobs.len();
        self.jobs.push(Job {
            id: job as u32,
            slot: slot as u32,
            client,
            start: sim.now(),
            outstanding: self.spec.fan_in,
        });
        for i in 1..=self.spec.fan_in {
            let server = self.hosts[picks.index(i)];
            let id = sim.spawn(FlowRequest {
                src: client,
                dst: server,
                class: self.job_class,
                role: Role::Request,
                size: Some(self.spec.request_size.0),
                start: sim.now(),
                stop: None,
                paths: None,
                job: Some(job as u32),
            });
            self.owners.insert(id, Owner::Request { job, server });
        }
    }

    fn start_background(&mut self, sim: &mut Sim, host: usize) {
        let rng = &mut self.host_rng[host];
        let src = self.hosts[host];
        let dst = loop {
            let d = self.hosts[rng.random_range(0..self.hosts.len())];
            if d != src {
                break d;
            }
        };
        let size = self.sizes.sample(rng);
        let id = sim.spawn(FlowRequest {
            src,
            dst,
            class: self.bg_class,
            role: Role::Background,
            size: Some(size),
            start: sim.now(),
            stop: None,
            paths: None,
            job: None,
        });
        self.owners.insert(id, Owner::Background { host });
    }
}

impl Driver for JobsDriver {
    fn start(&mut self, sim: &mut Sim) {
        self.job_class = sim.class_id(&self.spec.job_class).expect("validated class");
        self.bg_class = sim.class_id(&self.spec.background_class).expect("validated class");
        for h in 0..self.hosts.len() {
            self.start_background(sim, h);
        }
        for s in 0..self.spec.parallel_jobs {
            self.start_job(sim, s);
        }
    }

    fn on_flow_end(&mut self, sim: &mut Sim, flow: FlowId) {
        let Some(owner) = self.owners.remove(&flow) else { return };
        match owner {
            Owner::Request { job, server } => {
                let client = self.jobs[job].client;
                let id = sim.spawn(FlowRequest {
                    src: server,
                    dst: client,
                    class: self.job_class,
                    role: Role::Response,
                    size: Some(self.spec.response_size.0),
                    start: sim.now(),
                    stop: None,
                    paths: None,
                    job: Some(job as u32),
                });
                self.owners.insert(id, Owner::Response { job });
            }
            Owner::Response { job } => {
                let j = &mut self.jobs[job];
                j.outstanding -= 1;
                if j.outstanding == 0 {
                    let rec = JobRecord {
                        job_id: j.id,
                        slot: j.slot,
                        client: sim.network().topo.node(j.client).name.clone(),
                        fan_in: self.spec.fan_in as u32,
                        start: j.start,
                        end: sim.now(),
                    };
                    let slot = j.slot as usize;
                    sim.record_job(rec);
                    self.start_job(sim, slot);
                }
            }
            Owner::Background { host } => {
                if sim.record(flow).is_some_and(|r| r.status == crate::metrics::FlowStatus::Completed) {
                    self.completed_background += 1;
                }
                if self.completed_background >= self.spec.background.count_to_complete {
                    sim.stop();
                } else {
                    self.start_background(sim, host);
                }
            }
        }
    }
}
