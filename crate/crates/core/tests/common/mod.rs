//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use ampsim::cc::{self, Algorithm, CcParams, SubflowWindow};
use ampsim::config::ScenarioConfig;
use ampsim::metrics::CwndSample;
use ampsim::sim::SimTime;
use ampsim::workload::build_driver;
use ampsim::world::{ByteLedger, Driver, RunOutput, Sim};

/// One congestion-control stimulus aimed at a subflow.
#[derive(Clone, Copy, Debug)]
pub enum Stimulus {
    Ack { s: usize, marked: bool },
    Ecn(usize),
    Loss(usize),
    Timeout(usize),
    Round(usize),
}

/// Drives `cc` the way a connection would: increases only on active
/// subflows, every ACK observed first.
pub fn apply(cc: &mut dyn cc::CongestionControl, w: &mut [SubflowWindow], st: Stimulus) {
    match st {
        Stimulus::Ack { s, marked } => {
            cc.observe_ack(w, s, marked);
            if marked {
                cc.on_ecn(w, s);
            } else if w[s].active {
                cc.on_increase(w, s);
            }
        }
        Stimulus::Ecn(s) => cc.on_ecn(w, s),
        Stimulus::Loss(s) => cc.on_loss(w, s),
        Stimulus::Timeout(s) => cc.on_timeout(w, s),
        Stimulus::Round(s) => {
            cc.on_round(w, s);
        }
    }
}

pub fn fresh(alg: Algorithm, r: usize, rtts: &[f64]) -> (Box<dyn cc::CongestionControl>, Vec<SubflowWindow>) {
    let p = CcParams::default();
    let r = if alg == Algorithm::Dctcp { 1 } else { r };
    let w = (0..r).map(|i| SubflowWindow::new(p.cwnd_min, rtts[i % rtts.len()])).collect();
    (cc::build(alg, p, r), w)
}

/// Independent per-ACK increments for equal RTTs: `(dcm, amp, xmp)`, with
/// XMP's per-window delta spread over the subflow's `w_s` ACKs.
pub fn equal_rtt_increments(w: &[f64], s: usize) -> (f64, f64, f64) {
    let total: f64 = w.iter().sum();
    let max = w.iter().cloned().fold(0.0, f64::max);
    let dcm = (max / (total * total)).min(1.0 / w[s]);
    let amp = 1.0 / total;
    let xmp = (w[s] / total) / w[s];
    (dcm, amp, xmp)
}

/// Wraps a workload driver and checks byte conservation on a fixed period.
pub struct ConservationProbe {
    inner: Box<dyn Driver>,
    every: SimTime,
    pub checks: u64,
    pub violations: Vec<(SimTime, usize, ByteLedger)>,
}

const PROBE_TAG: u64 = u64::MAX - 7;

impl ConservationProbe {
    fn check(&mut self, sim: &Sim) {
        self.checks += 1;
        for (i, l) in sim.byte_ledgers().into_iter().enumerate() {
            if l.sent != l.arrived + l.dropped + l.in_flight {
                self.violations.push((sim.now(), i, l));
            }
        }
    }
}

impl Driver for ConservationProbe {
    fn start(&mut self, sim: &mut Sim) {
        self.inner.start(sim);
        self.check(sim);
        sim.schedule_timer(sim.now() + self.every, PROBE_TAG);
    }

    fn on_timer(&mut self, sim: &mut Sim, tag: u64) {
        if tag == PROBE_TAG {
            self.check(sim);
            sim.schedule_timer(sim.now() + self.every, PROBE_TAG);
        } else {
            self.inner.on_timer(sim, tag);
        }
    }

    fn on_flow_end(&mut self, sim: &mut Sim, flow: u32) {
        self.inner.on_flow_end(sim, flow);
        self.check(sim);
    }
}

/// Runs `cfg` with conservation probed every `every` and at each flow end.
pub fn run_probed(cfg: &ScenarioConfig, every: SimTime) -> (RunOutput, ConservationProbe) {
    cfg.validate().expect("valid scenario");
    let sim = Sim::new(cfg).expect("sim builds");
    let inner = build_driver(cfg, &sim).expect("driver builds");
    let mut probe = ConservationProbe { inner, every, checks: 0, violations: Vec::new() };
    let out = sim.run(&mut probe, cfg.duration);
    (out, probe)
}

/// Time after `at` until the subflow that was largest just before `at` is
/// pinned (or suppressed) and another subflow carries more, for one flow.
pub fn shift_time(samples: &[CwndSample], flow: u32, at: SimTime, pin: f64) -> Option<SimTime> {
    let mut cur: Vec<(f64, bool)> = Vec::new();
    let set = |cur: &mut Vec<(f64, bool)>, s: &CwndSample| {
        let i = s.subflow as usize;
        if cur.len() <= i {
            cur.resize(i + 1, (0.0, true));
        }
        cur[i] = (s.cwnd, s.active);
    };
    let mine: Vec<&CwndSample> = samples.iter().filter(|s| s.flow_id == flow).collect();
    for s in mine.iter().filter(|s| s.time < at) {
        set(&mut cur, s);
    }
    if cur.len() < 2 {
        return None;
    }
    let victim = (0..cur.len()).max_by(|&a, &b| cur[a].0.total_cmp(&cur[b].0))?;
    for s in mine.iter().filter(|s| s.time >= at) {
        set(&mut cur, s);
        let (wv, active) = cur[victim];
        let relieved = (0..cur.len()).any(|j| j != victim && cur[j].0 > wv);
        if (wv < pin || !active) && relieved {
            return Some(s.time.saturating_sub(at));
        }
    }
    None
}
