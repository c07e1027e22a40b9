use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::rtt::{RtoPolicy, RttEstimator};
use crate::cc::{self, Algorithm, CcParams, CongestionControl, SsrTransition, SubflowWindow};
use crate::net::{FlowId, Packet};
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    /// Payload bytes per data segment.
    pub mss: u32,
    /// Header bytes added to every data segment on the wire.
    pub header: u32,
    pub ack_size: u32,
    pub min_rto: SimTime,
    pub max_rto: SimTime,
    /// Consecutive timeouts on one subflow before the flow is aborted.
    pub max_retries: u32,
    /// Initial window in packets; `cwnd_min` when unset.
    pub initial_cwnd: Option<f64>,
    pub slow_start: bool,
    pub dupack_threshold: u32,
    /// RTT assumed by coupled increase rules before the first sample.
    pub initial_rtt: SimTime,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            mss: 1400,
            header: 40,
            ack_size: 40,
            min_rto: SimTime::from_millis(200),
            max_rto: SimTime::from_secs(60),
            max_retries: 15,
            initial_cwnd: None,
            slow_start: false,
            dupack_threshold: 3,
            initial_rtt: SimTime::from_micros(100),
        }
    }
}

impl TransportConfig {
    pub fn rto_policy(&self) -> RtoPolicy {
        RtoPolicy { min_rto: self.min_rto, max_rto: self.max_rto, max_retries: self.max_retries }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SubflowStats {
    pub packets_sent: u64,
    pub bytes_sent: u64,
    pub retransmits: u64,
    pub timeouts: u64,
    pub fast_retransmits: u64,
    pub ecn_reductions: u64,
    pub marked_acks: u64,
    /// Transmissions that left more than `ceil(cwnd)` packets in flight.
    pub window_violations: u64,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    seq: u64,
    len: u32,
}

/// Sender-side state of one subflow. Sequence numbers are byte offsets in
/// the subflow's own space.
#[derive(Clone, Debug)]
pub struct SubflowState {
    pub route: u32,
    /// Sent and not yet acknowledged, starting at `snd_una`.
    segs: VecDeque<Segment>,
    /// `segs[..nxt]` are in flight; the rest await (re)transmission.
    nxt: usize,
    pub snd_una: u64,
    /// Highest byte ever sent plus one.
    pub snd_max: u64,
    pub dup_acks: u32,
    pub in_recovery: bool,
    pub last_reduction_seq: u64,
    round_end: Option<u64>,
    pub rtt: RttEstimator,
    backoff: u32,
    pub rto_deadline: Option<SimTime>,
    ssthresh: f64,
    pub stats: SubflowStats,
}

impl SubflowState {
    fn new(route: u32, initial_rtt: SimTime) -> Self {
        Self {
            route,
            segs: VecDeque::new(),
            nxt: 0,
            snd_una: 0,
            snd_max: 0,
            dup_acks: 0,
            in_recovery: false,
            last_reduction_seq: 0,
            round_end: None,
            rtt: RttEstimator::new(initial_rtt),
            backoff: 0,
            rto_deadline: None,
            ssthresh: f64::INFINITY,
            stats: SubflowStats::default(),
        }
    }

    pub fn snd_nxt(&self) -> u64 {
        self.segs.get(self.nxt).map_or(self.snd_max, |s| s.seq)
    }

    /// Packets currently counted in flight.
    pub fn in_flight(&self) -> usize {
        self.nxt
    }

    pub fn outstanding(&self) -> bool {
        self.snd_max > self.snd_una
    }

    pub fn backoff(&self) -> u32 {
        self.backoff
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnStatus {
    Open,
    Completed,
    Failed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AckOutcome {
    pub ssr: Option<SsrTransition>,
    pub completed: bool,
    /// The ACK was accepted (not stale) and windows may have changed.
    pub processed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeoutOutcome {
    Retransmitted,
    Aborted,
}

/// Sender side of a (possibly multipath) connection.
#[derive(Debug)]
pub struct Connection {
    pub flow: FlowId,
    cfg: TransportConfig,
    rto: RtoPolicy,
    size: u64,
    assigned: u64,
    acked: u64,
    subs: Vec<SubflowState>,
    windows: Vec<SubflowWindow>,
    cc: Box<dyn CongestionControl>,
    rr: usize,
    status: ConnStatus,
}

impl Connection {
    /// One subflow per entry of `routes`. `size = u64::MAX` never completes.
    pub fn new(
        flow: FlowId,
        algorithm: Algorithm,
        params: CcParams,
        cfg: TransportConfig,
        size: u64,
        routes: &[u32],
    ) -> Self {
        assert!(!routes.is_empty(), "a connection needs at least one subflow");
        let init = cfg.initial_cwnd.unwrap_or(params.cwnd_min).max(params.cwnd_min);
        let rtt0 = cfg.initial_rtt.as_secs_f64();
        Self {
            flow,
            cfg,
            rto: cfg.rto_policy(),
            size,
            assigned: 0,
            acked: 0,
            subs: routes.iter().map(|&r| SubflowState::new(r, cfg.initial_rtt)).collect(),
            windows: routes.iter().map(|_| SubflowWindow::new(init, rtt0)).collect(),
            cc: cc::build(algorithm, params, routes.len()),
            rr: 0,
            status: ConnStatus::Open,
        }
    }

    pub fn status(&self) -> ConnStatus {
        self.status
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn acked(&self) -> u64 {
        self.acked
    }

    pub fn windows(&self) -> &[SubflowWindow] {
        &self.windows
    }

    pub fn subflows(&self) -> &[SubflowState] {
        &self.subs
    }

    pub fn cc(&self) -> &dyn CongestionControl {
        self.cc.as_ref()
    }

    pub fn config(&self) -> &TransportConfig {
        &self.cfg
    }

    pub fn timeouts(&self) -> u64 {
        self.subs.iter().map(|s| s.stats.timeouts).sum()
    }

    pub fn episodes(&self) -> u32 {
        self.cc.ssr().map_or(0, |s| s.episodes)
    }

    pub fn start(&mut self, now: SimTime, out: &mut Vec<Packet>) {
        self.transmit(now, out);
    }

    fn segment_packet(&self, now: SimTime, s: usize, seg: Segment) -> Packet {
        let mut p = Packet::data(self.flow, s as u8, seg.seq, seg.len, self.cfg.header);
        p.ts = now;
        p.route = self.subs[s].route;
        p
    }

    /// Sends at most one packet on subflow `s` if its window allows.
    fn try_send_one(&mut self, now: SimTime, s: usize, out: &mut Vec<Packet>) -> bool {
        let gate = self.windows[s].cwnd.floor() as usize;
        let sf = &self.subs[s];
        if sf.nxt >= gate {
            return false;
        }
        let seg = if sf.nxt < sf.segs.len() {
            let seg = sf.segs[sf.nxt];
            self.subs[s].stats.retransmits += 1;
            seg
        } else if self.windows[s].active && self.assigned < self.size {
            let len = (self.size - self.assigned).min(self.cfg.mss as u64) as u32;
            let seg = Segment { seq: sf.snd_max, len };
            self.assigned += len as u64;
            let sf = &mut self.subs[s];
            sf.segs.push_back(seg);
            sf.snd_max += len as u64;
            seg
        } else {
            return false;
        };
        let pkt = self.segment_packet(now, s, seg);
        let rto = self.rto.rto(&self.subs[s].rtt, self.subs[s].backoff);
        let sf = &mut self.subs[s];
        sf.nxt += 1;
        sf.stats.packets_sent += 1;
        sf.stats.bytes_sent += seg.len as u64;
        if sf.nxt as f64 > self.windows[s].cwnd.ceil() {
            sf.stats.window_violations += 1;
        }
        if sf.rto_deadline.is_none() {
            sf.rto_deadline = Some(now + rto);
        }
        out.push(pkt);
        true
    }

    /// Round-robin over subflows, one packet per subflow per pass.
    fn transmit(&mut self, now: SimTime, out: &mut Vec<Packet>) {
        if self.status != ConnStatus::Open {
            return;
        }
        let n = self.subs.len();
        loop {
            let mut progress = false;
            for i in 0..n {
                let s = (self.rr + i) % n;
                progress |= self.try_send_one(now, s, out);
            }
            self.rr = (self.rr + 1) % n;
            if !progress {
                break;
            }
        }
    }

    fn ecn_reduce(&mut self, s: usize) {
        if self.windows[s].active {
            self.cc.on_ecn(&mut self.windows, s);
            self.subs[s].ssthresh = self.windows[s].cwnd;
        }
        let sf = &mut self.subs[s];
        sf.last_reduction_seq = sf.snd_max;
        sf.stats.ecn_reductions += 1;
    }

    fn increase(&mut self, s: usize) {
        if !self.windows[s].active {
            return;
        }
        if self.cfg.slow_start && self.windows[s].cwnd < self.subs[s].ssthresh {
            self.windows[s].cwnd += 1.0;
        } else {
            self.cc.on_increase(&mut self.windows, s);
        }
    }

    pub fn on_ack(&mut self, now: SimTime, ack: &Packet, out: &mut Vec<Packet>) -> AckOutcome {
        let mut outcome = AckOutcome::default();
        let s = ack.subflow_id as usize;
        if self.status != ConnStatus::Open || s >= self.subs.len() || ack.seq < self.subs[s].snd_una {
            return outcome;
        }
        outcome.processed = true;
        let ack_no = ack.seq;
        self.cc.observe_ack(&self.windows, s, ack.ece_echo);
        if ack.ece_echo {
            self.subs[s].stats.marked_acks += 1;
        }
        let mut round_due = false;
        if ack_no > self.subs[s].snd_una {
            let sf = &mut self.subs[s];
            let mut popped = 0;
            while let Some(front) = sf.segs.front() {
                if front.seq + front.len as u64 > ack_no {
                    break;
                }
                sf.segs.pop_front();
                popped += 1;
            }
            sf.nxt = sf.nxt.saturating_sub(popped);
            self.acked += ack_no - sf.snd_una;
            sf.snd_una = ack_no;
            sf.dup_acks = 0;
            sf.in_recovery = false;
            sf.backoff = 0;
            sf.rtt.sample(now.saturating_sub(ack.ts));
            self.windows[s].rtt = sf.rtt.srtt_secs();

            if ack.ece_echo && self.subs[s].snd_una > self.subs[s].last_reduction_seq {
                self.ecn_reduce(s);
            } else {
                self.increase(s);
            }

            match self.subs[s].round_end {
                None => round_due = true,
                Some(end) if self.subs[s].snd_una >= end => {
                    outcome.ssr = self.cc.on_round(&mut self.windows, s);
                    round_due = true;
                }
                _ => {}
            }

            let sf = &mut self.subs[s];
            sf.rto_deadline = if sf.outstanding() { Some(now + self.rto.rto(&sf.rtt, 0)) } else { None };
        } else if self.subs[s].outstanding() {
            if ack.ece_echo && self.subs[s].snd_una > self.subs[s].last_reduction_seq {
                self.ecn_reduce(s);
            }
            self.subs[s].dup_acks += 1;
            if self.subs[s].dup_acks == self.cfg.dupack_threshold && !self.subs[s].in_recovery {
                if self.windows[s].active {
                    self.cc.on_loss(&mut self.windows, s);
                    self.subs[s].ssthresh = self.windows[s].cwnd;
                }
                let sf = &mut self.subs[s];
                sf.in_recovery = true;
                sf.last_reduction_seq = sf.snd_max;
                sf.stats.fast_retransmits += 1;
                if let Some(&head) = sf.segs.front() {
                    sf.stats.retransmits += 1;
                    sf.stats.packets_sent += 1;
                    sf.stats.bytes_sent += head.len as u64;
                    let p = self.segment_packet(now, s, head);
                    out.push(p);
                }
            }
        }

        if self.acked >= self.size {
            self.status = ConnStatus::Completed;
            for sf in &mut self.subs {
                sf.rto_deadline = None;
            }
            outcome.completed = true;
            return outcome;
        }
        self.transmit(now, out);
        if round_due {
            let sf = &mut self.subs[s];
            sf.round_end = Some(sf.snd_max);
        }
        outcome
    }

    /// Retransmission timeout on subflow `s`; the caller checks the deadline.
    pub fn on_timeout(&mut self, now: SimTime, s: usize, out: &mut Vec<Packet>) -> TimeoutOutcome {
        let sf = &mut self.subs[s];
        sf.stats.timeouts += 1;
        sf.backoff += 1;
        if sf.backoff > self.rto.max_retries {
            self.status = ConnStatus::Failed;
            for sf in &mut self.subs {
                sf.rto_deadline = None;
            }
            return TimeoutOutcome::Aborted;
        }
        let before = self.windows[s].cwnd;
        self.cc.on_timeout(&mut self.windows, s);
        let min = self.cc.params().cwnd_min;
        let sf = &mut self.subs[s];
        sf.ssthresh = (before / 2.0).max(min);
        sf.nxt = 0;
        sf.in_recovery = false;
        sf.dup_acks = 0;
        sf.last_reduction_seq = sf.snd_max;
        sf.rto_deadline = Some(now + self.rto.rto(&sf.rtt, sf.backoff));
        self.transmit(now, out);
        TimeoutOutcome::Retransmitted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn(alg: Algorithm, size: u64, subflows: usize) -> Connection {
        let routes: Vec<u32> = (0..subflows as u32).collect();
        Connection::new(7, alg, CcParams::default(), TransportConfig::default(), size, &routes)
    }

    fn ack_for(p: &Packet, ack_no: u64, ece: bool) -> Packet {
        let mut a = Packet::ack(p.flow_id, p.subflow_id, ack_no, 40);
        a.ece_echo = ece;
        a.ts = p.ts;
        a
    }

    #[test]
    fn opens_with_cwnd_min_per_subflow() {
        let mut c = conn(Algorithm::Amp, 1 << 20, 4);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        assert_eq!(out.len(), 8);
        assert!(c.windows().iter().all(|w| w.cwnd == 2.0 && w.active));
        let per_sf: Vec<usize> = (0..4).map(|s| out.iter().filter(|p| p.subflow_id == s).count()).collect();
        assert_eq!(per_sf, vec![2, 2, 2, 2]);
    }

    #[test]
    fn dctcp_has_one_subflow() {
        let mut c = conn(Algorithm::Dctcp, 10_000, 1);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        assert_eq!(c.subflows().len(), 1);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn one_ecn_reduction_per_window() {
        let mut c = conn(Algorithm::Xmp, 1 << 30, 1);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        // Grow the window so a reduction is visible.
        let mut t = SimTime::ZERO;
        let mut next = out.clone();
        for _ in 0..200 {
            let p = next.remove(0);
            t += SimTime::from_micros(10);
            let mut o = vec![];
            c.on_ack(t, &ack_for(&p, p.seq + p.payload as u64, false), &mut o);
            next.extend(o);
        }
        let w0 = c.windows()[0].cwnd;
        let p = next.remove(0);
        let mut o = vec![];
        c.on_ack(t, &ack_for(&p, p.seq + p.payload as u64, true), &mut o);
        next.extend(o);
        let w1 = c.windows()[0].cwnd;
        assert!((w1 - beta_cut(w0)).abs() < 1e-9);
        // A second marked ACK in the same window only takes the increase path.
        let p = next.remove(0);
        let mut o = vec![];
        c.on_ack(t, &ack_for(&p, p.seq + p.payload as u64, true), &mut o);
        assert_eq!(c.subflows()[0].stats.ecn_reductions, 1);
        assert!(c.windows()[0].cwnd >= w1);
    }

    fn beta_cut(w: f64) -> f64 {
        (w * 0.75).max(2.0)
    }

    #[test]
    fn third_dupack_fast_retransmits() {
        let p = CcParams::default();
        let cfg = TransportConfig { initial_cwnd: Some(10.0), ..TransportConfig::default() };
        let mut c = Connection::new(1, Algorithm::Dctcp, p, cfg, 1 << 20, &[0]);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        assert_eq!(out.len(), 10);
        let first = out[0].clone();
        let t = SimTime::from_micros(20);
        let mut o = vec![];
        for p in &out[1..=3] {
            o.clear();
            c.on_ack(t, &ack_for(p, 0, false), &mut o);
        }
        assert_eq!(c.subflows()[0].stats.fast_retransmits, 1);
        assert_eq!(o.last().map(|p| p.seq), Some(first.seq));
        assert_eq!(c.windows()[0].cwnd, 5.0);
        assert!(c.subflows()[0].in_recovery);
        o.clear();
        c.on_ack(t, &ack_for(&first, 1400 * 10, false), &mut o);
        assert!(!c.subflows()[0].in_recovery);
        assert!(!o.is_empty());
    }

    #[test]
    fn timeouts_reset_window_and_back_off() {
        let cfg = TransportConfig { initial_cwnd: Some(8.0), ..TransportConfig::default() };
        let mut c = Connection::new(1, Algorithm::Dctcp, CcParams::default(), cfg, 1 << 20, &[0]);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        let d0 = c.subflows()[0].rto_deadline.unwrap();
        assert_eq!(d0, SimTime::from_millis(200));
        out.clear();
        assert_eq!(c.on_timeout(d0, 0, &mut out), TimeoutOutcome::Retransmitted);
        assert_eq!(c.windows()[0].cwnd, 2.0);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].seq, 0);
        let d1 = c.subflows()[0].rto_deadline.unwrap();
        assert_eq!(d1 - d0, SimTime::from_millis(400));
        out.clear();
        c.on_timeout(d1, 0, &mut out);
        let d2 = c.subflows()[0].rto_deadline.unwrap();
        assert_eq!(d2 - d1, SimTime::from_millis(800));
        assert_eq!(c.timeouts(), 2);
    }

    #[test]
    fn completes_when_all_bytes_acked() {
        let mut c = conn(Algorithm::Dcm, 2000, 2);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        assert_eq!(out.len(), 2);
        assert_eq!(out.iter().map(|p| p.payload as u64).sum::<u64>(), 2000);
        let mut o = vec![];
        let r = c.on_ack(SimTime(100), &ack_for(&out[0], out[0].payload as u64, false), &mut o);
        assert!(!r.completed);
        let r = c.on_ack(SimTime(200), &ack_for(&out[1], out[1].payload as u64, false), &mut o);
        assert!(r.completed);
        assert_eq!(c.status(), ConnStatus::Completed);
        assert_eq!(c.acked(), 2000);
    }

    #[test]
    fn stale_acks_are_ignored() {
        let mut c = conn(Algorithm::Amp, 1 << 20, 1);
        let mut out = vec![];
        c.start(SimTime::ZERO, &mut out);
        let mut o = vec![];
        c.on_ack(SimTime(10), &ack_for(&out[1], 2800, false), &mut o);
        let r = c.on_ack(SimTime(20), &ack_for(&out[0], 1400, false), &mut o);
        assert!(!r.processed);
    }
}
