use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::packet::Packet;
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueCounters {
    pub arrivals: u64,
    pub enqueued: u64,
    pub marked: u64,
    pub dropped: u64,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnqueueOutcome {
    /// Accepted; `departs` is when the packet reaches the far end of the
    /// link (serialization finish plus propagation delay).
    Enqueued {
        marked: bool,
        departs: SimTime,
    },
    Dropped,
}

/// One event-driven occupancy sample. `duration` is how long the sample
/// stands before the next one on the same queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueueSample {
    pub time: SimTime,
    pub link: u32,
    pub occupancy: u32,
    pub marked: u64,
    pub dropped: u64,
    pub duration: SimTime,
}

/// Records occupancy changes, keeping at most one sample per
/// `decimation` interval (0 keeps every change).
#[derive(Clone, Debug)]
pub struct QueueMonitor {
    link: u32,
    decimation: SimTime,
    samples: Vec<QueueSample>,
}

impl QueueMonitor {
    pub fn new(link: u32, decimation: SimTime) -> Self {
        Self { link, decimation, samples: Vec::new() }
    }

    fn record(&mut self, t: SimTime, occupancy: usize, c: &QueueCounters) {
        if let Some(last) = self.samples.last_mut() {
            if t < last.time + self.decimation {
                return;
            }
            last.duration = t - last.time;
        }
        self.samples.push(QueueSample {
            time: t,
            link: self.link,
            occupancy: occupancy as u32,
            marked: c.marked,
            dropped: c.dropped,
            duration: SimTime::ZERO,
        });
    }

    fn close(&mut self, t_end: SimTime) {
        if let Some(last) = self.samples.last_mut() {
            last.duration = t_end.saturating_sub(last.time);
        }
    }

    pub fn samples(&self) -> &[QueueSample] {
        &self.samples
    }
}

/// Drop-tail FIFO output queue with instantaneous-length ECN marking.
///
/// The packet being serialized counts toward occupancy. Departure times are
/// computed at enqueue (the link drains at a fixed rate), so the queue keeps
/// only the finish times of packets still in the system.
#[derive(Clone, Debug)]
pub struct EcnQueue {
    pub capacity: usize,
    pub threshold: usize,
    pub rate_bps: u64,
    pub delay: SimTime,
    pub marking: bool,
    finish: VecDeque<SimTime>,
    busy_until: SimTime,
    counters: QueueCounters,
    monitor: Option<QueueMonitor>,
}

/// Serialization time of `bytes` at `rate_bps`, rounded up to whole ns.
pub fn serialization_time(bytes: u32, rate_bps: u64) -> SimTime {
    let bits = bytes as u128 * 8 * 1_000_000_000;
    SimTime(bits.div_ceil(rate_bps as u128) as u64)
}

impl EcnQueue {
    pub fn new(capacity: usize, threshold: usize, rate_bps: u64, delay: SimTime) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        assert!(rate_bps > 0, "link rate must be positive");
        Self {
            capacity,
            threshold,
            rate_bps,
            delay,
            marking: true,
            finish: VecDeque::new(),
            busy_until: SimTime::ZERO,
            counters: QueueCounters::default(),
            monitor: None,
        }
    }

    pub fn attach_monitor(&mut self, monitor: QueueMonitor) {
        self.monitor = Some(monitor);
    }

    pub fn monitor(&self) -> Option<&QueueMonitor> {
        self.monitor.as_ref()
    }

    pub fn counters(&self) -> QueueCounters {
        self.counters
    }

    fn drain(&mut self, now: SimTime) {
        while let Some(&f) = self.finish.front() {
            if f > now {
                break;
            }
            self.finish.pop_front();
            if let Some(m) = self.monitor.as_mut() {
                m.record(f, self.finish.len(), &self.counters);
            }
        }
    }

    pub fn occupancy(&mut self, now: SimTime) -> usize {
        self.drain(now);
        self.finish.len()
    }

    pub fn enqueue(&mut self, now: SimTime, p: &mut Packet) -> EnqueueOutcome {
        self.drain(now);
        self.counters.arrivals += 1;
        if self.finish.len() >= self.capacity {
            self.counters.dropped += 1;
            return EnqueueOutcome::Dropped;
        }
        let start = self.busy_until.max(now);
        let done = start + serialization_time(p.size, self.rate_bps);
        self.busy_until = done;
        self.finish.push_back(done);
        self.counters.enqueued += 1;
        self.counters.bytes += p.size as u64;
        let occupancy = self.finish.len();
        let marked = self.marking && !p.is_ack && occupancy > self.threshold;
        if marked {
            p.ecn_ce = true;
            self.counters.marked += 1;
        }
        p.enqueue_ts = now;
        if let Some(m) = self.monitor.as_mut() {
            m.record(now, occupancy, &self.counters);
        }
        EnqueueOutcome::Enqueued { marked, departs: done + self.delay }
    }

    /// Drains everything scheduled to leave by `t_end` and closes the
    /// monitor's last sample.
    pub fn finalize(&mut self, t_end: SimTime) {
        self.drain(t_end);
        if let Some(m) = self.monitor.as_mut() {
            m.close(t_end);
        }
    }
}
