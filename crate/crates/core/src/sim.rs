//! Discrete-event engine: integer-nanosecond clock, a time-ordered event
//! queue with insertion-order tie breaking, cancellable handles, and seeded
//! random streams.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulated time in nanoseconds since the start of the run.
///
/// Deserializes from an integer nanosecond count or a string with a unit
/// suffix (`"50us"`, `"1.5ms"`, `"2s"`); always serializes as nanoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "DurationRepr", into = "u64")]
pub struct SimTime(pub u64);

#[derive(Deserialize)]
#[serde(untagged)]
enum DurationRepr {
    Nanos(u64),
    Text(String),
}

impl TryFrom<DurationRepr> for SimTime {
    type Error = String;
    fn try_from(r: DurationRepr) -> Result<Self, Self::Error> {
        match r {
            DurationRepr::Nanos(n) => Ok(SimTime(n)),
            DurationRepr::Text(s) => s.parse(),
        }
    }
}

impl From<SimTime> for u64 {
    fn from(t: SimTime) -> u64 {
        t.0
    }
}

impl FromStr for SimTime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let scale = match unit.trim() {
            "" | "ns" => 1.0,
            "us" | "µs" => 1e3,
            "ms" => 1e6,
            "s" => 1e9,
            u => return Err(format!("unknown time unit `{u}` in `{s}` (use ns, us, ms or s)")),
        };
        let v: f64 = num.parse().map_err(|_| format!("invalid duration `{s}`"))?;
        let ns = v * scale;
        if !ns.is_finite() || ns < 0.0 || (ns - ns.round()).abs() > 1e-6 {
            return Err(format!("duration `{s}` is not a whole number of nanoseconds"));
        }
        Ok(SimTime(ns.round() as u64))
    }
}

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn saturating_mul(self, k: u64) -> SimTime {
        SimTime(self.0.saturating_mul(k))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 = self.0.saturating_add(rhs.0);
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Identifies a scheduled event so it can be cancelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle {
    slot: u32,
    seq: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CancelOutcome {
    Cancelled,
    AlreadyFired,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    InPast { at: SimTime, now: SimTime },
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    at: SimTime,
    seq: u64,
    slot: u32,
}

#[derive(Debug)]
struct Slot<E> {
    seq: u64,
    payload: Option<E>,
}

/// Counters describing the engine's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub scheduled: u64,
    pub dispatched: u64,
    pub cancelled: u64,
}

/// Time-ordered event queue. Events with equal `fire_at` dispatch in
/// insertion order. Payloads live in a slot arena so cancellation is O(1);
/// stale heap entries are skipped lazily.
#[derive(Debug)]
pub struct Engine<E> {
    now: SimTime,
    heap: BinaryHeap<Reverse<Entry>>,
    slots: Vec<Slot<E>>,
    free: Vec<u32>,
    next_seq: u64,
    stats: EngineStats,
    digest: u64,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Self {
            now: SimTime::ZERO,
            heap: BinaryHeap::new(),
            slots: Vec::new(),
            free: Vec::new(),
            next_seq: 0,
            stats: EngineStats::default(),
            digest: 0xcbf2_9ce4_8422_2325,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Events currently pending (scheduled, not yet fired or cancelled).
    pub fn pending(&self) -> u64 {
        self.stats.scheduled - self.stats.dispatched - self.stats.cancelled
    }

    /// Payloads of every pending event, in no particular order.
    pub fn pending_events(&self) -> impl Iterator<Item = &E> {
        self.slots.iter().filter_map(|s| s.payload.as_ref())
    }

    /// Running hash of the dispatch sequence `(fire_at, seq)`; two runs
    /// dispatched identically iff their digests match (modulo collisions).
    pub fn trace_digest(&self) -> u64 {
        self.digest
    }

    pub fn schedule(&mut self, at: SimTime, ev: E) -> Result<EventHandle, ScheduleError> {
        if at < self.now {
            return Err(ScheduleError::InPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let slot = match self.free.pop() {
            Some(i) => {
                let s = &mut self.slots[i as usize];
                s.seq = seq;
                s.payload = Some(ev);
                i
            }
            None => {
                self.slots.push(Slot { seq, payload: Some(ev) });
                (self.slots.len() - 1) as u32
            }
        };
        self.heap.push(Reverse(Entry { at, seq, slot }));
        self.stats.scheduled += 1;
        Ok(EventHandle { slot, seq })
    }

    /// Schedules `ev` after `delay` from now. Cannot fail.
    pub fn schedule_in(&mut self, delay: SimTime, ev: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, ev).expect("now + delay is never in the past")
    }

    pub fn cancel(&mut self, h: EventHandle) -> CancelOutcome {
        match self.slots.get_mut(h.slot as usize) {
            Some(s) if s.seq == h.seq && s.payload.is_some() => {
                s.payload = None;
                self.free.push(h.slot);
                self.stats.cancelled += 1;
                CancelOutcome::Cancelled
            }
            _ => CancelOutcome::AlreadyFired,
        }
    }

    /// Pops the next live event with `fire_at <= limit`, advancing the clock.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<(SimTime, E)> {
        while let Some(Reverse(top)) = self.heap.peek() {
            if top.at > limit {
                return None;
            }
            let Reverse(e) = self.heap.pop().expect("peeked");
            let slot = &mut self.slots[e.slot as usize];
            if slot.seq != e.seq {
                continue;
            }
            let Some(ev) = slot.payload.take() else {
                continue;
            };
            self.free.push(e.slot);
            debug_assert!(e.at >= self.now);
            self.now = e.at;
            self.stats.dispatched += 1;
            self.digest = (self.digest ^ e.at.0).wrapping_mul(0x0100_0000_01b3);
            self.digest = (self.digest ^ e.seq).wrapping_mul(0x0100_0000_01b3);
            return Some((e.at, ev));
        }
        None
    }

    /// Moves the clock forward without dispatching.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Dispatches every event with `fire_at <= t_end` through `handler`,
    /// then leaves the clock at `t_end`. Returns the number dispatched.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let mut n = 0;
        while let Some((at, ev)) = self.pop_until(t_end) {
            handler(self, at, ev);
            n += 1;
        }
        self.advance_to(t_end);
        n
    }
}

/// SplitMix64 finalizer, used for seed derivation and hashing.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Name of the generator recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), streams derived by SplitMix64(seed ^ FNV1a(label))";

/// Seeded random stream. Independent sub-streams are derived by label so
/// that draws in one component never perturb another's.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent stream; depends only on this stream's seed
    /// and `label`, never on how many values were drawn so far.
    pub fn fork(&self, label: &str) -> RngStream {
        RngStream::new(mix64(self.seed ^ label_hash(label)))
    }

    pub fn fork_indexed(&self, label: &str, index: u64) -> RngStream {
        RngStream::new(mix64(mix64(self.seed ^ label_hash(label)) ^ index))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
