//! Congestion-control policies as state machines over four stimuli: clean
//! ACK, first marked ACK of a window, loss, and window-round boundary.
//!
//! Every policy reads and writes a slice of [`SubflowWindow`]s owned by the
//! connection; coupled rules sum over the *active* entries only.

mod amp;
mod dctcp;
mod mptcp;
mod xmp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use amp::{Amp, SsrState};
pub use dctcp::{AlphaEstimator, Dctcp};
pub use mptcp::{Dcm, Mptcp};
pub use xmp::Xmp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "dctcp")]
    Dctcp,
    #[serde(rename = "mptcp")]
    Mptcp,
    /// Coupled MPTCP increase with a constant-factor ECN cut.
    #[serde(rename = "mptcp-ecn-beta")]
    MptcpEcnBeta,
    #[serde(rename = "dcm")]
    Dcm,
    #[serde(rename = "xmp")]
    Xmp,
    #[serde(rename = "amp")]
    Amp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Dctcp, Algorithm::Mptcp, Algorithm::MptcpEcnBeta, Algorithm::Dcm, Algorithm::Xmp, Algorithm::Amp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dctcp => "dctcp",
            Algorithm::Mptcp => "mptcp",
            Algorithm::MptcpEcnBeta => "mptcp-ecn-beta",
            Algorithm::Dcm => "dcm",
            Algorithm::Xmp => "xmp",
            Algorithm::Amp => "amp",
        }
    }

    pub fn is_multipath(self) -> bool {
        self != Algorithm::Dctcp
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            format!("unknown algorithm `{s}` (expected one of dctcp, mptcp, mptcp-ecn-beta, dcm, xmp, amp)")
        })
    }
}

/// Tunables shared by all policies; each uses the subset it needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcParams {
    /// Constant ECN cut factor: `w <- w(1 - 1/beta)`.
    pub beta: f64,
    /// EWMA gain of the marked-fraction estimate.
    pub g: f64,
    /// Initial marked-fraction estimate.
    pub alpha_init: f64,
    /// Rounds with every subflow pinned before suppression.
    pub gamma: u32,
    /// Unmarked rounds before release.
    pub tau: u32,
    pub ssr: bool,
    /// A window below `cwnd_min + pin_epsilon` counts as pinned.
    pub pin_epsilon: f64,
    pub cwnd_min: f64,
}

impl Default for CcParams {
    fn default() -> Self {
        Self { beta: 4.0, g: 1.0 / 16.0, alpha_init: 1.0, gamma: 2, tau: 8, ssr: true, pin_epsilon: 0.5, cwnd_min: 2.0 }
    }
}

/// The per-subflow quantities congestion control reads and writes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubflowWindow {
    /// Congestion window in packets, fractional.
    pub cwnd: f64,
    pub active: bool,
    /// Smoothed RTT in seconds.
    pub rtt: f64,
}

impl SubflowWindow {
    pub fn new(cwnd: f64, rtt: f64) -> Self {
        Self { cwnd, active: true, rtt }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsrTransition {
    Suppressed,
    Released,
}

pub trait CongestionControl: Send + fmt::Debug {
    fn algorithm(&self) -> Algorithm;

    fn params(&self) -> &CcParams;

    /// Every ACK of subflow `s`, duplicate or not, before any other stimulus.
    fn observe_ack(&mut self, _w: &[SubflowWindow], _s: usize, _marked: bool) {}

    /// A new, non-reducing ACK on an active subflow.
    fn on_increase(&mut self, w: &mut [SubflowWindow], s: usize);

    /// The first marked ACK of subflow `s` in the current window of data.
    fn on_ecn(&mut self, w: &mut [SubflowWindow], s: usize);

    /// Fast-retransmit loss signal.
    fn on_loss(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd = halve(w[s].cwnd, self.params().cwnd_min);
    }

    fn on_timeout(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd = self.params().cwnd_min;
    }

    /// Subflow `s` finished a window of data (its cumulative ACK passed the
    /// round marker).
    fn on_round(&mut self, _w: &mut [SubflowWindow], _s: usize) -> Option<SsrTransition> {
        None
    }

    fn ssr(&self) -> Option<&SsrState> {
        None
    }

    /// Current marked-fraction estimate, for policies that keep one.
    fn alpha(&self, _s: usize) -> Option<f64> {
        None
    }
}

pub fn build(algorithm: Algorithm, params: CcParams, subflows: usize) -> Box<dyn CongestionControl> {
    match algorithm {
        Algorithm::Dctcp => Box::new(Dctcp::new(params)),
        Algorithm::Mptcp => Box::new(Mptcp::new(params, false)),
        Algorithm::MptcpEcnBeta => Box::new(Mptcp::new(params, true)),
        Algorithm::Dcm => Box::new(Dcm::new(params, subflows)),
        Algorithm::Xmp => Box::new(Xmp::new(params)),
        Algorithm::Amp => Box::new(Amp::new(params)),
    }
}

pub fn halve(w: f64, cwnd_min: f64) -> f64 {
    (w / 2.0).max(cwnd_min)
}

pub fn beta_cut(w: f64, beta: f64, cwnd_min: f64) -> f64 {
    (w * (1.0 - 1.0 / beta)).max(cwnd_min)
}

pub fn alpha_cut(w: f64, alpha: f64, cwnd_min: f64) -> f64 {
    (w * (1.0 - alpha / 2.0)).max(cwnd_min)
}

/// Sum of windows over active subflows.
pub fn total_window(w: &[SubflowWindow]) -> f64 {
    w.iter().filter(|x| x.active).map(|x| x.cwnd).sum()
}

/// Coupled aggressiveness over active subflows:
/// `a = w_total * max(w_r / rtt_r^2) / (sum(w_r / rtt_r))^2`.
pub fn coupled_aggressiveness(w: &[SubflowWindow]) -> f64 {
    let mut total = 0.0;
    let mut best: f64 = 0.0;
    let mut rate = 0.0;
    for x in w.iter().filter(|x| x.active) {
        total += x.cwnd;
        best = best.max(x.cwnd / (x.rtt * x.rtt));
        rate += x.cwnd / x.rtt;
    }
    if rate == 0.0 {
        return 0.0;
    }
    total * best / (rate * rate)
}

/// Per-ACK coupled increase `min(a / w_total, 1 / w_s)`.
pub fn coupled_increment(w: &[SubflowWindow], s: usize) -> f64 {
    let total = total_window(w);
    let a = coupled_aggressiveness(w);
    (a / total).min(1.0 / w[s].cwnd)
}

/// Per-window increment
/// `delta_s = (rtt_s / rtt_min) * (w_s / rtt_s) / sum(w_r / rtt_r)`.
pub fn xmp_delta(w: &[SubflowWindow], s: usize) -> f64 {
    let mut rtt_min = f64::INFINITY;
    let mut rate = 0.0;
    for x in w.iter().filter(|x| x.active) {
        rtt_min = rtt_min.min(x.rtt);
        rate += x.cwnd / x.rtt;
    }
    if rate == 0.0 {
        return 0.0;
    }
    let me = &w[s];
    (me.rtt / rtt_min) * (me.cwnd / me.rtt) / rate
}

/// Per-ACK increment `1 / w_total`.
pub fn amp_increment(w: &[SubflowWindow]) -> f64 {
    1.0 / total_window(w)
}

/// Smallest integer `beta >= 2` with `(bdp + k) / beta <= k`, so a single
/// cut never drains a queue standing at the marking threshold.
pub fn choose_beta(bdp: f64, k: f64) -> u32 {
    assert!(bdp > 0.0 && k > 0.0, "bdp and k must be positive");
    (((bdp + k) / k).ceil() as u32).max(2)
}
