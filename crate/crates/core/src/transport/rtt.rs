use crate::sim::SimTime;

/// Smoothed RTT and variance with the standard 1/8 and 1/4 gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RttEstimator {
    srtt: Option<f64>,
    rttvar: f64,
    initial: f64,
}

impl RttEstimator {
    /// `initial` is reported as the smoothed RTT until the first sample.
    pub fn new(initial: SimTime) -> Self {
        Self { srtt: None, rttvar: 0.0, initial: initial.0 as f64 }
    }

    pub fn sample(&mut self, rtt: SimTime) {
        let r = rtt.0 as f64;
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2.0;
            }
            Some(s) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (s - r).abs();
                self.srtt = Some(0.875 * s + 0.125 * r);
            }
        }
    }

    pub fn has_sample(&self) -> bool {
        self.srtt.is_some()
    }

    /// Smoothed RTT in nanoseconds.
    pub fn srtt_ns(&self) -> f64 {
        self.srtt.unwrap_or(self.initial)
    }

    pub fn srtt_secs(&self) -> f64 {
        self.srtt_ns() * 1e-9
    }

    pub fn rttvar_ns(&self) -> f64 {
        self.rttvar
    }
}

/// Retransmission timeout bounds and backoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RtoPolicy {
    pub min_rto: SimTime,
    pub max_rto: SimTime,
    pub max_retries: u32,
}

impl Default for RtoPolicy {
    fn default() -> Self {
        Self { min_rto: SimTime::from_millis(200), max_rto: SimTime::from_secs(60), max_retries: 15 }
    }
}

impl RtoPolicy {
    /// `max(min_rto, srtt + 4 rttvar)` doubled `backoff` times, capped at
    /// `max_rto`.
    pub fn rto(&self, est: &RttEstimator, backoff: u32) -> SimTime {
        let base = if est.has_sample() { (est.srtt_ns() + 4.0 * est.rttvar_ns()).ceil() as u64 } else { 0 };
        let base = SimTime(base).max(self.min_rto);
        let factor = 1u64 << backoff.min(30);
        base.saturating_mul(factor).min(self.max_rto)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_sample_seeds_variance() {
        let mut e = RttEstimator::new(SimTime::from_micros(100));
        assert_eq!(e.srtt_ns(), 100_000.0);
        e.sample(SimTime::from_micros(20));
        assert_eq!(e.srtt_ns(), 20_000.0);
        assert_eq!(e.rttvar_ns(), 10_000.0);
        e.sample(SimTime::from_micros(28));
        assert_eq!(e.srtt_ns(), 21_000.0);
        assert_eq!(e.rttvar_ns(), 9_500.0);
    }

    #[test]
    fn rto_floor_and_backoff() {
        let p = RtoPolicy::default();
        let mut e = RttEstimator::new(SimTime::from_micros(100));
        e.sample(SimTime::from_micros(20));
        assert_eq!(p.rto(&e, 0), SimTime::from_millis(200));
        assert_eq!(p.rto(&e, 1), SimTime::from_millis(400));
        assert_eq!(p.rto(&e, 2), SimTime::from_millis(800));
        let p = RtoPolicy { min_rto: SimTime::from_micros(1), ..p };
        assert_eq!(p.rto(&e, 0), SimTime::from_micros(60));
    }

    #[test]
    fn rto_is_capped() {
        let p = RtoPolicy::default();
        let e = RttEstimator::new(SimTime::from_micros(100));
        assert_eq!(p.rto(&e, 20), SimTime::from_secs(60));
    }
}
