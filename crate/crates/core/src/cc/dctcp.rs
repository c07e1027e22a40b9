use super::{alpha_cut, Algorithm, CcParams, CongestionControl, SubflowWindow};

/// Per-subflow EWMA of the fraction of marked ACKs, updated once per window.
#[derive(Clone, Debug)]
pub struct AlphaEstimator {
    g: f64,
    init: f64,
    alpha: Vec<f64>,
    marked: Vec<u64>,
    acked: Vec<u64>,
}

impl AlphaEstimator {
    pub fn new(g: f64, init: f64, subflows: usize) -> Self {
        Self { g, init, alpha: vec![init; subflows], marked: vec![0; subflows], acked: vec![0; subflows] }
    }

    fn grow(&mut self, s: usize) {
        if s >= self.alpha.len() {
            self.alpha.resize(s + 1, self.init);
            self.marked.resize(s + 1, 0);
            self.acked.resize(s + 1, 0);
        }
    }

    pub fn observe(&mut self, s: usize, marked: bool) {
        self.grow(s);
        self.acked[s] += 1;
        self.marked[s] += marked as u64;
    }

    /// Folds the window's marked fraction into the estimate and resets the
    /// counters. A window without ACKs leaves the estimate unchanged.
    pub fn end_window(&mut self, s: usize) {
        self.grow(s);
        if self.acked[s] > 0 {
            let f = self.marked[s] as f64 / self.acked[s] as f64;
            self.alpha[s] = (1.0 - self.g) * self.alpha[s] + self.g * f;
        }
        self.marked[s] = 0;
        self.acked[s] = 0;
    }

    pub fn get(&self, s: usize) -> f64 {
        self.alpha.get(s).copied().unwrap_or(self.init)
    }
}

#[derive(Clone, Debug)]
pub struct Dctcp {
    params: CcParams,
    est: AlphaEstimator,
}

impl Dctcp {
    pub fn new(params: CcParams) -> Self {
        Self { params, est: AlphaEstimator::new(params.g, params.alpha_init, 1) }
    }
}

impl CongestionControl for Dctcp {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dctcp
    }

    fn params(&self) -> &CcParams {
        &self.params
    }

    fn observe_ack(&mut self, _w: &[SubflowWindow], s: usize, marked: bool) {
        self.est.observe(s, marked);
    }

    fn on_increase(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd += 1.0 / w[s].cwnd;
    }

    fn on_ecn(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd = alpha_cut(w[s].cwnd, self.est.get(s), self.params.cwnd_min);
    }

    fn on_round(&mut self, _w: &mut [SubflowWindow], s: usize) -> Option<super::SsrTransition> {
        self.est.end_window(s);
        None
    }

    fn alpha(&self, s: usize) -> Option<f64> {
        Some(self.est.get(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_ewma_one_window() {
        // 1 - g + g * 0.5 with g = 1/16.
        let mut e = AlphaEstimator::new(1.0 / 16.0, 1.0, 1);
        for i in 0..10 {
            e.observe(0, i < 5);
        }
        e.end_window(0);
        assert!((e.get(0) - 0.96875).abs() < 1e-12);
    }

    #[test]
    fn alpha_from_zero() {
        let mut e = AlphaEstimator::new(1.0 / 16.0, 0.0, 1);
        e.observe(0, true);
        e.observe(0, true);
        e.end_window(0);
        assert!((e.get(0) - 0.0625).abs() < 1e-12);
        e.end_window(0);
        assert!((e.get(0) - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn alpha_all_marked_from_half() {
        let mut e = AlphaEstimator::new(1.0 / 16.0, 0.5, 1);
        e.observe(0, true);
        e.end_window(0);
        assert!((e.get(0) - (0.5 * 15.0 / 16.0 + 1.0 / 16.0)).abs() < 1e-12);
        assert!((e.get(0) - 0.53125).abs() < 1e-12);
    }

    #[test]
    fn dctcp_spec_rules() {
        let mut d = Dctcp::new(CcParams::default());
        let mut w = [SubflowWindow::new(10.0, 1e-4)];
        d.on_increase(&mut w, 0);
        assert!((w[0].cwnd - 10.1).abs() < 1e-12);
        w[0].cwnd = 10.0;
        d.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 5.0);
        w[0].cwnd = 3.0;
        d.on_loss(&mut w, 0);
        assert_eq!(w[0].cwnd, 2.0);
    }

    #[test]
    fn alpha_midpoint() {
        let mut e = AlphaEstimator::new(1.0 / 16.0, 0.5, 1);
        for i in 0..4 {
            e.observe(0, i < 1);
        }
        e.end_window(0);
        // 15/16 * 0.5 + 1/16 * 0.25
        assert!((e.get(0) - 0.484375).abs() < 1e-12);
    }

    #[test]
    fn dctcp_cut_uses_alpha() {
        let p = CcParams { alpha_init: 0.5, ..CcParams::default() };
        let mut d = Dctcp::new(p);
        let mut w = [SubflowWindow::new(20.0, 1e-4)];
        d.on_ecn(&mut w, 0);
        assert!((w[0].cwnd - 15.0).abs() < 1e-12);
        d.on_increase(&mut w, 0);
        assert!((w[0].cwnd - (15.0 + 1.0 / 15.0)).abs() < 1e-12);
    }
}
