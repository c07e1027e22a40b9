use super::{
    alpha_cut, beta_cut, coupled_increment, Algorithm, AlphaEstimator, CcParams, CongestionControl, SsrTransition,
    SubflowWindow,
};

/// Linked-increase MPTCP. ECN is ignored unless `ecn_beta_cut` is set, in
/// which case a marked window costs a constant-factor cut.
#[derive(Clone, Debug)]
pub struct Mptcp {
    params: CcParams,
    ecn_beta_cut: bool,
}

impl Mptcp {
    pub fn new(params: CcParams, ecn_beta_cut: bool) -> Self {
        Self { params, ecn_beta_cut }
    }
}

impl CongestionControl for Mptcp {
    fn algorithm(&self) -> Algorithm {
        if self.ecn_beta_cut {
            Algorithm::MptcpEcnBeta
        } else {
            Algorithm::Mptcp
        }
    }

    fn params(&self) -> &CcParams {
        &self.params
    }

    fn on_increase(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd += coupled_increment(w, s);
    }

    fn on_ecn(&mut self, w: &mut [SubflowWindow], s: usize) {
        if self.ecn_beta_cut {
            w[s].cwnd = beta_cut(w[s].cwnd, self.params.beta, self.params.cwnd_min);
        }
    }
}

/// Linked increase with per-subflow DCTCP-style proportional cuts.
#[derive(Clone, Debug)]
pub struct Dcm {
    params: CcParams,
    est: AlphaEstimator,
}

impl Dcm {
    pub fn new(params: CcParams, subflows: usize) -> Self {
        Self { params, est: AlphaEstimator::new(params.g, params.alpha_init, subflows) }
    }
}

impl CongestionControl for Dcm {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dcm
    }

    fn params(&self) -> &CcParams {
        &self.params
    }

    fn observe_ack(&mut self, _w: &[SubflowWindow], s: usize, marked: bool) {
        self.est.observe(s, marked);
    }

    fn on_increase(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd += coupled_increment(w, s);
    }

    fn on_ecn(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd = alpha_cut(w[s].cwnd, self.est.get(s), self.params.cwnd_min);
    }

    fn on_round(&mut self, _w: &mut [SubflowWindow], s: usize) -> Option<SsrTransition> {
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

    fn pair() -> [SubflowWindow; 2] {
        [SubflowWindow::new(10.0, 1e-4), SubflowWindow::new(10.0, 1e-4)]
    }

    #[test]
    fn mptcp_symmetric_increment() {
        let mut m = Mptcp::new(CcParams::default(), false);
        let mut w = pair();
        m.on_increase(&mut w, 0);
        assert!((w[0].cwnd - 10.025).abs() < 1e-12);
    }

    #[test]
    fn mptcp_ecn_handling() {
        let mut blind = Mptcp::new(CcParams::default(), false);
        let mut w = [SubflowWindow::new(8.0, 1e-4)];
        blind.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 8.0);
        let mut beta = Mptcp::new(CcParams::default(), true);
        beta.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 6.0);
        w[0].cwnd = 9.0;
        beta.on_loss(&mut w, 0);
        assert_eq!(w[0].cwnd, 4.5);
    }

    #[test]
    fn dcm_cut_examples() {
        let mut d = Dcm::new(CcParams { alpha_init: 0.2, ..CcParams::default() }, 1);
        let mut w = [SubflowWindow::new(10.0, 1e-4)];
        d.on_ecn(&mut w, 0);
        assert!((w[0].cwnd - 9.0).abs() < 1e-12);
        w[0].cwnd = 2.0;
        d.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 2.0);
        let mut z = Dcm::new(CcParams { alpha_init: 0.0, ..CcParams::default() }, 1);
        w[0].cwnd = 7.0;
        z.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 7.0);
    }

    #[test]
    fn dcm_alpha_is_per_subflow() {
        let mut d = Dcm::new(CcParams { alpha_init: 0.0, ..CcParams::default() }, 2);
        let mut w = pair();
        d.observe_ack(&w, 1, true);
        d.on_round(&mut w, 0);
        d.on_round(&mut w, 1);
        assert_eq!(d.alpha(0), Some(0.0));
        assert_eq!(d.alpha(1), Some(1.0 / 16.0));
    }
}
