use super::{beta_cut, xmp_delta, Algorithm, CcParams, CongestionControl, SsrTransition, SubflowWindow};

/// Per-window `delta_s` increase with constant-factor ECN cuts.
#[derive(Clone, Debug)]
pub struct Xmp {
    params: CcParams,
}

impl Xmp {
    pub fn new(params: CcParams) -> Self {
        Self { params }
    }
}

impl CongestionControl for Xmp {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Xmp
    }

    fn params(&self) -> &CcParams {
        &self.params
    }

    fn on_increase(&mut self, _w: &mut [SubflowWindow], _s: usize) {}

    fn on_ecn(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd = beta_cut(w[s].cwnd, self.params.beta, self.params.cwnd_min);
    }

    fn on_round(&mut self, w: &mut [SubflowWindow], s: usize) -> Option<SsrTransition> {
        if w[s].active {
            w[s].cwnd += xmp_delta(w, s);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increases_once_per_round() {
        let mut x = Xmp::new(CcParams::default());
        let mut w = [SubflowWindow::new(10.0, 1e-4), SubflowWindow::new(10.0, 1e-4)];
        x.on_increase(&mut w, 0);
        assert_eq!(w[0].cwnd, 10.0);
        x.on_round(&mut w, 0);
        assert!((w[0].cwnd - 10.5).abs() < 1e-12);
    }

    #[test]
    fn cut_and_loss() {
        let mut x = Xmp::new(CcParams::default());
        let mut w = [SubflowWindow::new(8.0, 1e-4)];
        x.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 6.0);
        x.on_loss(&mut w, 0);
        assert_eq!(w[0].cwnd, 3.0);
        x.on_timeout(&mut w, 0);
        assert_eq!(w[0].cwnd, 2.0);
    }
}
