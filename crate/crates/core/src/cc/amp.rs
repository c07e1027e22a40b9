use super::{amp_increment, beta_cut, Algorithm, CcParams, CongestionControl, SsrTransition, SubflowWindow};

/// Suppression/release bookkeeping, advanced on subflow 0's window rounds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SsrState {
    pub rounds_pinned: u32,
    pub rounds_unmarked: u32,
    pub suppressed: bool,
    pub episodes: u32,
    round_marked: bool,
}

impl SsrState {
    fn pinned(w: &SubflowWindow, p: &CcParams) -> bool {
        w.cwnd < p.cwnd_min + p.pin_epsilon
    }

    /// One window round of subflow 0.
    pub fn on_round(&mut self, w: &mut [SubflowWindow], p: &CcParams) -> Option<SsrTransition> {
        if self.suppressed {
            if self.round_marked {
                self.rounds_unmarked = 0;
            } else {
                self.rounds_unmarked += 1;
            }
            self.round_marked = false;
            if self.rounds_unmarked >= p.tau {
                for x in w.iter_mut() {
                    x.active = true;
                }
                self.suppressed = false;
                self.rounds_pinned = 0;
                self.rounds_unmarked = 0;
                return Some(SsrTransition::Released);
            }
            return None;
        }
        let active = w.iter().filter(|x| x.active).count();
        if active > 1 && w.iter().filter(|x| x.active).all(|x| Self::pinned(x, p)) {
            self.rounds_pinned += 1;
        } else {
            self.rounds_pinned = 0;
        }
        if self.rounds_pinned >= p.gamma {
            for x in w.iter_mut().skip(1) {
                x.active = false;
            }
            self.suppressed = true;
            self.episodes += 1;
            self.rounds_pinned = 0;
            self.rounds_unmarked = 0;
            self.round_marked = false;
            return Some(SsrTransition::Suppressed);
        }
        None
    }

    pub fn observe_ack(&mut self, s: usize, marked: bool) {
        if self.suppressed && s == 0 && marked {
            self.round_marked = true;
            self.rounds_unmarked = 0;
        }
    }
}

/// RTT-agnostic `1 / w_total` increase, constant-factor ECN cut and
/// optional subflow suppression.
#[derive(Clone, Debug)]
pub struct Amp {
    params: CcParams,
    ssr: SsrState,
}

impl Amp {
    pub fn new(params: CcParams) -> Self {
        Self { params, ssr: SsrState::default() }
    }
}

impl CongestionControl for Amp {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Amp
    }

    fn params(&self) -> &CcParams {
        &self.params
    }

    fn observe_ack(&mut self, _w: &[SubflowWindow], s: usize, marked: bool) {
        if self.params.ssr {
            self.ssr.observe_ack(s, marked);
        }
    }

    fn on_increase(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd += amp_increment(w);
    }

    fn on_ecn(&mut self, w: &mut [SubflowWindow], s: usize) {
        w[s].cwnd = beta_cut(w[s].cwnd, self.params.beta, self.params.cwnd_min);
    }

    fn on_round(&mut self, w: &mut [SubflowWindow], s: usize) -> Option<SsrTransition> {
        if !self.params.ssr || s != 0 {
            return None;
        }
        self.ssr.on_round(w, &self.params)
    }

    fn ssr(&self) -> Option<&SsrState> {
        Some(&self.ssr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows(c: &[f64]) -> Vec<SubflowWindow> {
        c.iter().map(|&x| SubflowWindow::new(x, 1e-4)).collect()
    }

    #[test]
    fn increment_and_cut() {
        let mut a = Amp::new(CcParams::default());
        let mut w = flows(&[5.0, 5.0, 5.0, 5.0]);
        a.on_increase(&mut w, 2);
        assert!((w[2].cwnd - 5.05).abs() < 1e-12);
        let mut w = flows(&[8.0]);
        a.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 6.0);
        let mut w = flows(&[2.5]);
        a.on_ecn(&mut w, 0);
        assert_eq!(w[0].cwnd, 2.0);
    }

    #[test]
    fn suppresses_after_gamma_pinned_rounds() {
        let mut a = Amp::new(CcParams::default());
        let mut w = flows(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(a.on_round(&mut w, 0), None);
        assert_eq!(a.on_round(&mut w, 0), Some(SsrTransition::Suppressed));
        assert!(w[0].active && w[1..].iter().all(|x| !x.active));
        assert_eq!(a.ssr().unwrap().episodes, 1);
        // Idempotent while suppressed.
        assert_eq!(a.on_round(&mut w, 0), None);
        assert_eq!(a.ssr().unwrap().episodes, 1);
    }

    #[test]
    fn unpinned_subflow_resets_counter() {
        let p = CcParams { pin_epsilon: 0.0, ..CcParams::default() };
        let mut a = Amp::new(p);
        let mut w = flows(&[2.0, 2.0, 2.0, 2.05]);
        a.on_round(&mut w, 0);
        assert_eq!(a.ssr().unwrap().rounds_pinned, 0);
        let mut a = Amp::new(CcParams::default());
        let mut w = flows(&[2.0, 2.0, 2.0, 2.6]);
        a.on_round(&mut w, 0);
        assert_eq!(a.ssr().unwrap().rounds_pinned, 0);
    }

    #[test]
    fn releases_after_tau_unmarked_rounds() {
        let mut a = Amp::new(CcParams::default());
        let mut w = flows(&[2.0, 2.0, 2.0]);
        a.on_round(&mut w, 0);
        a.on_round(&mut w, 0);
        for _ in 0..7 {
            assert_eq!(a.on_round(&mut w, 0), None);
        }
        assert_eq!(a.on_round(&mut w, 0), Some(SsrTransition::Released));
        assert!(w.iter().all(|x| x.active));
        assert!(!a.ssr().unwrap().suppressed);
    }

    #[test]
    fn marked_ack_restarts_release_count() {
        let mut a = Amp::new(CcParams::default());
        let mut w = flows(&[2.0, 2.0]);
        a.on_round(&mut w, 0);
        a.on_round(&mut w, 0);
        for _ in 0..5 {
            a.on_round(&mut w, 0);
        }
        a.observe_ack(&w, 0, true);
        assert_eq!(a.ssr().unwrap().rounds_unmarked, 0);
        a.on_round(&mut w, 0);
        assert_eq!(a.ssr().unwrap().rounds_unmarked, 0);
        assert!(a.ssr().unwrap().suppressed);
    }

    #[test]
    fn other_subflow_rounds_do_not_clock_ssr() {
        let mut a = Amp::new(CcParams::default());
        let mut w = flows(&[2.0, 2.0]);
        for _ in 0..5 {
            assert_eq!(a.on_round(&mut w, 1), None);
        }
        assert!(!a.ssr().unwrap().suppressed);
    }

    #[test]
    fn disabled_ssr_never_suppresses() {
        let mut a = Amp::new(CcParams { ssr: false, ..CcParams::default() });
        let mut w = flows(&[2.0, 2.0]);
        for _ in 0..10 {
            assert_eq!(a.on_round(&mut w, 0), None);
        }
    }
}
