use std::collections::BTreeMap;

/// Cumulative-ACK reassembly for one subflow's byte sequence.
#[derive(Clone, Debug, Default)]
pub struct SubflowReceiver {
    expected: u64,
    out_of_order: BTreeMap<u64, u32>,
}

impl SubflowReceiver {
    /// Accepts a segment and returns `(cumulative_ack, newly_in_order_bytes)`.
    pub fn on_data(&mut self, seq: u64, len: u32) -> (u64, u64) {
        let before = self.expected;
        if seq <= self.expected {
            let end = seq + len as u64;
            if end > self.expected {
                self.expected = end;
            }
            while let Some((&s, &l)) = self.out_of_order.first_key_value() {
                if s > self.expected {
                    break;
                }
                self.out_of_order.pop_first();
                self.expected = self.expected.max(s + l as u64);
            }
        } else {
            let e = self.out_of_order.entry(seq).or_insert(len);
            *e = (*e).max(len);
        }
        (self.expected, self.expected - before)
    }

    pub fn expected(&self) -> u64 {
        self.expected
    }
}

/// Receiver side of a connection: one reassembly buffer per subflow.
#[derive(Clone, Debug)]
pub struct Receiver {
    subflows: Vec<SubflowReceiver>,
    delivered: u64,
}

impl Receiver {
    pub fn new(subflows: usize) -> Self {
        Self { subflows: vec![SubflowReceiver::default(); subflows], delivered: 0 }
    }

    pub fn on_data(&mut self, subflow: usize, seq: u64, len: u32) -> u64 {
        let (ack, fresh) = self.subflows[subflow].on_data(seq, len);
        self.delivered += fresh;
        ack
    }

    /// Unique bytes delivered in order across all subflows.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_order_and_reordered() {
        let mut r = SubflowReceiver::default();
        assert_eq!(r.on_data(0, 100), (100, 100));
        assert_eq!(r.on_data(200, 100), (100, 0));
        assert_eq!(r.on_data(300, 100), (100, 0));
        assert_eq!(r.on_data(100, 100), (400, 300));
    }

    #[test]
    fn duplicates_do_not_count() {
        let mut r = Receiver::new(2);
        r.on_data(0, 0, 100);
        r.on_data(0, 0, 100);
        r.on_data(1, 0, 50);
        assert_eq!(r.delivered(), 150);
    }
}
