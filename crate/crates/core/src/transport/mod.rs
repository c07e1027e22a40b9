//! Per-subflow reliable delivery: windowed sending, cumulative ACKs,
//! fast retransmit and retransmission timeouts. Window sizes come from
//! [`crate::cc`].

mod receiver;
mod rtt;
mod sender;

pub use receiver::{Receiver, SubflowReceiver};
pub use rtt::{RtoPolicy, RttEstimator};
pub use sender::{AckOutcome, ConnStatus, Connection, SubflowState, SubflowStats, TimeoutOutcome, TransportConfig};
