use crate::sim::SimTime;

pub type FlowId = u32;

/// A data segment or an acknowledgement in flight.
///
/// For data packets `seq` is the first payload byte in the subflow's
/// sequence space; for ACKs it is the cumulative acknowledgement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub flow_id: FlowId,
    pub subflow_id: u8,
    pub is_ack: bool,
    /// Congestion Experienced, set by queues on data packets only.
    pub ecn_ce: bool,
    /// Set by the receiver on the ACK of a CE-marked packet.
    pub ece_echo: bool,
    pub seq: u64,
    /// Payload bytes (0 for ACKs).
    pub payload: u32,
    /// Bytes on the wire.
    pub size: u32,
    /// Sender timestamp, echoed back on the ACK for RTT sampling.
    pub ts: SimTime,
    pub enqueue_ts: SimTime,
    /// Index into the route arena and the next hop on that route.
    pub route: u32,
    pub hop: u16,
}

impl Packet {
    pub fn data(flow_id: FlowId, subflow_id: u8, seq: u64, payload: u32, header: u32) -> Self {
        Packet {
            flow_id,
            subflow_id,
            is_ack: false,
            ecn_ce: false,
            ece_echo: false,
            seq,
            payload,
            size: payload + header,
            ts: SimTime::ZERO,
            enqueue_ts: SimTime::ZERO,
            route: 0,
            hop: 0,
        }
    }

    pub fn ack(flow_id: FlowId, subflow_id: u8, ack_no: u64, size: u32) -> Self {
        Packet {
            flow_id,
            subflow_id,
            is_ack: true,
            ecn_ce: false,
            ece_echo: false,
            seq: ack_no,
            payload: 0,
            size,
            ts: SimTime::ZERO,
            enqueue_ts: SimTime::ZERO,
            route: 0,
            hop: 0,
        }
    }
}
