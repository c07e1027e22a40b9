//! Packet-level discrete-event simulator for ECN-driven multipath
//! congestion control in data-center networks.

pub mod cc;
pub mod config;
pub mod metrics;
pub mod net;
pub mod presets;
pub mod runner;
pub mod sim;
pub mod transport;
pub mod workload;
pub mod world;
