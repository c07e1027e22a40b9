//! Ready-made scenarios for the experiments the simulator was built for.

use crate::cc::Algorithm;
use crate::config::{
    BitRate, ByteSize, CdfSpec, ClassConfig, CwndTraceConfig, GeneralSpec, IncastSpec, JobsSpec, ParetoSpec,
    QueueSelect, ScenarioConfig, StaticFlow, StaticSpec, TopologyConfig, TopologyKind, WorkloadConfig,
};
use crate::sim::SimTime;

/// Host stack latency added at each delivery; with [`HOST_JITTER`] it puts
/// the unloaded star round trip near 24us, about 22 full-size packets at
/// 10Gbps.
pub const HOST_DELAY: SimTime = SimTime(6_500);

/// Random per-packet addition to [`HOST_DELAY`]. Without it, identical
/// DCTCP flows phase-lock into persistently unequal shares.
pub const HOST_JITTER: SimTime = SimTime(1_000);

/// Sender/receiver star with `senders` hosts `s0..` and receiver `recv`.
pub fn star(senders: usize) -> ScenarioConfig {
    ScenarioConfig {
        topology: TopologyConfig {
            preset: TopologyKind::Star,
            senders,
            host_delay: HOST_DELAY,
            host_jitter: HOST_JITTER,
            ..TopologyConfig::default()
        },
        ..ScenarioConfig::default()
    }
}

fn long_flow(src: String, dst: &str, class: &str) -> StaticFlow {
    StaticFlow {
        src,
        dst: dst.into(),
        class: class.into(),
        size: None,
        start: SimTime::ZERO,
        stop: None,
        paths: None,
        count: 1,
    }
}

fn class(alg: Algorithm, subflows: usize) -> ClassConfig {
    match alg {
        Algorithm::Dctcp => ClassConfig::of(alg),
        _ => ClassConfig::of(alg).with_subflows(subflows),
    }
}

/// `k` synchronized senders per batch, each sending `size` bytes to `recv`,
/// one batch per second for 20 seconds.
pub fn incast(alg: Algorithm, k: usize, size: u64) -> ScenarioConfig {
    let mut c = star(k);
    c.name = format!("incast-{}", alg.name());
    c.duration = SimTime::from_secs(20);
    c.classes.insert("incast".into(), class(alg, 4));
    c.workload = WorkloadConfig::Incast(IncastSpec { k, flow_size: ByteSize(size), ..IncastSpec::default() });
    c
}

/// `n_dctcp` DCTCP flows and `n_mp` multipath flows with `r` subflows from
/// distinct senders to one receiver, all running for one second.
pub fn coexistence(alg: Algorithm, r: usize, n_dctcp: usize, n_mp: usize) -> ScenarioConfig {
    let mut c = star(n_dctcp + n_mp);
    c.name = format!("coexist-{}-r{r}-{n_dctcp}x{n_mp}", alg.name());
    c.classes.insert("dctcp".into(), ClassConfig::of(Algorithm::Dctcp));
    c.classes.insert("mp".into(), class(alg, r));
    let mut flows: Vec<StaticFlow> = (0..n_mp).map(|i| long_flow(format!("s{i}"), "recv", "mp")).collect();
    flows.extend((n_mp..n_mp + n_dctcp).map(|i| long_flow(format!("s{i}"), "recv", "dctcp")));
    c.workload = WorkloadConfig::Static(StaticSpec { flows });
    c
}

/// Eight DCTCP flows against one multipath flow with `r` subflows.
pub fn syndrome(alg: Algorithm, r: usize) -> ScenarioConfig {
    let mut c = coexistence(alg, r, 8, 1);
    c.name = format!("syndrome-{}-r{r}", alg.name());
    c
}

/// Four DCTCP flows against `n_mp` four-subflow multipath flows, with the
/// bottleneck queue sampled on every change.
pub fn buffer(alg: Algorithm, n_mp: usize) -> ScenarioConfig {
    let mut c = coexistence(alg, 4, 4, n_mp);
    c.name = format!("buffer-{}-{n_mp}", alg.name());
    c.metrics.queues = QueueSelect::Links(vec!["sw->recv".into()]);
    c
}

/// Two-subflow multipath flow S2->D2 over two disjoint paths; DCTCP
/// crosses one path during (1s, 2s) and the other during (2s, 3s).
pub fn shifting(alg: Algorithm) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        name: format!("shifting-{}", alg.name()),
        duration: SimTime::from_secs(3),
        topology: TopologyConfig {
            preset: TopologyKind::Parallel2,
            host_delay: HOST_DELAY,
            host_jitter: HOST_JITTER,
            ..TopologyConfig::default()
        },
        ..ScenarioConfig::default()
    };
    c.classes.insert("dctcp".into(), ClassConfig::of(Algorithm::Dctcp));
    c.classes.insert("mp".into(), class(alg, 2));
    let mut mp = long_flow("S2".into(), "D2", "mp");
    mp.paths = Some(vec![0, 1]);
    let mut first = long_flow("S3".into(), "D3", "dctcp");
    first.start = SimTime::from_secs(1);
    first.stop = Some(SimTime::from_secs(2));
    let mut second = long_flow("S1".into(), "D1", "dctcp");
    second.start = SimTime::from_secs(2);
    c.workload = WorkloadConfig::Static(StaticSpec { flows: vec![mp, first, second] });
    c.metrics.queues = QueueSelect::Keyword("none".into());
    c.metrics.cwnd = Some(CwndTraceConfig {
        flows: vec![0],
        start: SimTime::from_millis(1990),
        end: Some(SimTime::from_millis(2050)),
        decimation: SimTime::ZERO,
    });
    c
}

/// `n` AMP flows from distinct senders with exit threshold `tau`.
pub fn ssr_tuning(n: usize, tau: u32) -> ScenarioConfig {
    let mut c = coexistence(Algorithm::Amp, 4, 0, n);
    c.name = format!("ssr-{n}-tau{tau}");
    c.classes.get_mut("mp").expect("mp class").tau = Some(tau);
    c.classes.remove("dctcp");
    c
}

fn fattree(k: u32, rate: u64) -> ScenarioConfig {
    ScenarioConfig {
        topology: TopologyConfig {
            preset: TopologyKind::Fattree,
            k,
            rate: BitRate(rate),
            host_delay: HOST_DELAY,
            host_jitter: HOST_JITTER,
            ..TopologyConfig::default()
        },
        ..ScenarioConfig::default()
    }
}

/// Eight parallel DCTCP fan-in jobs over background long flows that use
/// `bg` with `r` subflows. Desk scale: k=8, 19.2MB mean, 100 completions.
pub fn fattree_jobs(bg: Algorithm, r: usize) -> ScenarioConfig {
    let mut c = fattree(8, 10_000_000_000);
    c.name = format!("fattree-jobs-{}-r{r}", bg.name());
    c.duration = SimTime::from_secs(60);
    c.classes.insert("short".into(), ClassConfig::of(Algorithm::Dctcp));
    c.classes.insert("long".into(), class(bg, r));
    c.workload = WorkloadConfig::Jobs(JobsSpec::default());
    c.metrics.queues = QueueSelect::Keyword("none".into());
    c
}

/// The job experiment at full size: 192MB mean, 1000 completions.
pub fn fattree_jobs_full(bg: Algorithm, r: usize) -> ScenarioConfig {
    let mut c = fattree_jobs(bg, r);
    c.name.push_str("-full");
    c.duration = SimTime::from_secs(3600);
    if let WorkloadConfig::Jobs(j) = &mut c.workload {
        j.background =
            ParetoSpec { mean: ByteSize(192 * 1024 * 1024), count_to_complete: 1000, ..ParetoSpec::default() };
    }
    c
}

/// Permutation long flows using `long` plus Poisson DCTCP short flows.
/// Desk scale: k=8 at 1Gbps, lambda 64/s, 2s.
pub fn fattree_general(long: Algorithm, r: usize) -> ScenarioConfig {
    let mut c = fattree(8, 1_000_000_000);
    c.name = format!("fattree-general-{}-r{r}", long.name());
    c.duration = SimTime::from_secs(2);
    c.classes.insert("short".into(), ClassConfig::of(Algorithm::Dctcp));
    c.classes.insert("long".into(), class(long, r));
    c.workload = WorkloadConfig::General(GeneralSpec { lambda: 64.0, ..GeneralSpec::default() });
    c.metrics.queues = QueueSelect::Keyword("none".into());
    c
}

/// The general workload at full size: k=8, 10Gbps, lambda 256/s, 10s.
pub fn fattree_general_full(long: Algorithm, r: usize) -> ScenarioConfig {
    let mut c = fattree_general(long, r);
    c.name.push_str("-full");
    c.topology.rate = BitRate(10_000_000_000);
    c.duration = SimTime::from_secs(10);
    c.workload = WorkloadConfig::General(GeneralSpec { lambda: 256.0, ..GeneralSpec::default() });
    c
}

/// A heavy-tailed size mix shaped like a data-mining workload.
pub const DATA_MINING_CDF: &[(u64, f64)] = &[
    (1_460, 0.5),
    (2_920, 0.6),
    (4_380, 0.7),
    (7_300, 0.8),
    (102_200, 0.9),
    (1_460_000, 0.95),
    (14_600_000, 0.98),
    (146_000_000, 0.99),
    (1_460_000_000, 1.0),
];

/// Per-host Poisson flows with sizes from [`DATA_MINING_CDF`]; short flows
/// use DCTCP and long flows `long`. Desk scale: k=4, 0.2s.
pub fn fattree_cdf(long: Algorithm, r: usize) -> ScenarioConfig {
    let mut c = fattree(4, 10_000_000_000);
    c.name = format!("fattree-cdf-{}-r{r}", long.name());
    c.duration = SimTime::from_millis(200);
    c.classes.insert("short".into(), ClassConfig::of(Algorithm::Dctcp));
    c.classes.insert("long".into(), class(long, r));
    c.workload = WorkloadConfig::Cdf(CdfSpec { points: DATA_MINING_CDF.to_vec(), ..CdfSpec::default() });
    c.metrics.queues = QueueSelect::Keyword("none".into());
    c
}

/// A named scenario in [`catalog`].
pub struct PresetEntry {
    pub name: &'static str,
    pub about: &'static str,
    pub build: fn() -> ScenarioConfig,
}

macro_rules! entry {
    ($name:literal, $about:literal, $build:expr) => {
        PresetEntry { name: $name, about: $about, build: || $build }
    };
}

/// Every named preset.
pub fn catalog() -> Vec<PresetEntry> {
    use Algorithm::*;
    vec![
        entry!("incast-dctcp", "30-sender 128KB incast, DCTCP", incast(Dctcp, 30, 128 * 1024)),
        entry!("incast-xmp", "30-sender 128KB incast, XMP r=4", incast(Xmp, 30, 128 * 1024)),
        entry!("incast-dcm", "30-sender 128KB incast, DCM r=4", incast(Dcm, 30, 128 * 1024)),
        entry!("incast-amp", "30-sender 128KB incast, AMP r=4", incast(Amp, 30, 128 * 1024)),
        entry!("syndrome-xmp", "8 DCTCP + 1 XMP r=4 on a star", syndrome(Xmp, 4)),
        entry!("syndrome-dcm", "8 DCTCP + 1 DCM r=4 on a star", syndrome(Dcm, 4)),
        entry!("syndrome-amp", "8 DCTCP + 1 AMP r=4 on a star", syndrome(Amp, 4)),
        entry!("buffer-xmp-4", "4 DCTCP + 4 XMP, bottleneck queue trace", buffer(Xmp, 4)),
        entry!("buffer-dcm-4", "4 DCTCP + 4 DCM, bottleneck queue trace", buffer(Dcm, 4)),
        entry!("buffer-amp-4", "4 DCTCP + 4 AMP, bottleneck queue trace", buffer(Amp, 4)),
        entry!("buffer-amp-1", "4 DCTCP + 1 AMP, bottleneck queue trace", buffer(Amp, 1)),
        entry!("shifting-amp", "two-path traffic shifting, AMP", shifting(Amp)),
        entry!("shifting-xmp", "two-path traffic shifting, XMP", shifting(Xmp)),
        entry!("shifting-dcm", "two-path traffic shifting, DCM", shifting(Dcm)),
        entry!("shifting-mptcp-ecn", "two-path traffic shifting, MPTCP with beta cut", shifting(MptcpEcnBeta)),
        entry!("ssr-tuning", "3 AMP flows, tau=8", ssr_tuning(3, 8)),
        entry!("fattree-jobs-amp", "fan-in jobs over AMP background, desk scale", fattree_jobs(Amp, 4)),
        entry!("fattree-jobs-xmp", "fan-in jobs over XMP background, desk scale", fattree_jobs(Xmp, 4)),
        entry!("fattree-jobs-xmp8", "fan-in jobs over XMP r=8 background, desk scale", fattree_jobs(Xmp, 8)),
        entry!("fattree-jobs-dctcp", "fan-in jobs over DCTCP background, desk scale", fattree_jobs(Dctcp, 1)),
        entry!("fattree-jobs-amp-full", "fan-in jobs over AMP background, full size", fattree_jobs_full(Amp, 4)),
        entry!("fattree-general-amp", "permutation + Poisson, AMP long flows, desk scale", fattree_general(Amp, 4)),
        entry!("fattree-general-xmp", "permutation + Poisson, XMP long flows, desk scale", fattree_general(Xmp, 4)),
        entry!("fattree-general-dcm", "permutation + Poisson, DCM long flows, desk scale", fattree_general(Dcm, 4)),
        entry!(
            "fattree-general-dctcp",
            "permutation + Poisson, DCTCP long flows, desk scale",
            fattree_general(Dctcp, 1)
        ),
        entry!(
            "fattree-general-amp-full",
            "permutation + Poisson, AMP long flows, full size",
            fattree_general_full(Amp, 4)
        ),
        entry!("fattree-cdf-amp", "data-mining size mix, AMP long flows", fattree_cdf(Amp, 4)),
        entry!("fattree-cdf-xmp", "data-mining size mix, XMP long flows", fattree_cdf(Xmp, 4)),
    ]
}

pub fn get(name: &str) -> Option<ScenarioConfig> {
    catalog().into_iter().find(|e| e.name == name).map(|e| {
        let mut c = (e.build)();
        c.name = name.to_string();
        c
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for e in catalog() {
            let c = get(e.name).unwrap();
            c.validate().unwrap_or_else(|err| panic!("{}: {err}", e.name));
            let back = ScenarioConfig::from_toml_str(&c.to_toml()).unwrap();
            assert_eq!(back, c, "{}", e.name);
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = catalog().iter().map(|e| e.name).collect();
        names.sort_unstable();
        let n = names.len();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
