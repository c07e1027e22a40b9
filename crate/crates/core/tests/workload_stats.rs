use std::collections::HashMap;

use ampsim::config::{GeneralSpec, TopologyConfig, TopologyKind};
use ampsim::metrics::Role;
use ampsim::net::{FiveTuple, PathSelector, RouteTable};
use ampsim::presets::DATA_MINING_CDF;
use ampsim::sim::{RngStream, SimTime};
use ampsim::workload::{general_schedule, EmpiricalCdf, ParetoSizes};
use rand::seq::SliceRandom;
use rand::RngCore;

/// Asymptotic Kolmogorov-Smirnov critical value at the 1% level.
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn pareto_sample_mean_is_near_target() {
    let mean = 19_200.0 * 1024.0;
    let d = ParetoSizes::new(mean, 1.5);
    let mut rng = RngStream::new(1);
    let n = 100_000;
    let m = (0..n).map(|_| d.sample(&mut rng) as f64).sum::<f64>() / n as f64;
    assert!((m / mean - 1.0).abs() < 0.05, "sample mean {m} vs {mean}");
    let scale = mean / 3.0;
    assert!((0..1000).all(|_| d.sample(&mut rng) as f64 >= scale.floor()));
}

fn fattree_hosts(k: u32) -> (ampsim::net::Topology, Vec<u32>) {
    let topo = TopologyConfig { preset: TopologyKind::Fattree, k, ..TopologyConfig::default() }.build().unwrap();
    let hosts = topo.hosts();
    (topo, hosts)
}

#[test]
fn poisson_short_flow_count() {
    let (_, hosts) = fattree_hosts(8);
    let spec = GeneralSpec { lambda: 256.0, ..GeneralSpec::default() };
    let expected = 256.0 * 10.0;
    for seed in [1, 2, 3] {
        let plan = general_schedule(&spec, &hosts, SimTime::from_secs(10), &RngStream::new(seed));
        let n = plan.iter().filter(|f| f.role == Role::Short).count() as f64;
        assert!((n - expected).abs() <= 3.0 * expected.sqrt(), "seed {seed}: {n} short flows");
        let long = plan.iter().filter(|f| f.role == Role::Long).count();
        assert_eq!(long, hosts.len() / 2);
    }
}

#[test]
fn short_sizes_are_uniform() {
    let (_, hosts) = fattree_hosts(8);
    let spec = GeneralSpec { lambda: 2000.0, ..GeneralSpec::default() };
    let plan = general_schedule(&spec, &hosts, SimTime::from_secs(5), &RngStream::new(9));
    let (lo, hi) = (spec.short_min.0 as f64, spec.short_max.0 as f64);
    let mut x: Vec<f64> = plan.iter().filter(|f| f.role == Role::Short).map(|f| f.size.unwrap() as f64).collect();
    assert!(x.len() > 5000);
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = (v - lo) / (hi - lo);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < ks_critical(x.len()), "KS statistic {d}");
}

#[test]
fn cdf_sampler_matches_input() {
    let cdf = EmpiricalCdf::new(DATA_MINING_CDF.to_vec()).unwrap();
    let mut rng = RngStream::new(4);
    let n = 50_000;
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for _ in 0..n {
        *counts.entry(cdf.sample(&mut rng)).or_default() += 1;
    }
    assert!(counts.keys().all(|s| DATA_MINING_CDF.iter().any(|p| p.0 == *s)));
    let mut acc = 0;
    let mut d: f64 = 0.0;
    for &(s, p) in DATA_MINING_CDF {
        acc += counts.get(&s).copied().unwrap_or(0);
        d = d.max((acc as f64 / n as f64 - p).abs());
    }
    assert!(d < ks_critical(n), "KS statistic {d}");
}

#[test]
fn subflow_paths_spread_uniformly_over_a_fat_tree() {
    let (topo, hosts) = fattree_hosts(8);
    let routes = RouteTable::new(&topo);
    let (src, dst) = (hosts[0], *hosts.last().unwrap());
    let mut rng = RngStream::new(77);
    let salt = rng.next_u64();
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    let connections = 10_000;
    let mut ports: Vec<u16> = (1024..=u16::MAX).collect();
    ports.shuffle(&mut rng);
    for c in ports.chunks(4).take(connections) {
        for &sport in c {
            let tuple = FiveTuple { src, dst, sport, dport: 5001, proto: 6 };
            let p = routes.path(&topo, src, dst, PathSelector::Ecmp { tuple, salt }).unwrap();
            *counts.entry(p).or_default() += 1;
        }
    }
    assert_eq!(counts.len(), 16, "inter-pod paths at k=8");
    let n = (connections * 4) as f64;
    let e = n / 16.0;
    let sigma = (n * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
    let chi2: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99.9% quantile of chi-square with 15 degrees of freedom.
    assert!(chi2 < 37.70, "chi-square {chi2}");
    for c in counts.values() {
        assert!((*c as f64 - e).abs() <= 3.0 * sigma, "{c} vs {e}");
    }
}
