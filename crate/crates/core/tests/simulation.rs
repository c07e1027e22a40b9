mod common;

use std::fs;

use ampsim::config::ScenarioConfig;
use ampsim::metrics::FlowStatus;
use ampsim::presets;
use ampsim::runner;
use ampsim::sim::SimTime;
use common::run_probed;

fn shortened(name: &str, d: SimTime) -> ScenarioConfig {
    let mut c = presets::get(name).expect(name);
    c.duration = c.duration.min(d);
    c
}

#[test]
fn bytes_are_conserved_in_every_preset() {
    for e in presets::catalog().into_iter().filter(|e| !e.name.ends_with("-full")) {
        let cfg = shortened(e.name, SimTime::from_millis(15));
        let (out, probe) = run_probed(&cfg, SimTime::from_micros(250));
        assert!(probe.checks > 50, "{}: only {} checks", e.name, probe.checks);
        assert!(probe.violations.is_empty(), "{}: {:?}", e.name, &probe.violations[..probe.violations.len().min(3)]);
        assert_eq!(out.stats.floor_violations, 0, "{}", e.name);
        assert_eq!(out.stats.window_violations, 0, "{}", e.name);
        for f in &out.flows {
            assert!(f.bytes_acked <= f.bytes_delivered, "{} flow {}", e.name, f.flow_id);
            assert!(f.bytes_delivered <= f.bytes_sent, "{} flow {}", e.name, f.flow_id);
            if f.status == FlowStatus::Completed {
                assert_eq!(Some(f.bytes_acked), f.size, "{} flow {}", e.name, f.flow_id);
            }
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["syndrome-amp", "fattree-cdf-xmp", "incast-dcm"] {
        let cfg = shortened(name, SimTime::from_millis(20));
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        let ra = runner::run_scenario(&cfg, &a).unwrap();
        let rb = runner::run_scenario(&cfg, &b).unwrap();
        assert_eq!(ra.stats, rb.stats, "{name}");
        let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(files.len() >= 6, "{name}: {files:?}");
        for f in files {
            assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{name}: {f:?}");
        }
    }
}

#[test]
fn seed_changes_randomized_workloads() {
    let mut cfg = shortened("fattree-cdf-amp", SimTime::from_millis(10));
    let a = runner::execute(&cfg).unwrap();
    cfg.seed += 1;
    let b = runner::execute(&cfg).unwrap();
    assert_ne!(a.stats.trace_digest, b.stats.trace_digest);
}

#[test]
fn verify_reproduces_stored_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["buffer-amp-4", "fattree-jobs-xmp", "fattree-general-dctcp", "shifting-dcm"] {
        let dir = tmp.path().join(name);
        runner::run_scenario(&shortened(name, SimTime::from_millis(10)), &dir).unwrap();
        let r = runner::verify(&dir).unwrap();
        assert!(r.ok(), "{name}: {:?}", r.mismatches);
        assert!(r.rows > 10);
    }
}

#[test]
fn verify_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    runner::run_scenario(&shortened("syndrome-xmp", SimTime::from_millis(5)), &dir).unwrap();
    let flows = dir.join("flows.csv");
    let text = fs::read_to_string(&flows).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut cells: Vec<String> = lines[1].split(',').map(str::to_owned).collect();
    let acked: u64 = cells[10].parse().unwrap();
    cells[10] = (acked + 1400).to_string();
    lines[1] = cells.join(",");
    fs::write(&flows, lines.join("\n") + "\n").unwrap();
    let r = runner::verify(&dir).unwrap();
    assert!(!r.ok());
    assert!(r.mismatches.iter().any(|m| m.1 == "bytes_acked"));
}

#[test]
fn dctcp_alone_fills_the_link() {
    let cfg = {
        let mut c = presets::coexistence(ampsim::cc::Algorithm::Amp, 4, 2, 0);
        c.duration = SimTime::from_millis(50);
        c
    };
    let out = runner::execute(&cfg).unwrap();
    let total: f64 = out.flows.iter().map(|f| f.goodput_bps()).sum();
    assert!(total > 9.0e9 && total < 10.0e9, "{total}");
    let jain = ampsim::metrics::jain_index(&out.flows.iter().map(|f| f.goodput_bps()).collect::<Vec<_>>()).unwrap();
    assert!(jain > 0.95, "{jain}");
}
