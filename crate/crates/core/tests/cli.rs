use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ampsim(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ampsim")).args(args).env("AMPSIM_OUT", root).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn short_scenario(dir: &Path) -> std::path::PathBuf {
    let mut cfg = ampsim::presets::get("syndrome-amp").unwrap();
    cfg.name = "short".into();
    cfg.duration = ampsim::sim::SimTime::from_millis(5);
    let p = dir.join("short.toml");
    fs::write(&p, cfg.to_toml()).unwrap();
    p
}

#[test]
fn presets_list_and_show() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ampsim(&["presets", "list"], tmp.path());
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.lines().count() >= 20);
    assert!(s.contains("incast-amp"));
    let o = ampsim(&["presets", "show", "shifting-dcm"], tmp.path());
    assert!(o.status.success());
    let cfg = ampsim::config::ScenarioConfig::from_toml_str(&stdout(&o)).unwrap();
    assert_eq!(cfg.name, "shifting-dcm");
    assert_eq!(ampsim(&["presets", "show", "nope"], tmp.path()).status.code(), Some(2));
}

#[test]
fn run_writes_under_the_output_root_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_scenario(tmp.path());
    let root = tmp.path().join("out");
    let o = ampsim(&["run", cfg.to_str().unwrap(), "--seed", "5"], &root);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = root.join("short");
    for f in ["flows.csv", "links.csv", "queues.csv", "summary.csv", "run_meta.toml"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let meta = fs::read_to_string(dir.join("run_meta.toml")).unwrap();
    assert!(meta.contains("seed = 5"));
    let o = ampsim(&["verify", dir.to_str().unwrap()], &root);
    assert!(o.status.success(), "{}", stdout(&o));

    let summary = dir.join("summary.csv");
    let text = fs::read_to_string(&summary).unwrap();
    fs::write(&summary, text.replacen("run,flows,9", "run,flows,8", 1)).unwrap();
    let o = ampsim(&["verify", dir.to_str().unwrap()], &root);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("mismatch run flows"));
}

#[test]
fn explicit_out_and_presets_as_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("here");
    let o = ampsim(&["run", "preset:incast-dctcp", "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.csv").is_file());
}

#[test]
fn sweep_runs_every_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_scenario(tmp.path());
    let root = tmp.path().join("out");
    let o = ampsim(
        &["sweep", cfg.to_str().unwrap(), "--grid", "classes.mp.subflows=2..3;cc.tau=4,8", "--parallel", "2"],
        &root,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = root.join("short-sweep");
    let mut index = csv::Reader::from_path(dir.join("sweep_index.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = index.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(&r[3], "ok");
        assert!(dir.join(&r[1]).join("summary.csv").is_file(), "{}", &r[1]);
    }
    let seeds: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.get(2).unwrap()).collect();
    assert_eq!(seeds.len(), 4);
}

#[test]
fn bad_inputs_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_scenario(tmp.path());
    let o = ampsim(&["sweep", cfg.to_str().unwrap(), "--grid", "classes.mp.subflows=0"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("subflows"));
    let o = ampsim(&["sweep", cfg.to_str().unwrap(), "--grid", "nonsense"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\nduration = \"soon\"\n").unwrap();
    let o = ampsim(&["run", bad.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = ampsim(&["verify", tmp.path().join("missing").to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
