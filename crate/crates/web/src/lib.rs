//! Browser bindings over the simulator. Each export runs one small scenario
//! to completion and returns a JSON document for the page to draw.

use ampsim::cc::{choose_beta, Algorithm};
use ampsim::config::{CwndTraceConfig, ScenarioConfig, WorkloadConfig};
use ampsim::metrics::jain_index;
use ampsim::presets;
use ampsim::runner;
use ampsim::sim::SimTime;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bounds that keep a single call under a few seconds in a browser.
pub const MAX_FLOWS: usize = 16;
pub const MAX_SUBFLOWS: usize = 8;
pub const MAX_MILLIS: u64 = 200;

#[derive(Debug, Serialize)]
pub struct FlowShare {
    pub flow_id: u32,
    pub class: String,
    pub gbps: f64,
}

#[derive(Debug, Serialize)]
pub struct Coexistence {
    pub flows: Vec<FlowShare>,
    pub jain: f64,
    pub total_gbps: f64,
    pub events: u64,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    /// Sample times in milliseconds.
    pub t: Vec<f64>,
    /// One window series per subflow, aligned with `t`.
    pub cwnd: Vec<Vec<f64>>,
    /// Times the competing DCTCP flows start and stop, in milliseconds.
    pub marks: Vec<f64>,
}

fn algorithm(name: &str) -> Result<Algorithm, String> {
    name.parse()
}

fn run(cfg: &ScenarioConfig) -> Result<ampsim::world::RunOutput, String> {
    runner::execute(cfg).map_err(|e| format!("{e:#}"))
}

/// Bottleneck shares of `n_dctcp` DCTCP flows against `n_mp` multipath flows.
pub fn coexistence(
    alg: &str,
    subflows: usize,
    n_dctcp: usize,
    n_mp: usize,
    ssr: bool,
    millis: u64,
) -> Result<Coexistence, String> {
    let alg = algorithm(alg)?;
    if n_dctcp + n_mp == 0 || n_dctcp + n_mp > MAX_FLOWS {
        return Err(format!("between 1 and {MAX_FLOWS} flows"));
    }
    if !(1..=MAX_SUBFLOWS).contains(&subflows) {
        return Err(format!("between 1 and {MAX_SUBFLOWS} subflows"));
    }
    if !(1..=MAX_MILLIS).contains(&millis) {
        return Err(format!("between 1 and {MAX_MILLIS} ms"));
    }
    let mut cfg = presets::coexistence(alg, subflows, n_dctcp, n_mp);
    cfg.duration = SimTime::from_millis(millis);
    cfg.cc.ssr = ssr;
    let out = run(&cfg)?;
    let flows: Vec<FlowShare> = out
        .flows
        .iter()
        .map(|f| FlowShare { flow_id: f.flow_id, class: f.class.clone(), gbps: f.goodput_bps() / 1e9 })
        .collect();
    let g: Vec<f64> = flows.iter().map(|f| f.gbps).collect();
    Ok(Coexistence {
        jain: jain_index(&g).map_err(|e| e.to_string())?,
        total_gbps: g.iter().sum(),
        flows,
        events: out.stats.events,
    })
}

/// Window trace of a two-path multipath flow while DCTCP joins one path at
/// 40ms and moves to the other at 80ms.
pub fn shifting(alg: &str) -> Result<Trace, String> {
    let alg = algorithm(alg)?;
    if !alg.is_multipath() {
        return Err("shifting needs a multipath algorithm".into());
    }
    let mut cfg = presets::shifting(alg);
    let (join, hop, end) = (SimTime::from_millis(40), SimTime::from_millis(80), SimTime::from_millis(120));
    cfg.duration = end;
    if let WorkloadConfig::Static(spec) = &mut cfg.workload {
        spec.flows[1].start = join;
        spec.flows[1].stop = Some(hop);
        spec.flows[2].start = hop;
    }
    cfg.metrics.cwnd = Some(CwndTraceConfig {
        flows: vec![0],
        start: SimTime::ZERO,
        end: None,
        decimation: SimTime::from_micros(100),
    });
    let out = run(&cfg)?;
    let mut trace = Trace { t: Vec::new(), cwnd: vec![Vec::new(); 2], marks: vec![40.0, 80.0] };
    let mut cur = [0.0; 2];
    for s in out.cwnd.iter().filter(|s| s.flow_id == 0 && (s.subflow as usize) < 2) {
        cur[s.subflow as usize] = if s.active { s.cwnd } else { 0.0 };
        let ms = s.time.as_secs_f64() * 1e3;
        if trace.t.last() == Some(&ms) {
            for (i, c) in trace.cwnd.iter_mut().enumerate() {
                *c.last_mut().expect("aligned") = cur[i];
            }
        } else {
            trace.t.push(ms);
            for (i, c) in trace.cwnd.iter_mut().enumerate() {
                c.push(cur[i]);
            }
        }
    }
    Ok(trace)
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = coexistence)]
pub fn coexistence_js(
    alg: &str,
    subflows: usize,
    n_dctcp: usize,
    n_mp: usize,
    ssr: bool,
    millis: u32,
) -> Result<String, JsValue> {
    json(coexistence(alg, subflows, n_dctcp, n_mp, ssr, millis.into()))
}

#[wasm_bindgen(js_name = shifting)]
pub fn shifting_js(alg: &str) -> Result<String, JsValue> {
    json(shifting(alg))
}

/// Smallest integer cut factor `beta >= 2` with `(bdp + k) / beta <= k`.
pub fn beta(bdp: f64, k: f64) -> Result<u32, String> {
    if !(bdp > 0.0 && k > 0.0 && bdp.is_finite() && k.is_finite()) {
        return Err("bdp and k must be positive".into());
    }
    Ok(choose_beta(bdp, k))
}

#[wasm_bindgen(js_name = chooseBeta)]
pub fn choose_beta_js(bdp: f64, k: f64) -> Result<u32, JsValue> {
    beta(bdp, k).map_err(|e| JsValue::from_str(&e))
}
