use ampsim_web::{beta, coexistence, shifting};

#[test]
fn coexistence_reports_every_flow() {
    let r = coexistence("amp", 4, 4, 2, true, 20).unwrap();
    assert_eq!(r.flows.len(), 6);
    assert!(r.total_gbps > 8.0 && r.total_gbps < 10.0, "{}", r.total_gbps);
    assert!(r.jain > 0.0 && r.jain <= 1.0);
    assert_eq!(r.flows.iter().filter(|f| f.class == "mp").count(), 2);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"jain\""));
}

#[test]
fn coexistence_rejects_oversized_requests() {
    assert!(coexistence("amp", 4, 20, 0, true, 20).is_err());
    assert!(coexistence("amp", 9, 1, 1, true, 20).is_err());
    assert!(coexistence("amp", 2, 1, 1, true, 0).is_err());
    assert!(coexistence("bbr", 2, 1, 1, true, 20).is_err());
}

#[test]
fn shifting_trace_is_aligned() {
    let t = shifting("amp").unwrap();
    assert!(t.t.len() > 100);
    assert!(t.cwnd.iter().all(|c| c.len() == t.t.len()));
    assert!(t.t.windows(2).all(|w| w[0] < w[1]));
    assert!(shifting("dctcp").is_err());
}

#[test]
fn beta_matches_the_core_helper() {
    assert_eq!(beta(20.0, 10.0), Ok(3));
    assert!(beta(0.0, 10.0).is_err());
    assert!(beta(20.0, f64::NAN).is_err());
}
