use std::process::Command;

use bianchi_cli::report::{canonical_json, compute, ComputationReport};
use bianchi_core::poly::RationalFunction;

fn bianchi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bianchi")).args(args).env_remove("BIANCHI_CACHE").output().unwrap()
}

#[test]
fn compute_prints_series() {
    let out = bianchi(&["compute", "-m", "2", "--ell", "3"]);
    assert!(out.status.success());
    let r: ComputationReport = serde_json::from_slice(&out.stdout).unwrap();
    let t = r.torsion_for(3).unwrap();
    let f = RationalFunction::from_record(&t.series).unwrap();
    assert_eq!(f, RationalFunction::parse("-2t^3/(t-1)").unwrap());
    assert_eq!(r.euler_value, "0");
    assert!(r.torsion_for(2).is_none());
}

#[test]
fn bad_field_is_input_error() {
    for m in ["4", "0", "-7", "12"] {
        let out = bianchi(&["compute", "-m", m]);
        assert_eq!(out.status.code(), Some(2), "m = {m}");
    }
    assert_eq!(bianchi(&["verify", "no-such-suite"]).status.code(), Some(2));
}

#[test]
fn verify_passes_for_listed_fields() {
    let out = bianchi(&["verify", "-m", "5", "-m", "7"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("series ell=2"));
}

#[test]
fn cache_round_trip() {
    let dir = std::env::temp_dir().join(format!("bianchi-cli-test-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let first = compute(10, &[2, 3], Some(&dir), 20).unwrap();
    assert!(!first.timings.from_cache);
    let second = compute(10, &[2, 3], Some(&dir), 20).unwrap();
    assert!(second.timings.from_cache);
    assert_eq!(canonical_json(&first), canonical_json(&second));

    // a damaged cache file is ignored and rewritten
    let file = dir.join("complex-m10.json");
    std::fs::write(&file, "{ not json").unwrap();
    let third = compute(10, &[2, 3], Some(&dir), 20).unwrap();
    assert!(!third.timings.from_cache);
    assert_eq!(canonical_json(&first), canonical_json(&third));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let a = bianchi(&["compute", "-m", "15", "--canonical"]);
    let b = bianchi(&["compute", "-m", "15", "--canonical"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
