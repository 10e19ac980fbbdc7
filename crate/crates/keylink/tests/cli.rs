mod common;

use std::path::Path;
use std::process::{Command, Output};

use keylink::kdf::hmac_sha256;

fn keylink(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keylink"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

const NESTED: &str = r#"{"users":["u1","u2"],"resources":[
    {"id":"r1","privileged":["u1"]},
    {"id":"r2","privileged":["u1","u2"]}]}"#;

#[test]
fn analyze_complete_structure() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", &common::complete_4user_structure().to_json());
    let out = keylink(&["analyze", &s], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("n=4 m=11 bound=3 max_unlinked=7"), "{}", stdout(&out));
}

#[test]
fn analyze_irregular_structure() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", &common::irregular_8user_5res().to_json());
    let out = keylink(&["analyze", &s], dir.path());
    assert!(stdout(&out).contains("bound=1 max_unlinked=3"), "{}", stdout(&out));
}

#[test]
fn analyze_empty_resource_list() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"users":["u1"],"resources":[]}"#);
    let out = keylink(&["analyze", &s], dir.path());
    assert!(stdout(&out).contains("bound=0"));
}

#[test]
fn analyze_parse_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "bad.json", "{nope");
    let out = keylink(&["analyze", &s], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = keylink(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn link_verify_derive_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", NESTED);

    let out = keylink(&["link", &s, "--out", "forest.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["max_storage"], 1);
    assert_eq!(report["per_user"]["u1"], 1);

    let forest = dir.path().join("forest.json").to_string_lossy().into_owned();
    let out = keylink(&["verify", &s, &forest], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let seeds = write(
        dir.path(),
        "seeds.json",
        &format!(r#"{{"r1": "{}"}}"#, "11".repeat(32)),
    );
    // root echoes its seed
    let out = keylink(&["derive", &forest, &seeds, "r1"], dir.path());
    assert_eq!(stdout(&out).trim(), "11".repeat(32));
    // linked resource matches a manual HMAC invocation over the label
    let out = keylink(&["derive", &forest, &seeds, "r2"], dir.path());
    let mut label = Vec::new();
    label.extend_from_slice(&2u32.to_be_bytes());
    label.extend_from_slice(b"r1");
    label.extend_from_slice(&2u32.to_be_bytes());
    label.extend_from_slice(b"r2");
    let expected = hmac_sha256(&[0x11; 32], &label);
    assert_eq!(stdout(&out).trim(), hex::encode(expected));
}

#[test]
fn derive_depth_two_matches_manual_hmac_chain() {
    let dir = tempfile::tempdir().unwrap();
    let forest = write(
        dir.path(),
        "forest.json",
        r#"{"links":[{"child":"r2","parent":"r1"},{"child":"r3","parent":"r2"}]}"#,
    );
    let seeds = write(
        dir.path(),
        "seeds.json",
        &format!(r#"{{"r1": "{}"}}"#, "22".repeat(32)),
    );
    let out = keylink(&["derive", &forest, &seeds, "r3"], dir.path());
    let label = |a: &str, b: &str| {
        let mut v = Vec::new();
        v.extend_from_slice(&(a.len() as u32).to_be_bytes());
        v.extend_from_slice(a.as_bytes());
        v.extend_from_slice(&(b.len() as u32).to_be_bytes());
        v.extend_from_slice(b.as_bytes());
        v
    };
    let k2 = hmac_sha256(&[0x22; 32], &label("r1", "r2"));
    let k3 = hmac_sha256(&k2, &label("r2", "r3"));
    assert_eq!(stdout(&out).trim(), hex::encode(k3));
}

#[test]
fn derive_unknown_resource_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let forest = write(dir.path(), "forest.json", r#"{"links":[]}"#);
    let seeds = write(dir.path(), "seeds.json", "{}");
    let out = keylink(&["derive", &forest, &seeds, "zz"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_tampered_forest_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"users":["u1","u2","u3"],"resources":[
            {"id":"r1","privileged":["u1","u3"]},
            {"id":"r2","privileged":["u1","u2"]}]}"#,
    );
    let forest = write(
        dir.path(),
        "forest.json",
        r#"{"links":[{"child":"r2","parent":"r1"}]}"#,
    );
    let out = keylink(&["verify", &s, &forest, "--coalitions", "3"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["ok"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn link_exhaustive_refused_on_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let users: Vec<String> = (0..13).map(|i| format!("u{i:02}")).collect();
    let resources: Vec<_> = (0..13)
        .map(|i| serde_json::json!({"id": format!("r{i:02}"), "privileged": [users[i]]}))
        .collect();
    let s = write(
        dir.path(),
        "s.json",
        &serde_json::json!({"users": users, "resources": resources}).to_string(),
    );
    let out = keylink(&["link", &s, "--exhaustive"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kps_star_summary_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = keylink(&["kps", "star", "10", "--out", "st"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("max_storage=1"), "{}", stdout(&out));

    let full = dir.path().join("st.full.json").to_string_lossy().into_owned();
    let forest = dir.path().join("st.forest.json").to_string_lossy().into_owned();
    let out = keylink(&["verify", &full, &forest, "--coalitions", "11"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn kps_complete_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = keylink(&["kps", "complete", "5", "--out", "c5"], dir.path());
    assert!(stdout(&out).contains("max_storage=3"), "{}", stdout(&out));
    // even n refused without --extend
    let out = keylink(&["kps", "complete", "4"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kps_bounded_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(
        dir.path(),
        "c6.txt",
        "# C6\na b\nb c\nc d\nd e\ne f\nf a\n",
    );
    let out = keylink(&["kps", "bounded", &graph, "--out", "c6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("max_storage=2"), "{}", stdout(&out));
}

#[test]
fn gen_random_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen-random", "--users", "6", "--resources", "9", "--seed", "7"];
    let a = keylink(&args, dir.path());
    let b = keylink(&args, dir.path());
    assert_eq!(stdout(&a), stdout(&b));
    let c = keylink(
        &["gen-random", "--users", "6", "--resources", "9", "--seed", "8"],
        dir.path(),
    );
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn greedy_outputs_verify_clean_on_random_structures() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..50 {
        let out = keylink(
            &["gen-random", "--users", "8", "--resources", "12", "--seed", &seed.to_string()],
            dir.path(),
        );
        let s = write(dir.path(), "s.json", &stdout(&out));
        let out = keylink(&["link", &s, "--out", "f.json"], dir.path());
        assert_eq!(out.status.code(), Some(0));
        let f = dir.path().join("f.json").to_string_lossy().into_owned();
        let out = keylink(&["verify", &s, &f, "--coalitions", "8"], dir.path());
        assert_eq!(out.status.code(), Some(0), "seed {seed}");
    }
}
