use std::path::PathBuf;
use std::process::{Command, Output};

use bunched::calculus::{to_json_string, Derivation, Rule, RuleInstance};
use bunched::syntax::seq;
use serde_json::Value;

fn bunched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bunched")).args(args).output().expect("the binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bunched-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn lbi_proof() -> Derivation {
    // p -* q ⟹ p -* q, using a unit law and exchange.
    let id = |s: &str| Derivation::leaf(seq(s), Rule::Id);
    let node = |s: &str, r: Rule, cs: Vec<Derivation>| Derivation::node(seq(s), RuleInstance::new(r), cs);
    node(
        "p -* q |- p -* q",
        Rule::WandR,
        vec![node(
            "p , (p -* q) |- q",
            Rule::E,
            vec![node(
                "p , ox , (p -* q) |- q",
                Rule::WandL,
                vec![id("p |- p"), node("ox , q |- q", Rule::E, vec![id("q |- q")])],
            )],
        )],
    )
}

#[test]
fn decide_exit_codes() {
    assert_eq!(bunched(&["decide", "p , (p -* q) |- q"]).status.code(), Some(0));
    assert_eq!(bunched(&["decide", "p |- p * p"]).status.code(), Some(1));
    assert_eq!(bunched(&["decide", "(p -* (q * r)) , p |- q", "--max-nodes", "200"]).status.code(), Some(2));
    let bad = bunched(&["decide", "p |- ("]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("byte 6"));
    assert_eq!(bunched(&["decide", "--bounds", "1,2", "p |- p"]).status.code(), Some(3));
    assert_eq!(bunched(&["decide"]).status.code(), Some(3));
}

#[test]
fn decide_json_and_stats() {
    let o = bunched(&["decide", "p * q |- q * p", "--json", "--stats"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "provable");
    assert!(v["stats"]["nodes"].as_u64().unwrap() > 0);
    assert!(v["stats"]["max_observed"]["mu"].as_u64().unwrap() <= 3);
}

#[test]
fn emitted_proofs_check() {
    let path = scratch("wand.json");
    let p = path.to_str().unwrap();
    assert_eq!(bunched(&["decide", "p , (p -* q) |- q", "--emit-proof", p]).status.code(), Some(0));
    let o = bunched(&["check", p, "--system", "dlbi", "--regimented"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn check_rejects_a_broken_proof() {
    let path = scratch("broken.json");
    let broken = Derivation::node(
        seq("p ; q |- p"),
        RuleInstance::new(Rule::W),
        vec![Derivation::leaf(seq("q |- q"), Rule::Id)],
    );
    std::fs::write(&path, to_json_string(&broken)).unwrap();
    let o = bunched(&["check", path.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(bunched(&["check", path.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn measure_mixed_bunch() {
    let o = bunched(&["measure", "(p , (q ; o+)) ; (r ; (r ; ox))"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v, serde_json::json!({"mu": 1, "omega": 1, "delta": 1}));
}

#[test]
fn normalize_logs_steps() {
    let o = bunched(&["normalize", "(p , (q ; o+)) ; (r ; (ox ; r))"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    let nf = bunched::parse_bunch(lines.next().unwrap()).unwrap();
    assert!(bunched::syntax::permutes(&nf, &bunched::parse_bunch("(p , q) ; (ox ; r)").unwrap()));
    let steps: Vec<&str> = lines.collect();
    assert_eq!(steps.len(), 2);
    assert!(steps.iter().any(|s| s.starts_with("contract@")));
    assert!(steps.iter().any(|s| s.starts_with("drop-o+@")));
}

#[test]
fn space_counts_and_lists() {
    let count = bunched(&["space", "p |- p", "--count"]);
    assert_eq!(count.status.code(), Some(0));
    let n: usize = stdout(&count).trim().parse().unwrap();
    let list = bunched(&["space", "p |- p", "--list"]);
    assert_eq!(stdout(&list).lines().count(), n);
    assert_eq!(bunched(&["space", "p * q |- q * p", "--limit", "100"]).status.code(), Some(2));
}

#[test]
fn transform_stages() {
    let input = scratch("lbi.json");
    std::fs::write(&input, to_json_string(&lbi_proof())).unwrap();
    let i = input.to_str().unwrap();
    for (stage, system) in [("slbi", "slbi"), ("regimented", "dlbi-rad"), ("dlbi-rad", "dlbi-rad"), ("dlbi", "dlbi")] {
        let out = scratch(&format!("{stage}.json"));
        let o = bunched(&["transform", i, "--to", stage, "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
        let c = bunched(&["check", out.to_str().unwrap(), "--system", system]);
        assert_eq!(c.status.code(), Some(0), "{stage}: {}", stdout(&c));
    }
    let o = bunched(&["transform", i, "--to", "dlbi", "--labels"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["labels"].is_array());
}
