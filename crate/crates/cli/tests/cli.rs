//! End-to-end runs of the `regal` binary: outputs, formats and exit codes.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::NamedTempFile;

fn corpus(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn regal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regal")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn pair_rule_entails_a_loop() {
    let out = regal(&["verify-pawn", "--rules", &corpus("pair.rules"), "--facts", &corpus("ab.facts")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "LoopEntailed");
}

#[test]
fn unbounded_rule_set_is_inconclusive_with_budget_exit() {
    let out = regal(&["verify-pawn", "--rules", &corpus("ex1.rules"), "--facts", &corpus("ab.facts")]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert!(v["verdict"]["Inconclusive"].as_str().unwrap().starts_with("body_rewrite"));
}

#[test]
fn no_rules_no_large_tournament() {
    let empty = file("");
    let out = regal(&["verify-pawn", "--rules", empty.path().to_str().unwrap(), "--facts", &corpus("ab.facts"), "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "NoLargeTournamentAtDepth");
    assert_eq!(v["tournament"].as_array().unwrap().len(), 2);
}

#[test]
fn chase_prints_each_format() {
    let base = ["chase", "--rules", &corpus("pair.rules"), "--facts", &corpus("ab.facts"), "--depth", "2"];
    let text = regal(&base);
    assert_eq!(text.status.code(), Some(0));
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.lines().any(|l| l == "E(b,b)."));

    let v = json(&regal(&[&base[..], &["--emit", "json"]].concat()));
    assert!(v.is_object());

    let dot = String::from_utf8(regal(&[&base[..], &["--emit", "dot"]].concat()).stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("a -> b"));
}

#[test]
fn parse_round_trips_rule_files() {
    let out = regal(&["parse", "--rules", &corpus("pair.rules")]);
    assert_eq!(out.status.code(), Some(0));
    let again = file(std::str::from_utf8(&out.stdout).unwrap());
    let twice = regal(&["parse", "--rules", again.path().to_str().unwrap()]);
    assert_eq!(out.stdout, twice.stdout);
}

#[test]
fn rewrite_budget_overrun_exits_two() {
    let ok = regal(&["rewrite", "--rules", &corpus("pair.rules"), "--query", &corpus("loop.cq")]);
    assert_eq!(ok.status.code(), Some(0));
    let out = regal(&["rewrite", "--rules", &corpus("ex1.rules"), "--query", &corpus("loop.cq"), "--generations", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn regalized_obligations_hold() {
    let out = regal(&[
        "surgery", "regalize", "--rules", &corpus("chain.rules"), "--facts", &corpus("a.facts"), "--generations", "16", "--obligations",
        "--emit", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn checks_report_holds() {
    for (check, rules) in [("fe", "pair.rules"), ("pu", "peak1.rules")] {
        let v = json(&regal(&["check", check, "--rules", &corpus(rules)]));
        assert_eq!(v["holds"], true, "{check}");
    }
    let v = json(&regal(&["check", "quick", "--rules", &corpus("chain.rules"), "--facts", &corpus("a.facts")]));
    assert_eq!(v["holds"], true);
    assert!(v["violation"].is_null());
}

#[test]
fn tournament_loop_sweep_finds_entailed_loops() {
    let out = regal(&["analyze", "loop", "--rules", &corpus("tour_disc.rules"), "--depth", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["loop"].is_string());
    assert!(!v["size4"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(regal(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(regal(&["chase", "--rules", "/nonexistent/rules"]).status.code(), Some(1));
    assert_eq!(regal(&["analyze", "valley", "--rules", &corpus("peak1.rules")]).status.code(), Some(1));
    let bad = file("E(x,y) -> .");
    assert_eq!(regal(&["parse", "--rules", bad.path().to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(regal(&["--help"]).status.code(), Some(0));
}

#[test]
fn same_seed_same_output() {
    let args = ["check", "bdd", "--rules", &corpus("pair.rules"), "--query", &corpus("loop.cq"), "--seed", "7"];
    assert_eq!(regal(&args).stdout, regal(&args).stdout);
}
