#![allow(dead_code)]

use std::path::PathBuf;

use regal::{parse_rules, RuleSet};

pub fn corpus(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn rules(name: &str) -> RuleSet {
    parse_rules(&corpus(&format!("{name}.rules"))).unwrap()
}

/// Rule sets whose regalization passes all obligations at 16 generations.
pub const OBLIGATION_SETS: [&str; 6] = ["chain", "swap", "succ", "unpack", "witness", "project"];

/// Regal sets with a loop-free ∃-part chase from `{⊤}`.
pub const PIPELINES: [&str; 5] = ["peak1", "peak2", "peak3", "tour_disc", "tour_star"];
