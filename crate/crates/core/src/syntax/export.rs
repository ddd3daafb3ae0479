//! JSON trace export and DOT rendering of at-most-binary instances.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::chase::ChaseTrace;
use crate::model::{Atom, Instance, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("cannot draw atom {0}: arity greater than two")]
    NotBinary(String),
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct JsonAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl From<&Atom> for JsonAtom {
    fn from(a: &Atom) -> Self {
        JsonAtom {
            pred: a.pred().name().to_string(),
            args: a.args().iter().map(Term::label).collect(),
        }
    }
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct JsonStep {
    pub index: usize,
    pub new_atoms: Vec<JsonAtom>,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct JsonTerm {
    pub name: String,
    pub timestamp: usize,
    /// Id of the creating rule; `None` for input terms.
    pub rule: Option<String>,
    pub frontier: Vec<String>,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct JsonTrace {
    pub steps: Vec<JsonStep>,
    pub terms: Vec<JsonTerm>,
}

pub fn trace_to_json(trace: &ChaseTrace) -> JsonTrace {
    let steps = (0..trace.layer_count())
        .map(|n| {
            let mut atoms: Vec<&Atom> = trace.new_atoms(n).iter().collect();
            atoms.sort();
            JsonStep {
                index: n,
                new_atoms: atoms.into_iter().map(JsonAtom::from).collect(),
            }
        })
        .collect();
    let terms = trace
        .terms()
        .iter()
        .map(|(t, info)| JsonTerm {
            name: t.label(),
            timestamp: info.timestamp,
            rule: info.trigger.map(|k| trace.triggers()[k].rule_id.clone()),
            frontier: info.frontier.iter().map(Term::label).collect(),
        })
        .collect();
    JsonTrace { steps, terms }
}

/// Pretty-printed JSON of a chase trace.
pub fn emit_json(trace: &ChaseTrace) -> String {
    serde_json::to_string_pretty(&trace_to_json(trace)).expect("trace serializes")
}

fn dot_id(s: &str) -> String {
    let plain = s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// One node per term, one labelled edge per binary atom; unary atoms are
/// listed in the node label.
pub fn emit_dot(instance: &Instance) -> Result<String, ExportError> {
    let mut unary: BTreeMap<Term, Vec<String>> = BTreeMap::new();
    let mut edges: Vec<(&Term, &Term, &str)> = Vec::new();
    for a in instance {
        match a.arity() {
            0 => {}
            1 => unary
                .entry(a.args()[0].clone())
                .or_default()
                .push(a.pred().name().to_string()),
            2 => edges.push((&a.args()[0], &a.args()[1], a.pred().name())),
            _ => return Err(ExportError::NotBinary(a.to_string())),
        }
    }
    let mut out = String::from("digraph instance {\n");
    for t in instance.adom() {
        let name = t.label();
        match unary.get(&t) {
            Some(preds) => {
                let label = format!("{} : {}", name, preds.join(", "));
                writeln!(out, "  {} [label={}];", dot_id(&name), dot_id(&label)).unwrap();
            }
            None => writeln!(out, "  {};", dot_id(&name)).unwrap(),
        }
    }
    for (s, t, p) in edges {
        writeln!(out, "  {} -> {} [label={}];", dot_id(&s.label()), dot_id(&t.label()), dot_id(p)).unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::{chase, ChaseConfig};
    use crate::model::RuleSet;
    use crate::syntax::parse_facts;

    #[test]
    fn json_of_trivial_trace() {
        let tr = chase(&Instance::new(), &RuleSet::empty(), 2, ChaseConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&emit_json(&tr)).unwrap();
        assert_eq!(v["steps"][0]["index"], 0);
        assert_eq!(v["steps"][0]["new_atoms"][0]["pred"], "true");
        assert!(v["terms"].as_array().unwrap().is_empty());
    }

    #[test]
    fn dot_examples() {
        let dot = emit_dot(&parse_facts("E(a,b). A(a).").unwrap()).unwrap();
        assert!(dot.contains("a -> b [label=E]"));
        assert!(dot.contains("a [label=\"a : A\"]"));
        assert!(emit_dot(&parse_facts("T(a,b,c).").unwrap()).is_err());
    }
}
