//! Text formats: rule/fact/query syntax, JSON chase traces, DOT drawings.

mod export;
mod parse;
mod print;

pub use export::{emit_dot, emit_json, trace_to_json, ExportError, JsonAtom, JsonStep, JsonTerm, JsonTrace};
pub use parse::{parse_facts, parse_query, parse_rules, parse_ucq, ParseError, SourceSpan};
