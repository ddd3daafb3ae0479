//! Existential rules at desk scale: an oblivious chase with provenance, UCQ
//! rewriting, the rule-set surgeries that turn a bounded-derivation-depth
//! rule set into a regal one, and the tournament/valley-query analysis built
//! on top of them.
//!
//! ```
//! use regal::{chase, parse_facts, parse_rules, ChaseConfig};
//!
//! let rules = parse_rules("E(x,y) -> ? z : E(y,z) .").unwrap();
//! let facts = parse_facts("E(a,b).").unwrap();
//! let trace = chase(&facts, &rules, 3, ChaseConfig::default()).unwrap();
//! assert_eq!(trace.result().len(), 5); // ⊤ plus a path of four edges
//! ```

pub mod analysis;
pub mod chase;
pub mod hom;
pub mod model;
pub mod rewrite;
pub mod sample;
pub mod surgery;
pub mod syntax;

pub use analysis::{
    has_loop, is_valley_query, max_tournament, mlex_compare, verify_pawn, AnalysisError, PawnConfig,
    PawnReport, TimestampMultiset, Tournament, Verdict,
};
pub use chase::{chase, saturate, ChaseConfig, ChaseError, ChaseTrace, Reachability};
pub use hom::{core, entails, find_hom, hom_equivalent, HomError};
pub use model::{Atom, Cq, Instance, ModelError, Predicate, Rule, RuleSet, Substitution, Term, Ucq};
pub use rewrite::{injectivize, rewrite_step, ucq_rewrite, RewriteBudget, RewriteStatus, RewritingRun};
pub use surgery::{
    body_rewrite, check_forward_existential, check_predicate_unique, check_quick_empirical, encode_db, regalize, reify,
    split_datalog, streamline, Obligation, SurgeryError, SurgeryReport,
};
pub use syntax::{emit_dot, emit_json, parse_facts, parse_query, parse_rules, parse_ucq, ParseError};
