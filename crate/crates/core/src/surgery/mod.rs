//! Rule-set surgeries: database encoding, reification, streamlining and
//! body rewriting, the regality checks, and the `regalize` pipeline.

mod body;
mod checks;
mod obligations;
mod transform;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Instance, ModelError, Predicate, RuleSet};
use crate::rewrite::RewriteBudget;

pub use body::{body_rewrite, BodyRewriting};
pub use checks::{check_forward_existential, check_predicate_unique, check_quick_empirical, QuickViolation};
pub use obligations::{Obligation, ObligationCheck, ObligationOutcome, Stage};
pub use transform::{encode_db, reify, split_datalog, streamline, Reifier, ENCODE_ID};

/// Source depth of the obligations recorded by [`regalize`].
pub const OBLIGATION_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurgeryError {
    #[error("cannot encode an instance with no atoms besides true")]
    EmptyDatabase,
    #[error("rule {0} has an atom of arity greater than two")]
    NotBinary(String),
    #[error("rewriting the body of {rule} did not converge within {generations} generations")]
    RewritingBudgetExceeded { rule: String, generations: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub rules: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurgeryReport {
    pub input_signature: Vec<String>,
    pub output_signature: Vec<String>,
    pub fresh_predicates: Vec<String>,
    pub stages: Vec<StageReport>,
    pub rewrite_generations: usize,
    pub obligations: Vec<Obligation>,
}

fn names(sig: &BTreeSet<Predicate>) -> Vec<String> {
    sig.iter().filter(|p| !p.is_top()).map(|p| p.to_string()).collect()
}

/// `rew(∇(reify(R ∪ {⊤ → I})))`, with one obligation per stage over the
/// samples `{⊤}` and `I` (reified where needed).
pub fn regalize(instance: &Instance, rules: &RuleSet, budget: RewriteBudget) -> Result<(RuleSet, SurgeryReport), SurgeryError> {
    let mut input_sig = rules.signature();
    input_sig.extend(instance.signature());
    let samples = vec![Instance::new(), instance.clone()];

    let enc = Obligation::encode_db(rules, instance, samples.clone(), OBLIGATION_DEPTH)?;
    let encoded = enc.target().clone();
    let rei = Obligation::reify(&encoded, samples.clone(), OBLIGATION_DEPTH);
    let reified = rei.target().clone();
    let mut reifier = rei.reifier().expect("reify obligation carries a reifier").clone();
    let reified_samples: Vec<Instance> = samples.iter().map(|j| reifier.instance(j)).collect();
    let stream = Obligation::streamline(&reified, reified_samples.clone(), OBLIGATION_DEPTH)?;
    let streamlined = stream.target().clone();
    let rewritten = body_rewrite(&streamlined, budget)?;
    let rew = Obligation::body_rewrite(
        &streamlined,
        &rewritten.rules,
        rewritten.generations,
        reified_samples,
        OBLIGATION_DEPTH,
    );

    let out = rewritten.rules;
    let output_sig = out.signature();
    let fresh: BTreeSet<Predicate> = output_sig.difference(&input_sig).cloned().collect();
    let report = SurgeryReport {
        input_signature: names(&input_sig),
        output_signature: names(&output_sig),
        fresh_predicates: names(&fresh),
        stages: vec![
            StageReport { stage: Stage::EncodeDb, rules: encoded.len() },
            StageReport { stage: Stage::Reify, rules: reified.len() },
            StageReport { stage: Stage::Streamline, rules: streamlined.len() },
            StageReport { stage: Stage::BodyRewrite, rules: out.len() },
        ],
        rewrite_generations: rewritten.generations,
        obligations: vec![enc, rei, stream, rew],
    };
    Ok((out, report))
}
