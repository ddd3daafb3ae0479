//! Depth-bounded homomorphic-equivalence checks that each surgery keeps the
//! chase of its input, up to the stated depth slack.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::chase::{chase, prefix_maps_into, ChaseConfig, ChaseError, ChaseTrace};
use crate::model::{Instance, Predicate, RuleSet};

use super::transform::{encode_db, streamline, Reifier};
use super::SurgeryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stage {
    EncodeDb,
    Reify,
    Streamline,
    BodyRewrite,
}

/// One executable check relating `source` and `target` rule sets over the
/// sample instances, for source depths `0..=depth`.
#[derive(Clone, Debug, Serialize)]
pub struct Obligation {
    pub name: String,
    pub stage: Stage,
    pub depth: usize,
    /// Target depth is `slack * k` (plus one for encoding) for source depth `k`.
    pub slack: usize,
    #[serde(skip)]
    source: RuleSet,
    #[serde(skip)]
    target: RuleSet,
    #[serde(skip)]
    samples: Vec<Instance>,
    #[serde(skip)]
    encoded: Instance,
    #[serde(skip)]
    reifier: Option<Reifier>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObligationCheck {
    pub sample: usize,
    pub depth: usize,
    pub forward: bool,
    pub backward: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObligationOutcome {
    pub name: String,
    pub checks: Vec<ObligationCheck>,
}

impl ObligationOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.forward && c.backward)
    }
}

fn signature_with(rules: &RuleSet, samples: &[Instance]) -> BTreeSet<Predicate> {
    let mut sig = rules.signature();
    for s in samples {
        sig.extend(s.signature());
    }
    sig.insert(Predicate::top());
    sig
}

impl Obligation {
    fn new(name: &str, stage: Stage, source: RuleSet, target: RuleSet, samples: Vec<Instance>, depth: usize) -> Self {
        Obligation {
            name: name.to_string(),
            stage,
            depth,
            slack: 1,
            source,
            target,
            samples,
            encoded: Instance::new(),
            reifier: None,
        }
    }

    /// `step_k(J ⊎ J', S) ≡ step_{k+1}(J, S ∪ {⊤ → J'})`; the backward
    /// direction holds already at depth `k`.
    pub fn encode_db(source: &RuleSet, encoded: &Instance, samples: Vec<Instance>, depth: usize) -> Result<Self, SurgeryError> {
        let mut target = source.clone();
        target.push(encode_db(encoded)?);
        let mut ob = Obligation::new("encode_db", Stage::EncodeDb, source.clone(), target, samples, depth);
        ob.encoded = encoded.clone();
        Ok(ob)
    }

    /// `step_k(reify J, reify S) ≡ reify(step_k(J, S))`.
    pub fn reify(source: &RuleSet, samples: Vec<Instance>, depth: usize) -> Self {
        let mut reifier = Reifier::new(&signature_with(source, &samples));
        let target = reifier.rules(source);
        let mut ob = Obligation::new("reify", Stage::Reify, source.clone(), target, samples, depth);
        ob.reifier = Some(reifier);
        ob
    }

    /// `step_k(J, S) → step_{3k}(J, ∇S)|Σ` and `step_k(J, ∇S)|Σ → step_k(J, S)`.
    pub fn streamline(source: &RuleSet, samples: Vec<Instance>, depth: usize) -> Result<Self, SurgeryError> {
        let target = streamline(source)?;
        let mut ob = Obligation::new("streamline", Stage::Streamline, source.clone(), target, samples, depth);
        ob.slack = 3;
        Ok(ob)
    }

    /// `step_k(J, S) → step_k(J, rew S)` and
    /// `step_k(J, rew S) → step_{k(G+1)}(J, S)` where `G` bounds the
    /// rewriting generations.
    pub fn body_rewrite(source: &RuleSet, target: &RuleSet, generations: usize, samples: Vec<Instance>, depth: usize) -> Self {
        let mut ob = Obligation::new("body_rewrite", Stage::BodyRewrite, source.clone(), target.clone(), samples, depth);
        ob.slack = generations + 1;
        ob
    }

    pub fn source(&self) -> &RuleSet {
        &self.source
    }

    pub fn target(&self) -> &RuleSet {
        &self.target
    }

    pub fn samples(&self) -> &[Instance] {
        &self.samples
    }

    pub fn reifier(&self) -> Option<&Reifier> {
        self.reifier.as_ref()
    }

    pub fn check(&self, cfg: ChaseConfig) -> Result<ObligationOutcome, ChaseError> {
        let mut checks = Vec::new();
        for (i, j) in self.samples.iter().enumerate() {
            match self.stage {
                Stage::EncodeDb => {
                    let a = chase(&j.disjoint_union(&self.encoded), &self.source, self.depth, cfg)?;
                    let b = chase(j, &self.target, self.depth + 1, cfg)?;
                    for k in 0..=self.depth {
                        checks.push(ObligationCheck {
                            sample: i,
                            depth: k,
                            forward: prefix_maps_into(&step(&a, k), &step(&b, k + 1)),
                            backward: prefix_maps_into(&step(&b, k), &step(&a, k)),
                        });
                    }
                }
                Stage::Reify => {
                    let mut reifier = self.reifier.clone().expect("reify obligations carry their reifier");
                    let a = chase(j, &self.source, self.depth, cfg)?;
                    let b = chase(&reifier.instance(j), &self.target, self.depth, cfg)?;
                    for k in 0..=self.depth {
                        let ra = reifier.instance(&step(&a, k));
                        let bk = step(&b, k);
                        checks.push(ObligationCheck {
                            sample: i,
                            depth: k,
                            forward: prefix_maps_into(&ra, &bk),
                            backward: prefix_maps_into(&bk, &ra),
                        });
                    }
                }
                Stage::Streamline | Stage::BodyRewrite => {
                    let sig = signature_with(&self.source, std::slice::from_ref(j));
                    let (da, db) = if self.stage == Stage::Streamline {
                        (self.depth, self.depth * self.slack)
                    } else {
                        (self.depth * self.slack, self.depth)
                    };
                    let a = chase(j, &self.source, da, cfg)?;
                    let b = chase(j, &self.target, db, cfg)?;
                    for k in 0..=self.depth {
                        let (fwd, back) = if self.stage == Stage::Streamline {
                            (
                                prefix_maps_into(&step(&a, k), &step(&b, k * self.slack).restrict(&sig)),
                                prefix_maps_into(&step(&b, k).restrict(&sig), &step(&a, k)),
                            )
                        } else {
                            (
                                prefix_maps_into(&step(&a, k), &step(&b, k)),
                                prefix_maps_into(&step(&b, k), &step(&a, k * self.slack)),
                            )
                        };
                        checks.push(ObligationCheck {
                            sample: i,
                            depth: k,
                            forward: fwd,
                            backward: back,
                        });
                    }
                }
            }
        }
        Ok(ObligationOutcome {
            name: self.name.clone(),
            checks,
        })
    }
}

fn step(t: &ChaseTrace, k: usize) -> Instance {
    t.step(k)
}
