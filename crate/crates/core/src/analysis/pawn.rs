//! End-to-end run: regalize, chase the existential part from `{⊤}`,
//! saturate with the Datalog part, then look for loops and tournaments and
//! replay the valley-query machinery on whatever tournament is found.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::chase::{chase, saturate, ChaseConfig, ChaseError};
use crate::model::{Atom, Cq, Instance, RuleSet, Term};
use crate::rewrite::{injectivize, ucq_rewrite, RewriteBudget};
use crate::surgery::{regalize, split_datalog, SurgeryError};

use super::tournament::{edge_predicate, has_loop, max_tournament, monochromatic_subtournament};
use super::valley::{is_valley_query, size4_loop, valley_witness, witnesses, LoopCase};
use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    LoopEntailed,
    NoLargeTournamentAtDepth,
    TheoremMachineryConfirmed,
    Inconclusive(String),
}

#[derive(Clone, Copy, Debug)]
pub struct PawnConfig {
    pub depth: usize,
    pub k_target: usize,
    pub budget: RewriteBudget,
    pub chase: ChaseConfig,
}

impl Default for PawnConfig {
    fn default() -> Self {
        PawnConfig {
            depth: 4,
            k_target: 4,
            budget: RewriteBudget::default(),
            chase: ChaseConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub outcome: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    /// Least index of a valley disjunct witnessing the edge.
    pub color: usize,
    pub peak_steps: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PawnReport {
    pub verdict: Verdict,
    pub stages: Vec<StageRecord>,
    pub loop_term: Option<String>,
    pub tournament: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    pub monochromatic: Option<(usize, Vec<String>)>,
    pub loop_case: Option<LoopCase>,
}

impl PawnReport {
    fn new() -> Self {
        PawnReport {
            verdict: Verdict::Inconclusive(String::new()),
            stages: Vec::new(),
            loop_term: None,
            tournament: Vec::new(),
            edges: Vec::new(),
            monochromatic: None,
            loop_case: None,
        }
    }

    fn stage(&mut self, stage: &str, outcome: impl Into<String>) {
        self.stages.push(StageRecord {
            stage: stage.to_string(),
            outcome: outcome.into(),
        });
    }

    fn finish(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }
}

fn guarded<T>(r: Result<T, ChaseError>) -> Result<Result<T, String>, AnalysisError> {
    match r {
        Ok(t) => Ok(Ok(t)),
        Err(ChaseError::ResourceGuard { max_atoms, step, .. }) => {
            Ok(Err(format!("atom cap {max_atoms} reached at step {step}")))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn verify_pawn(instance: &Instance, rules: &RuleSet, cfg: PawnConfig) -> Result<PawnReport, AnalysisError> {
    let mut report = PawnReport::new();
    let regal = match regalize(instance, rules, cfg.budget) {
        Ok((r, _)) => r,
        Err(SurgeryError::RewritingBudgetExceeded { rule, generations }) => {
            let why = format!("body_rewrite: rewriting of {rule} exceeded {generations} generations");
            report.stage("regalize", why.clone());
            return Ok(report.finish(Verdict::Inconclusive(why)));
        }
        Err(e) => return Err(e.into()),
    };
    report.stage("regalize", format!("{} rules", regal.len()));
    let (datalog, existential) = split_datalog(&regal);
    report.stage(
        "split",
        format!("{} Datalog, {} existential", datalog.len(), existential.len()),
    );

    let prefix = match guarded(chase(&Instance::new(), &existential, cfg.depth, cfg.chase))? {
        Ok(t) => t,
        Err(why) => {
            report.stage("chase", why.clone());
            return Ok(report.finish(Verdict::Inconclusive(format!("chase: {why}"))));
        }
    };
    report.stage("chase", format!("{} atoms at depth {}", prefix.atom_count(), cfg.depth));
    let saturated = match guarded(saturate(&prefix.result(), &datalog, cfg.chase))? {
        Ok(t) => t.result(),
        Err(why) => {
            report.stage("saturate", why.clone());
            return Ok(report.finish(Verdict::Inconclusive(format!("saturate: {why}"))));
        }
    };
    report.stage("saturate", format!("{} atoms", saturated.len()));

    if let Some(u) = has_loop(&saturated) {
        report.loop_term = Some(u.label());
        report.stage("loop", format!("E({u},{u})"));
        return Ok(report.finish(Verdict::LoopEntailed));
    }
    report.stage("loop", "none");
    let t = max_tournament(&saturated, cfg.k_target);
    report.tournament = t.vertices().iter().map(Term::label).collect();
    report.stage("tournament", format!("largest up to {}: {}", cfg.k_target, t.len()));
    if t.len() < cfg.k_target {
        return Ok(report.finish(Verdict::NoLargeTournamentAtDepth));
    }

    let (x, y) = (Term::var("x"), Term::var("y"));
    let edge = Cq::new(vec![Atom::new(edge_predicate(), vec![x.clone(), y.clone()])], vec![x, y])
        .expect("edge query is well formed");
    let run = ucq_rewrite(&edge, &regal, cfg.budget);
    if !run.converged() {
        let why = "rewriting of E(x,y) exceeded the budget".to_string();
        report.stage("edge rewriting", why.clone());
        return Ok(report.finish(Verdict::Inconclusive(why)));
    }
    let q_inj = injectivize(&run.minimized());
    report.stage("edge rewriting", format!("{} injective disjuncts", q_inj.len()));

    let prefix_atoms = prefix.result();
    let mut color: BTreeMap<(Term, Term), usize> = BTreeMap::new();
    for (u, v) in t.pairs() {
        let forward = Atom::new(edge_predicate(), vec![u.clone(), v.clone()]);
        let (s, tt) = if saturated.contains(&forward) { (u.clone(), v.clone()) } else { (v.clone(), u.clone()) };
        let vrun = valley_witness(&s, &tt, &q_inj, &prefix)?;
        let c = witnesses(&s, &tt, &q_inj, &prefix_atoms)
            .iter()
            .filter(|w| is_valley_query(&w.query))
            .map(|w| w.disjunct)
            .min()
            .unwrap_or(vrun.witness.disjunct);
        report.edges.push(EdgeRecord {
            source: s.label(),
            target: tt.label(),
            color: c,
            peak_steps: vrun.steps.len(),
        });
        color.insert((u, v), c);
    }
    report.stage("valley witnesses", format!("{} edges colored", color.len()));

    match monochromatic_subtournament(&t, &color, 4) {
        Some((c, sub)) => {
            report.monochromatic = Some((c, sub.vertices().iter().map(Term::label).collect()));
            let case = size4_loop(&q_inj.disjuncts()[c], &prefix_atoms, sub.vertices())?;
            report.loop_case = Some(case.clone());
            // A derived loop must show up in the saturated prefix, which had none.
            Err(AnalysisError::Soundness(format!(
                "size-4 analysis derived a loop ({case:?}) absent from the saturated prefix"
            )))
        }
        None => {
            report.stage(
                "ramsey",
                format!("no monochromatic 4-tournament among {} vertices", t.len()),
            );
            Ok(report.finish(Verdict::TheoremMachineryConfirmed))
        }
    }
}
