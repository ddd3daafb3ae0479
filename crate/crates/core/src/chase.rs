//! Depth-bounded oblivious chase with trigger provenance.
//!
//! Step `n+1` adds the outputs of every trigger that exists on step `n` but
//! not on step `n-1`. New triggers are enumerated semi-naively: a body
//! homomorphism is new on step `n` iff it uses an atom first added at step
//! `n`, and it is produced exactly once by fixing the first such body atom.
//! Within a step triggers fire in canonical order (rule index, then body
//! image), which fixes the numbering of fresh nulls.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::hom::{find_hom_in, for_each_hom, AtomIndex, HomOptions};
use crate::model::{Atom, Instance, Rule, RuleSet, Substitution, Term};

/// Default cap on the number of atoms a chase may hold.
pub const DEFAULT_MAX_ATOMS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChaseConfig {
    pub max_atoms: usize,
}

impl Default for ChaseConfig {
    fn default() -> Self {
        ChaseConfig {
            max_atoms: DEFAULT_MAX_ATOMS,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum ChaseError {
    #[error("resource guard: more than {max_atoms} atoms while computing step {step}")]
    ResourceGuard {
        max_atoms: usize,
        step: usize,
        partial: Box<ChaseTrace>,
    },
    #[error("atom {0} has arity greater than two")]
    NotBinary(String),
}

/// A rule paired with a body homomorphism. Identity is (rule, body map).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trigger {
    pub rule: usize,
    pub body_map: Substitution,
}

/// A trigger together with where and what it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiredTrigger {
    pub trigger: Trigger,
    pub rule_id: String,
    /// The trigger exists on this step; its output lands in the next one.
    pub step: usize,
    /// Body map extended with the fresh nulls.
    pub full_map: Substitution,
    pub output: Vec<Atom>,
    pub created: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermInfo {
    pub timestamp: usize,
    /// Index into [`ChaseTrace::triggers`] of the creating trigger; `None`
    /// for terms of the input instance.
    pub trigger: Option<usize>,
    /// Image of the creating rule's frontier.
    pub frontier: BTreeSet<Term>,
}

#[derive(Clone, Debug)]
pub struct ChaseTrace {
    rules: RuleSet,
    layers: Vec<Vec<Atom>>,
    triggers: Vec<FiredTrigger>,
    terms: BTreeMap<Term, TermInfo>,
    depth: usize,
    fixpoint: Option<usize>,
}

impl ChaseTrace {
    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    /// Requested (or, for a partial trace, completed) depth.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// First step `n` with no new trigger, if reached within the depth.
    pub fn fixpoint(&self) -> Option<usize> {
        self.fixpoint
    }

    /// Atoms first added at step `n` (layer 0 is the input).
    pub fn new_atoms(&self, n: usize) -> &[Atom] {
        self.layers.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// `step_n`; steps past a fixpoint or past the computed depth repeat the last layer set.
    pub fn step(&self, n: usize) -> Instance {
        Instance::from_atoms(self.layers.iter().take(n + 1).flatten().cloned())
    }

    pub fn result(&self) -> Instance {
        self.step(self.depth)
    }

    pub fn triggers(&self) -> &[FiredTrigger] {
        &self.triggers
    }

    pub fn terms(&self) -> &BTreeMap<Term, TermInfo> {
        &self.terms
    }

    pub fn term_info(&self, t: &Term) -> Option<&TermInfo> {
        self.terms.get(t)
    }

    pub fn timestamp(&self, t: &Term) -> Option<usize> {
        self.terms.get(t).map(|i| i.timestamp)
    }

    pub fn creating_trigger(&self, t: &Term) -> Option<&FiredTrigger> {
        self.terms
            .get(t)
            .and_then(|i| i.trigger)
            .map(|k| &self.triggers[k])
    }

    pub fn atom_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
}

/// Every trigger of `rules` on `instance`, in canonical order.
pub fn triggers(instance: &Instance, rules: &RuleSet) -> Vec<Trigger> {
    let index = AtomIndex::from_atoms(instance);
    let mut out = Vec::new();
    for (ri, r) in rules.iter().enumerate() {
        let mut found: Vec<(Vec<Atom>, Substitution)> = Vec::new();
        for_each_hom(r.body(), &index, &Substitution::new(), &HomOptions::default(), |h| {
            found.push((r.body().iter().map(|a| a.apply(h)).collect(), h.clone()));
            ControlFlow::Continue(())
        });
        found.sort();
        out.extend(found.into_iter().map(|(_, h)| Trigger {
            rule: ri,
            body_map: h,
        }));
    }
    out
}

/// Output of a trigger, numbering fresh nulls from `next_null` upwards in
/// the rule's existential order. Returns the atoms and the extended map.
pub fn trigger_output(rule: &Rule, body_map: &Substitution, next_null: &mut u32) -> (Vec<Atom>, Substitution) {
    let mut full = body_map.clone();
    for z in rule.existentials() {
        full.insert(z.clone(), Term::Null(*next_null));
        *next_null += 1;
    }
    let mut out: Vec<Atom> = rule.head().iter().map(|a| a.apply(&full)).collect();
    out.sort();
    out.dedup();
    (out, full)
}

/// Computes steps `0..=depth` of the oblivious chase of `instance` by `rules`.
pub fn chase(
    instance: &Instance,
    rules: &RuleSet,
    depth: usize,
    cfg: ChaseConfig,
) -> Result<ChaseTrace, ChaseError> {
    let mut index = AtomIndex::new();
    let mut layer0: Vec<Atom> = Vec::new();
    for a in instance {
        index.insert(a.clone(), 0);
        layer0.push(a.clone());
    }
    let mut terms: BTreeMap<Term, TermInfo> = instance
        .adom()
        .into_iter()
        .map(|t| {
            (
                t,
                TermInfo {
                    timestamp: 0,
                    trigger: None,
                    frontier: BTreeSet::new(),
                },
            )
        })
        .collect();
    let mut next_null = instance.max_null().map_or(1, |k| k + 1);
    let mut trace = ChaseTrace {
        rules: rules.clone(),
        layers: vec![layer0],
        triggers: Vec::new(),
        terms: BTreeMap::new(),
        depth,
        fixpoint: None,
    };

    for n in 0..depth {
        let new_triggers = new_triggers_at(&index, rules, n as u32);
        if new_triggers.is_empty() {
            trace.fixpoint = Some(n);
            break;
        }
        let mut layer: Vec<Atom> = Vec::new();
        for (ri, body_map) in new_triggers {
            let rule = &rules.rules()[ri];
            let (output, full) = trigger_output(rule, &body_map, &mut next_null);
            let created: Vec<Term> = rule.existentials().iter().map(|z| full[z].clone()).collect();
            let frontier: BTreeSet<Term> = rule
                .frontier()
                .iter()
                .map(|x| body_map[x].clone())
                .collect();
            let tix = trace.triggers.len();
            for t in &created {
                terms.insert(
                    t.clone(),
                    TermInfo {
                        timestamp: n + 1,
                        trigger: Some(tix),
                        frontier: frontier.clone(),
                    },
                );
            }
            for a in &output {
                if index.insert(a.clone(), n as u32 + 1) {
                    layer.push(a.clone());
                }
            }
            trace.triggers.push(FiredTrigger {
                trigger: Trigger {
                    rule: ri,
                    body_map,
                },
                rule_id: rule.id().to_string(),
                step: n,
                full_map: full,
                output,
                created,
            });
            if index.len() > cfg.max_atoms {
                trace.layers.push(layer);
                trace.depth = n;
                trace.terms = terms;
                return Err(ChaseError::ResourceGuard {
                    max_atoms: cfg.max_atoms,
                    step: n + 1,
                    partial: Box::new(trace),
                });
            }
        }
        trace.layers.push(layer);
    }
    trace.terms = terms;
    Ok(trace)
}

/// Triggers whose body image uses some atom of generation `n`, sorted
/// canonically.
fn new_triggers_at(index: &AtomIndex, rules: &RuleSet, n: u32) -> Vec<(usize, Substitution)> {
    let mut out = Vec::new();
    for (ri, rule) in rules.iter().enumerate() {
        let body = rule.body();
        let mut found: Vec<(Vec<Atom>, Substitution)> = Vec::new();
        for i in 0..body.len() {
            // On step 0 every atom has generation 0, so the first body atom
            // already carries the "new" role; ⊤ is never new afterwards.
            if (n == 0 && i > 0) || (n > 0 && body[i].is_top()) {
                continue;
            }
            let bounds: Vec<(u32, u32)> = (0..body.len())
                .map(|j| match j.cmp(&i) {
                    std::cmp::Ordering::Less => (0, n.saturating_sub(1)),
                    std::cmp::Ordering::Equal => (n, n),
                    std::cmp::Ordering::Greater => (0, n),
                })
                .collect();
            let opts = HomOptions {
                injective: false,
                gen_bounds: Some(bounds),
            };
            for_each_hom(body, index, &Substitution::new(), &opts, |h| {
                found.push((body.iter().map(|a| a.apply(h)).collect(), h.clone()));
                ControlFlow::Continue(())
            });
        }
        found.sort();
        out.extend(found.into_iter().map(|(_, h)| (ri, h)));
    }
    out
}

/// Datalog-style saturation: chase until no new trigger appears or the atom
/// cap is hit. Intended for rule sets without existentials.
pub fn saturate(instance: &Instance, rules: &RuleSet, cfg: ChaseConfig) -> Result<ChaseTrace, ChaseError> {
    // A Datalog chase over a finite domain reaches its fixpoint within
    // (number of possible atoms) steps; the atom cap bounds that anyway.
    chase(instance, rules, cfg.max_atoms + 1, cfg)
}

/// Directed graph of the binary atoms of an atom set.
#[derive(Clone, Debug, Default)]
pub struct Digraph {
    succ: BTreeMap<Term, BTreeSet<Term>>,
    nodes: BTreeSet<Term>,
}

impl Digraph {
    /// Graph over every term; one edge per binary atom (any predicate).
    pub fn of_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Result<Digraph, ChaseError> {
        let mut g = Digraph::default();
        for a in atoms {
            match a.arity() {
                0 => {}
                1 => {
                    g.nodes.insert(a.args()[0].clone());
                }
                2 => {
                    let (s, t) = (&a.args()[0], &a.args()[1]);
                    g.nodes.insert(s.clone());
                    g.nodes.insert(t.clone());
                    g.succ.entry(s.clone()).or_default().insert(t.clone());
                }
                _ => return Err(ChaseError::NotBinary(a.to_string())),
            }
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &BTreeSet<Term> {
        &self.nodes
    }

    pub fn successors(&self, t: &Term) -> impl Iterator<Item = &Term> {
        self.succ.get(t).into_iter().flatten()
    }

    /// Nodes without an outgoing edge to another node.
    pub fn sinks(&self) -> BTreeSet<Term> {
        self.nodes
            .iter()
            .filter(|v| self.successors(v).all(|w| w == *v))
            .cloned()
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm; a self-loop keeps its node's in-degree positive.
        let mut indeg: BTreeMap<&Term, usize> = self.nodes.iter().map(|v| (v, 0)).collect();
        for ts in self.succ.values() {
            for t in ts {
                *indeg.get_mut(t).unwrap() += 1;
            }
        }
        let mut queue: Vec<&Term> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for w in self.successors(v) {
                let d = indeg.get_mut(w).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(w);
                }
            }
        }
        seen == self.nodes.len()
    }

    /// Terms reachable from `s` by a nonempty path.
    pub fn reachable_from(&self, s: &Term) -> BTreeSet<Term> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&Term> = self.successors(s).collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v.clone()) {
                stack.extend(self.successors(v));
            }
        }
        seen
    }
}

/// The strict order `s < t` iff a nonempty directed path leads from `s` to `t`.
#[derive(Clone, Debug)]
pub struct Reachability {
    reach: HashMap<Term, BTreeSet<Term>>,
}

impl Reachability {
    pub fn new(instance: &Instance) -> Result<Reachability, ChaseError> {
        Reachability::of_atoms(instance)
    }

    pub fn of_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Result<Reachability, ChaseError> {
        let g = Digraph::of_atoms(atoms)?;
        let reach = g.nodes().iter().map(|v| (v.clone(), g.reachable_from(v))).collect();
        Ok(Reachability { reach })
    }

    pub fn reaches(&self, s: &Term, t: &Term) -> bool {
        self.reach.get(s).is_some_and(|r| r.contains(t))
    }

    /// Reflexive closure of [`Reachability::reaches`].
    pub fn leq(&self, s: &Term, t: &Term) -> bool {
        s == t || self.reaches(s, t)
    }
}

/// The chase order of a trace's final instance.
pub fn chase_order(trace: &ChaseTrace) -> Result<Reachability, ChaseError> {
    Reachability::new(&trace.result())
}

/// No directed cycle over binary atoms; a loop atom counts as a cycle.
pub fn is_dag<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Result<bool, ChaseError> {
    Ok(Digraph::of_atoms(atoms)?.is_acyclic())
}

/// Bounded homomorphism check between chase prefixes: `step_i(a) → step_j(b)`.
pub fn prefix_maps_into(a: &Instance, b: &Instance) -> bool {
    let source: Vec<Atom> = a.iter().cloned().collect();
    find_hom_in(&source, &AtomIndex::from_atoms(b), &Substitution::new(), false).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }
    fn v(n: &str) -> Term {
        Term::var(n)
    }
    fn e(a: Term, b: Term) -> Atom {
        Atom::build("E", &[a, b])
    }
    fn ex_rule() -> Rule {
        Rule::new("r1", vec![e(v("x"), v("y"))], vec![e(v("y"), v("z"))], vec![v("z")]).unwrap()
    }
    fn trans() -> Rule {
        Rule::new(
            "r2",
            vec![e(v("x"), v("y")), e(v("y"), v("z"))],
            vec![e(v("x"), v("z"))],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn trigger_counts() {
        let init = Rule::new("r", vec![Atom::top()], vec![e(v("x"), v("y"))], vec![v("x"), v("y")]).unwrap();
        assert_eq!(triggers(&Instance::new(), &RuleSet::new(vec![init])).len(), 1);
        let t = RuleSet::new(vec![trans()]);
        assert!(triggers(&Instance::from_atoms([e(c("a"), c("b"))]), &t).is_empty());
        let ts = triggers(&Instance::from_atoms([e(c("a"), c("b")), e(c("b"), c("c"))]), &t);
        assert!(ts.iter().any(|tr| tr.body_map[&v("x")] == c("a") && tr.body_map[&v("z")] == c("c")));
    }

    #[test]
    fn trigger_output_is_deterministic() {
        let map: Substitution = [(v("x"), c("a")), (v("y"), c("b"))].into_iter().collect();
        let mut n1 = 1;
        let (out1, _) = trigger_output(&ex_rule(), &map, &mut n1);
        let mut n2 = 1;
        let (out2, _) = trigger_output(&ex_rule(), &map, &mut n2);
        assert_eq!(out1, vec![e(c("b"), Term::Null(1))]);
        assert_eq!(out1, out2);
    }

    #[test]
    fn example_one_chase_has_no_loop() {
        let rules = RuleSet::new(vec![ex_rule(), trans()]);
        let tr = chase(&Instance::from_atoms([e(c("a"), c("b"))]), &rules, 3, ChaseConfig::default()).unwrap();
        let res = tr.result();
        assert!(res.iter().all(|a| a.arity() != 2 || a.args()[0] != a.args()[1]));
        assert!(res.contains(&e(c("b"), Term::Null(1))));
        assert!(res.contains(&e(c("a"), Term::Null(1))));
        assert!(is_dag(&res).unwrap());
    }

    #[test]
    fn pair_rule_reaches_loop() {
        let pair = Rule::new(
            "r2",
            vec![e(v("x"), v("x'")), e(v("y"), v("y'"))],
            vec![e(v("x"), v("y'"))],
            vec![],
        )
        .unwrap();
        let rules = RuleSet::new(vec![ex_rule(), pair]);
        let tr = chase(&Instance::from_atoms([e(c("a"), c("b"))]), &rules, 3, ChaseConfig::default()).unwrap();
        assert!(tr.result().contains(&e(c("b"), c("b"))));
    }

    #[test]
    fn empty_rules_reach_fixpoint() {
        let tr = chase(&Instance::new(), &RuleSet::empty(), 5, ChaseConfig::default()).unwrap();
        assert_eq!(tr.result(), Instance::new());
        assert_eq!(tr.fixpoint(), Some(0));
    }

    #[test]
    fn resource_guard_reports_partial() {
        let rules = RuleSet::new(vec![ex_rule(), trans()]);
        let err = chase(
            &Instance::from_atoms([e(c("a"), c("b"))]),
            &rules,
            50,
            ChaseConfig { max_atoms: 40 },
        )
        .unwrap_err();
        match err {
            ChaseError::ResourceGuard { partial, .. } => assert!(partial.atom_count() > 40),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reachability_and_dag() {
        let i = Instance::from_atoms([e(c("a"), c("b")), e(c("b"), c("c"))]);
        let r = Reachability::new(&i).unwrap();
        assert!(r.reaches(&c("a"), &c("c")));
        assert!(!r.reaches(&c("a"), &c("a")));
        assert!(is_dag(&i).unwrap());
        assert!(!is_dag(&Instance::from_atoms([e(c("a"), c("a"))])).unwrap());
        let tern = Instance::from_atoms([Atom::build("T", &[c("a"), c("b"), c("c")])]);
        assert!(matches!(is_dag(&tern), Err(ChaseError::NotBinary(_))));
    }
}
