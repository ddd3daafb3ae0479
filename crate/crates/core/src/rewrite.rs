//! Piece-based backward chaining to UCQ rewritings, injectivization, and an
//! empirical derivation-depth probe.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::chase::{chase, ChaseConfig, ChaseError};
use crate::hom::{core, cq_isomorphic, cq_maps_into, find_hom_in, AtomIndex};
use crate::model::{Atom, Cq, Instance, Predicate, Rule, RuleSet, Substitution, Term, Ucq};

pub const DEFAULT_MAX_GENERATIONS: usize = 8;
pub const DEFAULT_MAX_CQS: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewriteBudget {
    pub max_generations: usize,
    pub max_cqs: usize,
}

impl Default for RewriteBudget {
    fn default() -> Self {
        RewriteBudget {
            max_generations: DEFAULT_MAX_GENERATIONS,
            max_cqs: DEFAULT_MAX_CQS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RewriteStatus {
    Converged,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteEntry {
    pub cq: Cq,
    pub generation: usize,
    /// Index of the entry this one was rewritten from, and the rule used.
    pub parent: Option<(usize, String)>,
}

#[derive(Clone, Debug)]
pub struct RewritingRun {
    input: Cq,
    entries: Vec<RewriteEntry>,
    generations_run: usize,
    status: RewriteStatus,
}

impl RewritingRun {
    pub fn input(&self) -> &Cq {
        &self.input
    }

    pub fn status(&self) -> RewriteStatus {
        self.status
    }

    pub fn converged(&self) -> bool {
        self.status == RewriteStatus::Converged
    }

    /// Number of expansion rounds that added at least one query.
    pub fn generations_run(&self) -> usize {
        self.generations_run
    }

    pub fn entries(&self) -> &[RewriteEntry] {
        &self.entries
    }

    /// Cumulative UCQ after generation `g`.
    pub fn snapshot(&self, g: usize) -> Ucq {
        Ucq::new(
            self.input.answer().to_vec(),
            self.entries
                .iter()
                .filter(|e| e.generation <= g)
                .map(|e| e.cq.clone())
                .collect(),
        )
        .expect("rewritings keep the answer arity")
    }

    /// Sizes of the cumulative snapshots for generations `0..=generations_run`.
    pub fn generation_sizes(&self) -> Vec<usize> {
        (0..=self.generations_run)
            .map(|g| self.entries.iter().filter(|e| e.generation <= g).count())
            .collect()
    }

    /// Every query produced.
    pub fn ucq(&self) -> Ucq {
        self.snapshot(usize::MAX)
    }

    /// The final union without disjuncts subsumed by an earlier-kept one.
    pub fn minimized(&self) -> Ucq {
        let mut kept: Vec<Cq> = Vec::new();
        let all: Vec<&Cq> = self.entries.iter().map(|e| &e.cq).collect();
        for (i, q) in all.iter().enumerate() {
            let redundant = all
                .iter()
                .enumerate()
                .any(|(j, p)| j != i && cq_maps_into(p, q) && (!cq_maps_into(q, p) || j < i));
            if !redundant {
                kept.push((*q).clone());
            }
        }
        Ucq::new(self.input.answer().to_vec(), kept).expect("rewritings keep the answer arity")
    }
}

struct UnionFind {
    ids: HashMap<Term, usize>,
    terms: Vec<Term>,
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind {
            ids: HashMap::new(),
            terms: Vec::new(),
            parent: Vec::new(),
        }
    }

    fn id(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.ids.get(t) {
            return i;
        }
        let i = self.terms.len();
        self.ids.insert(t.clone(), i);
        self.terms.push(t.clone());
        self.parent.push(i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: &Term, b: &Term) {
        let (x, y) = (self.id(a), self.id(b));
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            self.parent[rx] = ry;
        }
    }

    fn classes(&mut self) -> Vec<Vec<Term>> {
        let mut by_root: HashMap<usize, Vec<Term>> = HashMap::new();
        for i in 0..self.terms.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(self.terms[i].clone());
        }
        let mut out: Vec<Vec<Term>> = by_root.into_values().collect();
        for c in &mut out {
            c.sort();
        }
        out.sort();
        out
    }
}

fn renamed_apart(rule: &Rule) -> (Vec<Atom>, Vec<Atom>, BTreeSet<Term>) {
    let subst: Substitution = rule
        .vars()
        .into_iter()
        .map(|v| {
            let name = format!("{}#", v.label());
            (v, Term::var(&name))
        })
        .collect();
    let body = rule.body().iter().map(|a| a.apply(&subst)).collect();
    let head = rule.head().iter().map(|a| a.apply(&subst)).collect();
    let exs = rule.existentials().iter().map(|z| subst[z].clone()).collect();
    (body, head, exs)
}

/// Renames non-answer variables to `v1, v2, …` in order of first occurrence,
/// skipping names used by answer variables.
pub fn canonical_names(q: &Cq) -> Cq {
    let answer: BTreeSet<&Term> = q.answer().iter().collect();
    let taken: BTreeSet<String> = answer.iter().map(|t| t.label()).collect();
    let mut subst = Substitution::new();
    let mut k = 0;
    for a in q.atoms() {
        for t in a.args() {
            if t.is_var() && !answer.contains(t) && !subst.contains_key(t) {
                let name = loop {
                    k += 1;
                    let n = format!("v{k}");
                    if !taken.contains(&n) {
                        break n;
                    }
                };
                subst.insert(t.clone(), Term::var(&name));
            }
        }
    }
    q.apply(&subst).expect("renaming keeps the query well formed")
}

fn normalize(q: &Cq) -> Cq {
    canonical_names(&core(q))
}

/// One backward-chaining step: every query obtained from a single-piece
/// unifier of `q` with the head of `rule`. A piece is grown from one atom by
/// adding, as long as needed, the atoms that share a variable with a class
/// holding an existential of the rule; such classes may contain no other
/// existential, frontier variable, constant or answer variable.
pub fn rewrite_step(q: &Cq, rule: &Rule) -> Vec<Cq> {
    let (body, head, exs) = renamed_apart(rule);
    let atoms = q.atoms();
    let cands: Vec<Vec<usize>> = atoms
        .iter()
        .map(|a| {
            head.iter()
                .enumerate()
                .filter(|(_, h)| h.pred() == a.pred())
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let answer: BTreeSet<&Term> = q.answer().iter().collect();
    let mut seen: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    let mut stack: Vec<Vec<(usize, usize)>> = Vec::new();
    for (i, cs) in cands.iter().enumerate() {
        for &h in cs {
            stack.push(vec![(i, h)]);
        }
    }
    let mut out: Vec<Cq> = Vec::new();
    while let Some(mut piece) = stack.pop() {
        piece.sort_unstable();
        if !seen.insert(piece.clone()) {
            continue;
        }
        let mut uf = UnionFind::new();
        for &(qi, h) in &piece {
            for (s, t) in atoms[qi].args().iter().zip(head[h].args()) {
                uf.union(s, t);
            }
        }
        let Some(classes) = admissible_classes(&mut uf, &exs, &answer) else {
            continue;
        };
        let sticky: BTreeSet<&Term> = classes
            .iter()
            .filter(|c| c.iter().any(|t| exs.contains(t)))
            .flatten()
            .collect();
        let needed = (0..atoms.len())
            .filter(|i| !piece.iter().any(|(qi, _)| qi == i))
            .find(|&i| atoms[i].args().iter().any(|t| sticky.contains(t)));
        match needed {
            Some(i) => {
                for &h in &cands[i] {
                    let mut grown = piece.clone();
                    grown.push((i, h));
                    stack.push(grown);
                }
            }
            None => {
                let rest: Vec<Atom> = atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !piece.iter().any(|(qi, _)| qi == i))
                    .map(|(_, a)| a.clone())
                    .collect();
                if let Some(cq) = apply_unifier(q, &body, &rest, &classes) {
                    out.push(cq);
                }
            }
        }
    }
    let mut uniq: Vec<Cq> = Vec::new();
    for c in out {
        if !uniq.iter().any(|u| cq_isomorphic(u, &c)) {
            uniq.push(c);
        }
    }
    uniq.sort();
    uniq
}

/// The classes of the unifier, unless one holds two constants or an
/// existential together with a constant, another existential, an answer
/// variable, or a frontier variable of the rule.
fn admissible_classes(uf: &mut UnionFind, exs: &BTreeSet<Term>, answer: &BTreeSet<&Term>) -> Option<Vec<Vec<Term>>> {
    let classes = uf.classes();
    for class in &classes {
        let consts = class.iter().filter(|t| t.is_const()).count();
        if consts > 1 {
            return None;
        }
        let class_exs = class.iter().filter(|t| exs.contains(*t)).count();
        if class_exs > 0 {
            let blocked = class_exs > 1
                || consts > 0
                || class.iter().any(|t| {
                    (t.is_var() && t.label().ends_with('#') && !exs.contains(t)) || answer.contains(t)
                });
            if blocked {
                return None;
            }
        }
    }
    Some(classes)
}

fn apply_unifier(q: &Cq, body: &[Atom], rest: &[Atom], classes: &[Vec<Term>]) -> Option<Cq> {
    let mut subst = Substitution::new();
    for class in classes {
        // constants, then answer variables, then query variables, then rule variables
        let rep = class
            .iter()
            .find(|t| t.is_const())
            .or_else(|| q.answer().iter().find(|x| class.contains(x)))
            .or_else(|| class.iter().find(|t| !t.label().ends_with('#')))
            .unwrap_or(&class[0])
            .clone();
        for t in class {
            if t != &rep {
                subst.insert(t.clone(), rep.clone());
            }
        }
    }
    let answer_img: Vec<Term> = q
        .answer()
        .iter()
        .map(|x| subst.get(x).cloned().unwrap_or_else(|| x.clone()))
        .collect();
    if answer_img.iter().any(|t| !t.is_var()) {
        return None;
    }
    let atoms: Vec<Atom> = rest.iter().chain(body).map(|a| a.apply(&subst)).collect();
    let cq = Cq::new(atoms, answer_img).ok()?;
    Some(normalize(&cq))
}

/// Some entry maps into `q` with answer positions fixed.
fn subsumed(entries: &[RewriteEntry], sigs: &[BTreeSet<Predicate>], q: &Cq) -> bool {
    let sig = q.signature();
    let index = AtomIndex::from_atoms(q.atoms());
    entries.iter().zip(sigs).any(|(e, s)| {
        if !s.is_subset(&sig) {
            return false;
        }
        let mut seed = Substitution::new();
        for (x, t) in e.cq.answer().iter().zip(q.answer()) {
            if seed.insert(x.clone(), t.clone()).is_some_and(|prev| &prev != t) {
                return false;
            }
        }
        find_hom_in(e.cq.atoms(), &index, &seed, false).is_some()
    })
}

/// Breadth-first saturation of [`rewrite_step`] over all rules, discarding
/// any new query into which an earlier query maps (answer positions fixed).
pub fn ucq_rewrite(q: &Cq, rules: &RuleSet, budget: RewriteBudget) -> RewritingRun {
    let mut entries = vec![RewriteEntry {
        cq: normalize(q),
        generation: 0,
        parent: None,
    }];
    let mut sigs = vec![entries[0].cq.signature()];
    let mut frontier = vec![0usize];
    let mut status = RewriteStatus::BudgetExceeded;
    let mut generations_run = 0;
    for g in 1..=budget.max_generations {
        let mut added = Vec::new();
        for &pi in &frontier {
            for rule in rules.iter() {
                let parent_cq = entries[pi].cq.clone();
                for nq in rewrite_step(&parent_cq, rule) {
                    if subsumed(&entries, &sigs, &nq) {
                        continue;
                    }
                    sigs.push(nq.signature());
                    entries.push(RewriteEntry {
                        cq: nq,
                        generation: g,
                        parent: Some((pi, rule.id().to_string())),
                    });
                    added.push(entries.len() - 1);
                    if entries.len() > budget.max_cqs {
                        return RewritingRun {
                            input: q.clone(),
                            entries,
                            generations_run: g,
                            status: RewriteStatus::BudgetExceeded,
                        };
                    }
                }
            }
        }
        if added.is_empty() {
            status = RewriteStatus::Converged;
            break;
        }
        generations_run = g;
        frontier = added;
    }
    if budget.max_generations == 0 && rules.is_empty() {
        status = RewriteStatus::Converged;
    }
    RewritingRun {
        input: q.clone(),
        entries,
        generations_run,
        status,
    }
}

/// Restricted-growth enumeration of all set partitions of `0..n`.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    fn rec(i: usize, max: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for b in 0..=max + 1 {
            a[i] = b;
            rec(i + 1, max.max(b), a, out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        a[0] = 0;
        rec(1, 0, &mut a, &mut out);
    }
    out
}

/// For every disjunct and every way of identifying its variables (answer
/// variables keep their name when they represent a class), the specialized
/// disjunct; duplicates up to renaming are dropped.
pub fn injectivize(q: &Ucq) -> Ucq {
    let mut out: Vec<Cq> = Vec::new();
    for d in q.disjuncts() {
        let vars: Vec<Term> = d.vars().into_iter().collect();
        let rank = |t: &Term| -> (usize, Term) {
            let pos = d.answer().iter().position(|x| x == t).unwrap_or(usize::MAX);
            (pos, t.clone())
        };
        for part in set_partitions(vars.len()) {
            let blocks = part.iter().max().map_or(0, |m| m + 1);
            let mut subst = Substitution::new();
            for b in 0..blocks {
                let members: Vec<&Term> = (0..vars.len()).filter(|&i| part[i] == b).map(|i| &vars[i]).collect();
                let rep = members.iter().min_by_key(|t| rank(t)).unwrap();
                for m in &members {
                    subst.insert((*m).clone(), (*rep).clone());
                }
            }
            let s = d.apply(&subst).expect("merging variables keeps the query well formed");
            if !out.iter().any(|o| cq_isomorphic(o, &s)) {
                out.push(s);
            }
        }
    }
    Ucq::new(q.answer().to_vec(), out).expect("specializations keep the answer arity")
}

/// Empirical derivation depth of the Boolean closure of `q` over the given
/// instances: the largest, over instances where `q` holds at depth `kmax`,
/// of the least depth at which it already holds (0 when it holds nowhere).
/// Returns `None` when some instance needs the full horizon `kmax`, since
/// the probe then cannot tell a bounded depth from an unbounded one.
pub fn bdd_constant_empirical(
    q: &Cq,
    rules: &RuleSet,
    instances: &[Instance],
    kmax: usize,
    cfg: ChaseConfig,
) -> Result<Option<usize>, ChaseError> {
    let mut k = 0;
    for inst in instances {
        let trace = chase(inst, rules, kmax, cfg)?;
        let mut index = AtomIndex::new();
        for n in 0..=kmax {
            for a in trace.new_atoms(n) {
                index.insert(a.clone(), n as u32);
            }
            if find_hom_in(q.atoms(), &index, &Substitution::new(), false).is_some() {
                k = k.max(n);
                break;
            }
        }
    }
    if kmax > 0 && k == kmax {
        return Ok(None);
    }
    Ok(Some(k))
}
