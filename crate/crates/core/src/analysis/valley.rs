//! Valley queries, witness sets, peak removal, path functionality and the
//! size-4 loop argument.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use serde::Serialize;

use crate::chase::{ChaseTrace, Digraph, Reachability};
use crate::hom::{all_homs_in, find_hom_in, for_each_hom, AtomIndex, HomOptions};
use crate::model::{Atom, Cq, Instance, Substitution, Term, Ucq};

use super::multiset::{chain_bound, timestamps_of, TimestampMultiset};
use super::AnalysisError;

/// Variables of `q` without an outgoing binary atom, i.e. its maximal
/// variables; `None` if `q` has wider atoms.
fn maximal_vars(q: &Cq) -> Option<BTreeSet<Term>> {
    let g = Digraph::of_atoms(q.atoms()).ok()?;
    Some(q.vars().into_iter().filter(|v| g.successors(v).next().is_none()).collect())
}

/// A binary query whose atom graph is acyclic and whose maximal variables
/// form a nonempty subset of the answer pair.
pub fn is_valley_query(q: &Cq) -> bool {
    if q.arity() != 2 {
        return false;
    }
    let Ok(g) = Digraph::of_atoms(q.atoms()) else {
        return false;
    };
    if !g.is_acyclic() {
        return false;
    }
    let Some(max) = maximal_vars(q) else {
        return false;
    };
    !max.is_empty() && max.iter().all(|v| q.answer().contains(v))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// Index of the disjunct in the injectivized union.
    pub disjunct: usize,
    #[serde(skip)]
    pub query: Cq,
    #[serde(skip)]
    pub hom: Substitution,
    pub endpoints: (Term, Term),
}

impl Witness {
    /// Terms of the image `h(q)`.
    pub fn image_terms(&self) -> BTreeSet<Term> {
        self.query
            .atoms()
            .iter()
            .flat_map(|a| a.apply(&self.hom).args().to_vec())
            .collect()
    }

    pub fn image(&self) -> Vec<Atom> {
        self.query.atoms().iter().map(|a| a.apply(&self.hom)).collect()
    }

    pub fn timestamps(&self, trace: &ChaseTrace) -> Result<TimestampMultiset, AnalysisError> {
        timestamps_of(&self.image_terms(), trace)
    }
}

fn pair_seed(q: &Cq, s: &Term, t: &Term) -> Option<Substitution> {
    let (x, y) = (&q.answer()[0], &q.answer()[1]);
    if x == y && s != t {
        return None;
    }
    Some([(x.clone(), s.clone()), (y.clone(), t.clone())].into_iter().collect())
}

/// All injective maps of binary disjuncts of `q_inj` into `prefix` sending
/// the answer pair to `(s, t)`, by disjunct index.
pub fn witnesses(s: &Term, t: &Term, q_inj: &Ucq, prefix: &Instance) -> Vec<Witness> {
    witnesses_in(s, t, q_inj, &AtomIndex::from_atoms(prefix))
}

fn witnesses_in(s: &Term, t: &Term, q_inj: &Ucq, index: &AtomIndex) -> Vec<Witness> {
    let mut out = Vec::new();
    if q_inj.arity() != 2 {
        return out;
    }
    for (i, q) in q_inj.disjuncts().iter().enumerate() {
        let Some(seed) = pair_seed(q, s, t) else { continue };
        for h in all_homs_in(q.atoms(), index, &seed, true) {
            out.push(Witness {
                disjunct: i,
                query: q.clone(),
                hom: h,
                endpoints: (s.clone(), t.clone()),
            });
        }
    }
    out
}

/// The witness with the least timestamp multiset; ties keep enumeration order.
fn least_witness(ws: Vec<Witness>, trace: &ChaseTrace) -> Result<Option<(Witness, TimestampMultiset)>, AnalysisError> {
    let mut best: Option<(Witness, TimestampMultiset)> = None;
    for w in ws {
        let ts = w.timestamps(trace)?;
        if best.as_ref().is_none_or(|(_, b)| ts < *b) {
            best = Some((w, ts));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct PeakStep {
    pub witness: Witness,
    /// Image of the removed maximal variable.
    pub removed: Term,
    pub before: TimestampMultiset,
    pub after: TimestampMultiset,
}

/// Replaces the atoms around the least maximal existential variable `z` by
/// the body image of the trigger that created `h(z)`, and returns the least
/// witness of the same endpoints over the result. The timestamp multiset
/// must strictly drop.
pub fn peak_removal_step(w: &Witness, trace: &ChaseTrace, q_inj: &Ucq) -> Result<PeakStep, AnalysisError> {
    let q = &w.query;
    let max = maximal_vars(q).ok_or(AnalysisError::NotBinary)?;
    let z = q
        .existential_vars()
        .into_iter()
        .find(|v| max.contains(v))
        .ok_or(AnalysisError::AlreadyValley)?;
    let hz = w.hom.get(&z).cloned().ok_or_else(|| AnalysisError::UnknownTerm(z.label()))?;
    let trigger = trace
        .creating_trigger(&hz)
        .ok_or_else(|| AnalysisError::NoCreatingTrigger(hz.label()))?;
    let zatoms: BTreeSet<Atom> = q
        .atoms()
        .iter()
        .filter(|a| a.args().contains(&z))
        .map(|a| a.apply(&w.hom))
        .collect();
    let out: BTreeSet<&Atom> = trigger.output.iter().collect();
    if let Some(a) = zatoms.iter().find(|a| !out.contains(a)) {
        return Err(AnalysisError::HeadContainment(a.to_string()));
    }
    let rule = &trace.rules().rules()[trigger.trigger.rule];
    let mut reduced: BTreeSet<Atom> = w.image().into_iter().filter(|a| !zatoms.contains(a)).collect();
    reduced.extend(rule.body().iter().map(|a| a.apply(&trigger.trigger.body_map)));
    let index = AtomIndex::from_atoms(&reduced);
    let (s, t) = &w.endpoints;
    let before = w.timestamps(trace)?;
    let (next, after) = least_witness(witnesses_in(s, t, q_inj, &index), trace)?
        .ok_or_else(|| AnalysisError::NoWitness(format!("({s},{t}) after removing {hz}")))?;
    if after >= before {
        return Err(AnalysisError::NoDescent {
            before: before.descending(),
            after: after.descending(),
        });
    }
    Ok(PeakStep {
        witness: next,
        removed: hz,
        before,
        after,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ValleyRun {
    pub witness: Witness,
    pub steps: Vec<PeakStep>,
    /// Largest admissible number of steps for multisets of this size.
    pub chain_bound: u128,
}

/// A valley witness of `(s, t)`, starting from a witness with least
/// timestamp multiset.
pub fn valley_witness(s: &Term, t: &Term, q_inj: &Ucq, trace: &ChaseTrace) -> Result<ValleyRun, AnalysisError> {
    let ws = witnesses(s, t, q_inj, &trace.result());
    let (w, _) = least_witness(ws, trace)?.ok_or_else(|| AnalysisError::NoWitness(format!("({s},{t})")))?;
    valley_witness_from(w, q_inj, trace)
}

/// Iterates [`peak_removal_step`] from `start` until the disjunct is a
/// valley query.
pub fn valley_witness_from(start: Witness, q_inj: &Ucq, trace: &ChaseTrace) -> Result<ValleyRun, AnalysisError> {
    let size = q_inj
        .disjuncts()
        .iter()
        .map(|q| q.vars().len())
        .max()
        .unwrap_or(0);
    let bound = chain_bound(trace.depth(), size);
    let mut w = start;
    let mut steps = Vec::new();
    while !is_valley_query(&w.query) {
        let step = peak_removal_step(&w, trace, q_inj)?;
        w = step.witness.clone();
        steps.push(step);
        if steps.len() as u128 > bound {
            return Err(AnalysisError::NoDescent {
                before: Vec::new(),
                after: Vec::new(),
            });
        }
    }
    Ok(ValleyRun {
        witness: w,
        steps,
        chain_bound: bound,
    })
}

/// Answers of `q` over `index` as `(answer[0], answer[1..])`.
fn answers(q: &Cq, index: &AtomIndex) -> BTreeSet<(Term, Vec<Term>)> {
    let mut out = BTreeSet::new();
    for_each_hom(q.atoms(), index, &Substitution::new(), &HomOptions::injective(false), |h| {
        let img: Vec<Term> = q.answer().iter().map(|x| h[x].clone()).collect();
        out.insert((img[0].clone(), img[1..].to_vec()));
        ControlFlow::Continue(())
    });
    out
}

/// Two answers of a path-shaped query sharing their first component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionViolation {
    pub source: Term,
    pub first: Vec<Term>,
    pub second: Vec<Term>,
}

/// For `q(x, ȳ)` with every `y` below `x`, checks that the answers over
/// `prefix` are functional in `x`.
pub fn path_function_check(q: &Cq, prefix: &Instance) -> Result<Option<FunctionViolation>, AnalysisError> {
    let Some((x, ys)) = q.answer().split_first() else {
        return Err(AnalysisError::Precondition("query has no answer variable".into()));
    };
    let reach = Reachability::of_atoms(q.atoms()).map_err(|_| AnalysisError::NotBinary)?;
    if let Some(y) = ys.iter().find(|y| !reach.leq(y, x)) {
        return Err(AnalysisError::Precondition(format!("{y} is not below {x}")));
    }
    let mut seen: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
    for (s, ts) in answers(q, &AtomIndex::from_atoms(prefix)) {
        if let Some(prev) = seen.get(&s) {
            return Ok(Some(FunctionViolation {
                source: s,
                first: prev.clone(),
                second: ts,
            }));
        }
        seen.insert(s, ts);
    }
    Ok(None)
}

/// How a size-4 tournament defined by a valley query yields a loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LoopCase {
    /// `x` and `y` lie in different components and `q(u, u)` holds.
    Disconnected { u: Term },
    /// Transitive triple `k1 → k2 → k3`, `k1 → k3` with
    /// `f_x(k2) = f_y(k2)`, so `q(k2, k2)` holds.
    TwoMaximal { k1: Term, k2: Term, k3: Term, meet: Vec<Term> },
}

fn holds(q: &Cq, index: &AtomIndex, s: &Term, t: &Term) -> bool {
    pair_seed(q, s, t).is_some_and(|seed| find_hom_in(q.atoms(), index, &seed, false).is_some())
}

fn loop_holds(q: &Cq, index: &AtomIndex, u: &Term) -> bool {
    let seed: Substitution = q.answer().iter().map(|x| (x.clone(), u.clone())).collect();
    find_hom_in(q.atoms(), index, &seed, false).is_some()
}

/// `q` defines a tournament on `vertices` over `prefix`.
pub fn defines_tournament(q: &Cq, prefix: &AtomIndex, vertices: &[Term]) -> bool {
    vertices.iter().enumerate().all(|(i, u)| {
        vertices[i + 1..]
            .iter()
            .all(|v| holds(q, prefix, u, v) || holds(q, prefix, v, u))
    })
}

fn components_split(q: &Cq, x: &Term, y: &Term) -> bool {
    let mut reach: BTreeSet<Term> = [x.clone()].into();
    loop {
        let before = reach.len();
        for a in q.atoms() {
            if a.args().iter().any(|t| reach.contains(t)) {
                reach.extend(a.args().iter().cloned());
            }
        }
        if reach.len() == before {
            break;
        }
    }
    !reach.contains(y)
}

/// `f(s)`: the values of `vs` in maps of `part` sending `v` to `s`, if unique.
fn meet_value(part: &[Atom], v: &Term, s: &Term, vs: &[Term], index: &AtomIndex) -> Result<Option<Vec<Term>>, Vec<Vec<Term>>> {
    let seed: Substitution = [(v.clone(), s.clone())].into();
    let mut vals: BTreeSet<Vec<Term>> = BTreeSet::new();
    for_each_hom(part, index, &seed, &HomOptions::injective(false), |h| {
        vals.insert(vs.iter().map(|w| h[w].clone()).collect());
        ControlFlow::Continue(())
    });
    match vals.len() {
        0 => Ok(None),
        1 => Ok(vals.into_iter().next()),
        _ => Err(vals.into_iter().collect()),
    }
}

/// Derives a loop from a valley query defining a tournament on four
/// vertices of `prefix`, following the disconnected and two-maximal cases;
/// a single maximal variable yields a functionality violation instead.
pub fn size4_loop(q: &Cq, prefix: &Instance, k: &[Term]) -> Result<LoopCase, AnalysisError> {
    if !is_valley_query(q) {
        return Err(AnalysisError::Precondition("not a valley query".into()));
    }
    let index = AtomIndex::from_atoms(prefix);
    if k.len() != 4 || !defines_tournament(q, &index, k) {
        return Err(AnalysisError::Precondition("the query does not define a tournament on these four terms".into()));
    }
    let (x, y) = (q.answer()[0].clone(), q.answer()[1].clone());
    if components_split(q, &x, &y) {
        return k
            .iter()
            .find(|u| loop_holds(q, &index, u))
            .map(|u| LoopCase::Disconnected { u: u.clone() })
            .ok_or_else(|| AnalysisError::Soundness("disconnected valley query: no vertex satisfies both halves".into()));
    }
    let max = maximal_vars(q).ok_or(AnalysisError::NotBinary)?;
    if max.len() == 1 {
        // One side is below the other, so answers are functional in the top
        // variable; four vertices force some vertex to have two successors.
        let top_is_x = max.contains(&x);
        for s in k {
            let outs: Vec<&Term> = k
                .iter()
                .filter(|t| *t != s && if top_is_x { holds(q, &index, s, t) } else { holds(q, &index, t, s) })
                .collect();
            if outs.len() >= 2 {
                return Err(AnalysisError::Soundness(format!(
                    "valley query with one maximal variable is not functional: {s} relates to {} and {}",
                    outs[0], outs[1]
                )));
            }
        }
        return Err(AnalysisError::Soundness("four-vertex tournament with out-degrees at most one".into()));
    }
    let reach = Reachability::of_atoms(q.atoms()).map_err(|_| AnalysisError::NotBinary)?;
    let below = |v: &Term, top: &Term| reach.leq(v, top);
    let meet: Vec<Term> = q
        .existential_vars()
        .into_iter()
        .filter(|v| below(v, &x) && below(v, &y))
        .collect();
    let side = |top: &Term| -> Vec<Atom> {
        q.atoms()
            .iter()
            .filter(|a| a.args().iter().all(|t| below(t, top)))
            .cloned()
            .collect()
    };
    let (qx, qy) = (side(&x), side(&y));
    for k1 in k {
        for k2 in k {
            for k3 in k {
                if k1 == k2 || k2 == k3 || k1 == k3 {
                    continue;
                }
                if !(holds(q, &index, k1, k2) && holds(q, &index, k1, k3) && holds(q, &index, k2, k3)) {
                    continue;
                }
                let fx = meet_value(&qx, &x, k2, &meet, &index);
                let fy = meet_value(&qy, &y, k2, &meet, &index);
                return match (fx, fy) {
                    (Ok(Some(a)), Ok(Some(b))) if a == b && loop_holds(q, &index, k2) => Ok(LoopCase::TwoMaximal {
                        k1: k1.clone(),
                        k2: k2.clone(),
                        k3: k3.clone(),
                        meet: a,
                    }),
                    (fx, fy) => Err(AnalysisError::Soundness(format!(
                        "transitive triple ({k1},{k2},{k3}) without q({k2},{k2}): f_x = {fx:?}, f_y = {fy:?}"
                    ))),
                };
            }
        }
    }
    Err(AnalysisError::Soundness("four-vertex tournament without a transitive triple".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct Size4Hit {
    pub disjunct: usize,
    pub vertices: Vec<Term>,
    pub case: LoopCase,
}

impl LoopCase {
    /// The term `u` with `q(u, u)`.
    pub fn loop_term(&self) -> &Term {
        match self {
            LoopCase::Disconnected { u } => u,
            LoopCase::TwoMaximal { k2, .. } => k2,
        }
    }
}

/// Runs [`size4_loop`] on every 4-set of prefix terms defining a tournament
/// through a single valley disjunct of `q_inj`.
pub fn size4_sweep(q_inj: &Ucq, prefix: &Instance) -> Result<Vec<Size4Hit>, AnalysisError> {
    let index = AtomIndex::from_atoms(prefix);
    let terms: Vec<Term> = prefix.adom().into_iter().collect();
    let n = terms.len();
    let mut hits = Vec::new();
    for (d, q) in q_inj.disjuncts().iter().enumerate() {
        if q.arity() != 2 || !is_valley_query(q) {
            continue;
        }
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for e in c + 1..n {
                        let k = [terms[a].clone(), terms[b].clone(), terms[c].clone(), terms[e].clone()];
                        if defines_tournament(q, &index, &k) {
                            let case = size4_loop(q, prefix, &k)?;
                            hits.push(Size4Hit {
                                disjunct: d,
                                vertices: k.to_vec(),
                                case,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(hits)
}
