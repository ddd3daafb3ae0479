//! Backtracking search for homomorphisms between atom sets.
//!
//! Constants are rigid; variables and nulls of the source may map to any
//! target term. The search picks, at every level, the unmatched source atom
//! with the fewest candidate target atoms (ties: more bound arguments, then
//! source order), so results are deterministic for a given input order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::{Atom, Cq, Instance, Predicate, Substitution, Term, Ucq};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("tuple of length {found} given for a query with {expected} answer positions")]
    ArityMismatch { expected: usize, found: usize },
}

/// Target-side index: atoms with a generation stamp, addressable by
/// predicate and by (predicate, position, term).
#[derive(Clone, Debug, Default)]
pub struct AtomIndex {
    atoms: Vec<Atom>,
    gens: Vec<u32>,
    lookup: HashMap<Atom, usize>,
    by_pred: HashMap<Predicate, Vec<usize>>,
    by_arg: HashMap<(Predicate, usize, Term), Vec<usize>>,
}

impl AtomIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut idx = AtomIndex::new();
        for a in atoms {
            idx.insert(a.clone(), 0);
        }
        idx
    }

    /// Adds `atom` with generation `gen`; returns false if already present.
    pub fn insert(&mut self, atom: Atom, gen: u32) -> bool {
        if self.lookup.contains_key(&atom) {
            return false;
        }
        let i = self.atoms.len();
        self.by_pred.entry(atom.pred().clone()).or_default().push(i);
        for (pos, t) in atom.args().iter().enumerate() {
            self.by_arg
                .entry((atom.pred().clone(), pos, t.clone()))
                .or_default()
                .push(i);
        }
        self.lookup.insert(atom.clone(), i);
        self.atoms.push(atom);
        self.gens.push(gen);
        true
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.lookup.contains_key(atom)
    }

    pub fn generation_of(&self, atom: &Atom) -> Option<u32> {
        self.lookup.get(atom).map(|&i| self.gens[i])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn with_pred(&self, p: &Predicate) -> &[usize] {
        self.by_pred.get(p).map_or(&[], Vec::as_slice)
    }

    fn with_arg(&self, p: &Predicate, pos: usize, t: &Term) -> &[usize] {
        self.by_arg
            .get(&(p.clone(), pos, t.clone()))
            .map_or(&[], Vec::as_slice)
    }
}

/// Options for [`for_each_hom`].
#[derive(Clone, Debug, Default)]
pub struct HomOptions {
    pub injective: bool,
    /// Per source atom, the inclusive range of target generations it may use.
    pub gen_bounds: Option<Vec<(u32, u32)>>,
}

impl HomOptions {
    pub fn injective(injective: bool) -> Self {
        HomOptions {
            injective,
            gen_bounds: None,
        }
    }
}

#[derive(Clone)]
enum Slot {
    Fixed(Term),
    Var(usize),
}

struct Compiled {
    atoms: Vec<(Predicate, Vec<Slot>)>,
    vars: Vec<Term>,
}

fn compile(source: &[Atom]) -> Compiled {
    let mut vars: Vec<Term> = Vec::new();
    let mut pos: HashMap<Term, usize> = HashMap::new();
    let atoms = source
        .iter()
        .map(|a| {
            let slots = a
                .args()
                .iter()
                .map(|t| {
                    if t.is_const() {
                        Slot::Fixed(t.clone())
                    } else {
                        let i = *pos.entry(t.clone()).or_insert_with(|| {
                            vars.push(t.clone());
                            vars.len() - 1
                        });
                        Slot::Var(i)
                    }
                })
                .collect();
            (a.pred().clone(), slots)
        })
        .collect();
    Compiled { atoms, vars }
}

struct Search<'a, F> {
    c: &'a Compiled,
    target: &'a AtomIndex,
    opts: &'a HomOptions,
    assign: Vec<Option<Term>>,
    used: HashSet<Term>,
    done: Vec<bool>,
    visit: F,
}

impl<F: FnMut(&Substitution) -> ControlFlow<()>> Search<'_, F> {
    fn candidates(&self, ai: usize) -> (&[usize], usize) {
        let (pred, slots) = &self.c.atoms[ai];
        let mut best: Option<&[usize]> = None;
        let mut bound = 0;
        for (pos, s) in slots.iter().enumerate() {
            let t = match s {
                Slot::Fixed(t) => Some(t),
                Slot::Var(i) => self.assign[*i].as_ref(),
            };
            if let Some(t) = t {
                bound += 1;
                let l = self.target.with_arg(pred, pos, t);
                if best.is_none_or(|b| l.len() < b.len()) {
                    best = Some(l);
                }
            }
        }
        (best.unwrap_or_else(|| self.target.with_pred(pred)), bound)
    }

    fn run(&mut self, remaining: usize) -> ControlFlow<()> {
        if remaining == 0 {
            let subst: Substitution = self
                .c
                .vars
                .iter()
                .zip(&self.assign)
                .map(|(v, t)| (v.clone(), t.clone().expect("every variable is bound")))
                .collect();
            return (self.visit)(&subst);
        }
        let mut pick: Option<(usize, usize, usize)> = None;
        for ai in 0..self.c.atoms.len() {
            if self.done[ai] {
                continue;
            }
            let (cands, bound) = self.candidates(ai);
            let better = match pick {
                None => true,
                Some((_, n, b)) => cands.len() < n || (cands.len() == n && bound > b),
            };
            if better {
                pick = Some((ai, cands.len(), bound));
            }
            if cands.is_empty() {
                return ControlFlow::Continue(());
            }
        }
        let (ai, _, _) = pick.expect("an unmatched atom remains");
        let cands: Vec<usize> = self.candidates(ai).0.to_vec();
        self.done[ai] = true;
        let mut newly: Vec<usize> = Vec::new();
        for ti in cands {
            if let Some(bounds) = &self.opts.gen_bounds {
                let (lo, hi) = bounds[ai];
                let g = self.target.gens[ti];
                if g < lo || g > hi {
                    continue;
                }
            }
            newly.clear();
            let ok = self.bind(ai, ti, &mut newly);
            let flow = if ok {
                self.run(remaining - 1)
            } else {
                ControlFlow::Continue(())
            };
            for &i in &newly {
                if let Some(t) = self.assign[i].take() {
                    if self.opts.injective {
                        self.used.remove(&t);
                    }
                }
            }
            if flow.is_break() {
                self.done[ai] = false;
                return flow;
            }
        }
        self.done[ai] = false;
        ControlFlow::Continue(())
    }

    fn bind(&mut self, ai: usize, ti: usize, newly: &mut Vec<usize>) -> bool {
        let target = &self.target.atoms[ti];
        let (_, slots) = &self.c.atoms[ai];
        for (s, t) in slots.iter().zip(target.args()) {
            match s {
                Slot::Fixed(f) => {
                    if f != t {
                        return false;
                    }
                }
                Slot::Var(i) => match &self.assign[*i] {
                    Some(cur) => {
                        if cur != t {
                            return false;
                        }
                    }
                    None => {
                        if self.opts.injective && !self.used.insert(t.clone()) {
                            return false;
                        }
                        self.assign[*i] = Some(t.clone());
                        newly.push(*i);
                    }
                },
            }
        }
        true
    }
}

/// Calls `visit` on every homomorphism from `source` into `target` that
/// extends `seed`, until `visit` breaks. Returned maps cover exactly the
/// non-constant terms of `source`.
pub fn for_each_hom(
    source: &[Atom],
    target: &AtomIndex,
    seed: &Substitution,
    opts: &HomOptions,
    visit: impl FnMut(&Substitution) -> ControlFlow<()>,
) {
    let c = compile(source);
    let mut assign: Vec<Option<Term>> = vec![None; c.vars.len()];
    let mut used: HashSet<Term> = HashSet::new();
    if opts.injective {
        for (_, slots) in &c.atoms {
            for s in slots {
                if let Slot::Fixed(t) = s {
                    used.insert(t.clone());
                }
            }
        }
    }
    for (k, v) in seed {
        if k.is_const() {
            if k != v {
                return;
            }
            continue;
        }
        if let Some(i) = c.vars.iter().position(|x| x == k) {
            if opts.injective && !used.insert(v.clone()) {
                return;
            }
            assign[i] = Some(v.clone());
        }
    }
    let mut search = Search {
        c: &c,
        target,
        opts,
        assign,
        used,
        done: vec![false; c.atoms.len()],
        visit,
    };
    let _ = search.run(c.atoms.len());
}

pub fn find_hom_in(
    source: &[Atom],
    target: &AtomIndex,
    seed: &Substitution,
    injective: bool,
) -> Option<Substitution> {
    let mut found = None;
    for_each_hom(source, target, seed, &HomOptions::injective(injective), |h| {
        found = Some(h.clone());
        ControlFlow::Break(())
    });
    found
}

pub fn all_homs_in(
    source: &[Atom],
    target: &AtomIndex,
    seed: &Substitution,
    injective: bool,
) -> Vec<Substitution> {
    let mut out = Vec::new();
    for_each_hom(source, target, seed, &HomOptions::injective(injective), |h| {
        out.push(h.clone());
        ControlFlow::Continue(())
    });
    out
}

/// A homomorphism from `a` into `b` extending `seed`, if one exists.
pub fn find_hom<'a, 'b>(
    a: impl IntoIterator<Item = &'a Atom>,
    b: impl IntoIterator<Item = &'b Atom>,
    seed: &Substitution,
    injective: bool,
) -> Option<Substitution> {
    let source: Vec<Atom> = a.into_iter().cloned().collect();
    find_hom_in(&source, &AtomIndex::from_atoms(b), seed, injective)
}

/// Both directions of homomorphism exist.
pub fn hom_equivalent<'a, 'b>(
    a: impl IntoIterator<Item = &'a Atom> + Clone,
    b: impl IntoIterator<Item = &'b Atom> + Clone,
) -> bool {
    let empty = Substitution::new();
    find_hom(a.clone(), b.clone(), &empty, false).is_some()
        && find_hom(b, a, &empty, false).is_some()
}

fn answer_seed(answer: &[Term], t: &[Term]) -> Option<Substitution> {
    let mut seed = Substitution::new();
    for (x, v) in answer.iter().zip(t) {
        if let Some(prev) = seed.insert(x.clone(), v.clone()) {
            if &prev != v {
                return None;
            }
        }
    }
    Some(seed)
}

/// `I ⊨ Q(t)` (or `⊨inj`): the first disjunct, in order, with a witnessing
/// homomorphism sending the answer tuple to `t`.
pub fn entails(
    instance: &Instance,
    q: &Ucq,
    t: &[Term],
    injective: bool,
) -> Result<Option<(usize, Substitution)>, HomError> {
    let index = AtomIndex::from_atoms(instance);
    entails_in(&index, q, t, injective)
}

pub fn entails_in(
    index: &AtomIndex,
    q: &Ucq,
    t: &[Term],
    injective: bool,
) -> Result<Option<(usize, Substitution)>, HomError> {
    if t.len() != q.arity() {
        return Err(HomError::ArityMismatch {
            expected: q.arity(),
            found: t.len(),
        });
    }
    for (k, d) in q.disjuncts().iter().enumerate() {
        let Some(seed) = answer_seed(d.answer(), t) else {
            continue;
        };
        if let Some(h) = find_hom_in(d.atoms(), index, &seed, injective) {
            return Ok(Some((k, h)));
        }
    }
    Ok(None)
}

/// Single-CQ convenience for [`entails`].
pub fn entails_cq(instance: &Instance, q: &Cq, t: &[Term], injective: bool) -> Result<bool, HomError> {
    Ok(entails(instance, &Ucq::single(q.clone()), t, injective)?.is_some())
}

/// There is a homomorphism from `from` into `into` sending the i-th answer
/// position of `from` to the i-th answer position of `into`. This is query
/// containment `into ⊆ from`.
pub fn cq_maps_into(from: &Cq, into: &Cq) -> bool {
    if from.arity() != into.arity() {
        return false;
    }
    let Some(seed) = answer_seed(from.answer(), into.answer()) else {
        return false;
    };
    find_hom(from.atoms(), into.atoms(), &seed, false).is_some()
}

/// Equal up to a bijective renaming of variables that respects answer positions.
pub fn cq_isomorphic(a: &Cq, b: &Cq) -> bool {
    if a.atoms().len() != b.atoms().len()
        || a.arity() != b.arity()
        || a.vars().len() != b.vars().len()
    {
        return false;
    }
    let Some(seed) = answer_seed(a.answer(), b.answer()) else {
        return false;
    };
    let ans_a: BTreeSet<&Term> = a.answer().iter().collect();
    let ans_b: BTreeSet<&Term> = b.answer().iter().collect();
    if ans_a.len() != ans_b.len() {
        return false;
    }
    find_hom(a.atoms(), b.atoms(), &seed, true).is_some()
}

/// Minimal retract of `q` that fixes its answer variables.
pub fn core(q: &Cq) -> Cq {
    let fixed: Substitution = q.answer().iter().map(|x| (x.clone(), x.clone())).collect();
    let mut atoms: Vec<Atom> = q.atoms().to_vec();
    'outer: loop {
        if atoms.len() <= 1 {
            break;
        }
        for skip in 0..atoms.len() {
            let rest: Vec<&Atom> = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, a)| a)
                .collect();
            if let Some(h) = find_hom(&atoms, rest, &fixed, false) {
                let mut image: Vec<Atom> = atoms.iter().map(|a| a.apply(&h)).collect();
                image.sort();
                image.dedup();
                atoms = image;
                continue 'outer;
            }
        }
        break;
    }
    Cq::new(atoms, q.answer().to_vec()).expect("a retract keeps the answer variables")
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

    #[test]
    fn find_hom_examples() {
        let none = Substitution::new();
        let h = find_hom(&[e(v("x"), v("y"))], &[e(c("a"), c("b"))], &none, false).unwrap();
        assert_eq!(h[&v("x")], c("a"));
        assert_eq!(h[&v("y")], c("b"));

        let two = [e(v("x"), v("y")), e(v("y"), v("x"))];
        assert!(find_hom(&two, &[e(c("a"), c("b"))], &none, true).is_none());

        let aa = [e(c("a"), c("a"))];
        assert!(find_hom(&[e(v("x"), v("y"))], &aa, &none, true).is_none());
        let h = find_hom(&[e(v("x"), v("y"))], &aa, &none, false).unwrap();
        assert_eq!(h[&v("x")], c("a"));
        assert_eq!(h[&v("y")], c("a"));
    }

    #[test]
    fn constants_are_rigid_and_count_for_injectivity() {
        let none = Substitution::new();
        assert!(find_hom(&[e(c("a"), v("y"))], &[e(c("b"), c("c"))], &none, false).is_none());
        assert!(find_hom(&[e(c("a"), v("y"))], &[e(c("a"), c("a"))], &none, true).is_none());
        assert!(find_hom(&[e(c("a"), v("y"))], &[e(c("a"), c("a"))], &none, false).is_some());
    }

    #[test]
    fn entailment_examples() {
        let loop_q = Ucq::single(Cq::boolean(vec![e(v("x"), v("x"))]).unwrap());
        let ab = Instance::from_atoms([e(c("a"), c("b"))]);
        assert!(entails(&ab, &loop_q, &[], false).unwrap().is_none());
        let aa = Instance::from_atoms([e(c("a"), c("a"))]);
        assert!(entails(&aa, &loop_q, &[], false).unwrap().is_some());

        let path = Ucq::single(
            Cq::new(vec![e(v("x"), v("z")), e(v("z"), v("y"))], vec![v("x"), v("y")]).unwrap(),
        );
        let abc = Instance::from_atoms([e(c("a"), c("b")), e(c("b"), c("c"))]);
        let (k, h) = entails(&abc, &path, &[c("a"), c("c")], true).unwrap().unwrap();
        assert_eq!(k, 0);
        assert_eq!(h[&v("z")], c("b"));
        assert!(matches!(
            entails(&abc, &path, &[c("a")], false),
            Err(HomError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn equivalence_examples() {
        let ab = [e(c("a"), c("b"))];
        assert!(hom_equivalent(&ab, &ab));
        let aa = [e(c("a"), c("a"))];
        assert!(!hom_equivalent(&aa, &ab));
        let nulls = [e(Term::Null(1), Term::Null(2))];
        let both = [e(Term::Null(1), Term::Null(2)), e(Term::Null(3), Term::Null(4))];
        assert!(hom_equivalent(&nulls, &both));
    }

    #[test]
    fn core_examples() {
        let q = Cq::boolean(vec![e(v("x"), v("y")), e(v("x'"), v("y'"))]).unwrap();
        assert_eq!(core(&q).atoms().len(), 1);
        let q = Cq::new(vec![e(v("x"), v("y"))], vec![v("x")]).unwrap();
        assert_eq!(core(&q), q);
        let tri = Cq::boolean(vec![
            e(v("x"), v("y")),
            e(v("y"), v("z")),
            e(v("x"), v("z")),
        ])
        .unwrap();
        assert_eq!(core(&tri), tri);
    }

    #[test]
    fn generation_bounds_filter_candidates() {
        let mut idx = AtomIndex::new();
        idx.insert(e(c("a"), c("b")), 0);
        idx.insert(e(c("b"), c("c")), 1);
        let opts = HomOptions {
            injective: false,
            gen_bounds: Some(vec![(1, 1)]),
        };
        let mut seen = Vec::new();
        for_each_hom(&[e(v("x"), v("y"))], &idx, &Substitution::new(), &opts, |h| {
            seen.push(h[&v("x")].clone());
            ControlFlow::Continue(())
        });
        assert_eq!(seen, vec![c("b")]);
    }
}
