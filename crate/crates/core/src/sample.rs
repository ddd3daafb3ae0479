//! Seeded random generators for instances, queries, digraphs and multisets.
//! Used by the property suites and by `check quick`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::{edge_predicate, TimestampMultiset, Tournament};
use crate::model::{Atom, Cq, Instance, Predicate, Term, Ucq};

/// Constants `c1..cn`.
pub fn constants(n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::constant(&format!("c{i}"))).collect()
}

fn random_atom<R: Rng>(rng: &mut R, preds: &[Predicate], terms: &[Term]) -> Atom {
    let p = preds.choose(rng).expect("nonempty signature").clone();
    let args = (0..p.arity()).map(|_| terms.choose(rng).unwrap().clone()).collect();
    Atom::new(p, args)
}

/// Between one and `max_atoms` atoms over `preds` and constants `c1..c{n_consts}`.
pub fn random_instance<R: Rng>(rng: &mut R, preds: &[Predicate], n_consts: usize, max_atoms: usize) -> Instance {
    let consts = constants(n_consts.max(1));
    let n = rng.gen_range(1..=max_atoms.max(1));
    (0..n).map(|_| random_atom(rng, preds, &consts)).collect()
}

/// A CQ whose answer variables are `answer` and whose other variables are
/// drawn from `v1..v{n_vars}`. Atoms are resampled until every answer
/// variable occurs.
pub fn random_cq<R: Rng>(rng: &mut R, preds: &[Predicate], answer: &[Term], n_vars: usize, max_atoms: usize) -> Cq {
    let mut pool: Vec<Term> = answer.to_vec();
    pool.extend((1..=n_vars).map(|i| Term::var(&format!("v{i}"))));
    loop {
        let n = rng.gen_range(1..=max_atoms.max(1));
        let atoms: Vec<Atom> = (0..n).map(|_| random_atom(rng, preds, &pool)).collect();
        if let Ok(q) = Cq::new(atoms, answer.to_vec()) {
            return q;
        }
    }
}

pub fn random_ucq<R: Rng>(
    rng: &mut R,
    preds: &[Predicate],
    answer: &[Term],
    n_vars: usize,
    max_disjuncts: usize,
    max_atoms: usize,
) -> Ucq {
    let n = rng.gen_range(1..=max_disjuncts.max(1));
    let ds = (0..n).map(|_| random_cq(rng, preds, answer, n_vars, max_atoms)).collect();
    Ucq::new(answer.to_vec(), ds).expect("disjuncts share the answer tuple")
}

/// E-atoms over `c1..cn`, each ordered pair of distinct vertices present
/// with probability `p`.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Instance {
    let vs = constants(n);
    let mut out = Instance::new();
    for u in &vs {
        for v in &vs {
            if u != v && rng.gen_bool(p) {
                out.insert(Atom::new(edge_predicate(), vec![u.clone(), v.clone()]));
            }
        }
    }
    out
}

/// Every unordered pair of `c1..cn` oriented by a coin flip.
pub fn random_tournament<R: Rng>(rng: &mut R, n: usize) -> Instance {
    let vs = constants(n);
    let mut out = Instance::new();
    for i in 0..n {
        for j in i + 1..n {
            let (s, t) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            out.insert(Atom::new(edge_predicate(), vec![vs[s].clone(), vs[t].clone()]));
        }
    }
    out
}

/// All `2^(n(n-1)/2)` tournaments on `c1..cn`.
pub fn all_tournaments(n: usize) -> Vec<Instance> {
    let vs = constants(n);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .map(|(b, &(i, j))| {
                    let (s, t) = if mask >> b & 1 == 1 { (j, i) } else { (i, j) };
                    Atom::new(edge_predicate(), vec![vs[s].clone(), vs[t].clone()])
                })
                .collect()
        })
        .collect()
}

pub fn random_coloring<R: Rng>(rng: &mut R, t: &Tournament, colors: usize) -> BTreeMap<(Term, Term), usize> {
    t.pairs().into_iter().map(|p| (p, rng.gen_range(0..colors))).collect()
}

pub fn random_multiset<R: Rng>(rng: &mut R, max_size: usize, max_value: usize) -> TimestampMultiset {
    let n = rng.gen_range(0..=max_size);
    (0..n).map(|_| rng.gen_range(0..=max_value)).collect()
}
