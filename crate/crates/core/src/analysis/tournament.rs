//! Tournaments over the edge predicate `E`, loops, and monochromatic
//! extraction from edge-colored tournaments.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{Atom, Instance, Predicate, Term};

/// Name of the edge predicate tournaments and loops are read from.
pub const EDGE: &str = "E";

pub fn edge_predicate() -> Predicate {
    Predicate::new(EDGE, 2)
}

/// A set of distinct terms with an `E`-atom, in at least one direction,
/// between every two of them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Tournament {
    vertices: Vec<Term>,
}

impl Tournament {
    pub fn new(mut vertices: Vec<Term>) -> Self {
        vertices.sort();
        vertices.dedup();
        Tournament { vertices }
    }

    pub fn vertices(&self) -> &[Term] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Unordered vertex pairs `(u, v)` with `u < v`.
    pub fn pairs(&self) -> Vec<(Term, Term)> {
        let mut out = Vec::new();
        for (i, u) in self.vertices.iter().enumerate() {
            for v in &self.vertices[i + 1..] {
                out.push((u.clone(), v.clone()));
            }
        }
        out
    }

    pub fn holds_in(&self, instance: &Instance) -> bool {
        let e = edge_predicate();
        self.pairs().iter().all(|(u, v)| {
            instance.contains(&Atom::new(e.clone(), vec![u.clone(), v.clone()]))
                || instance.contains(&Atom::new(e.clone(), vec![v.clone(), u.clone()]))
        })
    }
}

/// Terms of `E`-atoms and their "either direction" adjacency, loops dropped.
fn edge_graph(instance: &Instance) -> (Vec<Term>, Vec<Vec<bool>>) {
    let e = edge_predicate();
    let edges: Vec<(&Term, &Term)> = instance
        .iter()
        .filter(|a| a.pred() == &e)
        .map(|a| (&a.args()[0], &a.args()[1]))
        .collect();
    let nodes: Vec<Term> = edges
        .iter()
        .flat_map(|(s, t)| [(*s).clone(), (*t).clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos: BTreeMap<&Term, usize> = nodes.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut adj = vec![vec![false; nodes.len()]; nodes.len()];
    for (s, t) in edges {
        let (i, j) = (pos[s], pos[t]);
        if i != j {
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    (nodes, adj)
}

/// Lexicographically first `k`-clique of an undirected graph, by index.
pub(crate) fn find_clique(adj: &[Vec<bool>], k: usize) -> Option<Vec<usize>> {
    fn extend(adj: &[Vec<bool>], k: usize, chosen: &mut Vec<usize>, cands: &[usize]) -> bool {
        if chosen.len() == k {
            return true;
        }
        for (pos, &v) in cands.iter().enumerate() {
            if chosen.len() + cands.len() - pos < k {
                return false;
            }
            let next: Vec<usize> = cands[pos + 1..].iter().copied().filter(|&w| adj[v][w]).collect();
            chosen.push(v);
            if extend(adj, k, chosen, &next) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if k == 0 {
        return Some(Vec::new());
    }
    let cands: Vec<usize> = (0..adj.len())
        .filter(|&v| adj[v].iter().filter(|&&b| b).count() + 1 >= k)
        .collect();
    let mut chosen = Vec::new();
    extend(adj, k, &mut chosen, &cands).then_some(chosen)
}

/// A tournament of exactly `k` vertices among the `E`-atoms of `instance`.
pub fn find_tournament(instance: &Instance, k: usize) -> Option<Tournament> {
    if k == 0 {
        return Some(Tournament::new(Vec::new()));
    }
    let (nodes, adj) = edge_graph(instance);
    find_clique(&adj, k).map(|c| Tournament::new(c.into_iter().map(|i| nodes[i].clone()).collect()))
}

/// A largest tournament, searching sizes up to `cap`.
pub fn max_tournament(instance: &Instance, cap: usize) -> Tournament {
    let (nodes, adj) = edge_graph(instance);
    let mut best = Vec::new();
    for k in 1..=cap.min(nodes.len()) {
        match find_clique(&adj, k) {
            Some(c) => best = c,
            None => break,
        }
    }
    Tournament::new(best.into_iter().map(|i| nodes[i].clone()).collect())
}

/// Least `t` with `E(t, t)`.
pub fn has_loop(instance: &Instance) -> Option<Term> {
    let e = edge_predicate();
    instance
        .iter()
        .filter(|a| a.pred() == &e && a.args()[0] == a.args()[1])
        .map(|a| a.args()[0].clone())
        .min()
}

/// A sub-tournament of `s` vertices whose pairs all carry the same color.
/// `color` is keyed by pairs `(u, v)` with `u < v`; uncolored pairs never
/// qualify.
pub fn monochromatic_subtournament(
    t: &Tournament,
    color: &BTreeMap<(Term, Term), usize>,
    s: usize,
) -> Option<(usize, Tournament)> {
    let vs = t.vertices();
    let colors: BTreeSet<usize> = color.values().copied().collect();
    for c in colors {
        let adj: Vec<Vec<bool>> = vs
            .iter()
            .map(|u| {
                vs.iter()
                    .map(|v| {
                        let key = if u < v { (u.clone(), v.clone()) } else { (v.clone(), u.clone()) };
                        u != v && color.get(&key) == Some(&c)
                    })
                    .collect()
            })
            .collect();
        if s <= 1 && !vs.is_empty() {
            return Some((c, Tournament::new(vs[..s].to_vec())));
        }
        if let Some(cl) = find_clique(&adj, s) {
            return Some((c, Tournament::new(cl.into_iter().map(|i| vs[i].clone()).collect())));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_facts;

    #[test]
    fn tournament_examples() {
        let i = parse_facts("E(a,b). E(b,c). E(a,c).").unwrap();
        let t = find_tournament(&i, 3).unwrap();
        assert_eq!(t.vertices().len(), 3);
        assert!(t.holds_in(&i));
        assert!(find_tournament(&parse_facts("E(a,b). E(c,d).").unwrap(), 3).is_none());
        assert_eq!(max_tournament(&parse_facts("E(a,b).").unwrap(), 4).len(), 2);
    }

    #[test]
    fn loops() {
        assert_eq!(has_loop(&parse_facts("E(a,a).").unwrap()), Some(Term::constant("a")));
        assert_eq!(has_loop(&parse_facts("E(a,b).").unwrap()), None);
        // loops do not count as tournament edges
        assert!(find_tournament(&parse_facts("E(a,a).").unwrap(), 2).is_none());
    }

    #[test]
    fn monochromatic_examples() {
        let t = Tournament::new(["a", "b", "c"].iter().map(|n| Term::constant(n)).collect());
        let mut color = BTreeMap::new();
        for (k, p) in t.pairs().into_iter().enumerate() {
            color.insert(p, k);
        }
        let (_, sub) = monochromatic_subtournament(&t, &color, 2).unwrap();
        assert_eq!(sub.len(), 2);
        assert!(monochromatic_subtournament(&t, &color, 3).is_none());
        let mono: BTreeMap<_, _> = t.pairs().into_iter().map(|p| (p, 0)).collect();
        assert_eq!(monochromatic_subtournament(&t, &mono, 3).unwrap().1, t);
    }
}
