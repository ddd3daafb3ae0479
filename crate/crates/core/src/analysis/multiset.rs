//! Finite multisets of naturals under the max-first lexicographic order.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::chase::ChaseTrace;
use crate::model::Term;

use super::AnalysisError;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct TimestampMultiset {
    counts: BTreeMap<usize, usize>,
}

impl TimestampMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: usize) {
        *self.counts.entry(v).or_insert(0) += 1;
    }

    /// Removes one copy of `v`; false if absent.
    pub fn remove_one(&mut self, v: usize) -> bool {
        match self.counts.get_mut(&v) {
            None => false,
            Some(c) => {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(&v);
                }
                true
            }
        }
    }

    pub fn count(&self, v: usize) -> usize {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn largest(&self) -> Option<usize> {
        self.counts.keys().next_back().copied()
    }

    /// Elements in non-increasing order.
    pub fn descending(&self) -> Vec<usize> {
        self.counts
            .iter()
            .rev()
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
            .collect()
    }
}

impl FromIterator<usize> for TimestampMultiset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut m = TimestampMultiset::new();
        for v in iter {
            m.insert(v);
        }
        m
    }
}

/// `∅` is least; otherwise compare maxima, then the rests after removing one
/// copy of each maximum.
pub fn mlex_compare(a: &TimestampMultiset, b: &TimestampMultiset) -> Ordering {
    let mut ia = a.counts.iter().rev().flat_map(|(&v, &c)| std::iter::repeat_n(v, c));
    let mut ib = b.counts.iter().rev().flat_map(|(&v, &c)| std::iter::repeat_n(v, c));
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => match x.cmp(&y) {
                Ordering::Equal => continue,
                o => return o,
            },
        }
    }
}

impl PartialOrd for TimestampMultiset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimestampMultiset {
    fn cmp(&self, other: &Self) -> Ordering {
        mlex_compare(self, other)
    }
}

/// Index of the least multiset, found by repeatedly keeping the candidates
/// with the smallest maximum and stripping that maximum. Ties go to the
/// first index.
pub fn lex_minimum(sets: &[TimestampMultiset]) -> Option<usize> {
    let mut cand: Vec<usize> = (0..sets.len()).collect();
    let mut rest: Vec<TimestampMultiset> = sets.to_vec();
    loop {
        if cand.is_empty() {
            return None;
        }
        if let Some(&i) = cand.iter().find(|&&i| rest[i].is_empty()) {
            return Some(i);
        }
        let m = cand.iter().filter_map(|&i| rest[i].largest()).min().expect("nonempty candidates");
        cand.retain(|&i| rest[i].largest() == Some(m));
        for &i in &cand {
            rest[i].remove_one(m);
        }
    }
}

/// `⦃ts(t) | t ∈ terms⦄`, with input terms at 0.
pub fn timestamps_of<'a>(
    terms: impl IntoIterator<Item = &'a Term>,
    trace: &ChaseTrace,
) -> Result<TimestampMultiset, AnalysisError> {
    terms
        .into_iter()
        .map(|t| trace.timestamp(t).ok_or_else(|| AnalysisError::UnknownTerm(t.label())))
        .collect()
}

/// Number of multisets of at most `size` elements drawn from `0..=max_value`;
/// bounds the length of any strictly descending chain among them.
pub fn chain_bound(max_value: usize, size: usize) -> u128 {
    // C(max_value + 1 + size, size)
    let n = (max_value + 1 + size) as u128;
    let mut acc: u128 = 1;
    for i in 0..size as u128 {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: &[usize]) -> TimestampMultiset {
        v.iter().copied().collect()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(mlex_compare(&ms(&[]), &ms(&[0])), Ordering::Less);
        assert_eq!(mlex_compare(&ms(&[2, 2]), &ms(&[3])), Ordering::Less);
        assert_eq!(mlex_compare(&ms(&[3, 1]), &ms(&[3, 2])), Ordering::Less);
        assert_eq!(mlex_compare(&ms(&[1, 3]), &ms(&[3, 1])), Ordering::Equal);
    }

    #[test]
    fn minimum_and_bound() {
        let sets = [ms(&[3]), ms(&[2, 2, 2]), ms(&[2, 2]), ms(&[2, 1, 1, 1])];
        assert_eq!(lex_minimum(&sets), Some(3));
        assert_eq!(lex_minimum(&[]), None);
        // multisets of size ≤ 1 over {0, 1}: ∅, ⦃0⦄, ⦃1⦄
        assert_eq!(chain_bound(1, 1), 3);
        assert_eq!(chain_bound(1, 2), 6);
    }
}
