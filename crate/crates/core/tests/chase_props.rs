//! Chase invariants checked against a naive fixpoint and a trigger oracle.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regal::chase::is_dag;
use regal::hom::{all_homs_in, find_hom, AtomIndex};
use regal::sample::random_instance;
use regal::{chase, parse_facts, parse_rules, regalize, saturate, split_datalog, Atom, ChaseConfig, Instance, Predicate, RewriteBudget, Rule, RuleSet, Substitution, Term};

fn preds() -> Vec<Predicate> {
    vec![Predicate::new("E", 2), Predicate::new("A", 1)]
}

fn datalog() -> RuleSet {
    parse_rules(
        "E(x,y), E(y,z) -> E(x,z) .\n\
         E(x,y), A(x) -> A(y) .\n\
         E(x,y), E(y,x) -> B(x) .\n\
         B(x), A(x) -> E(x,x) .",
    )
    .unwrap()
}

/// Fires every rule on every assignment of its variables over the active
/// domain until nothing changes.
fn naive_fixpoint(i: &Instance, rules: &RuleSet) -> BTreeSet<Atom> {
    let mut cur: BTreeSet<Atom> = i.iter().cloned().collect();
    let dom: Vec<Term> = i.adom().into_iter().collect();
    loop {
        let mut next = cur.clone();
        for r in rules.iter() {
            let vars: Vec<Term> = r.body_vars().into_iter().collect();
            let total = dom.len().pow(vars.len() as u32);
            for mut code in 0..total {
                let mut m = Substitution::new();
                for v in &vars {
                    m.insert(v.clone(), dom[code % dom.len()].clone());
                    code /= dom.len();
                }
                if r.body().iter().all(|a| cur.contains(&a.apply(&m))) {
                    next.extend(r.head().iter().map(|a| a.apply(&m)));
                }
            }
        }
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Every trigger on step `n` has an output image on step `n + 1`.
fn triggers_satisfied(r: &Rule, step: &Instance, next: &Instance) -> bool {
    let frontier = r.frontier();
    all_homs_in(r.body(), &AtomIndex::from_atoms(step), &Substitution::new(), false)
        .into_iter()
        .all(|h| {
            let seed: Substitution = h.into_iter().filter(|(v, _)| frontier.contains(v)).collect();
            find_hom(r.head(), next, &seed, false).is_some()
        })
}

fn instance(seed: u64, max_atoms: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, &preds(), 4, max_atoms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn datalog_saturation_matches_naive_fixpoint(seed in any::<u64>()) {
        let i = instance(seed, 6);
        let trace = saturate(&i, &datalog(), ChaseConfig::default()).unwrap();
        let got: BTreeSet<Atom> = trace.result().iter().cloned().collect();
        prop_assert_eq!(got, naive_fixpoint(&i, &datalog()));
    }

    #[test]
    fn steps_grow_and_fire_every_trigger(seed in any::<u64>()) {
        let i = instance(seed, 4);
        let rules = parse_rules("E(x,y) -> ? z : E(y,z), A(z) .\nA(x), E(x,y) -> ? w : E(w,y) .").unwrap();
        let trace = chase(&i, &rules, 3, ChaseConfig::default()).unwrap();
        for n in 0..3 {
            let (step, next) = (trace.step(n), trace.step(n + 1));
            prop_assert!(step.iter().all(|a| next.contains(a)));
            prop_assert!(trace.new_atoms(n + 1).iter().all(|a| !step.contains(a)));
            for r in rules.iter() {
                prop_assert!(triggers_satisfied(r, &step, &next));
            }
        }
        for (t, info) in trace.terms() {
            let first = (0..=3).find(|&n| trace.step(n).adom().contains(t));
            prop_assert_eq!(first, Some(info.timestamp));
            prop_assert_eq!(t.is_null(), info.trigger.is_some());
        }
    }

    #[test]
    fn oblivious_chase_is_monotone_in_the_instance(seed in any::<u64>()) {
        let small = instance(seed, 3);
        let big = Instance::from_atoms(small.iter().cloned().chain(instance(seed ^ 0x9e37, 3).iter().cloned()));
        let rules = parse_rules("E(x,y) -> ? z : E(y,z) .\nE(x,y), E(y,z) -> A(x) .").unwrap();
        let a = chase(&small, &rules, 3, ChaseConfig::default()).unwrap().result();
        let b = chase(&big, &rules, 3, ChaseConfig::default()).unwrap().result();
        prop_assert!(find_hom(&a.iter().cloned().collect::<Vec<_>>(), &b, &Substitution::new(), false).is_some());
    }
}

#[test]
fn existential_part_of_regal_sets_chases_to_a_dag() {
    let budget = RewriteBudget { max_generations: 16, ..RewriteBudget::default() };
    let db = parse_facts(&common::corpus("a.facts")).unwrap();
    let mut checked = 0;
    for name in common::OBLIGATION_SETS {
        let (regal, _) = regalize(&db, &common::rules(name), budget).unwrap();
        let (_, exist) = split_datalog(&regal);
        let trace = chase(&Instance::new(), &exist, 4, ChaseConfig::default()).unwrap();
        let atoms = trace.result();
        assert!(atoms.iter().any(|a| a.arity() == 2), "{name}: no binary atoms");
        assert!(is_dag(atoms.iter().filter(|a| a.arity() == 2)).unwrap(), "{name}");
        checked += 1;
    }
    for name in common::PIPELINES {
        let (_, exist) = split_datalog(&common::rules(name));
        let trace = chase(&Instance::new(), &exist, 6, ChaseConfig::default()).unwrap();
        let atoms = trace.result();
        assert!(atoms.iter().any(|a| a.arity() == 2), "{name}: no binary atoms");
        assert!(is_dag(atoms.iter().filter(|a| a.arity() == 2)).unwrap(), "{name}");
        checked += 1;
    }
    assert_eq!(checked, 11);
}
