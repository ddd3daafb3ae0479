//! Structural and semantic checks on the surgeries over the rule corpus.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regal::hom::find_hom;
use regal::sample::random_instance;
use regal::{
    body_rewrite, chase, check_forward_existential, check_predicate_unique, check_quick_empirical, encode_db, parse_facts, regalize, reify,
    streamline, Atom, ChaseConfig, Instance, Predicate, RewriteBudget, Rule, RuleSet, Substitution, Term,
};

const ALL: [&str; 13] = [
    "ex1", "pair", "chain", "swap", "succ", "unpack", "witness", "project", "peak1", "peak2", "peak3", "tour_disc", "tour_star",
];

fn budget() -> RewriteBudget {
    RewriteBudget { max_generations: 16, ..RewriteBudget::default() }
}

fn freeze(atoms: &[Atom], prefix: &str) -> (Instance, Substitution) {
    let vars: BTreeSet<Term> = atoms.iter().flat_map(|a| a.vars().cloned()).collect();
    let m: Substitution = vars.into_iter().map(|v| (v.clone(), Term::constant(&format!("{prefix}{}", v.label())))).collect();
    let i = Instance::from_atoms(atoms.iter().map(|a| a.apply(&m)));
    (i, m)
}

/// `rules` entails `r` within `depth` steps on the frozen body of `r`.
fn entailed(rules: &RuleSet, r: &Rule, depth: usize) -> bool {
    let (body, m) = freeze(r.body(), "k_");
    let trace = chase(&body, rules, depth, ChaseConfig::default()).unwrap();
    let seed: Substitution = r.frontier().into_iter().map(|x| (x.clone(), m[&x].clone())).collect();
    find_hom(r.head(), &trace.result(), &seed, false).is_some()
}

#[test]
fn reify_is_binary_and_keeps_input_predicates_out() {
    for name in ALL {
        let rules = common::rules(name);
        let out = reify(&rules);
        assert!(out.is_at_most_binary(), "{name}");
        assert_eq!(out.len(), rules.len(), "{name}");
        let src: BTreeSet<Predicate> = rules.signature().into_iter().filter(|p| p.arity() > 2).collect();
        assert!(out.signature().is_disjoint(&src), "{name}");
    }
}

#[test]
fn streamline_yields_forward_existential_predicate_unique_rules() {
    for name in ALL {
        let out = streamline(&reify(&common::rules(name))).unwrap();
        assert!(check_forward_existential(&out), "{name}");
        assert!(check_predicate_unique(&out), "{name}");
    }
}

#[test]
fn streamlined_rules_entail_their_sources() {
    for name in ALL {
        let src = reify(&common::rules(name));
        let out = streamline(&src).unwrap();
        for r in src.iter() {
            assert!(entailed(&out, r, 3), "{name}: {r}");
        }
    }
}

#[test]
fn body_rewrite_keeps_heads_and_is_entailed() {
    for name in common::OBLIGATION_SETS.iter().chain(["pair", "peak1"].iter()) {
        let src = streamline(&reify(&common::rules(name))).unwrap();
        let out = body_rewrite(&src, budget()).unwrap();
        assert!(out.rules.len() >= src.len());
        for o in out.rules.iter() {
            let (head, _) = freeze(o.head(), "h_");
            let from_source = src.iter().any(|r| {
                r.existentials().len() == o.existentials().len()
                    && find_hom(r.head(), &head, &Substitution::new(), false).is_some_and(|h| {
                        r.existentials().iter().map(|z| &h[z]).collect::<BTreeSet<_>>().len() == r.existentials().len()
                    })
            });
            assert!(from_source, "{name}: head of {o} is not a source head");
            assert!(entailed(&src, o, out.generations + 1), "{name}: {o}");
        }
    }
}

#[test]
fn regalized_sets_pass_the_quick_probe() {
    let db = parse_facts(&common::corpus("a.facts")).unwrap();
    for name in common::OBLIGATION_SETS {
        let (regal, report) = regalize(&db, &common::rules(name), budget()).unwrap();
        assert_eq!(report.obligations.len(), 4);
        assert!(check_forward_existential(&regal) && check_predicate_unique(&regal), "{name}");
        let probe = check_quick_empirical(&regal, std::slice::from_ref(&db), 4, ChaseConfig::default()).unwrap();
        assert!(probe.is_none(), "{name}: {probe:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_rule_rebuilds_the_database(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let preds = [Predicate::new("E", 2), Predicate::new("A", 1), Predicate::new("T", 3)];
        let db = random_instance(&mut rng, &preds, 4, 6);
        let rule = encode_db(&db).unwrap();
        prop_assert!(rule.body().iter().all(Atom::is_top));
        let out = chase(&Instance::new(), &RuleSet::new(vec![rule]), 1, ChaseConfig::default()).unwrap().result();
        // Read the nulls as variables: an injective match onto a copy of the
        // same size is an isomorphism.
        let copy: Vec<Atom> = out.iter().filter(|a| !a.is_top()).cloned().collect();
        let as_vars: Substitution = out.adom().into_iter().map(|n| (n.clone(), Term::var(&n.label()))).collect();
        let pattern: Vec<Atom> = copy.iter().map(|a| a.apply(&as_vars)).collect();
        prop_assert!(out.adom().iter().all(Term::is_null));
        prop_assert_eq!(copy.len() + 1, db.len());
        prop_assert_eq!(out.adom().len(), db.adom().len());
        prop_assert!(find_hom(&pattern, &db, &Substitution::new(), true).is_some());
    }
}
