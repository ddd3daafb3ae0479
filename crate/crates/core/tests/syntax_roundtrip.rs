//! Printing then parsing gives back the same objects.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regal::sample::{random_instance, random_ucq};
use regal::{parse_facts, parse_rules, parse_ucq, regalize, reify, streamline, Predicate, RewriteBudget, Term};

fn preds() -> Vec<Predicate> {
    vec![Predicate::new("E", 2), Predicate::new("A", 1), Predicate::new("T", 3), Predicate::new("Z", 0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn instances_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i = random_instance(&mut rng, &preds(), 4, 8);
        prop_assert_eq!(parse_facts(&i.to_string()).unwrap(), i);
    }

    #[test]
    fn ucqs_round_trip(seed in any::<u64>(), arity in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let answer: Vec<Term> = ["x", "y"][..arity].iter().map(|v| Term::var(v)).collect();
        let q = random_ucq(&mut rng, &preds(), &answer, 3, 3, 4);
        prop_assert_eq!(parse_ucq(&q.to_string()).unwrap(), q);
    }
}

#[test]
fn rule_sets_round_trip_through_every_surgery() {
    let db = parse_facts(&common::corpus("a.facts")).unwrap();
    let budget = RewriteBudget { max_generations: 16, ..RewriteBudget::default() };
    for name in common::OBLIGATION_SETS.iter().chain(common::PIPELINES.iter()).chain(["ex1", "pair"].iter()) {
        let r = common::rules(name);
        let mut variants = vec![r.clone(), reify(&r), streamline(&reify(&r)).unwrap()];
        if common::OBLIGATION_SETS.contains(name) {
            variants.push(regalize(&db, &r, budget).unwrap().0);
        }
        for v in variants {
            assert_eq!(parse_rules(&v.to_string()).unwrap(), v, "{name}");
        }
    }
}
