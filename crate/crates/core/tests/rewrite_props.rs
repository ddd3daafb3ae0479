//! UCQ rewriting: single steps are sound, converged rewritings agree with
//! the chase, and injectivization preserves entailment.

mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regal::hom::entails_cq;
use regal::sample::{random_cq, random_instance, random_ucq};
use regal::{chase, entails, injectivize, rewrite_step, ucq_rewrite, ChaseConfig, Cq, Instance, Predicate, RewriteBudget, RuleSet, Substitution, Term};

const CONVERGING: [&str; 6] = ["pair", "chain", "swap", "witness", "project", "peak1"];

fn signature(rules: &RuleSet) -> Vec<Predicate> {
    rules.signature().into_iter().filter(|p| !p.is_top()).collect()
}

fn freeze(q: &Cq) -> (Instance, Vec<Term>) {
    let m: Substitution = q.vars().into_iter().map(|v| (v.clone(), Term::constant(&format!("k_{}", v.label())))).collect();
    let i = Instance::from_atoms(q.atoms().iter().map(|a| a.apply(&m)));
    (i, q.answer().iter().map(|x| m[x].clone()).collect())
}

fn tuples(consts: &[Term], arity: usize) -> Vec<Vec<Term>> {
    (0..arity).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|t| consts.iter().map(move |c| [t.clone(), vec![c.clone()]].concat()))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rewrite_steps_are_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rules = common::rules(CONVERGING.choose(&mut rng).unwrap());
        let answer = if seed % 2 == 0 { vec![] } else { vec![Term::var("x")] };
        let q = random_cq(&mut rng, &signature(&rules), &answer, 3, 3);
        for r in rules.iter() {
            for q2 in rewrite_step(&q, r) {
                let (i, t) = freeze(&q2);
                let trace = chase(&i, &RuleSet::new(vec![r.clone()]), 1, ChaseConfig::default()).unwrap();
                prop_assert!(entails_cq(&trace.result(), &q, &t, false).unwrap(), "{} from {} by {}", q2, q, r);
            }
        }
    }

    #[test]
    fn converged_rewriting_agrees_with_the_chase(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let name = CONVERGING.choose(&mut rng).unwrap();
        let rules = common::rules(name);
        let sig = signature(&rules);
        let answer = if seed % 3 == 0 { vec![Term::var("x")] } else { vec![] };
        let q = random_cq(&mut rng, &sig, &answer, 2, 2);
        let run = ucq_rewrite(&q, &rules, RewriteBudget { max_generations: 8, max_cqs: 2000 });
        prop_assume!(run.converged());
        let rew = run.minimized();
        let depth = run.generations_run() + 1;
        for _ in 0..6 {
            let i = random_instance(&mut rng, &sig, 3, 6);
            let full = chase(&i, &rules, depth, ChaseConfig::default()).unwrap().result();
            let consts: Vec<Term> = i.adom().into_iter().collect();
            for t in tuples(&consts, answer.len()) {
                let by_chase = entails_cq(&full, &q, &t, false).unwrap();
                let by_rewriting = entails(&i, &rew, &t, false).unwrap().is_some();
                prop_assert_eq!(by_chase, by_rewriting, "{} on {} with {} at {:?}", name, q, i, t);
            }
        }
    }

    #[test]
    fn injectivization_preserves_entailment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let preds = [Predicate::new("E", 2), Predicate::new("A", 1)];
        let answer = [Term::var("x"), Term::var("y")];
        let q = random_ucq(&mut rng, &preds, &answer, 2, 2, 3);
        let qi = injectivize(&q);
        let i = random_instance(&mut rng, &preds, 3, 6);
        let consts: Vec<Term> = i.adom().into_iter().collect();
        for t in tuples(&consts, 2) {
            prop_assert_eq!(
                entails(&i, &q, &t, false).unwrap().is_some(),
                entails(&i, &qi, &t, true).unwrap().is_some(),
                "{} vs {} at {:?}", q, qi, t
            );
        }
    }
}
