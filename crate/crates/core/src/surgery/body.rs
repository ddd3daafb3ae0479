//! Body rewriting: each rule gets one copy per disjunct of the rewriting of
//! its body, with the frontier as answer tuple.

use std::collections::BTreeSet;

use crate::hom::cq_isomorphic;
use crate::model::{Atom, Cq, Predicate, Rule, RuleSet, Substitution, Term};
use crate::rewrite::{ucq_rewrite, RewriteBudget};

use super::SurgeryError;

/// Boolean query encoding a rule up to variable renaming: head atoms carry a
/// marked predicate and existentials get a unary marker.
fn rule_shape(r: &Rule) -> Cq {
    let mut atoms: Vec<Atom> = r.body().to_vec();
    for a in r.head() {
        let p = Predicate::new(&format!("=>{}", a.pred().name()), a.arity());
        atoms.push(Atom::new(p, a.args().to_vec()));
    }
    for z in r.existentials() {
        atoms.push(Atom::new(Predicate::new("=>ex", 1), vec![z.clone()]));
    }
    Cq::boolean(atoms).expect("rules have atoms")
}

/// Result of [`body_rewrite`] with the largest generation count used.
#[derive(Clone, Debug)]
pub struct BodyRewriting {
    pub rules: RuleSet,
    /// Most generations any body rewriting needed before converging.
    pub generations: usize,
}

/// `R` together with, for every rule and every disjunct of the rewriting of
/// its body, the rule with that disjunct as body and the head specialized
/// accordingly. Copies identical to an existing rule up to renaming are
/// skipped.
pub fn body_rewrite(rules: &RuleSet, budget: RewriteBudget) -> Result<BodyRewriting, SurgeryError> {
    let mut out: Vec<Rule> = rules.rules().to_vec();
    let mut shapes: Vec<Cq> = out.iter().map(rule_shape).collect();
    let mut generations = 0;
    for r in rules.iter() {
        let frontier: Vec<Term> = r.frontier().into_iter().collect();
        let q = Cq::new(r.body().to_vec(), frontier.clone())?;
        let run = ucq_rewrite(&q, rules, budget);
        if !run.converged() {
            return Err(SurgeryError::RewritingBudgetExceeded {
                rule: r.id().to_string(),
                generations: budget.max_generations,
            });
        }
        generations = generations.max(run.generations_run());
        for (k, d) in run.ucq().disjuncts().iter().enumerate() {
            let mut subst: Substitution = frontier.iter().cloned().zip(d.answer().iter().cloned()).collect();
            let mut taken: BTreeSet<String> = d.vars().iter().map(Term::label).collect();
            let mut exs = Vec::new();
            for z in r.existentials() {
                let mut name = z.label();
                while !taken.insert(name.clone()) {
                    name.push('\'');
                }
                let z2 = Term::var(&name);
                subst.insert(z.clone(), z2.clone());
                exs.push(z2);
            }
            let head = r.head().iter().map(|a| a.apply(&subst)).collect();
            let rule = Rule::new(format!("{}_w{}", r.id(), k), d.atoms().to_vec(), head, exs)?;
            let shape = rule_shape(&rule);
            if !shapes.iter().any(|s| cq_isomorphic(s, &shape)) {
                shapes.push(shape);
                out.push(rule);
            }
        }
    }
    Ok(BodyRewriting {
        rules: RuleSet::new(out),
        generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_rules;

    #[test]
    fn most_general_bodies_are_kept() {
        let rs = parse_rules("A(x) -> ? z : E(x,z) .\nB(x) -> C(x) .").unwrap();
        let out = body_rewrite(&rs, RewriteBudget::default()).unwrap();
        assert_eq!(out.rules, rs);
    }

    #[test]
    fn new_bodies_specialize_heads() {
        let rs = parse_rules("A(x) -> B(x) .\nB(x) -> ? z : E(x,z) .").unwrap();
        let out = body_rewrite(&rs, RewriteBudget::default()).unwrap();
        assert_eq!(out.rules.len(), 3);
        assert_eq!(out.rules.rules()[2].to_string(), "A(x) -> ? z : E(x,z) .");
    }

    #[test]
    fn divergent_bodies_fail() {
        let rs = parse_rules("E(x,y) -> ? z : E(y,z) .\nE(x,y), E(y,z) -> E(x,z) .").unwrap();
        assert!(matches!(
            body_rewrite(&rs, RewriteBudget::default()),
            Err(SurgeryError::RewritingBudgetExceeded { .. })
        ));
    }
}
