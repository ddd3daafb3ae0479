//! Syntactic and empirical property checks on rule sets.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::chase::{chase, ChaseConfig, ChaseError};
use crate::hom::find_hom;
use crate::model::{Atom, Instance, RuleSet, Substitution, Term};

/// Every binary head atom of a non-Datalog rule goes from a frontier
/// variable to an existential one. Unary and nullary head atoms pass; wider
/// atoms fail.
pub fn check_forward_existential(rules: &RuleSet) -> bool {
    rules.iter().filter(|r| !r.is_datalog()).all(|r| {
        let frontier = r.frontier();
        r.head().iter().all(|a| match a.arity() {
            0 | 1 => true,
            2 => frontier.contains(&a.args()[0]) && r.existentials().contains(&a.args()[1]),
            _ => false,
        })
    })
}

/// No predicate occurs twice in the head of a non-Datalog rule.
pub fn check_predicate_unique(rules: &RuleSet) -> bool {
    rules.iter().filter(|r| !r.is_datalog()).all(|r| {
        let mut seen = BTreeSet::new();
        r.head().iter().all(|a| seen.insert(a.pred().clone()))
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuickViolation {
    /// Index into the supplied instances.
    pub instance: usize,
    pub atom: String,
    /// First chase step producing the atom.
    pub step: usize,
}

/// Chases each instance to `depth` and looks at every trigger after step 1
/// whose frontier image lies inside the instance's own terms. Its output,
/// with the created nulls read as variables, must already map into step 1;
/// the first atom of a trigger that fails this is reported.
pub fn check_quick_empirical(
    rules: &RuleSet,
    instances: &[Instance],
    depth: usize,
    cfg: ChaseConfig,
) -> Result<Option<QuickViolation>, ChaseError> {
    for (i, inst) in instances.iter().enumerate() {
        let dom = inst.adom();
        let trace = chase(inst, rules, depth, cfg)?;
        let first = trace.step(1.min(trace.layer_count() - 1));
        let mut bad: Vec<(usize, &Atom)> = Vec::new();
        for t in trace.triggers().iter().filter(|t| t.step >= 1) {
            let rule = &trace.rules().rules()[t.trigger.rule];
            if !rule.frontier().iter().all(|x| t.full_map.get(x).is_some_and(|v| dom.contains(v))) {
                continue;
            }
            let rename: Substitution = t
                .created
                .iter()
                .enumerate()
                .map(|(k, n)| (n.clone(), Term::var(&format!("created{k}"))))
                .collect();
            let pattern: Vec<Atom> = t.output.iter().map(|a| a.apply(&rename)).collect();
            if find_hom(&pattern, &first, &Substitution::new(), false).is_none() {
                if let Some(a) = t.output.iter().min() {
                    bad.push((t.step + 1, a));
                }
            }
        }
        bad.sort();
        if let Some((step, a)) = bad.first() {
            return Ok(Some(QuickViolation {
                instance: i,
                atom: a.to_string(),
                step: *step,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_facts, parse_rules};

    #[test]
    fn syntactic_examples() {
        let ok = parse_rules("A(x), B(y) -> ? z : D(x,z), E(y,z) .").unwrap();
        assert!(check_forward_existential(&ok) && check_predicate_unique(&ok));
        let back = parse_rules("E(x,y) -> ? z : E(z,y) .").unwrap();
        assert!(!check_forward_existential(&back));
        let twice = parse_rules("B(x) -> ? z,w : E(x,z), E(x,w) .").unwrap();
        assert!(!check_predicate_unique(&twice));
        assert!(check_forward_existential(&twice));
        let dl = parse_rules("E(x,y), E(y,z) -> E(x,z), E(z,x) .").unwrap();
        assert!(check_forward_existential(&dl) && check_predicate_unique(&dl));
    }

    #[test]
    fn quick_examples() {
        let rs = parse_rules("A(x,y) -> B(x,y) .\nB(x,y) -> C(x,y) .").unwrap();
        let i = parse_facts("A(a,b).").unwrap();
        let v = check_quick_empirical(&rs, std::slice::from_ref(&i), 2, ChaseConfig::default()).unwrap().unwrap();
        assert_eq!(v.atom, "C(a,b)");
        assert_eq!(v.step, 2);
        assert_eq!(check_quick_empirical(&RuleSet::empty(), &[i], 3, ChaseConfig::default()).unwrap(), None);

        // H(a) arrives late, but its trigger's frontier includes the null z.
        let rs = parse_rules("A(x) -> ? z : F(x,z) .\nF(x,z), G(x) -> H(x), K(x,z) .").unwrap();
        let i = parse_facts("A(a). G(a).").unwrap();
        assert_eq!(check_quick_empirical(&rs, &[i], 3, ChaseConfig::default()).unwrap(), None);
    }
}
