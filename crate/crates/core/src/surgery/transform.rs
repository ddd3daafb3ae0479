//! The syntactic transformations: database encoding, reification and
//! streamlining, plus the Datalog split.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Atom, Cq, Instance, Predicate, Rule, RuleSet, Substitution, Term};

use super::SurgeryError;

/// Id given to the rule produced by [`encode_db`].
pub const ENCODE_ID: &str = "enc";

/// `⊤ → ∃v1..vn J'` where `J'` is `J` with its terms renamed, in sorted
/// order, to fresh variables.
pub fn encode_db(j: &Instance) -> Result<Rule, SurgeryError> {
    if j.is_trivial() {
        return Err(SurgeryError::EmptyDatabase);
    }
    let subst: Substitution = j
        .adom()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, Term::var(&format!("v{}", i + 1))))
        .collect();
    let head = j.iter().filter(|a| !a.is_top()).map(|a| a.apply(&subst)).collect();
    Ok(Rule::new(ENCODE_ID, vec![Atom::top()], head, subst.into_values().collect())?)
}

fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

fn fresh_var(base: &str, taken: &mut BTreeSet<String>) -> Term {
    let mut k = 1;
    loop {
        let name = format!("{base}{k}");
        if taken.insert(name.clone()) {
            return Term::var(&name);
        }
        k += 1;
    }
}

/// Replaces atoms of arity `n > 2` by `n` binary atoms `A_i(x_i, id)`
/// sharing an atom identifier; smaller atoms are untouched.
///
/// Predicate names are chosen once per source predicate and avoid every
/// name in the signature the reifier was built for, so one reifier must be
/// shared by everything that is compared afterwards.
#[derive(Clone, Debug)]
pub struct Reifier {
    taken: BTreeSet<String>,
    names: BTreeMap<(Predicate, usize), Predicate>,
}

impl Reifier {
    pub fn new(signature: &BTreeSet<Predicate>) -> Self {
        let taken = signature.iter().map(|p| p.name().to_string()).collect();
        let mut r = Reifier {
            taken,
            names: BTreeMap::new(),
        };
        for p in signature {
            for i in 1..=p.arity() {
                if p.arity() > 2 {
                    r.component(p, i);
                }
            }
        }
        r
    }

    fn component(&mut self, p: &Predicate, i: usize) -> Predicate {
        if let Some(q) = self.names.get(&(p.clone(), i)) {
            return q.clone();
        }
        let name = fresh_name(&format!("{}_{}", p.name(), i), &self.taken);
        self.taken.insert(name.clone());
        let q = Predicate::new(&name, 2);
        self.names.insert((p.clone(), i), q.clone());
        q
    }

    /// Predicates introduced so far.
    pub fn fresh_predicates(&self) -> BTreeSet<Predicate> {
        self.names.values().cloned().collect()
    }

    /// Reifies one atom using `id` as its identifier term.
    pub fn atom(&mut self, a: &Atom, id: &Term) -> Vec<Atom> {
        if a.arity() <= 2 {
            return vec![a.clone()];
        }
        (1..=a.arity())
            .map(|i| Atom::new(self.component(a.pred(), i), vec![a.args()[i - 1].clone(), id.clone()]))
            .collect()
    }

    /// Fresh nulls, above the largest null of `j`, identify the wide atoms.
    pub fn instance(&mut self, j: &Instance) -> Instance {
        let mut next = j.max_null().map_or(0, |m| m + 1);
        let mut out = Instance::new();
        for a in j {
            if a.arity() > 2 {
                let id = Term::Null(next);
                next += 1;
                for b in self.atom(a, &id) {
                    out.insert(b);
                }
            } else {
                out.insert(a.clone());
            }
        }
        out
    }

    /// Identifiers of head atoms are existential, those of body atoms
    /// universal.
    pub fn rule(&mut self, r: &Rule) -> Rule {
        let mut taken: BTreeSet<String> = r.vars().iter().map(Term::label).collect();
        let mut body = Vec::new();
        for a in r.body() {
            let id = if a.arity() > 2 { fresh_var("a", &mut taken) } else { Term::var("_") };
            body.extend(self.atom(a, &id));
        }
        let mut head = Vec::new();
        let mut exs = r.existentials().to_vec();
        for a in r.head() {
            if a.arity() > 2 {
                let id = fresh_var("e", &mut taken);
                exs.push(id.clone());
                head.extend(self.atom(a, &id));
            } else {
                head.push(a.clone());
            }
        }
        Rule::new(r.id(), body, head, exs).expect("reification keeps rules well formed")
    }

    pub fn rules(&mut self, rs: &RuleSet) -> RuleSet {
        rs.iter().map(|r| self.rule(r)).collect()
    }

    /// Identifiers become existential variables of the query.
    pub fn cq(&mut self, q: &Cq) -> Cq {
        let mut taken: BTreeSet<String> = q.vars().iter().map(Term::label).collect();
        let mut atoms = Vec::new();
        for a in q.atoms() {
            let id = if a.arity() > 2 { fresh_var("a", &mut taken) } else { Term::var("_") };
            atoms.extend(self.atom(a, &id));
        }
        Cq::new(atoms, q.answer().to_vec()).expect("reification keeps queries well formed")
    }
}

/// Reifies a rule set with a reifier built for its own signature.
pub fn reify(rules: &RuleSet) -> RuleSet {
    Reifier::new(&rules.signature()).rules(rules)
}

/// Replaces every non-Datalog rule `B(x,y) → ∃z H(y,z)` by three rules
/// `ρ_init`, `ρ_∃`, `ρ_DL` communicating through fresh predicates; Datalog
/// rules are kept.
pub fn streamline(rules: &RuleSet) -> Result<RuleSet, SurgeryError> {
    if let Some(r) = rules.iter().find(|r| r.max_arity() > 2) {
        return Err(SurgeryError::NotBinary(r.id().to_string()));
    }
    let mut taken: BTreeSet<String> = rules.signature().iter().map(|p| p.name().to_string()).collect();
    let mut pred = |base: String, arity: usize| {
        let name = fresh_name(&base, &taken);
        taken.insert(name.clone());
        Predicate::new(&name, arity)
    };
    let mut out = Vec::new();
    for r in rules.iter() {
        if r.is_datalog() {
            out.push(r.clone());
            continue;
        }
        let rid = r.id();
        let frontier: Vec<Term> = r.frontier().into_iter().collect();
        let mut taken_vars: BTreeSet<String> = r.vars().iter().map(Term::label).collect();
        let w = fresh_var("w", &mut taken_vars);

        let mut init_head = vec![Atom::new(pred(format!("A0_{rid}"), 1), vec![w.clone()])];
        for (k, y) in frontier.iter().enumerate() {
            init_head.push(Atom::new(pred(format!("A_{rid}_{}", k + 1), 2), vec![y.clone(), w.clone()]));
        }
        let mut sources = frontier.clone();
        sources.push(w.clone());
        let mut ex_head = Vec::new();
        for (k, y) in sources.iter().enumerate() {
            for (j, z) in r.existentials().iter().enumerate() {
                ex_head.push(Atom::new(
                    pred(format!("B_{rid}_{}_{}", k + 1, j + 1), 2),
                    vec![y.clone(), z.clone()],
                ));
            }
        }
        out.push(Rule::new(format!("{rid}_init"), r.body().to_vec(), init_head.clone(), vec![w.clone()])?);
        out.push(Rule::new(format!("{rid}_ex"), init_head, ex_head.clone(), r.existentials().to_vec())?);
        out.push(Rule::new(format!("{rid}_dl"), ex_head, r.head().to_vec(), Vec::new())?);
    }
    Ok(RuleSet::new(out))
}

/// `(Datalog rules, rules with existentials)`, each in input order.
pub fn split_datalog(rules: &RuleSet) -> (RuleSet, RuleSet) {
    let (dl, ex): (Vec<Rule>, Vec<Rule>) = rules.iter().cloned().partition(Rule::is_datalog);
    (RuleSet::new(dl), RuleSet::new(ex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_facts, parse_query, parse_rules};

    #[test]
    fn encode_examples() {
        let r = encode_db(&parse_facts("E(a,b).").unwrap()).unwrap();
        assert_eq!(r.to_string(), "true -> ? v1,v2 : E(v1,v2) .");
        let r = encode_db(&parse_facts("E(a,a).").unwrap()).unwrap();
        assert_eq!(r.to_string(), "true -> ? v1 : E(v1,v1) .");
        let r = encode_db(&parse_facts("E(a,b). A(a).").unwrap()).unwrap();
        assert_eq!(r.to_string(), "true -> ? v1,v2 : A(v1), E(v1,v2) .");
        assert!(r.frontier().is_empty());
        assert_eq!(encode_db(&Instance::new()), Err(SurgeryError::EmptyDatabase));
    }

    #[test]
    fn reify_examples() {
        let rs = parse_rules("R(x,y), T(x,y,u) -> ? z : T(x,y,z) .").unwrap();
        let out = reify(&rs);
        assert_eq!(out.to_string(), "R(x,y), T_1(x,a1), T_2(y,a1), T_3(u,a1) -> ? z,e1 : T_1(x,e1), T_2(y,e1), T_3(z,e1) .\n");
        let mut rf = Reifier::new(&rs.signature());
        let j = rf.instance(&parse_facts("T(a,b,c). R(a,b).").unwrap());
        assert_eq!(j.len(), 5);
        let q = rf.cq(&parse_query("?(x) <- T(x,y,y).").unwrap());
        assert_eq!(q.atoms().len(), 3);
        assert_eq!(q.existential_vars().len(), 2);
    }

    #[test]
    fn reify_avoids_name_clashes() {
        let rs = parse_rules("T(x,y,z), T_1(x,y) -> P(x) .").unwrap();
        let out = reify(&rs);
        let names: BTreeSet<String> = out.signature().iter().map(|p| p.name().to_string()).collect();
        assert!(names.contains("T_1_"));
        assert!(names.contains("T_1"));
    }

    #[test]
    fn streamline_shape() {
        let rs = parse_rules("E(x,y) -> ? z : E(y,z) .\nE(x,y), E(y,z) -> E(x,z) .").unwrap();
        let out = streamline(&rs).unwrap();
        assert_eq!(out.len(), 4);
        let text = out.to_string();
        assert!(text.contains("[r1_init] E(x,y) -> ? w1 : A0_r1(w1), A_r1_1(y,w1) ."), "{text}");
        assert!(text.contains("[r1_ex] A0_r1(w1), A_r1_1(y,w1) -> ? z : B_r1_1_1(y,z), B_r1_2_1(w1,z) ."), "{text}");
        assert!(text.contains("[r1_dl] B_r1_1_1(y,z), B_r1_2_1(w1,z) -> E(y,z) ."), "{text}");
        assert!(streamline(&parse_rules("T(x,y,z) -> ? u : E(x,u) .").unwrap()).is_err());
    }

    #[test]
    fn split() {
        let rs = parse_rules("E(x,y) -> ? z : E(y,z) .\nE(x,y), E(y,z) -> E(x,z) .").unwrap();
        let (dl, ex) = split_datalog(&rs);
        assert_eq!(dl.rules()[0].id(), "r2");
        assert_eq!(ex.rules()[0].id(), "r1");
    }
}
