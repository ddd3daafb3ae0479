//! Terms, atoms, instances, rules and conjunctive queries.
//!
//! Every value in this module is immutable once built and cheap to clone:
//! identifiers are reference-counted strings and atoms are small vectors.
//! Instances always contain the nullary fact `true` (written ⊤ below).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

/// Interned identifier.
pub type Name = Arc<str>;

/// A finite map from terms to terms. Terms outside the domain are left alone.
pub type Substitution = BTreeMap<Term, Term>;

/// Constants come from parsed facts, variables from rules and queries, and
/// nulls are the fresh terms invented by the chase (or by renaming apart).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Name),
    Var(Name),
    Null(u32),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Const(Arc::from(name))
    }

    pub fn var(name: &str) -> Self {
        Term::Var(Arc::from(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    /// Printed label: the identifier for constants and variables, `_n<k>` for nulls.
    pub fn label(&self) -> String {
        match self {
            Term::Const(n) | Term::Var(n) => n.to_string(),
            Term::Null(k) => format!("_n{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    name: Name,
    arity: usize,
}

const TOP_NAME: &str = "true";

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Self {
        Predicate {
            name: Arc::from(name),
            arity,
        }
    }

    /// The nullary predicate of the fact ⊤.
    pub fn top() -> Self {
        Predicate::new(TOP_NAME, 0)
    }

    pub fn is_top(&self) -> bool {
        self.arity == 0 && &*self.name == TOP_NAME
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pred: Predicate,
    args: Vec<Term>,
}

impl Atom {
    /// Panics if the number of arguments differs from the predicate arity.
    pub fn new(pred: Predicate, args: Vec<Term>) -> Self {
        assert_eq!(
            pred.arity(),
            args.len(),
            "arity mismatch for predicate {}",
            pred.name()
        );
        Atom { pred, args }
    }

    pub fn top() -> Self {
        Atom::new(Predicate::top(), Vec::new())
    }

    /// Shorthand for tests and examples: `Atom::parse_like("E", &[x, y])`.
    pub fn build(pred: &str, args: &[Term]) -> Self {
        Atom::new(Predicate::new(pred, args.len()), args.to_vec())
    }

    pub fn pred(&self) -> &Predicate {
        &self.pred
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_top(&self) -> bool {
        self.pred.is_top()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Term> {
        self.args.iter().filter(|t| t.is_var())
    }

    /// Replaces every argument in the domain of `subst` by its image.
    pub fn apply(&self, subst: &Substitution) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self
                .args
                .iter()
                .map(|t| subst.get(t).cloned().unwrap_or_else(|| t.clone()))
                .collect(),
        }
    }
}

/// Applies `subst` to a single atom.
pub fn apply_substitution(atom: &Atom, subst: &Substitution) -> Atom {
    atom.apply(subst)
}

/// Active domain of a collection of atoms.
pub fn adom<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Term> {
    atoms
        .into_iter()
        .flat_map(|a| a.args().iter().cloned())
        .collect()
}

/// Variables of a collection of atoms.
pub fn vars_of<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Term> {
    atoms
        .into_iter()
        .flat_map(|a| a.vars().cloned())
        .collect()
}

/// Set of predicates of a collection of atoms.
pub fn signature_of<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Predicate> {
    atoms.into_iter().map(|a| a.pred().clone()).collect()
}

/// A finite set of atoms that always contains ⊤.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    atoms: BTreeSet<Atom>,
}

impl Default for Instance {
    fn default() -> Self {
        Self::new()
    }
}

impl Instance {
    /// The instance {⊤}.
    pub fn new() -> Self {
        let mut atoms = BTreeSet::new();
        atoms.insert(Atom::top());
        Instance { atoms }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut inst = Instance::new();
        inst.atoms.extend(atoms);
        inst
    }

    pub fn insert(&mut self, atom: Atom) -> bool {
        self.atoms.insert(atom)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    /// Number of atoms, ⊤ included.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// True for the instance {⊤}.
    pub fn is_trivial(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn adom(&self) -> BTreeSet<Term> {
        adom(&self.atoms)
    }

    pub fn signature(&self) -> BTreeSet<Predicate> {
        signature_of(&self.atoms)
    }

    pub fn max_arity(&self) -> usize {
        self.atoms.iter().map(Atom::arity).max().unwrap_or(0)
    }

    /// Atoms over predicates of `sig`; ⊤ is always kept.
    pub fn restrict(&self, sig: &BTreeSet<Predicate>) -> Instance {
        Instance::from_atoms(
            self.atoms
                .iter()
                .filter(|a| sig.contains(a.pred()))
                .cloned(),
        )
    }

    pub fn max_null(&self) -> Option<u32> {
        self.adom()
            .into_iter()
            .filter_map(|t| match t {
                Term::Null(k) => Some(k),
                _ => None,
            })
            .max()
    }

    pub fn apply(&self, subst: &Substitution) -> Instance {
        Instance::from_atoms(self.atoms.iter().map(|a| a.apply(subst)))
    }

    /// `self ∪ σ(other)` where σ renames every term of `other` to a fresh
    /// null occurring in neither instance.
    pub fn disjoint_union(&self, other: &Instance) -> Instance {
        let mut next = self
            .max_null()
            .max(other.max_null())
            .map_or(1, |k| k + 1);
        let mut rename = Substitution::new();
        for t in other.adom() {
            rename.insert(t, Term::Null(next));
            next += 1;
        }
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().map(|a| a.apply(&rename)));
        out
    }
}

impl FromIterator<Atom> for Instance {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        Instance::from_atoms(iter)
    }
}

impl<'a> IntoIterator for &'a Instance {
    type Item = &'a Atom;
    type IntoIter = std::collections::btree_set::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.atoms.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("rule {0} has an empty body")]
    EmptyBody(String),
    #[error("rule {0} has an empty head")]
    EmptyHead(String),
    #[error("rule {rule}: existential variable {var} occurs in the body")]
    ExistentialInBody { rule: String, var: String },
    #[error("rule {rule}: head variable {var} is neither in the body nor declared existential")]
    UndeclaredHeadVariable { rule: String, var: String },
    #[error("{0}: nulls may not occur in rules or queries")]
    NullInSyntax(String),
    #[error("existential {0} is not a variable")]
    NonVariableExistential(String),
    #[error("query has no atoms")]
    EmptyQuery,
    #[error("answer variable {0} does not occur in the query atoms")]
    AnswerNotInBody(String),
    #[error("answer position holds {0}, which is not a variable")]
    NonVariableAnswer(String),
    #[error("disjunct with {found} answer positions in a union of arity {expected}")]
    AnswerArity { expected: usize, found: usize },
}

/// An existential rule `body → ∃ existentials. head`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    id: String,
    body: Vec<Atom>,
    head: Vec<Atom>,
    existentials: Vec<Term>,
}

fn dedup_sorted(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort();
    atoms.dedup();
    atoms
}

impl Rule {
    pub fn new(
        id: impl Into<String>,
        body: Vec<Atom>,
        head: Vec<Atom>,
        existentials: Vec<Term>,
    ) -> Result<Rule, ModelError> {
        let id = id.into();
        if body.is_empty() {
            return Err(ModelError::EmptyBody(id));
        }
        if head.is_empty() {
            return Err(ModelError::EmptyHead(id));
        }
        let body = dedup_sorted(body);
        let head = dedup_sorted(head);
        if body.iter().chain(&head).flat_map(Atom::args).any(Term::is_null) {
            return Err(ModelError::NullInSyntax(id));
        }
        let mut seen = BTreeSet::new();
        let mut exs = Vec::new();
        for z in existentials {
            if !z.is_var() {
                return Err(ModelError::NonVariableExistential(z.label()));
            }
            if seen.insert(z.clone()) {
                exs.push(z);
            }
        }
        let body_vars = vars_of(&body);
        if let Some(z) = exs.iter().find(|z| body_vars.contains(*z)) {
            return Err(ModelError::ExistentialInBody {
                rule: id,
                var: z.label(),
            });
        }
        if let Some(v) = vars_of(&head)
            .into_iter()
            .find(|v| !body_vars.contains(v) && !seen.contains(v))
        {
            return Err(ModelError::UndeclaredHeadVariable {
                rule: id,
                var: v.label(),
            });
        }
        Ok(Rule {
            id,
            body,
            head,
            existentials: exs,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Rule {
        self.id = id.into();
        self
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    /// Existential variables in declaration order.
    pub fn existentials(&self) -> &[Term] {
        &self.existentials
    }

    /// Variables shared by body and head.
    pub fn frontier(&self) -> BTreeSet<Term> {
        let head_vars = vars_of(&self.head);
        vars_of(&self.body)
            .into_iter()
            .filter(|v| head_vars.contains(v))
            .collect()
    }

    pub fn body_vars(&self) -> BTreeSet<Term> {
        vars_of(&self.body)
    }

    pub fn vars(&self) -> BTreeSet<Term> {
        vars_of(self.body.iter().chain(&self.head))
    }

    pub fn is_datalog(&self) -> bool {
        self.existentials.is_empty()
    }

    pub fn signature(&self) -> BTreeSet<Predicate> {
        signature_of(self.body.iter().chain(&self.head))
    }

    pub fn max_arity(&self) -> usize {
        self.body
            .iter()
            .chain(&self.head)
            .map(Atom::arity)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleSet { rules }
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub fn get(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id() == id)
    }

    pub fn signature(&self) -> BTreeSet<Predicate> {
        self.rules.iter().flat_map(Rule::signature).collect()
    }

    pub fn max_arity(&self) -> usize {
        self.rules.iter().map(Rule::max_arity).max().unwrap_or(0)
    }

    pub fn is_at_most_binary(&self) -> bool {
        self.max_arity() <= 2
    }

    /// Union keeping `self`'s rules first.
    pub fn union(&self, other: &RuleSet) -> RuleSet {
        let mut rules = self.rules.clone();
        rules.extend(other.rules.iter().cloned());
        RuleSet { rules }
    }
}

impl FromIterator<Rule> for RuleSet {
    fn from_iter<T: IntoIterator<Item = Rule>>(iter: T) -> Self {
        RuleSet::new(iter.into_iter().collect())
    }
}

/// Conjunctive query: a nonempty atom set plus a tuple of answer variables.
///
/// Atoms are kept sorted and deduplicated, and ⊤ is dropped as soon as any
/// other atom is present (every instance contains it).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cq {
    atoms: Vec<Atom>,
    answer: Vec<Term>,
}

impl Cq {
    pub fn new(atoms: Vec<Atom>, answer: Vec<Term>) -> Result<Cq, ModelError> {
        let mut atoms = dedup_sorted(atoms);
        if atoms.is_empty() {
            return Err(ModelError::EmptyQuery);
        }
        if atoms.len() > 1 {
            atoms.retain(|a| !a.is_top());
        }
        if atoms.iter().flat_map(Atom::args).any(Term::is_null) {
            return Err(ModelError::NullInSyntax("query".into()));
        }
        let vars = vars_of(&atoms);
        for x in &answer {
            if !x.is_var() {
                return Err(ModelError::NonVariableAnswer(x.label()));
            }
            if !vars.contains(x) {
                return Err(ModelError::AnswerNotInBody(x.label()));
            }
        }
        Ok(Cq { atoms, answer })
    }

    pub fn boolean(atoms: Vec<Atom>) -> Result<Cq, ModelError> {
        Cq::new(atoms, Vec::new())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn answer(&self) -> &[Term] {
        &self.answer
    }

    pub fn arity(&self) -> usize {
        self.answer.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.answer.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Term> {
        vars_of(&self.atoms)
    }

    /// Variables not in the answer tuple.
    pub fn existential_vars(&self) -> BTreeSet<Term> {
        let ans: BTreeSet<&Term> = self.answer.iter().collect();
        self.vars()
            .into_iter()
            .filter(|v| !ans.contains(v))
            .collect()
    }

    pub fn signature(&self) -> BTreeSet<Predicate> {
        signature_of(&self.atoms)
    }

    /// Applies `subst` to atoms and answer tuple. The image must again be a
    /// valid query (variables mapped to variables).
    pub fn apply(&self, subst: &Substitution) -> Result<Cq, ModelError> {
        Cq::new(
            self.atoms.iter().map(|a| a.apply(subst)).collect(),
            self.answer
                .iter()
                .map(|t| subst.get(t).cloned().unwrap_or_else(|| t.clone()))
                .collect(),
        )
    }
}

/// Union of conjunctive queries over a shared answer arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ucq {
    answer: Vec<Term>,
    disjuncts: Vec<Cq>,
}

impl Ucq {
    pub fn new(answer: Vec<Term>, disjuncts: Vec<Cq>) -> Result<Ucq, ModelError> {
        if let Some(d) = disjuncts.iter().find(|d| d.arity() != answer.len()) {
            return Err(ModelError::AnswerArity {
                expected: answer.len(),
                found: d.arity(),
            });
        }
        Ok(Ucq { answer, disjuncts })
    }

    pub fn single(q: Cq) -> Ucq {
        Ucq {
            answer: q.answer().to_vec(),
            disjuncts: vec![q],
        }
    }

    pub fn answer(&self) -> &[Term] {
        &self.answer
    }

    pub fn arity(&self) -> usize {
        self.answer.len()
    }

    pub fn disjuncts(&self) -> &[Cq] {
        &self.disjuncts
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }
}

/// `y` is compatible with `x`: same length, and equal positions in `x` stay
/// equal in `y`.
pub fn is_compatible(y: &[Term], x: &[Term]) -> bool {
    y.len() == x.len()
        && (0..x.len()).all(|i| (0..x.len()).all(|j| x[i] != x[j] || y[i] == y[j]))
}

/// `y` is a specialization of `x`: compatible, and every position either
/// keeps its variable or takes the variable of a position that kept its own.
pub fn is_specialization(y: &[Term], x: &[Term]) -> bool {
    is_compatible(y, x)
        && (0..x.len()).all(|i| y[i] == x[i] || (0..x.len()).any(|j| y[i] == y[j] && y[j] == x[j]))
}

/// All specializations of `t`, sorted.
///
/// A specialization is the image of `t` under an idempotent map of its
/// support onto a subset of fixed points; we enumerate those maps directly.
pub fn specializations(t: &[Term]) -> Vec<Vec<Term>> {
    let mut support: Vec<&Term> = Vec::new();
    for x in t {
        if !support.contains(&x) {
            support.push(x);
        }
    }
    let n = support.len();
    let mut out = BTreeSet::new();
    if n == 0 {
        out.insert(Vec::new());
        return out.into_iter().collect();
    }
    for fixed_mask in 1u32..(1 << n) {
        let fixed: Vec<usize> = (0..n).filter(|i| fixed_mask & (1 << i) != 0).collect();
        let moving: Vec<usize> = (0..n).filter(|i| fixed_mask & (1 << i) == 0).collect();
        let combos = fixed.len().pow(moving.len() as u32);
        for mut code in 0..combos {
            let mut image: Vec<usize> = (0..n).collect();
            for &m in &moving {
                image[m] = fixed[code % fixed.len()];
                code /= fixed.len();
            }
            let tuple = t
                .iter()
                .map(|x| {
                    let i = support.iter().position(|s| *s == x).unwrap();
                    support[image[i]].clone()
                })
                .collect::<Vec<_>>();
            out.insert(tuple);
        }
    }
    out.into_iter().collect()
}
