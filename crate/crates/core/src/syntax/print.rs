//! Concrete syntax for the model types; the inverse of the parser.

use std::fmt;

use crate::model::{Atom, Cq, Instance, Predicate, Rule, RuleSet, Term, Ucq};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name(), self.arity())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_top() {
            return f.write_str("true");
        }
        write!(f, "{}(", self.pred().name())?;
        for (i, t) in self.args().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// One fact per line; ⊤ is implicit and omitted.
impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.iter().filter(|a| !a.is_top()) {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, self.body())?;
        f.write_str(" -> ")?;
        if !self.existentials().is_empty() {
            f.write_str("? ")?;
            for (i, z) in self.existentials().iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{z}")?;
            }
            f.write_str(" : ")?;
        }
        join(f, self.head())?;
        f.write_str(" .")
    }
}

/// One rule per line; labels are printed only where they differ from the
/// positional default, so parsing the output reproduces the ids.
impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.iter().enumerate() {
            if r.id() != format!("r{}", i + 1) {
                write!(f, "[{}] ", r.id())?;
            }
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("?(")?;
        for (i, x) in self.answer().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(") <- ")?;
        join(f, self.atoms())?;
        f.write_str(" .")
    }
}

impl fmt::Display for Ucq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in self.disjuncts() {
            writeln!(f, "{q}")?;
        }
        Ok(())
    }
}
