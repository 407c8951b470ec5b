//! Answers shared by the engine and the oracle.

use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Con(String, Vec<Term>),
    Lit(i64),
    /// An unbound free variable, numbered by first occurrence.
    Free(usize),
    /// A partial application left in the result.
    Partial { head: String, missing: usize, args: Vec<Term> },
}

impl Term {
    pub fn con(name: &str, args: Vec<Term>) -> Term {
        Term::Con(name.to_string(), args)
    }

    pub fn atom(name: &str) -> Term {
        Term::Con(name.to_string(), vec![])
    }

    /// Renumbers free variables by first occurrence, left to right.
    pub fn canonical(&self) -> Term {
        fn go(t: &Term, map: &mut HashMap<usize, usize>) -> Term {
            match t {
                Term::Free(i) => {
                    let n = map.len();
                    Term::Free(*map.entry(*i).or_insert(n))
                }
                Term::Lit(l) => Term::Lit(*l),
                Term::Con(c, args) => Term::Con(c.clone(), args.iter().map(|a| go(a, map)).collect()),
                Term::Partial { head, missing, args } => Term::Partial {
                    head: head.clone(),
                    missing: *missing,
                    args: args.iter().map(|a| go(a, map)).collect(),
                },
            }
        }
        go(self, &mut HashMap::new())
    }

    fn is_compound(&self) -> bool {
        match self {
            Term::Con(_, args) | Term::Partial { args, .. } => !args.is_empty(),
            Term::Lit(l) => *l < 0,
            Term::Free(_) => false,
        }
    }

    fn write_arg(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_compound() {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// `_a`, `_b`, ..., `_z`, `_a1`, `_b1`, ...
pub fn free_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    match i / 26 {
        0 => format!("_{letter}"),
        k => format!("_{letter}{k}"),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Lit(l) => write!(f, "{l}"),
            Term::Free(i) => f.write_str(&free_name(*i)),
            Term::Con(c, args) | Term::Partial { head: c, args, .. } => {
                f.write_str(c)?;
                for a in args {
                    f.write_str(" ")?;
                    a.write_arg(f)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Value(Term),
    Failure,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(t) => write!(f, "{t}"),
            Outcome::Failure => f.write_str("<fail>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub outcome: Outcome,
    /// Backtracking frames on the stack when the answer was produced.
    pub frames: usize,
}

impl Answer {
    pub fn value(t: Term) -> Answer {
        Answer { outcome: Outcome::Value(t), frames: 0 }
    }

    pub fn is_value(&self) -> bool {
        matches!(self.outcome, Outcome::Value(_))
    }

    pub fn term(&self) -> Option<&Term> {
        match &self.outcome {
            Outcome::Value(t) => Some(t),
            Outcome::Failure => None,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curry_style_printing() {
        let t = Term::con("Cons", vec![Term::Lit(1), Term::con("Cons", vec![Term::Lit(-2), Term::atom("Nil")])]);
        assert_eq!(t.to_string(), "Cons 1 (Cons (-2) Nil)");
        assert_eq!(Term::con("Pair", vec![Term::Free(0), Term::Free(1)]).to_string(), "Pair _a _b");
        assert_eq!(free_name(27), "_b1");
        assert_eq!(Outcome::Failure.to_string(), "<fail>");
    }

    #[test]
    fn canonical_renames_by_first_occurrence() {
        let t = Term::con("P", vec![Term::Free(7), Term::Free(3), Term::Free(7)]);
        assert_eq!(t.canonical(), Term::con("P", vec![Term::Free(0), Term::Free(1), Term::Free(0)]));
    }
}
