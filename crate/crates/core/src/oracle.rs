//! A reference interpreter for the natural semantics of first-order
//! FlatCurry, with left-first depth-first search over choices and guesses.
//!
//! The interpreter works on expressions and a persistent heap. It shares
//! nothing with the engine besides the AST and the answer type.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::answer::{Answer, Outcome, Term};
use crate::ast::{Expr, FuncDef, Pattern, Program, RProgram, APPLY};

/// Variable to expression. A variable mapped to itself is a logic variable.
pub type NatHeap = im_rc::HashMap<String, Expr>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NatValue {
    Con(String, Vec<String>),
    Lit(i64),
    Free(String),
}

impl NatValue {
    fn to_expr(&self) -> Expr {
        match self {
            NatValue::Con(c, xs) => Expr::ConApp(c.clone(), xs.iter().map(|x| Expr::Var(x.clone())).collect()),
            NatValue::Lit(l) => Expr::Lit(*l),
            NatValue::Free(x) => Expr::Var(x.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("higher-order program: `{0}` is not supported by the reference interpreter")]
    HigherOrder(String),
    #[error("undefined function `{0}`")]
    UnknownFunction(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("entry `{0}` is missing or takes arguments")]
    Entry(String),
    #[error("step budget of {0} exhausted")]
    StepBudget(u64),
    #[error("derivation nested deeper than {0} levels")]
    DepthLimit(usize),
    #[error("type error: {0}")]
    Type(String),
}

impl OracleError {
    pub fn is_truncation(&self) -> bool {
        matches!(self, OracleError::StepBudget(_) | OracleError::DepthLimit(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_steps: u64,
    pub max_answers: Option<usize>,
    pub max_depth: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_steps: 10_000_000, max_answers: None, max_depth: 100_000 }
    }
}

impl OracleLimits {
    pub fn with_steps(max_steps: u64) -> OracleLimits {
        OracleLimits { max_steps, ..OracleLimits::default() }
    }
}

/// Rule firing counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NatCounts {
    pub var_cons: u64,
    pub var_exp: u64,
    pub val: u64,
    pub fun: u64,
    pub let_: u64,
    pub or: u64,
    pub select: u64,
    pub guess: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleStop {
    Exhausted,
    AnswerLimit,
    Truncated(OracleError),
    Error(OracleError),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub answers: Vec<Answer>,
    pub stop: OracleStop,
    pub steps: u64,
    pub counts: NatCounts,
}

impl OracleResult {
    pub fn values(&self) -> Vec<Term> {
        self.answers.iter().filter_map(|a| a.term().cloned()).collect()
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.stop, OracleStop::Truncated(_))
    }
}

enum Halt {
    AnswerLimit,
    Error(OracleError),
}

impl From<OracleError> for Halt {
    fn from(e: OracleError) -> Self {
        Halt::Error(e)
    }
}

type Flow = Result<(), Halt>;

pub struct Nat<'p> {
    functions: HashMap<&'p str, &'p FuncDef>,
    limits: OracleLimits,
    steps: u64,
    depth: usize,
    fresh: u64,
    pub counts: NatCounts,
}

fn is_hnf(e: &Expr) -> bool {
    match e {
        Expr::Lit(_) => true,
        Expr::ConApp(_, args) => args.iter().all(Expr::is_var),
        _ => false,
    }
}

fn rename(e: &Expr, map: &HashMap<String, String>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
        let r = |e: &Expr| rename(e, map);
        let without = |names: &mut dyn Iterator<Item = &String>| {
            let mut m = map.clone();
            for x in names {
                m.remove(x);
            }
            m
        };
        match e {
            Expr::Var(x) => Expr::Var(map.get(x).cloned().unwrap_or_else(|| x.clone())),
            Expr::Bot | Expr::Lit(_) | Expr::Part(_) => e.clone(),
            Expr::Choice(a, b) => Expr::choice(r(a), r(b)),
            Expr::FunApp(f, args) => Expr::FunApp(f.clone(), args.iter().map(r).collect()),
            Expr::ConApp(c, args) => Expr::ConApp(c.clone(), args.iter().map(r).collect()),
            Expr::Apply(h, args) => Expr::Apply(Box::new(r(h)), args.iter().map(r).collect()),
            Expr::Let(bs, body) => {
                let m = without(&mut bs.iter().map(|(x, _)| x));
                Expr::Let(
                    bs.iter().map(|(x, e)| (x.clone(), rename(e, &m))).collect(),
                    Box::new(rename(body, &m)),
                )
            }
            Expr::Free(xs, body) => {
                let m = without(&mut xs.iter());
                Expr::Free(xs.clone(), Box::new(rename(body, &m)))
            }
            Expr::Case(s, brs) => Expr::Case(
                Box::new(r(s)),
                brs.iter()
                    .map(|(p, e)| (p.clone(), rename(e, &without(&mut p.vars().iter()))))
                    .collect(),
            ),
        }
    })
}

fn first_higher_order(p: &Program) -> Option<String> {
    p.functions.iter().find(|f| f.body.is_higher_order()).map(|f| f.name.clone())
}

impl<'p> Nat<'p> {
    pub fn new(p: &'p Program, limits: OracleLimits) -> Result<Nat<'p>, OracleError> {
        if let Some(f) = first_higher_order(p) {
            return Err(OracleError::HigherOrder(f));
        }
        Ok(Nat {
            functions: p.functions.iter().map(|f| (f.name.as_str(), f)).collect(),
            limits,
            steps: 0,
            depth: 0,
            fresh: 0,
            counts: NatCounts::default(),
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// A heap variable no source program can mention.
    fn fresh_var(&mut self) -> String {
        self.fresh += 1;
        format!("${}", self.fresh)
    }

    fn tick(&mut self) -> Flow {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(OracleError::StepBudget(self.limits.max_steps).into());
        }
        Ok(())
    }

    /// Binds every non-variable argument to a fresh heap variable.
    fn atomize(&mut self, mut h: NatHeap, args: &[Expr]) -> (NatHeap, Vec<String>) {
        let mut vars = Vec::with_capacity(args.len());
        for a in args {
            match a {
                Expr::Var(x) => vars.push(x.clone()),
                e => {
                    let y = self.fresh_var();
                    h.insert(y.clone(), e.clone());
                    vars.push(y);
                }
            }
        }
        (h, vars)
    }

    /// Every head normal form of `e`, in left-first order, passed to `k`.
    fn hnf(&mut self, h: NatHeap, e: &Expr, k: &mut dyn FnMut(&mut Self, NatHeap, NatValue) -> Flow) -> Flow {
        self.tick()?;
        if self.depth >= self.limits.max_depth {
            return Err(OracleError::DepthLimit(self.limits.max_depth).into());
        }
        self.depth += 1;
        let r = stacker::maybe_grow(256 * 1024, 8 * 1024 * 1024, || self.hnf_inner(h, e, k));
        self.depth -= 1;
        r
    }

    fn hnf_inner(&mut self, h: NatHeap, e: &Expr, k: &mut dyn FnMut(&mut Self, NatHeap, NatValue) -> Flow) -> Flow {
        match e {
            Expr::Var(x) => {
                let bound = h.get(x).cloned().ok_or_else(|| OracleError::Unbound(x.clone()))?;
                match bound {
                    Expr::Var(y) if y == *x => {
                        self.counts.val += 1;
                        k(self, h, NatValue::Free(y))
                    }
                    t if is_hnf(&t) => {
                        self.counts.var_cons += 1;
                        let v = match t {
                            Expr::Lit(l) => NatValue::Lit(l),
                            Expr::ConApp(c, args) => NatValue::Con(
                                c,
                                args.into_iter()
                                    .map(|a| match a {
                                        Expr::Var(a) => a,
                                        _ => unreachable!(),
                                    })
                                    .collect(),
                            ),
                            _ => unreachable!(),
                        };
                        k(self, h, v)
                    }
                    t => {
                        self.counts.var_exp += 1;
                        let x = x.clone();
                        self.hnf(h, &t, &mut |o, d, v| {
                            let d = d.update(x.clone(), v.to_expr());
                            k(o, d, v)
                        })
                    }
                }
            }
            Expr::Lit(l) => {
                self.counts.val += 1;
                k(self, h, NatValue::Lit(*l))
            }
            Expr::ConApp(c, args) => {
                self.counts.val += 1;
                let (h, vars) = self.atomize(h, args);
                k(self, h, NatValue::Con(c.clone(), vars))
            }
            // No rule applies to failure.
            Expr::Bot => Ok(()),
            Expr::Choice(a, b) => {
                self.counts.or += 1;
                self.hnf(h.clone(), a, k)?;
                self.hnf(h, b, k)
            }
            Expr::FunApp(f, _) if f == APPLY => Err(OracleError::HigherOrder(f.clone()).into()),
            Expr::FunApp(f, args) => {
                let def = *self.functions.get(f.as_str()).ok_or_else(|| OracleError::UnknownFunction(f.clone()))?;
                if def.params.len() != args.len() {
                    return Err(OracleError::Type(format!("`{f}` applied to {} argument(s)", args.len())).into());
                }
                self.counts.fun += 1;
                let (h, ys) = self.atomize(h, args);
                let rho = def.params.iter().cloned().zip(ys).collect();
                let body = rename(&def.body, &rho);
                self.hnf(h, &body, k)
            }
            Expr::Let(bs, body) => {
                self.counts.let_ += 1;
                let rho: HashMap<String, String> = bs.iter().map(|(x, _)| (x.clone(), self.fresh_var())).collect();
                let mut h = h;
                for (x, e) in bs {
                    h.insert(rho[x].clone(), rename(e, &rho));
                }
                self.hnf(h, &rename(body, &rho), k)
            }
            Expr::Free(xs, body) => {
                let rho: HashMap<String, String> = xs.iter().map(|x| (x.clone(), self.fresh_var())).collect();
                let mut h = h;
                for y in rho.values() {
                    h.insert(y.clone(), Expr::Var(y.clone()));
                }
                self.hnf(h, &rename(body, &rho), k)
            }
            Expr::Case(s, branches) => self.hnf(h, s, &mut |o, d, v| o.select(d, v, branches, k)),
            Expr::Apply(..) | Expr::Part(_) => Err(OracleError::HigherOrder(crate::frontend::print_expr(e)).into()),
        }
    }

    /// (Nat-Select) and (Nat-Guess).
    fn select(
        &mut self,
        h: NatHeap,
        v: NatValue,
        branches: &[(Pattern, Expr)],
        k: &mut dyn FnMut(&mut Self, NatHeap, NatValue) -> Flow,
    ) -> Flow {
        match v {
            NatValue::Con(c, zs) => {
                let Some((Pattern::Con(_, ys), body)) =
                    branches.iter().find(|(p, _)| matches!(p, Pattern::Con(d, _) if *d == c))
                else {
                    return Ok(());
                };
                if ys.len() != zs.len() {
                    return Err(OracleError::Type(format!("constructor `{c}` has the wrong arity")).into());
                }
                self.counts.select += 1;
                let rho = ys.iter().cloned().zip(zs).collect();
                self.hnf(h, &rename(body, &rho), k)
            }
            NatValue::Lit(l) => match branches.iter().find(|(p, _)| *p == Pattern::Lit(l)) {
                Some((_, body)) => {
                    self.counts.select += 1;
                    self.hnf(h, body, k)
                }
                None => Ok(()),
            },
            NatValue::Free(x) => {
                for (p, body) in branches {
                    self.counts.guess += 1;
                    let mut d = h.clone();
                    match p {
                        Pattern::Lit(l) => {
                            d.insert(x.clone(), Expr::Lit(*l));
                            self.hnf(d, body, k)?;
                        }
                        Pattern::Con(c, ys) => {
                            let zs: Vec<String> = ys.iter().map(|_| self.fresh_var()).collect();
                            for z in &zs {
                                d.insert(z.clone(), Expr::Var(z.clone()));
                            }
                            d.insert(x.clone(), Expr::ConApp(c.clone(), zs.iter().map(|z| Expr::Var(z.clone())).collect()));
                            let rho = ys.iter().cloned().zip(zs).collect();
                            self.hnf(d, &rename(body, &rho), k)?;
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Normalizes the children of a head normal form left to right, then
    /// hands the final heap to `k`.
    fn norm_value(&mut self, h: NatHeap, v: &NatValue, k: &mut dyn FnMut(&mut Self, NatHeap) -> Flow) -> Flow {
        match v {
            NatValue::Con(_, zs) => self.norm_vars(h, zs, k),
            _ => k(self, h),
        }
    }

    fn norm_vars(&mut self, h: NatHeap, zs: &[String], k: &mut dyn FnMut(&mut Self, NatHeap) -> Flow) -> Flow {
        let Some((z, rest)) = zs.split_first() else {
            return k(self, h);
        };
        self.hnf(h, &Expr::Var(z.clone()), &mut |o, d, v| o.norm_value(d, &v, &mut |o, d| o.norm_vars(d, rest, k)))
    }

    fn read_var(&self, h: &NatHeap, x: &str, names: &mut HashMap<String, usize>, depth: usize) -> Result<Term, OracleError> {
        if depth > self.limits.max_depth {
            return Err(OracleError::DepthLimit(self.limits.max_depth));
        }
        let mut x = x.to_string();
        loop {
            match h.get(&x) {
                Some(Expr::Var(y)) if *y == x => {
                    let next = names.len();
                    return Ok(Term::Free(*names.entry(x).or_insert(next)));
                }
                Some(Expr::Var(y)) => x = y.clone(),
                Some(e) if is_hnf(e) => {
                    return self.read_expr(h, e, names, depth);
                }
                _ => return Err(OracleError::Type(format!("`{x}` is not in normal form"))),
            }
        }
    }

    fn read_expr(&self, h: &NatHeap, e: &Expr, names: &mut HashMap<String, usize>, depth: usize) -> Result<Term, OracleError> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || match e {
            Expr::Lit(l) => Ok(Term::Lit(*l)),
            Expr::ConApp(c, args) => Ok(Term::Con(
                c.clone(),
                args.iter()
                    .map(|a| match a {
                        Expr::Var(z) => self.read_var(h, z, names, depth + 1),
                        _ => Err(OracleError::Type("unatomized constructor argument".into())),
                    })
                    .collect::<Result<_, _>>()?,
            )),
            Expr::Var(x) => self.read_var(h, x, names, depth),
            _ => Err(OracleError::Type("not a normal form".into())),
        })
    }

    /// Every head normal form of `e` under `heap` up to the budget, with
    /// the error that cut the search short, if any.
    pub fn nat_hnf(&mut self, heap: NatHeap, e: &Expr) -> (Vec<(NatHeap, NatValue)>, Option<OracleError>) {
        let mut out = Vec::new();
        let r = self.hnf(heap, e, &mut |_, d, v| {
            out.push((d, v));
            Ok(())
        });
        let err = match r {
            Ok(()) | Err(Halt::AnswerLimit) => None,
            Err(Halt::Error(e)) => Some(e),
        };
        (out, err)
    }

    /// Every normal form of `e` under `heap`, in left-first order.
    pub fn nat_normalize(&mut self, heap: NatHeap, e: &Expr) -> (Vec<Answer>, OracleStop) {
        let mut answers = Vec::new();
        let max = self.limits.max_answers;
        let r = self.hnf(heap, e, &mut |o, d, v| {
            let root = v.clone();
            o.norm_value(d, &v, &mut |o, d| {
                let term = o.read_expr(&d, &root.to_expr(), &mut HashMap::new(), 0)?;
                answers.push(Answer { outcome: Outcome::Value(term), frames: 0 });
                if max.is_some_and(|m| answers.len() >= m) {
                    return Err(Halt::AnswerLimit);
                }
                Ok(())
            })
        });
        let stop = match r {
            Ok(()) => OracleStop::Exhausted,
            Err(Halt::AnswerLimit) => OracleStop::AnswerLimit,
            Err(Halt::Error(e)) if e.is_truncation() => OracleStop::Truncated(e),
            Err(Halt::Error(e)) => OracleStop::Error(e),
        };
        (answers, stop)
    }
}

/// Enumerates the answers of `main` by the natural semantics.
pub fn run_oracle(p: &Program, limits: OracleLimits) -> Result<OracleResult, OracleError> {
    match p.function(&p.entry) {
        Some(f) if f.params.is_empty() => {}
        _ => return Err(OracleError::Entry(p.entry.clone())),
    }
    let mut nat = Nat::new(p, limits)?;
    let (answers, stop) = nat.nat_normalize(NatHeap::new(), &Expr::FunApp(p.entry.clone(), vec![]));
    Ok(OracleResult { answers, stop, steps: nat.steps, counts: nat.counts })
}

/// Runs the oracle on the embedding of a restricted program.
pub fn run_oracle_restricted(p: &RProgram, limits: OracleLimits) -> Result<OracleResult, OracleError> {
    run_oracle(&p.embed(), limits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    Ordered,
    Multiset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    /// First index where the lists differ, in the compared order.
    Diverge { index: usize, engine: Option<Term>, oracle: Option<Term> },
}

impl Comparison {
    pub fn is_equal(&self) -> bool {
        *self == Comparison::Equal
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |t: &Option<Term>| t.as_ref().map_or("<none>".to_string(), |t| t.to_string());
        match self {
            Comparison::Equal => write!(f, "MATCH"),
            Comparison::Diverge { index, engine, oracle } => {
                write!(f, "MISMATCH at {index}: engine {} vs oracle {}", show(engine), show(oracle))
            }
        }
    }
}

/// Compares the values of two answer lists. Failures are ignored and free
/// variables are compared up to consistent renaming.
pub fn compare_answers(engine: &[Answer], oracle: &[Answer], mode: CompareMode) -> Comparison {
    let terms = |xs: &[Answer]| -> Vec<Term> { xs.iter().filter_map(|a| a.term()).map(Term::canonical).collect() };
    let mut e = terms(engine);
    let mut o = terms(oracle);
    if mode == CompareMode::Multiset {
        e.sort_by_key(|t| t.to_string());
        o.sort_by_key(|t| t.to_string());
    }
    for i in 0..e.len().max(o.len()) {
        if e.get(i) != o.get(i) {
            return Comparison::Diverge { index: i, engine: e.get(i).cloned(), oracle: o.get(i).cloned() };
        }
    }
    Comparison::Equal
}
