//! Restricted programs compiled to slot-indexed templates.

use std::collections::HashMap;
use std::sync::Arc;

use crate::ast::{Block, Pattern, RExpr, RProgram, Stmt, APPLY};
use crate::graph::Sym;

use super::EngineError;

#[derive(Debug, Clone)]
pub(crate) enum CExpr {
    Var(usize),
    Lit(i64),
    Bot,
    Choice(usize, usize),
    Free,
    Fun(Sym, Vec<usize>),
    Con(Sym, Vec<usize>),
    Apply(usize, Vec<usize>),
    /// Head and its full arity.
    Part(Sym, usize),
}

#[derive(Debug, Clone)]
pub(crate) struct CStmt {
    /// Let groups, outermost first.
    pub groups: Vec<Vec<(usize, CExpr)>>,
    pub ret: CExpr,
}

#[derive(Debug, Clone)]
pub(crate) enum CPat {
    Con(Sym),
    Lit(i64),
}

#[derive(Debug, Clone)]
pub(crate) struct CBranch {
    pub pat: CPat,
    pub binds: Vec<usize>,
    pub body: CStmt,
}

#[derive(Debug, Clone)]
pub(crate) enum CBlock {
    Case { scrutinee: usize, literal: bool, branches: Vec<CBranch> },
    Stmt(CStmt),
}

#[derive(Debug, Clone)]
pub(crate) struct CFunc {
    pub name: Sym,
    pub arity: usize,
    pub slots: usize,
    pub body: CBlock,
}

#[derive(Debug)]
pub(crate) struct Code {
    pub funcs: Vec<CFunc>,
    pub func_index: HashMap<Sym, usize>,
    /// Constructor arities.
    pub ctors: HashMap<Sym, usize>,
    pub apply: Sym,
    pub entry: Sym,
}

impl Code {
    pub fn func(&self, name: &str) -> Option<&CFunc> {
        self.func_index.get(name).map(|&i| &self.funcs[i])
    }
}

struct Interner(HashMap<String, Sym>);

impl Interner {
    fn sym(&mut self, s: &str) -> Sym {
        self.0.entry(s.to_string()).or_insert_with(|| Arc::from(s)).clone()
    }
}

struct FnCompiler<'a> {
    slots: HashMap<String, usize>,
    next: usize,
    interner: &'a mut Interner,
    arities: &'a HashMap<String, usize>,
    fname: &'a str,
}

impl FnCompiler<'_> {
    fn bind(&mut self, x: &str) -> usize {
        let s = self.next;
        self.next += 1;
        self.slots.insert(x.to_string(), s);
        s
    }

    fn slot(&self, x: &str) -> Result<usize, EngineError> {
        self.slots
            .get(x)
            .copied()
            .ok_or_else(|| EngineError::Compile(format!("in `{}`: unbound variable `{x}`", self.fname)))
    }

    fn slots_of(&self, xs: &[String]) -> Result<Vec<usize>, EngineError> {
        xs.iter().map(|x| self.slot(x)).collect()
    }

    fn stmt(&mut self, s: &Stmt) -> Result<CStmt, EngineError> {
        let mut groups = Vec::new();
        let mut cur = s;
        while let Stmt::Let(bindings, rest) = cur {
            let targets: Vec<usize> = bindings.iter().map(|(x, _)| self.bind(x)).collect();
            let mut group = Vec::with_capacity(bindings.len());
            for ((_, e), t) in bindings.iter().zip(targets) {
                group.push((t, self.rexpr(e)?));
            }
            groups.push(group);
            cur = rest;
        }
        let Stmt::Return(e) = cur else { unreachable!() };
        Ok(CStmt { groups, ret: self.rexpr(e)? })
    }

    fn rexpr(&mut self, e: &RExpr) -> Result<CExpr, EngineError> {
        Ok(match e {
            RExpr::Var(x) => CExpr::Var(self.slot(x)?),
            RExpr::Lit(l) => CExpr::Lit(*l),
            RExpr::Bot => CExpr::Bot,
            RExpr::Free => CExpr::Free,
            RExpr::Choice(a, b) => CExpr::Choice(self.slot(a)?, self.slot(b)?),
            RExpr::FunApp(f, xs) if f == APPLY => {
                let (h, rest) = xs
                    .split_first()
                    .ok_or_else(|| EngineError::Compile(format!("in `{}`: empty apply", self.fname)))?;
                CExpr::Apply(self.slot(h)?, self.slots_of(rest)?)
            }
            RExpr::FunApp(f, xs) => CExpr::Fun(self.interner.sym(f), self.slots_of(xs)?),
            RExpr::ConApp(c, xs) => CExpr::Con(self.interner.sym(c), self.slots_of(xs)?),
            RExpr::Apply(h, xs) => CExpr::Apply(self.slot(h)?, self.slots_of(xs)?),
            RExpr::Part(f) => {
                let k = *self
                    .arities
                    .get(f.as_str())
                    .ok_or_else(|| EngineError::Compile(format!("in `{}`: unknown symbol `{f}`", self.fname)))?;
                CExpr::Part(self.interner.sym(f), k)
            }
        })
    }
}

pub(crate) fn compile(p: &RProgram) -> Result<Code, EngineError> {
    let mut interner = Interner(HashMap::new());
    let mut arities = HashMap::new();
    let mut ctors = HashMap::new();
    for d in &p.data {
        for (c, k) in &d.constructors {
            arities.insert(c.clone(), *k);
            ctors.insert(interner.sym(c), *k);
        }
    }
    for f in &p.functions {
        arities.insert(f.name.clone(), f.params.len());
    }
    let mut funcs = Vec::with_capacity(p.functions.len());
    let mut func_index = HashMap::new();
    for f in &p.functions {
        let mut fc = FnCompiler { slots: HashMap::new(), next: 0, interner: &mut interner, arities: &arities, fname: &f.name };
        for x in &f.params {
            fc.bind(x);
        }
        let body = match &f.body {
            Block::Stmt(s) => CBlock::Stmt(fc.stmt(s)?),
            Block::Case(x, branches) => {
                let scrutinee = fc.slot(x)?;
                let literal = matches!(branches.first(), Some((Pattern::Lit(_), _)));
                let mut cbs = Vec::with_capacity(branches.len());
                for (pat, s) in branches {
                    let mark = fc.slots.clone();
                    let (pat, binds) = match pat {
                        Pattern::Lit(l) => (CPat::Lit(*l), vec![]),
                        Pattern::Con(c, vars) => {
                            (CPat::Con(fc.interner.sym(c)), vars.iter().map(|v| fc.bind(v)).collect())
                        }
                    };
                    let body = fc.stmt(s)?;
                    fc.slots = mark;
                    cbs.push(CBranch { pat, binds, body });
                }
                CBlock::Case { scrutinee, literal, branches: cbs }
            }
        };
        let name = fc.interner.sym(&f.name);
        let slots = fc.next;
        if func_index.insert(name.clone(), funcs.len()).is_some() {
            return Err(EngineError::Compile(format!("function `{name}` defined twice")));
        }
        funcs.push(CFunc { name, arity: f.params.len(), slots, body });
    }
    let entry = interner.sym(&p.entry);
    let apply = interner.sym(APPLY);
    Ok(Code { funcs, func_index, ctors, apply, entry })
}
