//! Lowering from FlatCurry to Restricted FlatCurry.
//!
//! Arguments are atomized into let bindings, nested lets are hoisted into
//! one binding group per statement, and every case that is not the
//! outermost form of a body is lifted into an auxiliary function applied
//! to its live variables.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::ast::{Block, Expr, FuncDef, Pattern, Program, RExpr, RFuncDef, RProgram, Stmt, APPLY};
use crate::validate::{validate_program, Report};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RestrictError {
    #[error("case expression where only atomic arguments are allowed")]
    UnexpectedCase,
    #[error("invalid program:\n{0}")]
    Invalid(Report),
}

/// Generates `<base>#1`, `<base>#2`, ... skipping names already taken.
#[derive(Debug, Clone)]
pub struct FreshNamer {
    base: String,
    counter: usize,
    taken: HashSet<String>,
}

impl FreshNamer {
    pub fn new(base: &str) -> FreshNamer {
        FreshNamer { base: base.to_string(), counter: 0, taken: HashSet::new() }
    }

    pub fn with_taken(base: &str, taken: HashSet<String>) -> FreshNamer {
        FreshNamer { base: base.to_string(), counter: 0, taken }
    }

    /// Restarts numbering for a new base name.
    pub fn rebase(&mut self, base: &str) {
        self.base = base.to_string();
        self.counter = 0;
    }

    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn fresh(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("{}#{}", self.base, self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

type Env = HashMap<String, String>;

struct Restrictor {
    vars: FreshNamer,
    funcs: FreshNamer,
    out: Vec<RFuncDef>,
    /// Refuse to lift; used by [`atomize_expr`].
    atomic_only: bool,
    error: Option<RestrictError>,
}

fn collect_names(e: &Expr, out: &mut HashSet<String>) {
    match e {
        Expr::Var(x) | Expr::Part(x) => {
            out.insert(x.clone());
        }
        Expr::Bot | Expr::Lit(_) => {}
        Expr::Choice(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        Expr::FunApp(f, args) | Expr::ConApp(f, args) => {
            out.insert(f.clone());
            args.iter().for_each(|a| collect_names(a, out));
        }
        Expr::Apply(h, args) => {
            collect_names(h, out);
            args.iter().for_each(|a| collect_names(a, out));
        }
        Expr::Let(bs, body) => {
            for (x, e) in bs {
                out.insert(x.clone());
                collect_names(e, out);
            }
            collect_names(body, out);
        }
        Expr::Free(xs, body) => {
            out.extend(xs.iter().cloned());
            collect_names(body, out);
        }
        Expr::Case(s, brs) => {
            collect_names(s, out);
            for (p, e) in brs {
                if let Pattern::Con(c, vars) = p {
                    out.insert(c.clone());
                    out.extend(vars.iter().cloned());
                }
                collect_names(e, out);
            }
        }
    }
}

fn program_names(p: &Program) -> HashSet<String> {
    let mut names = HashSet::new();
    for d in &p.data {
        names.insert(d.name.clone());
        names.extend(d.constructors.iter().map(|(c, _)| c.clone()));
    }
    for f in &p.functions {
        names.insert(f.name.clone());
        names.extend(f.params.iter().cloned());
        collect_names(&f.body, &mut names);
    }
    names
}

impl Restrictor {
    fn new(taken: HashSet<String>) -> Restrictor {
        Restrictor {
            vars: FreshNamer::with_taken("v", taken.clone()),
            funcs: FreshNamer::with_taken("f", taken),
            out: Vec::new(),
            atomic_only: false,
            error: None,
        }
    }

    fn fresh_var(&mut self) -> String {
        let v = self.vars.fresh();
        self.funcs.reserve(&v);
        v
    }

    fn fresh_func(&mut self) -> String {
        let f = self.funcs.fresh();
        self.vars.reserve(&f);
        f
    }

    /// Target name for a source binder: kept unless already in scope.
    fn binder(&mut self, x: &str, scope: &mut Vec<String>, env: &mut Env) -> String {
        let t = if scope.iter().any(|y| y == x) { self.fresh_var() } else { x.to_string() };
        env.insert(x.to_string(), t.clone());
        scope.push(t.clone());
        t
    }

    fn function(&mut self, f: &FuncDef) {
        self.funcs.rebase(&f.name);
        let idx = self.out.len();
        self.out.push(RFuncDef { name: f.name.clone(), params: f.params.clone(), body: Block::Stmt(Stmt::Return(RExpr::Bot)) });
        let env: Env = f.params.iter().map(|x| (x.clone(), x.clone())).collect();
        let body = match &f.body {
            Expr::Case(s, branches) if s.is_var() => {
                let Expr::Var(x) = s.as_ref() else { unreachable!() };
                self.case_block(x.clone(), branches, &env, &f.params)
            }
            body => Block::Stmt(self.stmt(body, &env, &f.params)),
        };
        self.out[idx].body = body;
    }

    fn case_block(&mut self, scrutinee: String, branches: &[(Pattern, Expr)], env: &Env, scope: &[String]) -> Block {
        let branches = branches
            .iter()
            .map(|(p, e)| {
                let mut env = env.clone();
                let mut scope = scope.to_vec();
                let p = match p {
                    Pattern::Lit(l) => Pattern::Lit(*l),
                    Pattern::Con(c, vars) => Pattern::Con(
                        c.clone(),
                        vars.iter().map(|v| self.binder(v, &mut scope, &mut env)).collect(),
                    ),
                };
                (p, self.stmt(e, &env, &scope))
            })
            .collect();
        Block::Case(scrutinee, branches)
    }

    fn stmt(&mut self, e: &Expr, env: &Env, scope: &[String]) -> Stmt {
        let mut env = env.clone();
        let mut scope = scope.to_vec();
        let mut group = Vec::new();
        let ret = self.flat(e, &mut env, &mut scope, &mut group);
        if group.is_empty() {
            return Stmt::Return(ret);
        }
        let (mut frees, others): (Vec<_>, Vec<_>) = group.into_iter().partition(|(_, r)| *r == RExpr::Free);
        frees.extend(others);
        Stmt::Let(frees, Box::new(Stmt::Return(ret)))
    }

    fn var_of(&mut self, e: &Expr, env: &mut Env, scope: &mut Vec<String>, group: &mut Vec<(String, RExpr)>) -> String {
        match self.flat(e, env, scope, group) {
            RExpr::Var(x) => x,
            r => {
                let v = self.fresh_var();
                scope.push(v.clone());
                group.push((v.clone(), r));
                v
            }
        }
    }

    fn vars_of(&mut self, es: &[Expr], env: &mut Env, scope: &mut Vec<String>, group: &mut Vec<(String, RExpr)>) -> Vec<String> {
        es.iter().map(|e| self.var_of(e, env, scope, group)).collect()
    }

    fn flat(&mut self, e: &Expr, env: &mut Env, scope: &mut Vec<String>, group: &mut Vec<(String, RExpr)>) -> RExpr {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.flat_inner(e, env, scope, group))
    }

    fn flat_inner(&mut self, e: &Expr, env: &mut Env, scope: &mut Vec<String>, group: &mut Vec<(String, RExpr)>) -> RExpr {
        match e {
            Expr::Var(x) => RExpr::Var(env.get(x).cloned().unwrap_or_else(|| x.clone())),
            Expr::Lit(l) => RExpr::Lit(*l),
            Expr::Bot => RExpr::Bot,
            Expr::Part(f) => RExpr::Part(f.clone()),
            Expr::Choice(a, b) => {
                let a = self.var_of(a, env, scope, group);
                let b = self.var_of(b, env, scope, group);
                RExpr::Choice(a, b)
            }
            Expr::FunApp(f, args) if f == APPLY && !args.is_empty() => {
                let h = self.var_of(&args[0], env, scope, group);
                RExpr::Apply(h, self.vars_of(&args[1..], env, scope, group))
            }
            Expr::FunApp(f, args) => RExpr::FunApp(f.clone(), self.vars_of(args, env, scope, group)),
            Expr::ConApp(c, args) => RExpr::ConApp(c.clone(), self.vars_of(args, env, scope, group)),
            Expr::Apply(h, args) => {
                let h = self.var_of(h, env, scope, group);
                RExpr::Apply(h, self.vars_of(args, env, scope, group))
            }
            Expr::Let(bindings, body) => {
                let targets: Vec<String> = bindings.iter().map(|(x, _)| self.binder(x, scope, env)).collect();
                for ((_, rhs), t) in bindings.iter().zip(targets) {
                    let r = self.flat(rhs, env, scope, group);
                    group.push((t, r));
                }
                self.flat(body, env, scope, group)
            }
            Expr::Free(names, body) => {
                for x in names {
                    let t = self.binder(x, scope, env);
                    group.push((t, RExpr::Free));
                }
                self.flat(body, env, scope, group)
            }
            Expr::Case(s, branches) => {
                if self.atomic_only {
                    self.error.get_or_insert(RestrictError::UnexpectedCase);
                    return RExpr::Bot;
                }
                let sv = self.var_of(s, env, scope, group);
                let mut live: BTreeSet<String> = BTreeSet::new();
                for (p, body) in branches {
                    for x in body.free_vars() {
                        if !p.vars().contains(&x) {
                            live.insert(env.get(&x).cloned().unwrap_or(x));
                        }
                    }
                }
                live.insert(sv.clone());
                let mut params: Vec<String> = live.into_iter().collect();
                params.sort_by_key(|x| scope.iter().position(|y| y == x).unwrap_or(usize::MAX));
                let name = self.fresh_func();
                let idx = self.out.len();
                self.out.push(RFuncDef { name: name.clone(), params: params.clone(), body: Block::Stmt(Stmt::Return(RExpr::Bot)) });
                let body = self.case_block(sv, branches, env, &params);
                self.out[idx].body = body;
                RExpr::FunApp(name, params)
            }
        }
    }
}

/// Lowers a valid program to restricted form.
pub fn restrict(p: &Program) -> RProgram {
    let mut r = Restrictor::new(program_names(p));
    for f in &p.functions {
        r.function(f);
    }
    RProgram { data: p.data.clone(), functions: r.out, entry: p.entry.clone() }
}

/// Validates, then lowers.
pub fn try_restrict(p: &Program) -> Result<RProgram, RestrictError> {
    let report = validate_program(p);
    if !report.is_ok() {
        return Err(RestrictError::Invalid(report));
    }
    Ok(restrict(p))
}

/// Binds every non-variable argument of a case-free expression. Returns the
/// bindings in dependency order and the atomic result.
pub fn atomize_expr(e: &Expr, namer: &mut FreshNamer) -> Result<(Vec<(String, RExpr)>, RExpr), RestrictError> {
    let mut taken = namer.taken.clone();
    collect_names(e, &mut taken);
    let mut r = Restrictor::new(taken);
    r.vars = FreshNamer { base: namer.base.clone(), counter: namer.counter, taken: r.vars.taken };
    r.atomic_only = true;
    let mut env = Env::new();
    let mut scope: Vec<String> = e.free_vars().into_iter().collect();
    let mut group = Vec::new();
    let ret = r.flat(e, &mut env, &mut scope, &mut group);
    if let Some(err) = r.error {
        return Err(err);
    }
    namer.counter = r.vars.counter;
    namer.taken = r.vars.taken;
    Ok((group, ret))
}

/// Restricts one function: the function itself followed by the functions
/// lifted out of it.
pub fn lift_cases(f: &FuncDef, namer: &mut FreshNamer) -> Vec<RFuncDef> {
    let mut taken = namer.taken.clone();
    taken.insert(f.name.clone());
    taken.extend(f.params.iter().cloned());
    collect_names(&f.body, &mut taken);
    let mut r = Restrictor::new(taken);
    r.function(f);
    namer.taken.extend(r.vars.taken);
    namer.taken.extend(r.funcs.taken);
    r.out
}
