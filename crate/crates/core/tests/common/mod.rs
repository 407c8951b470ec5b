//! Shared test support: the program corpus, a seeded generator of small
//! first-order programs, and the backtracking unwind check.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use flatcurry::ast::{DataDecl, Expr, FuncDef, Pattern, Program};
use flatcurry::engine::{EngineError, Limits, Machine};
use flatcurry::{parse_program, restrict, Answer};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub text: String,
    pub program: Program,
    /// Expected answer lines, in order.
    pub expect: Vec<String>,
    /// Only the first answers are expected; the program does not terminate.
    pub limit: Option<usize>,
}

impl CorpusEntry {
    pub fn is_first_order(&self) -> bool {
        !self.program.is_higher_order()
    }

    pub fn terminates(&self) -> bool {
        self.limit.is_none()
    }

    pub fn uses_free_variables(&self) -> bool {
        self.text.contains(" free in")
    }
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("corpus")
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut paths: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "fcy"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).unwrap();
            let program = parse_program(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let expect = text.lines().filter_map(|l| l.strip_prefix("-- expect: ")).map(str::to_string).collect();
            let limit = text
                .lines()
                .find_map(|l| l.strip_prefix("-- limit: "))
                .map(|n| n.trim().parse().unwrap());
            CorpusEntry {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                path,
                text,
                program,
                expect,
                limit,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random programs

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Bool,
    Int,
    Maybe,
    List,
}

const TYPES: [Ty; 4] = [Ty::Bool, Ty::Int, Ty::Maybe, Ty::List];
const LITERALS: [i64; 3] = [0, 1, 2];

fn data_decls() -> Vec<DataDecl> {
    let d = |name: &str, cs: &[(&str, usize)]| DataDecl {
        name: name.into(),
        constructors: cs.iter().map(|(c, k)| (c.to_string(), *k)).collect(),
    };
    vec![
        d("Bool", &[("False", 0), ("True", 0)]),
        d("Maybe", &[("Nothing", 0), ("Just", 1)]),
        d("List", &[("Nil", 0), ("Cons", 2)]),
    ]
}

fn constructors(t: Ty) -> &'static [(&'static str, &'static [Ty])] {
    match t {
        Ty::Bool => &[("False", &[]), ("True", &[])],
        Ty::Maybe => &[("Nothing", &[]), ("Just", &[Ty::Int])],
        Ty::List => &[("Nil", &[]), ("Cons", &[Ty::Int, Ty::List])],
        Ty::Int => &[],
    }
}

struct Sig {
    name: String,
    params: Vec<Ty>,
    result: Ty,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    sigs: &'a [Sig],
    next_var: usize,
}

impl Gen<'_> {
    fn fresh(&mut self) -> String {
        self.next_var += 1;
        format!("x{}", self.next_var)
    }

    fn ty(&mut self) -> Ty {
        *TYPES.choose(self.rng).unwrap()
    }

    fn leaf(&mut self, t: Ty, env: &[(String, Ty)]) -> Expr {
        let vars: Vec<&String> = env.iter().filter(|(_, u)| *u == t).map(|(x, _)| x).collect();
        if !vars.is_empty() && self.rng.random_bool(0.6) {
            return Expr::Var(vars.choose(self.rng).unwrap().to_string());
        }
        if self.rng.random_bool(0.05) {
            return Expr::Bot;
        }
        match t {
            Ty::Int => Expr::Lit(*LITERALS.choose(self.rng).unwrap()),
            _ => {
                let (c, args) = *constructors(t).choose(self.rng).unwrap();
                let args = args.iter().map(|&u| self.leaf(u, env)).collect();
                Expr::con(c, args)
            }
        }
    }

    fn expr(&mut self, t: Ty, env: &mut Vec<(String, Ty)>, depth: usize) -> Expr {
        if depth == 0 {
            return self.leaf(t, env);
        }
        let calls: Vec<usize> = (0..self.sigs.len()).filter(|&i| self.sigs[i].result == t).collect();
        if !calls.is_empty() && self.rng.random_bool(0.25) {
            return self.call(&calls, env, depth);
        }
        match self.rng.random_range(0..10) {
            0 | 1 => self.leaf(t, env),
            2 => {
                let a = self.expr(t, env, depth - 1);
                let b = self.expr(t, env, depth - 1);
                Expr::choice(a, b)
            }
            3 if !calls.is_empty() => self.call(&calls, env, depth),
            4 => {
                let u = self.ty();
                let x = self.fresh();
                let rhs = self.expr(u, env, depth - 1);
                env.push((x.clone(), u));
                let body = self.expr(t, env, depth - 1);
                env.pop();
                Expr::Let(vec![(x, rhs)], Box::new(body))
            }
            5 => {
                let u = self.ty();
                let x = self.fresh();
                env.push((x.clone(), u));
                // Usually demand the variable right away so it gets narrowed.
                let body = if self.rng.random_bool(0.6) {
                    self.case_on(Expr::Var(x.clone()), u, t, env, depth)
                } else {
                    self.expr(t, env, depth - 1)
                };
                env.pop();
                Expr::Free(vec![x], Box::new(body))
            }
            6..=8 => self.case(t, env, depth),
            _ => match t {
                Ty::Int => self.leaf(t, env),
                _ => {
                    let (c, args) = *constructors(t).choose(self.rng).unwrap();
                    let args = args.iter().map(|&u| self.expr(u, env, depth - 1)).collect();
                    Expr::con(c, args)
                }
            },
        }
    }

    fn call(&mut self, calls: &[usize], env: &mut Vec<(String, Ty)>, depth: usize) -> Expr {
        let sig = &self.sigs[*calls.choose(self.rng).unwrap()];
        let (name, params) = (sig.name.clone(), sig.params.clone());
        let args = params.iter().map(|&u| self.expr(u, env, depth - 1)).collect();
        Expr::FunApp(name, args)
    }

    fn case(&mut self, t: Ty, env: &mut Vec<(String, Ty)>, depth: usize) -> Expr {
        if !env.is_empty() && self.rng.random_bool(0.5) {
            let (x, u) = env.choose(self.rng).unwrap().clone();
            return self.case_on(Expr::Var(x), u, t, env, depth);
        }
        let u = self.ty();
        let scrutinee = self.expr(u, env, depth - 1);
        self.case_on(scrutinee, u, t, env, depth)
    }

    fn case_on(&mut self, scrutinee: Expr, u: Ty, t: Ty, env: &mut Vec<(String, Ty)>, depth: usize) -> Expr {
        let mut branches = Vec::new();
        match u {
            Ty::Int => {
                let mut lits = LITERALS.to_vec();
                let keep = self.rng.random_range(1..=lits.len());
                lits.truncate(keep);
                for l in lits {
                    branches.push((Pattern::Lit(l), self.expr(t, env, depth - 1)));
                }
            }
            _ => {
                for (c, args) in constructors(u) {
                    if branches.is_empty() || self.rng.random_bool(0.9) {
                        let vars: Vec<String> = args.iter().map(|_| self.fresh()).collect();
                        let mark = env.len();
                        env.extend(vars.iter().cloned().zip(args.iter().copied()));
                        let body = self.expr(t, env, depth - 1);
                        env.truncate(mark);
                        branches.push((Pattern::Con(c.to_string(), vars), body));
                    }
                }
            }
        }
        if self.rng.random_bool(0.3) {
            let k = branches.len();
            branches.rotate_left(self.rng.random_range(0..k));
        }
        Expr::case(scrutinee, branches)
    }
}

/// A small, well-typed, first-order program. Function `f<i>` only calls
/// functions `f<j>` with `j < i`, so every run terminates.
pub fn random_program(seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let mut sigs = Vec::new();
    let mut functions = Vec::new();
    for i in 0..n {
        let arity = rng.random_range(0..=2);
        let params: Vec<Ty> = (0..arity).map(|_| *TYPES.choose(&mut rng).unwrap()).collect();
        let result = *TYPES.choose(&mut rng).unwrap();
        let names: Vec<String> = (0..arity).map(|k| format!("p{k}")).collect();
        let mut env: Vec<(String, Ty)> = names.iter().cloned().zip(params.iter().copied()).collect();
        let depth = rng.random_range(1..=3);
        let body = Gen { rng: &mut rng, sigs: &sigs, next_var: 0 }.expr(result, &mut env, depth);
        functions.push(FuncDef { name: format!("f{i}"), params: names, body });
        sigs.push(Sig { name: format!("f{i}"), params, result });
    }
    let t = sigs.last().map_or(Ty::Bool, |s: &Sig| s.result);
    let depth = rng.random_range(2..=4);
    let body = Gen { rng: &mut rng, sigs: &sigs, next_var: 0 }.expr(t, &mut Vec::new(), depth);
    functions.push(FuncDef { name: "main".into(), params: vec![], body });
    Program::new(data_decls(), functions)
}

// ---------------------------------------------------------------------------
// Backtracking unwind

pub struct UnwindReport {
    pub answers: Vec<Answer>,
    pub checked: usize,
    pub truncated: bool,
}

/// Enumerates answers; after every normalization a copy of the machine is
/// unwound frame by frame to the stack depth before that normalization and
/// its reachable graph compared with the snapshot taken then.
pub fn check_unwind(p: &Program, limits: Limits, max_answers: usize) -> Result<UnwindReport, String> {
    let rp = restrict(p);
    let mut m = Machine::new(&rp, limits).map_err(|e| e.to_string())?;
    let root = m.alloc_main().map_err(|e| e.to_string())?;
    let mut answers = Vec::new();
    let mut checked = 0;
    loop {
        let depth = m.stack.len();
        let before = m.graph.snapshot_reachable(root);
        let r = m.normalize(root);
        let mut copy = m.clone();
        while copy.stack.len() > depth {
            copy.backtrack_step().map_err(|e| format!("unwind failed: {e}"))?;
        }
        let after = copy.graph.snapshot_reachable(root);
        if after != before {
            return Err(format!("snapshot differs after unwinding answer {}", answers.len()));
        }
        checked += 1;
        match r {
            Ok(a) => answers.push(a),
            Err(e) if e.is_truncation() => return Ok(UnwindReport { answers, checked, truncated: true }),
            Err(e) => return Err(e.to_string()),
        }
        if answers.len() >= max_answers {
            return Ok(UnwindReport { answers, checked, truncated: true });
        }
        m.collect_garbage(root);
        match m.backtrack_to_choice() {
            Ok(true) => {}
            Ok(false) => return Ok(UnwindReport { answers, checked, truncated: false }),
            Err(EngineError::StepBudget(_)) => return Ok(UnwindReport { answers, checked, truncated: true }),
            Err(e) => return Err(e.to_string()),
        }
    }
}
