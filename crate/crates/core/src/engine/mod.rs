//! The evaluation engine: head normal forms, case and apply dispatch,
//! normalization and answer enumeration over a [`Graph`] and a [`BtStack`].

mod code;
pub mod trace;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::answer::{Answer, Outcome, Term};
use crate::ast::RProgram;
use crate::graph::{self, BtStack, Frame, Graph, GraphError, NodeContent, NodeId};
use code::{CBlock, CExpr, CPat, CStmt, Code};
pub use trace::{RecordingTracer, RuleName, TraceEvent, Tracer, WriteTracer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u64,
    /// Stop after this many values.
    pub max_answers: Option<usize>,
    /// Maximum nesting of head-normal-form and normal-form evaluation.
    pub max_depth: usize,
    pub max_nodes: usize,
    /// Record failed attempts as [`Outcome::Failure`] answers.
    pub keep_failures: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 10_000_000,
            max_answers: None,
            max_depth: 200_000,
            max_nodes: 50_000_000,
            keep_failures: false,
        }
    }
}

impl Limits {
    pub fn with_steps(max_steps: u64) -> Limits {
        Limits { max_steps, ..Limits::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid program: {0}")]
    Compile(String),
    #[error("step budget of {0} exhausted")]
    StepBudget(u64),
    #[error("evaluation nested deeper than {0} levels")]
    DepthLimit(usize),
    #[error("node {0} depends on its own value")]
    BlackHole(NodeId),
    #[error("the answer is an infinite term")]
    CyclicAnswer,
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl EngineError {
    /// Resource exhaustion or non-termination, as opposed to a broken
    /// program or machine.
    pub fn is_truncation(&self) -> bool {
        matches!(
            self,
            EngineError::StepBudget(_)
                | EngineError::DepthLimit(_)
                | EngineError::BlackHole(_)
                | EngineError::CyclicAnswer
                | EngineError::Graph(GraphError::Exhausted(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    /// Every alternative was explored.
    Exhausted,
    AnswerLimit,
    Truncated(EngineError),
    Error(EngineError),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub answers: Vec<Answer>,
    pub stop: StopReason,
    pub steps: u64,
}

impl RunResult {
    pub fn values(&self) -> Vec<Term> {
        self.answers.iter().filter_map(|a| a.term().cloned()).collect()
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.stop, StopReason::Truncated(_))
    }
}

type EResult<T> = Result<T, EngineError>;

pub struct Machine {
    code: Arc<Code>,
    pub graph: Graph,
    pub stack: BtStack,
    pub limits: Limits,
    steps: u64,
    depth: usize,
    /// Nodes whose head normal form is being computed.
    busy: Vec<bool>,
    /// Nodes on the current normalization path.
    normalizing: Vec<bool>,
    counts: HashMap<RuleName, u64>,
    tracer: Option<Box<dyn Tracer>>,
}

impl Clone for Machine {
    /// The clone has no tracer.
    fn clone(&self) -> Self {
        Machine {
            code: self.code.clone(),
            graph: self.graph.clone(),
            stack: self.stack.clone(),
            limits: self.limits,
            steps: self.steps,
            depth: self.depth,
            busy: self.busy.clone(),
            normalizing: self.normalizing.clone(),
            counts: self.counts.clone(),
            tracer: None,
        }
    }
}

fn mark(v: &mut Vec<bool>, n: NodeId, on: bool) {
    if v.len() <= n.index() {
        v.resize(n.index() + 1, false);
    }
    v[n.index()] = on;
}

fn marked(v: &[bool], n: NodeId) -> bool {
    v.get(n.index()).copied().unwrap_or(false)
}

impl Machine {
    pub fn new(p: &RProgram, limits: Limits) -> EResult<Machine> {
        let code = code::compile(p)?;
        match code.func(&code.entry) {
            None => return Err(EngineError::Compile(format!("undefined entry `{}`", code.entry))),
            Some(f) if f.arity != 0 => {
                return Err(EngineError::Compile(format!("entry `{}` must take no arguments", code.entry)))
            }
            Some(_) => {}
        }
        Ok(Machine {
            code: Arc::new(code),
            graph: Graph::with_capacity_limit(limits.max_nodes),
            stack: BtStack::new(),
            limits,
            steps: 0,
            depth: 0,
            busy: Vec::new(),
            normalizing: Vec::new(),
            counts: HashMap::new(),
            tracer: None,
        })
    }

    pub fn set_tracer(&mut self, t: Box<dyn Tracer>) {
        self.tracer = Some(t);
    }

    pub fn take_tracer(&mut self) -> Option<Box<dyn Tracer>> {
        self.tracer.take()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn rule_count(&self, r: RuleName) -> u64 {
        self.counts.get(&r).copied().unwrap_or(0)
    }

    fn fire(&mut self, rule: RuleName, node: NodeId) -> EResult<()> {
        if rule.is_step() {
            self.steps += 1;
            if self.steps > self.limits.max_steps {
                return Err(EngineError::StepBudget(self.limits.max_steps));
            }
        }
        *self.counts.entry(rule).or_insert(0) += 1;
        if let Some(t) = self.tracer.as_mut() {
            t.event(&TraceEvent { rule, node, depth: self.stack.len() });
        }
        Ok(())
    }

    pub fn alloc(&mut self, c: NodeContent) -> EResult<NodeId> {
        Ok(self.graph.alloc(c)?)
    }

    /// Rewrites an existing node and records the undo frame.
    fn rewrite(&mut self, n: NodeId, c: NodeContent) -> EResult<()> {
        if c == NodeContent::Fwd(n) {
            return Err(EngineError::BlackHole(n));
        }
        let old = self.graph.replace(n, c)?;
        self.stack.push(Frame::undo(n, old));
        Ok(())
    }

    /// Rewrites a choice node to its left alternative and pushes the right
    /// one as a choice frame.
    fn choose_left(&mut self, x: NodeId, left: NodeId, right: NodeId) -> EResult<()> {
        self.graph.set(x, NodeContent::Fwd(left))?;
        self.stack.push(Frame::choice(x, NodeContent::Fwd(right)));
        Ok(())
    }

    fn enter(&mut self) -> EResult<()> {
        self.depth += 1;
        if self.depth > self.limits.max_depth {
            self.depth -= 1;
            return Err(EngineError::DepthLimit(self.limits.max_depth));
        }
        Ok(())
    }

    /// Allocates the root expression `main`.
    pub fn alloc_main(&mut self) -> EResult<NodeId> {
        let entry = self.code.entry.clone();
        let root = self.alloc(NodeContent::Fun(entry, vec![]))?;
        self.graph.root = Some(root);
        Ok(root)
    }

    /// Builds the graph for `fname` applied to `args`. Parameters are bound
    /// by reference. A body that is a case yields a call node dispatched
    /// later by [`Machine::hnf`].
    pub fn instantiate(&mut self, fname: &str, args: &[NodeId]) -> EResult<NodeId> {
        let code = self.code.clone();
        let f = code
            .func(fname)
            .ok_or_else(|| EngineError::Compile(format!("unknown function `{fname}`")))?;
        if f.arity != args.len() {
            return Err(EngineError::Compile(format!(
                "`{fname}` expects {} argument(s), got {}",
                f.arity,
                args.len()
            )));
        }
        match &f.body {
            CBlock::Case { .. } => self.alloc(NodeContent::Fun(f.name.clone(), args.to_vec())),
            CBlock::Stmt(st) => {
                let mut slots = vec![None; f.slots];
                for (i, a) in args.iter().enumerate() {
                    slots[i] = Some(*a);
                }
                let placeholder = self.alloc(NodeContent::Bot)?;
                let c = self.eval_stmt(st, &mut slots, placeholder)?;
                self.graph.set(placeholder, c).map_err(|_| EngineError::BlackHole(placeholder))?;
                Ok(placeholder)
            }
        }
    }

    /// Reduces `n` to head normal form in place.
    pub fn hnf(&mut self, n: NodeId) -> EResult<()> {
        if !matches!(self.graph.get(n), NodeContent::Fun(..)) {
            return Ok(());
        }
        if marked(&self.busy, n) {
            return Err(EngineError::BlackHole(n));
        }
        self.enter()?;
        mark(&mut self.busy, n, true);
        let r = stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.hnf_loop(n));
        mark(&mut self.busy, n, false);
        self.depth -= 1;
        r
    }

    fn hnf_loop(&mut self, n: NodeId) -> EResult<()> {
        loop {
            let (f, args) = match self.graph.get(n) {
                NodeContent::Fun(f, args) => (f.clone(), args.clone()),
                _ => return Ok(()),
            };
            let next = if *f == *self.code.apply {
                self.step_apply(n, &args)?
            } else {
                self.step_fun(n, &f, &args)?
            };
            self.rewrite(n, next)?;
        }
    }

    /// One (Fun) step: the content `n = f(args)` rewrites to.
    fn step_fun(&mut self, n: NodeId, f: &str, args: &[NodeId]) -> EResult<NodeContent> {
        let code = self.code.clone();
        let func = code
            .func(f)
            .ok_or_else(|| EngineError::Compile(format!("unknown function `{f}`")))?;
        self.fire(RuleName::Fun, n)?;
        let mut slots = vec![None; func.slots];
        for (i, a) in args.iter().enumerate() {
            slots[i] = Some(*a);
        }
        match &func.body {
            CBlock::Stmt(st) => self.eval_stmt(st, &mut slots, n),
            CBlock::Case { scrutinee, literal, branches } => {
                let mut x = slots[*scrutinee].expect("parameter slot");
                loop {
                    match self.graph.get(x).clone() {
                        NodeContent::Bot => {
                            self.fire(RuleName::CaseBot, x)?;
                            return Ok(NodeContent::Bot);
                        }
                        NodeContent::Fwd(y) => {
                            self.fire(RuleName::CaseFwd, x)?;
                            x = y;
                        }
                        NodeContent::Fun(..) => {
                            self.fire(RuleName::CaseFun, x)?;
                            self.hnf(x)?;
                        }
                        NodeContent::Choice(y, z) => {
                            self.fire(RuleName::CaseChoice, x)?;
                            self.choose_left(x, y, z)?;
                            x = y;
                        }
                        NodeContent::Lit(l) => {
                            if !literal {
                                return Err(EngineError::Type(format!("literal {l} scrutinized by `{f}`")));
                            }
                            self.fire(RuleName::CaseLit, x)?;
                            return match branches.iter().find(|b| matches!(b.pat, CPat::Lit(m) if m == l)) {
                                Some(b) => self.eval_stmt(&b.body, &mut slots, n),
                                None => Ok(NodeContent::Bot),
                            };
                        }
                        NodeContent::Con(c, kids) => {
                            if *literal {
                                return Err(EngineError::Type(format!("constructor `{c}` scrutinized by `{f}`")));
                            }
                            self.fire(RuleName::CaseCon, x)?;
                            let Some(b) = branches.iter().find(|b| matches!(&b.pat, CPat::Con(d) if *d == c)) else {
                                return Ok(NodeContent::Bot);
                            };
                            if b.binds.len() != kids.len() {
                                return Err(EngineError::Type(format!("constructor `{c}` has the wrong arity")));
                            }
                            for (s, k) in b.binds.iter().zip(kids) {
                                slots[*s] = Some(k);
                            }
                            return self.eval_stmt(&b.body, &mut slots, n);
                        }
                        NodeContent::Free => {
                            return self.narrow(n, x, *literal, branches, &mut slots);
                        }
                        NodeContent::Part(g, ..) => {
                            return Err(EngineError::Type(format!(
                                "partial application of `{g}` scrutinized by `{f}`"
                            )));
                        }
                    }
                }
            }
        }
    }

    /// (Case-LitFree) and (Case-ConFree): binds the free variable `x` to the
    /// first pattern and pushes the others as alternatives, the second
    /// pattern on top.
    fn narrow(
        &mut self,
        n: NodeId,
        x: NodeId,
        literal: bool,
        branches: &[code::CBranch],
        slots: &mut [Option<NodeId>],
    ) -> EResult<NodeContent> {
        self.fire(if literal { RuleName::CaseLitFree } else { RuleName::CaseConFree }, x)?;
        let mut instances = Vec::with_capacity(branches.len());
        for b in branches {
            instances.push(match &b.pat {
                CPat::Lit(l) => NodeContent::Lit(*l),
                CPat::Con(c) => {
                    let k = b.binds.len();
                    let mut frees = Vec::with_capacity(k);
                    for _ in 0..k {
                        frees.push(self.alloc(NodeContent::Free)?);
                    }
                    NodeContent::Con(c.clone(), frees)
                }
            });
        }
        self.stack.push(Frame::undo(x, NodeContent::Free));
        for alt in instances[1..].iter().rev() {
            self.stack.push(Frame::narrow(x, alt.clone()));
        }
        let first = instances.swap_remove(0);
        if let NodeContent::Con(_, frees) = &first {
            for (s, k) in branches[0].binds.iter().zip(frees) {
                slots[*s] = Some(*k);
            }
        }
        self.graph.set(x, first)?;
        self.eval_stmt(&branches[0].body, slots, n)
    }

    /// (Apply-*) rules for `n = apply(h, rest)`.
    fn step_apply(&mut self, n: NodeId, args: &[NodeId]) -> EResult<NodeContent> {
        let (&first, rest) = args
            .split_first()
            .ok_or_else(|| EngineError::Type("apply without a function".into()))?;
        let mut h = first;
        loop {
            match self.graph.get(h).clone() {
                NodeContent::Fwd(y) => h = y,
                NodeContent::Fun(..) => self.hnf(h)?,
                NodeContent::Bot => return Ok(NodeContent::Bot),
                NodeContent::Free => {
                    self.fire(RuleName::ApplyFree, n)?;
                    return Ok(NodeContent::Bot);
                }
                NodeContent::Choice(y, z) => {
                    self.fire(RuleName::ApplyChoice, h)?;
                    self.choose_left(h, y, z)?;
                    h = y;
                }
                NodeContent::Part(f, k, ys) => {
                    let is_con = self.code.ctors.contains_key(&f) && self.code.func(&f).is_none();
                    let build = |f: crate::graph::Sym, xs: Vec<NodeId>| {
                        if is_con {
                            NodeContent::Con(f, xs)
                        } else {
                            NodeContent::Fun(f, xs)
                        }
                    };
                    let mut all = ys;
                    if rest.len() < k {
                        self.fire(RuleName::ApplyUnder, n)?;
                        all.extend_from_slice(rest);
                        return Ok(NodeContent::Part(f, k - rest.len(), all));
                    }
                    if rest.len() == k {
                        self.fire(RuleName::ApplyFull, n)?;
                        all.extend_from_slice(rest);
                        return Ok(build(f, all));
                    }
                    self.fire(RuleName::ApplyOver, n)?;
                    all.extend_from_slice(&rest[..k]);
                    let m = self.alloc(build(f, all))?;
                    let mut again = vec![m];
                    again.extend_from_slice(&rest[k..]);
                    return Ok(NodeContent::Fun(self.code.apply.clone(), again));
                }
                NodeContent::Con(c, _) => {
                    return Err(EngineError::Type(format!("constructor `{c}` applied as a function")))
                }
                NodeContent::Lit(l) => return Err(EngineError::Type(format!("literal {l} applied as a function"))),
            }
        }
    }

    /// One (Apply) step for the call node `n`: the content `n` would be
    /// rewritten to. `n` itself is left unchanged.
    pub fn apply_step(&mut self, n: NodeId) -> EResult<NodeContent> {
        match self.graph.get(n).clone() {
            NodeContent::Fun(f, args) if *f == *self.code.apply => self.step_apply(n, &args),
            other => Err(EngineError::Type(format!("{} node {n} is not an application", other.kind()))),
        }
    }

    /// Allocates the let groups of a statement and returns the content of
    /// its result for the node `at`.
    fn eval_stmt(&mut self, st: &CStmt, slots: &mut [Option<NodeId>], at: NodeId) -> EResult<NodeContent> {
        for group in &st.groups {
            self.fire(RuleName::Let, at)?;
            for (s, e) in group {
                if !matches!(e, CExpr::Var(_)) {
                    slots[*s] = Some(self.alloc(NodeContent::Bot)?);
                }
            }
            let mut pending: Vec<(usize, usize)> = group
                .iter()
                .filter_map(|(s, e)| match e {
                    CExpr::Var(v) => Some((*s, *v)),
                    _ => None,
                })
                .collect();
            // Aliases inside a group resolve in at most one pass per alias.
            for (s, _) in &pending {
                slots[*s] = None;
            }
            while !pending.is_empty() {
                let before = pending.len();
                pending.retain(|&(s, v)| match slots[v] {
                    Some(node) => {
                        slots[s] = Some(node);
                        false
                    }
                    None => true,
                });
                if pending.len() == before {
                    return Err(EngineError::Compile("cyclic aliases in a let group".into()));
                }
            }
            for (s, e) in group {
                if matches!(e, CExpr::Var(_)) {
                    continue;
                }
                let node = slots[*s].expect("allocated above");
                let c = self.content(e, slots)?;
                self.graph.set(node, c)?;
            }
        }
        let c = match &st.ret {
            CExpr::Var(v) => {
                self.fire(RuleName::Var, at)?;
                NodeContent::Fwd(slots[*v].expect("bound variable"))
            }
            CExpr::Lit(_) => {
                self.fire(RuleName::Lit, at)?;
                self.content(&st.ret, slots)?
            }
            CExpr::Bot => {
                self.fire(RuleName::Bot, at)?;
                NodeContent::Bot
            }
            CExpr::Free => {
                self.fire(RuleName::Free, at)?;
                NodeContent::Free
            }
            CExpr::Con(..) => {
                self.fire(RuleName::Con, at)?;
                self.content(&st.ret, slots)?
            }
            CExpr::Choice(..) => {
                self.fire(RuleName::Choice, at)?;
                self.content(&st.ret, slots)?
            }
            CExpr::Part(..) => {
                self.fire(RuleName::Part, at)?;
                self.content(&st.ret, slots)?
            }
            CExpr::Fun(..) | CExpr::Apply(..) => self.content(&st.ret, slots)?,
        };
        Ok(c)
    }

    fn content(&self, e: &CExpr, slots: &[Option<NodeId>]) -> EResult<NodeContent> {
        let get = |s: &usize| slots[*s].expect("bound variable");
        Ok(match e {
            CExpr::Var(v) => NodeContent::Fwd(get(v)),
            CExpr::Lit(l) => NodeContent::Lit(*l),
            CExpr::Bot => NodeContent::Bot,
            CExpr::Free => NodeContent::Free,
            CExpr::Choice(a, b) => NodeContent::Choice(get(a), get(b)),
            CExpr::Fun(f, xs) => NodeContent::Fun(f.clone(), xs.iter().map(get).collect()),
            CExpr::Con(c, xs) => NodeContent::Con(c.clone(), xs.iter().map(get).collect()),
            CExpr::Apply(h, xs) => {
                let mut all = vec![get(h)];
                all.extend(xs.iter().map(get));
                NodeContent::Fun(self.code.apply.clone(), all)
            }
            CExpr::Part(f, k) => NodeContent::Part(f.clone(), *k, vec![]),
        })
    }

    /// Rewrites `outer` to the application of `f` to `args` and reduces it.
    pub fn apply(&mut self, f: NodeId, args: &[NodeId], outer: NodeId) -> EResult<()> {
        let mut all = vec![f];
        all.extend_from_slice(args);
        self.rewrite(outer, NodeContent::Fun(self.code.apply.clone(), all))?;
        self.hnf(outer)
    }

    /// Evaluates `root` to normal form and reads back the answer.
    pub fn normalize(&mut self, root: NodeId) -> EResult<Answer> {
        let mut done = Vec::new();
        let ok = self.norm(root, &mut done)?;
        let outcome = if ok { Outcome::Value(self.read_back(root)?) } else { Outcome::Failure };
        Ok(Answer { outcome, frames: self.stack.len() })
    }

    fn norm(&mut self, n: NodeId, done: &mut Vec<bool>) -> EResult<bool> {
        if marked(done, n) {
            return Ok(true);
        }
        if marked(&self.normalizing, n) {
            return Err(EngineError::CyclicAnswer);
        }
        self.enter()?;
        mark(&mut self.normalizing, n, true);
        let r = stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.norm_inner(n, done));
        mark(&mut self.normalizing, n, false);
        self.depth -= 1;
        if let Ok(true) = r {
            mark(done, n, true);
        }
        r
    }

    fn norm_inner(&mut self, n: NodeId, done: &mut Vec<bool>) -> EResult<bool> {
        self.hnf(n)?;
        match self.graph.get(n).clone() {
            NodeContent::Fwd(m) => self.norm(m, done),
            NodeContent::Bot => {
                self.fire(RuleName::NormBot, n)?;
                Ok(false)
            }
            NodeContent::Lit(_) => {
                self.fire(RuleName::NormLit, n)?;
                Ok(true)
            }
            NodeContent::Free => {
                self.fire(RuleName::NormFree, n)?;
                Ok(true)
            }
            NodeContent::Con(_, kids) => {
                self.fire(RuleName::NormCon, n)?;
                for k in kids {
                    if !self.norm(k, done)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            NodeContent::Part(_, _, kids) => {
                self.fire(RuleName::NormPart, n)?;
                for k in kids {
                    if !self.norm(k, done)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            NodeContent::Choice(x, y) => {
                self.fire(RuleName::NormChoice, n)?;
                self.choose_left(n, x, y)?;
                self.norm(x, done)
            }
            NodeContent::Fun(..) => unreachable!("hnf leaves no call at the root"),
        }
    }

    /// The normal form below `n` as a term. Forwarding nodes are contracted
    /// and free variables numbered by first occurrence.
    pub fn read_back(&self, n: NodeId) -> EResult<Term> {
        let mut names = HashMap::new();
        self.read(n, &mut names, 0)
    }

    fn read(&self, n: NodeId, names: &mut HashMap<NodeId, usize>, depth: usize) -> EResult<Term> {
        if depth > self.limits.max_depth {
            return Err(EngineError::DepthLimit(self.limits.max_depth));
        }
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
            let n = self.graph.contract_fwd(n)?;
            Ok(match self.graph.get(n) {
                NodeContent::Lit(l) => Term::Lit(*l),
                NodeContent::Free => {
                    let next = names.len();
                    Term::Free(*names.entry(n).or_insert(next))
                }
                NodeContent::Con(c, kids) => Term::Con(
                    c.to_string(),
                    kids.iter().map(|k| self.read(*k, names, depth + 1)).collect::<EResult<_>>()?,
                ),
                NodeContent::Part(f, k, kids) => Term::Partial {
                    head: f.to_string(),
                    missing: *k,
                    args: kids.iter().map(|k| self.read(*k, names, depth + 1)).collect::<EResult<_>>()?,
                },
                other => {
                    return Err(EngineError::Type(format!("{} node {n} in a normal form", other.kind())));
                }
            })
        })
    }

    /// Pops one frame and applies it.
    pub fn backtrack_step(&mut self) -> EResult<()> {
        let target = self.stack.top().ok_or(GraphError::EmptyStack)?.target;
        self.fire(RuleName::Bt, target)?;
        Ok(graph::backtrack_step(&mut self.graph, &mut self.stack)?)
    }

    /// Undoes rewrites up to the most recent choice and takes its
    /// alternative. False once no alternative is left.
    pub fn backtrack_to_choice(&mut self) -> EResult<bool> {
        while let Some(f) = self.stack.pop() {
            if f.is_choice() {
                self.fire(RuleName::BtChoice, f.target)?;
                graph::take_choice(&mut self.graph, &mut self.stack, f)?;
                return Ok(true);
            }
            self.fire(RuleName::Bt, f.target)?;
            self.graph.set(f.target, f.replacement)?;
        }
        Ok(false)
    }

    /// Frees nodes unreachable from `root` and the stack.
    pub fn collect_garbage(&mut self, root: NodeId) -> usize {
        let roots: Vec<NodeId> = std::iter::once(root).chain(self.stack.roots()).collect();
        self.graph.collect_garbage(roots)
    }

    /// Enumerates the answers of `main`. `on_answer` sees the machine after
    /// each normalization, before backtracking.
    pub fn run_with(&mut self, mut on_answer: impl FnMut(&Machine, NodeId, &Answer)) -> RunResult {
        let root = match self.alloc_main() {
            Ok(r) => r,
            Err(e) => return self.finish(vec![], e),
        };
        let mut answers = Vec::new();
        loop {
            match self.normalize(root) {
                Ok(a) => {
                    on_answer(self, root, &a);
                    if a.is_value() || self.limits.keep_failures {
                        answers.push(a);
                    }
                    let values = answers.iter().filter(|a| a.is_value()).count();
                    if self.limits.max_answers.is_some_and(|m| values >= m) {
                        return RunResult { answers, stop: StopReason::AnswerLimit, steps: self.steps };
                    }
                }
                Err(e) => return self.finish(answers, e),
            }
            self.collect_garbage(root);
            match self.backtrack_to_choice() {
                Ok(true) => {}
                Ok(false) => return RunResult { answers, stop: StopReason::Exhausted, steps: self.steps },
                Err(e) => return self.finish(answers, e),
            }
        }
    }

    pub fn run(&mut self) -> RunResult {
        self.run_with(|_, _, _| {})
    }

    fn finish(&self, answers: Vec<Answer>, e: EngineError) -> RunResult {
        let stop = if e.is_truncation() { StopReason::Truncated(e) } else { StopReason::Error(e) };
        RunResult { answers, stop, steps: self.steps }
    }
}

/// Enumerates the answers of a restricted program's `main` in left-first
/// depth-first order.
pub fn run_main(p: &RProgram, limits: Limits) -> Result<RunResult, EngineError> {
    Ok(Machine::new(p, limits)?.run())
}

#[cfg(test)]
mod tests;
