//! Well-formedness checks for FlatCurry and Restricted FlatCurry programs.
//!
//! Diagnostics are data: validation never fails, it reports.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::ast::{
    Block, Expr, Pattern, Program, RExpr, RFuncDef, RProgram, Stmt, APPLY,
};
use crate::frontend::SourceLocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    UndefinedEntry,
    EntryArity,
    DuplicateData,
    DuplicateConstructor,
    EmptyData,
    DuplicateFunction,
    ReservedName,
    UnknownConstructor,
    ConstructorArity,
    UnknownFunction,
    FunctionArity,
    NullaryPartial,
    UnboundVariable,
    DuplicateBinder,
    ShadowedVariable,
    VariableNamesFunction,
    EmptyCase,
    MixedPatterns,
    DuplicatePattern,
    PatternTypeMismatch,
    AliasCycle,
    EmptyApply,
    // restricted form
    NonVariableScrutinee,
    MultipleCases,
    NestedCase,
    NonVariableArgument,
    NestedBinding,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::UndefinedEntry => "undefined entry",
            Rule::EntryArity => "entry arity",
            Rule::DuplicateData => "duplicate data type",
            Rule::DuplicateConstructor => "duplicate constructor",
            Rule::EmptyData => "empty data type",
            Rule::DuplicateFunction => "duplicate function",
            Rule::ReservedName => "reserved name",
            Rule::UnknownConstructor => "unknown constructor",
            Rule::ConstructorArity => "constructor arity",
            Rule::UnknownFunction => "unknown function",
            Rule::FunctionArity => "function arity",
            Rule::NullaryPartial => "nullary partial application",
            Rule::UnboundVariable => "unbound variable",
            Rule::DuplicateBinder => "duplicate binder",
            Rule::ShadowedVariable => "shadowed variable",
            Rule::VariableNamesFunction => "variable named like a function",
            Rule::EmptyCase => "empty case",
            Rule::MixedPatterns => "mixed patterns",
            Rule::DuplicatePattern => "duplicate pattern",
            Rule::PatternTypeMismatch => "pattern type mismatch",
            Rule::AliasCycle => "alias cycle",
            Rule::EmptyApply => "empty apply",
            Rule::NonVariableScrutinee => "non-variable scrutinee",
            Rule::MultipleCases => "multiple cases",
            Rule::NestedCase => "nested case",
            Rule::NonVariableArgument => "non-variable argument",
            Rule::NestedBinding => "nested binding",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Rule,
    /// Function the problem was found in, if any.
    pub function: Option<String>,
    pub location: Option<SourceLocation>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(loc) = &self.location {
            write!(f, "{loc}: ")?;
        }
        if let Some(func) = &self.function {
            write!(f, "in `{func}`: ")?;
        }
        write!(f, "{} [{}]", self.message, self.rule)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.diagnostics.iter().any(|d| d.rule == rule)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("OK");
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

struct Tables<'p> {
    /// constructor -> (index of its data type, arity)
    ctors: HashMap<&'p str, (usize, usize)>,
    funcs: HashMap<&'p str, usize>,
}

struct Checker<'p> {
    program: &'p Program,
    tables: Tables<'p>,
    function: Option<String>,
    scope: Vec<String>,
    out: Vec<Diagnostic>,
}

impl<'p> Checker<'p> {
    fn report(&mut self, rule: Rule, message: String) {
        let location = self
            .function
            .as_ref()
            .and_then(|f| self.program.origins.get(f))
            .cloned();
        self.out.push(Diagnostic { rule, function: self.function.clone(), location, message });
    }

    fn bind(&mut self, name: &str) {
        if self.scope.iter().any(|x| x == name) {
            self.report(Rule::ShadowedVariable, format!("variable `{name}` is already bound"));
        }
        if self.tables.funcs.contains_key(name) {
            self.report(
                Rule::VariableNamesFunction,
                format!("variable `{name}` has the same name as a function"),
            );
        }
        self.scope.push(name.to_string());
    }

    fn distinct<'a>(&mut self, names: impl IntoIterator<Item = &'a String>, what: &str) {
        let mut seen = HashSet::new();
        for n in names {
            if !seen.insert(n) {
                self.report(Rule::DuplicateBinder, format!("{what} `{n}` bound twice"));
            }
        }
    }

    fn expr(&mut self, e: &'p Expr) {
        match e {
            Expr::Var(x) => {
                if !self.scope.contains(x) {
                    self.report(Rule::UnboundVariable, format!("unbound variable `{x}`"));
                }
            }
            Expr::Bot | Expr::Lit(_) => {}
            Expr::Choice(a, b) => {
                self.expr(a);
                self.expr(b);
            }
            Expr::FunApp(f, args) => {
                if f == APPLY {
                    if args.len() < 2 {
                        self.report(Rule::EmptyApply, "`apply` needs a function and at least one argument".into());
                    }
                } else if let Some(&k) = self.tables.funcs.get(f.as_str()) {
                    if k != args.len() {
                        self.report(
                            Rule::FunctionArity,
                            format!("function `{f}` has arity {k} but is applied to {} argument(s)", args.len()),
                        );
                    }
                } else {
                    self.report(Rule::UnknownFunction, format!("undefined function `{f}`"));
                }
                for a in args {
                    self.expr(a);
                }
            }
            Expr::ConApp(c, args) => {
                match self.tables.ctors.get(c.as_str()) {
                    Some(&(_, k)) if k != args.len() => self.report(
                        Rule::ConstructorArity,
                        format!("constructor `{c}` has arity {k} but is applied to {} argument(s)", args.len()),
                    ),
                    Some(_) => {}
                    None => self.report(Rule::UnknownConstructor, format!("undeclared constructor `{c}`")),
                }
                for a in args {
                    self.expr(a);
                }
            }
            Expr::Part(f) => {
                let arity = self
                    .tables
                    .funcs
                    .get(f.as_str())
                    .copied()
                    .or_else(|| self.tables.ctors.get(f.as_str()).map(|&(_, k)| k));
                match arity {
                    Some(0) => self.report(
                        Rule::NullaryPartial,
                        format!("`{f}` takes no arguments and cannot be partially applied"),
                    ),
                    Some(_) => {}
                    None => self.report(Rule::UnknownFunction, format!("undefined function or constructor `{f}`")),
                }
            }
            Expr::Apply(h, args) => {
                if args.is_empty() {
                    self.report(Rule::EmptyApply, "`apply` without arguments".into());
                }
                self.expr(h);
                for a in args {
                    self.expr(a);
                }
            }
            Expr::Let(bindings, body) => {
                let mark = self.scope.len();
                self.distinct(bindings.iter().map(|(x, _)| x), "let binding");
                for (x, _) in bindings {
                    self.bind(x);
                }
                self.alias_cycles(bindings);
                for (_, rhs) in bindings {
                    self.expr(rhs);
                }
                self.expr(body);
                self.scope.truncate(mark);
            }
            Expr::Free(names, body) => {
                let mark = self.scope.len();
                self.distinct(names, "free variable");
                for x in names {
                    self.bind(x);
                }
                self.expr(body);
                self.scope.truncate(mark);
            }
            Expr::Case(scrutinee, branches) => {
                self.expr(scrutinee);
                self.patterns(branches);
                for (pat, body) in branches {
                    let mark = self.scope.len();
                    self.distinct(pat.vars(), "pattern variable");
                    for x in pat.vars() {
                        self.bind(x);
                    }
                    self.expr(body);
                    self.scope.truncate(mark);
                }
            }
        }
    }

    fn patterns(&mut self, branches: &'p [(Pattern, Expr)]) {
        if branches.is_empty() {
            self.report(Rule::EmptyCase, "case expression without branches".into());
            return;
        }
        let lits = branches.iter().filter(|(p, _)| matches!(p, Pattern::Lit(_))).count();
        if lits != 0 && lits != branches.len() {
            self.report(Rule::MixedPatterns, "case mixes literal and constructor patterns".into());
            return;
        }
        let mut seen_lits = HashSet::new();
        let mut seen_cons = HashSet::new();
        let mut data_type = None;
        for (p, _) in branches {
            match p {
                Pattern::Lit(l) => {
                    if !seen_lits.insert(*l) {
                        self.report(Rule::DuplicatePattern, format!("literal pattern {l} occurs twice"));
                    }
                }
                Pattern::Con(c, vars) => {
                    if !seen_cons.insert(c) {
                        self.report(Rule::DuplicatePattern, format!("pattern `{c}` occurs twice"));
                    }
                    match self.tables.ctors.get(c.as_str()).copied() {
                        None => self.report(Rule::UnknownConstructor, format!("undeclared constructor `{c}` in pattern")),
                        Some((d, k)) => {
                            if k != vars.len() {
                                self.report(
                                    Rule::ConstructorArity,
                                    format!("pattern `{c}` binds {} variable(s) but the constructor has arity {k}", vars.len()),
                                );
                            }
                            match data_type {
                                None => data_type = Some(d),
                                Some(prev) if prev != d => self.report(
                                    Rule::PatternTypeMismatch,
                                    format!("pattern `{c}` belongs to a different data type than earlier branches"),
                                ),
                                Some(_) => {}
                            }
                        }
                    }
                }
            }
        }
    }

    /// Bindings `x = y` inside one group must not form a cycle.
    fn alias_cycles(&mut self, bindings: &'p [(String, Expr)]) {
        let alias: HashMap<&str, &str> = bindings
            .iter()
            .filter_map(|(x, e)| match e {
                Expr::Var(y) => Some((x.as_str(), y.as_str())),
                _ => None,
            })
            .collect();
        for (x, _) in bindings {
            let mut cur = x.as_str();
            for _ in 0..=alias.len() {
                match alias.get(cur) {
                    Some(&next) if next == x => {
                        self.report(Rule::AliasCycle, format!("binding `{x}` is defined as an alias of itself"));
                        break;
                    }
                    Some(&next) => cur = next,
                    None => break,
                }
            }
        }
    }
}

fn build_tables<'p>(p: &'p Program, out: &mut Vec<Diagnostic>) -> Tables<'p> {
    let mut ctors = HashMap::new();
    let mut funcs = HashMap::new();
    let mut data_names = HashSet::new();
    let diag = |rule, message| Diagnostic { rule, function: None, location: None, message };
    for (i, d) in p.data.iter().enumerate() {
        if !data_names.insert(d.name.as_str()) {
            out.push(diag(Rule::DuplicateData, format!("data type `{}` declared twice", d.name)));
        }
        if d.constructors.is_empty() {
            out.push(diag(Rule::EmptyData, format!("data type `{}` has no constructors", d.name)));
        }
        for (c, k) in &d.constructors {
            if ctors.insert(c.as_str(), (i, *k)).is_some() {
                out.push(diag(Rule::DuplicateConstructor, format!("constructor `{c}` declared twice")));
            }
        }
    }
    for f in &p.functions {
        if f.name == APPLY {
            out.push(Diagnostic {
                rule: Rule::ReservedName,
                function: Some(f.name.clone()),
                location: p.origins.get(&f.name).cloned(),
                message: format!("`{APPLY}` is built in and cannot be redefined"),
            });
        }
        if funcs.insert(f.name.as_str(), f.params.len()).is_some() {
            out.push(Diagnostic {
                rule: Rule::DuplicateFunction,
                function: Some(f.name.clone()),
                location: p.origins.get(&f.name).cloned(),
                message: format!("function `{}` defined twice", f.name),
            });
        }
    }
    Tables { ctors, funcs }
}

/// Checks scoping, arities, patterns and the entry point of a program.
pub fn validate_program(p: &Program) -> Report {
    let mut out = Vec::new();
    let tables = build_tables(p, &mut out);
    match tables.funcs.get(p.entry.as_str()) {
        None => out.push(Diagnostic {
            rule: Rule::UndefinedEntry,
            function: None,
            location: None,
            message: format!("undefined entry `{}`", p.entry),
        }),
        Some(&k) if k != 0 => out.push(Diagnostic {
            rule: Rule::EntryArity,
            function: Some(p.entry.clone()),
            location: p.origins.get(&p.entry).cloned(),
            message: format!("entry `{}` must take no arguments, found {k}", p.entry),
        }),
        Some(_) => {}
    }
    let mut checker = Checker { program: p, tables, function: None, scope: Vec::new(), out };
    for f in &p.functions {
        checker.function = Some(f.name.clone());
        checker.scope.clear();
        checker.distinct(&f.params, "parameter");
        for x in &f.params {
            checker.bind(x);
        }
        checker.expr(&f.body);
    }
    Report { diagnostics: checker.out }
}

/// Checks a program against every rule of [`validate_program`] plus the
/// restricted-form rules: trivial arguments, variable scrutinees and at
/// most one, outermost, case per function.
pub fn validate_restricted(p: &Program) -> Report {
    let mut report = validate_program(p);
    for f in &p.functions {
        let mut shape = Shape { function: &f.name, location: p.origins.get(&f.name), out: &mut report.diagnostics };
        shape.function_body(&f.body);
    }
    report
}

struct Shape<'a> {
    function: &'a str,
    location: Option<&'a SourceLocation>,
    out: &'a mut Vec<Diagnostic>,
}

impl Shape<'_> {
    fn report(&mut self, rule: Rule, message: impl Into<String>) {
        self.out.push(Diagnostic {
            rule,
            function: Some(self.function.to_string()),
            location: self.location.cloned(),
            message: message.into(),
        });
    }

    fn function_body(&mut self, body: &Expr) {
        let cases = count_cases(body);
        if cases > 1 {
            self.report(Rule::MultipleCases, format!("function contains {cases} case expressions, at most one is allowed"));
        }
        match body {
            Expr::Case(scrutinee, branches) => {
                if !scrutinee.is_var() {
                    self.report(Rule::NonVariableScrutinee, "case scrutinee must be a variable");
                }
                for (_, b) in branches {
                    self.stmt(b, cases);
                }
            }
            _ => self.stmt(body, cases),
        }
    }

    fn stmt(&mut self, e: &Expr, cases: usize) {
        match e {
            Expr::Let(bindings, rest) => {
                for (_, rhs) in bindings {
                    self.rexpr(rhs, cases);
                }
                self.stmt(rest, cases);
            }
            Expr::Free(_, rest) => self.stmt(rest, cases),
            _ => self.rexpr(e, cases),
        }
    }

    fn rexpr(&mut self, e: &Expr, cases: usize) {
        let all_vars = |args: &[Expr]| args.iter().all(Expr::is_var);
        match e {
            Expr::Var(_) | Expr::Lit(_) | Expr::Bot | Expr::Part(_) => {}
            Expr::Choice(a, b) => {
                if !(a.is_var() && b.is_var()) {
                    self.report(Rule::NonVariableArgument, "choice operands must be variables");
                }
            }
            Expr::FunApp(f, args) | Expr::ConApp(f, args) => {
                if !all_vars(args) {
                    self.report(Rule::NonVariableArgument, format!("arguments of `{f}` must be variables"));
                }
            }
            Expr::Apply(h, args) => {
                if !(h.is_var() && all_vars(args)) {
                    self.report(Rule::NonVariableArgument, "operands of `apply` must be variables");
                }
            }
            Expr::Case(scrutinee, _) => {
                if !scrutinee.is_var() {
                    self.report(Rule::NonVariableScrutinee, "case scrutinee must be a variable");
                }
                if cases == 1 {
                    self.report(Rule::NestedCase, "the case expression must be the outermost form of the body");
                }
            }
            Expr::Let(..) | Expr::Free(..) => {
                self.report(Rule::NestedBinding, "declarations may only appear at statement level");
            }
        }
    }
}

fn count_cases(e: &Expr) -> usize {
    match e {
        Expr::Var(_) | Expr::Bot | Expr::Lit(_) | Expr::Part(_) => 0,
        Expr::Choice(a, b) => count_cases(a) + count_cases(b),
        Expr::FunApp(_, args) | Expr::ConApp(_, args) => args.iter().map(count_cases).sum(),
        Expr::Apply(h, args) => count_cases(h) + args.iter().map(count_cases).sum::<usize>(),
        Expr::Let(bs, body) => bs.iter().map(|(_, e)| count_cases(e)).sum::<usize>() + count_cases(body),
        Expr::Free(_, body) => count_cases(body),
        Expr::Case(s, bs) => 1 + count_cases(s) + bs.iter().map(|(_, e)| count_cases(e)).sum::<usize>(),
    }
}

impl RProgram {
    /// Reads a program that is already in restricted form.
    pub fn from_program(p: &Program) -> Result<RProgram, Report> {
        let report = validate_restricted(p);
        if !report.is_ok() {
            return Err(report);
        }
        let functions = p
            .functions
            .iter()
            .map(|f| RFuncDef { name: f.name.clone(), params: f.params.clone(), body: to_block(&f.body) })
            .collect();
        Ok(RProgram { data: p.data.clone(), functions, entry: p.entry.clone() })
    }
}

fn var_name(e: &Expr) -> String {
    match e {
        Expr::Var(x) => x.clone(),
        _ => unreachable!("restricted shape was validated"),
    }
}

fn to_block(e: &Expr) -> Block {
    match e {
        Expr::Case(s, branches) => {
            Block::Case(var_name(s), branches.iter().map(|(p, b)| (p.clone(), to_stmt(b))).collect())
        }
        _ => Block::Stmt(to_stmt(e)),
    }
}

fn to_stmt(e: &Expr) -> Stmt {
    match e {
        Expr::Free(names, rest) => {
            let mut bindings: Vec<(String, RExpr)> = names.iter().map(|x| (x.clone(), RExpr::Free)).collect();
            match rest.as_ref() {
                Expr::Let(bs, inner) => {
                    bindings.extend(bs.iter().map(|(x, e)| (x.clone(), to_rexpr(e))));
                    Stmt::Let(bindings, Box::new(to_stmt(inner)))
                }
                other => Stmt::Let(bindings, Box::new(to_stmt(other))),
            }
        }
        Expr::Let(bs, rest) => Stmt::Let(
            bs.iter().map(|(x, e)| (x.clone(), to_rexpr(e))).collect(),
            Box::new(to_stmt(rest)),
        ),
        _ => Stmt::Return(to_rexpr(e)),
    }
}

fn to_rexpr(e: &Expr) -> RExpr {
    let vars = |args: &[Expr]| args.iter().map(var_name).collect();
    match e {
        Expr::Var(x) => RExpr::Var(x.clone()),
        Expr::Lit(l) => RExpr::Lit(*l),
        Expr::Bot => RExpr::Bot,
        Expr::Part(f) => RExpr::Part(f.clone()),
        Expr::Choice(a, b) => RExpr::Choice(var_name(a), var_name(b)),
        Expr::FunApp(f, args) if f == APPLY => RExpr::Apply(var_name(&args[0]), vars(&args[1..])),
        Expr::FunApp(f, args) => RExpr::FunApp(f.clone(), vars(args)),
        Expr::ConApp(c, args) => RExpr::ConApp(c.clone(), vars(args)),
        Expr::Apply(h, args) => RExpr::Apply(var_name(h), vars(args)),
        Expr::Let(..) | Expr::Free(..) | Expr::Case(..) => unreachable!("restricted shape was validated"),
    }
}
