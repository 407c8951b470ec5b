//! Abstract syntax for FlatCurry and for Restricted FlatCurry.
//!
//! A source [`Program`] is lowered by [`crate::restrict`] into an
//! [`RProgram`], where every application argument is a variable and each
//! function body contains at most one, outermost, `case`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::frontend::SourceLocation;

/// Name of the built-in general application function.
pub const APPLY: &str = "apply";

/// Name of the entry function every program must define.
pub const ENTRY: &str = "main";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Choice(Box<Expr>, Box<Expr>),
    /// Failure, written `fail`.
    Bot,
    FunApp(String, Vec<Expr>),
    ConApp(String, Vec<Expr>),
    Let(Vec<(String, Expr)>, Box<Expr>),
    Free(Vec<String>, Box<Expr>),
    Case(Box<Expr>, Vec<(Pattern, Expr)>),
    Lit(i64),
    /// General application of a functional value to arguments.
    Apply(Box<Expr>, Vec<Expr>),
    /// A function or constructor mentioned without any arguments although
    /// its arity is positive. Evaluates to a partial application that is
    /// missing every argument.
    Part(String),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn con(name: &str, args: Vec<Expr>) -> Expr {
        Expr::ConApp(name.to_string(), args)
    }

    pub fn fun(name: &str, args: Vec<Expr>) -> Expr {
        Expr::FunApp(name.to_string(), args)
    }

    pub fn choice(left: Expr, right: Expr) -> Expr {
        Expr::Choice(Box::new(left), Box::new(right))
    }

    pub fn case(scrutinee: Expr, branches: Vec<(Pattern, Expr)>) -> Expr {
        Expr::Case(Box::new(scrutinee), branches)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Expr::Var(_))
    }

    /// Variables occurring free in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Expr::Choice(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::Bot | Expr::Lit(_) | Expr::Part(_) => {}
            Expr::FunApp(_, args) | Expr::ConApp(_, args) => {
                for a in args {
                    a.collect_free(bound, out);
                }
            }
            Expr::Apply(head, args) => {
                head.collect_free(bound, out);
                for a in args {
                    a.collect_free(bound, out);
                }
            }
            Expr::Let(bindings, body) => {
                let mark = bound.len();
                bound.extend(bindings.iter().map(|(x, _)| x.clone()));
                for (_, e) in bindings {
                    e.collect_free(bound, out);
                }
                body.collect_free(bound, out);
                bound.truncate(mark);
            }
            Expr::Free(names, body) => {
                let mark = bound.len();
                bound.extend(names.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(mark);
            }
            Expr::Case(scrutinee, branches) => {
                scrutinee.collect_free(bound, out);
                for (pat, e) in branches {
                    let mark = bound.len();
                    bound.extend(pat.vars().iter().cloned());
                    e.collect_free(bound, out);
                    bound.truncate(mark);
                }
            }
        }
    }

    /// True if the expression mentions `apply` or a partial application.
    pub fn is_higher_order(&self) -> bool {
        match self {
            Expr::Apply(..) | Expr::Part(_) => true,
            Expr::Var(_) | Expr::Bot | Expr::Lit(_) => false,
            Expr::Choice(a, b) => a.is_higher_order() || b.is_higher_order(),
            Expr::FunApp(f, args) => f == APPLY || args.iter().any(Expr::is_higher_order),
            Expr::ConApp(_, args) => args.iter().any(Expr::is_higher_order),
            Expr::Let(bs, body) => {
                bs.iter().any(|(_, e)| e.is_higher_order()) || body.is_higher_order()
            }
            Expr::Free(_, body) => body.is_higher_order(),
            Expr::Case(s, bs) => s.is_higher_order() || bs.iter().any(|(_, e)| e.is_higher_order()),
        }
    }

    /// Swaps the operands of every choice.
    pub fn mirror_choices(&self) -> Expr {
        let m = |e: &Expr| e.mirror_choices();
        match self {
            Expr::Choice(a, b) => Expr::Choice(Box::new(m(b)), Box::new(m(a))),
            Expr::Var(_) | Expr::Bot | Expr::Lit(_) | Expr::Part(_) => self.clone(),
            Expr::FunApp(f, args) => Expr::FunApp(f.clone(), args.iter().map(m).collect()),
            Expr::ConApp(c, args) => Expr::ConApp(c.clone(), args.iter().map(m).collect()),
            Expr::Apply(h, args) => Expr::Apply(Box::new(m(h)), args.iter().map(m).collect()),
            Expr::Let(bs, body) => Expr::Let(
                bs.iter().map(|(x, e)| (x.clone(), m(e))).collect(),
                Box::new(m(body)),
            ),
            Expr::Free(xs, body) => Expr::Free(xs.clone(), Box::new(m(body))),
            Expr::Case(s, bs) => Expr::Case(
                Box::new(m(s)),
                bs.iter().map(|(p, e)| (p.clone(), m(e))).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Con(String, Vec<String>),
    Lit(i64),
}

impl Pattern {
    pub fn vars(&self) -> &[String] {
        match self {
            Pattern::Con(_, vars) => vars,
            Pattern::Lit(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

/// A data type declaration. Constructors keep their declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDecl {
    pub name: String,
    pub constructors: Vec<(String, usize)>,
}

/// Where top-level items were defined. Ignored by program equality.
pub type Origins = BTreeMap<String, SourceLocation>;

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub data: Vec<DataDecl>,
    pub functions: Vec<FuncDef>,
    pub entry: String,
    pub origins: Origins,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data && self.functions == other.functions && self.entry == other.entry
    }
}

impl Eq for Program {}

impl Program {
    pub fn new(data: Vec<DataDecl>, functions: Vec<FuncDef>) -> Program {
        Program { data, functions, entry: ENTRY.to_string(), origins: Origins::new() }
    }

    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Declared arity of a constructor.
    pub fn constructor_arity(&self, con: &str) -> Option<usize> {
        self.data
            .iter()
            .flat_map(|d| d.constructors.iter())
            .find(|(c, _)| c == con)
            .map(|&(_, n)| n)
    }

    /// The data type declaring `con`.
    pub fn data_type_of(&self, con: &str) -> Option<&DataDecl> {
        self.data.iter().find(|d| d.constructors.iter().any(|(c, _)| c == con))
    }

    pub fn is_higher_order(&self) -> bool {
        self.functions.iter().any(|f| f.body.is_higher_order())
    }

    /// The same program with the operands of every choice swapped.
    pub fn mirror_choices(&self) -> Program {
        let mut out = self.clone();
        for f in &mut out.functions {
            f.body = f.body.mirror_choices();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownConstructor(pub String);

impl fmt::Display for UnknownConstructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown constructor `{}`", self.0)
    }
}

impl std::error::Error for UnknownConstructor {}

/// All constructors of the data type declaring `con`, in declaration order.
pub fn constructor_siblings(
    program: &Program,
    con: &str,
) -> Result<Vec<(String, usize)>, UnknownConstructor> {
    program
        .data_type_of(con)
        .map(|d| d.constructors.clone())
        .ok_or_else(|| UnknownConstructor(con.to_string()))
}

// ---------------------------------------------------------------------------
// Restricted FlatCurry

/// Right-hand sides allowed in restricted programs. Every argument is a
/// variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RExpr {
    Var(String),
    Lit(i64),
    Bot,
    Choice(String, String),
    /// A fresh free variable.
    Free,
    FunApp(String, Vec<String>),
    ConApp(String, Vec<String>),
    Apply(String, Vec<String>),
    Part(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let(Vec<(String, RExpr)>, Box<Stmt>),
    Return(RExpr),
}

impl Stmt {
    /// The expression the statement returns.
    pub fn result(&self) -> &RExpr {
        match self {
            Stmt::Let(_, rest) => rest.result(),
            Stmt::Return(e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Case(String, Vec<(Pattern, Stmt)>),
    Stmt(Stmt),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RFuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RProgram {
    pub data: Vec<DataDecl>,
    pub functions: Vec<RFuncDef>,
    pub entry: String,
}

impl RProgram {
    pub fn function(&self, name: &str) -> Option<&RFuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// The trivial inclusion of restricted programs into FlatCurry.
    ///
    /// Free declarations of a let group become one `Free` wrapped around
    /// the remaining bindings, so [`RProgram::from_program`] maps the result
    /// back to the same group.
    pub fn embed(&self) -> Program {
        let functions = self
            .functions
            .iter()
            .map(|f| FuncDef { name: f.name.clone(), params: f.params.clone(), body: embed_block(&f.body) })
            .collect();
        Program {
            data: self.data.clone(),
            functions,
            entry: self.entry.clone(),
            origins: Origins::new(),
        }
    }
}

fn embed_block(b: &Block) -> Expr {
    match b {
        Block::Case(x, branches) => Expr::Case(
            Box::new(Expr::Var(x.clone())),
            branches.iter().map(|(p, s)| (p.clone(), embed_stmt(s))).collect(),
        ),
        Block::Stmt(s) => embed_stmt(s),
    }
}

fn embed_stmt(s: &Stmt) -> Expr {
    match s {
        Stmt::Return(RExpr::Free) => {
            let v = "v#free".to_string();
            Expr::Free(vec![v.clone()], Box::new(Expr::Var(v)))
        }
        Stmt::Return(e) => embed_rexpr(e),
        Stmt::Let(bindings, rest) => {
            let frees: Vec<String> = bindings
                .iter()
                .filter(|(_, e)| *e == RExpr::Free)
                .map(|(x, _)| x.clone())
                .collect();
            let others: Vec<(String, Expr)> = bindings
                .iter()
                .filter(|(_, e)| *e != RExpr::Free)
                .map(|(x, e)| (x.clone(), embed_rexpr(e)))
                .collect();
            let mut body = embed_stmt(rest);
            if !others.is_empty() {
                body = Expr::Let(others, Box::new(body));
            }
            if !frees.is_empty() {
                body = Expr::Free(frees, Box::new(body));
            }
            body
        }
    }
}

fn embed_rexpr(e: &RExpr) -> Expr {
    let vars = |xs: &[String]| xs.iter().map(|x| Expr::Var(x.clone())).collect();
    match e {
        RExpr::Var(x) => Expr::Var(x.clone()),
        RExpr::Lit(l) => Expr::Lit(*l),
        RExpr::Bot => Expr::Bot,
        RExpr::Choice(a, b) => Expr::choice(Expr::Var(a.clone()), Expr::Var(b.clone())),
        RExpr::Free => unreachable!("free declarations are embedded by embed_stmt"),
        RExpr::FunApp(f, xs) => Expr::FunApp(f.clone(), vars(xs)),
        RExpr::ConApp(c, xs) => Expr::ConApp(c.clone(), vars(xs)),
        RExpr::Apply(h, xs) => Expr::Apply(Box::new(Expr::Var(h.clone())), vars(xs)),
        RExpr::Part(f) => Expr::Part(f.clone()),
    }
}
