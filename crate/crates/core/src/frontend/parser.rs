use std::collections::HashMap;

use super::lexer::{Tok, Token};
use super::{ParseError, ParseOptions, SourceLocation};
use crate::ast::{DataDecl, Expr, FuncDef, Origins, Pattern, Program, ENTRY};

const MAX_NESTING: usize = 1000;

/// Expressions as written, before application heads are classified.
#[derive(Debug, Clone)]
enum Surface {
    Lower(String),
    Upper(String),
    Int(i64),
    Fail,
    Choice(Box<Surface>, Box<Surface>),
    /// Juxtaposition `h a1 .. an`, n >= 1.
    App(Box<Surface>, Vec<Surface>),
    /// `apply h a1 .. an`.
    Apply(Box<Surface>, Vec<Surface>),
    Let(Vec<(String, Surface)>, Box<Surface>),
    Free(Vec<String>, Box<Surface>),
    Case(Box<Surface>, Vec<(Pattern, Surface)>),
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    file: &'t str,
    depth: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn location(&self) -> SourceLocation {
        let t = &self.tokens[self.pos];
        SourceLocation::new(self.file, t.line, t.column)
    }

    fn error<T>(&self, message: String) -> PResult<T> {
        Err(ParseError::Syntax { location: self.location(), message })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn lower(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Lower(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a variable name"),
        }
    }

    fn upper(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Upper(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a constructor name"),
        }
    }

    fn data_decl(&mut self) -> PResult<DataDecl> {
        self.expect(&Tok::Data)?;
        let name = self.upper()?;
        // Type parameters are accepted and ignored.
        while matches!(self.peek(), Tok::Lower(_)) {
            self.bump();
        }
        self.expect(&Tok::Eq)?;
        let mut constructors = vec![self.constructor()?];
        while self.eat(&Tok::Bar) {
            constructors.push(self.constructor()?);
        }
        Ok(DataDecl { name, constructors })
    }

    fn constructor(&mut self) -> PResult<(String, usize)> {
        let name = self.upper()?;
        if let Tok::Int(n) = *self.peek() {
            self.bump();
            return match usize::try_from(n) {
                Ok(k) => Ok((name, k)),
                Err(_) => self.error(format!("negative arity for constructor `{name}`")),
            };
        }
        let mut arity = 0;
        loop {
            match self.peek() {
                Tok::Underscore | Tok::Lower(_) | Tok::Upper(_) => {
                    self.bump();
                }
                Tok::LParen => self.skip_parens()?,
                _ => break,
            }
            arity += 1;
        }
        Ok((name, arity))
    }

    fn skip_parens(&mut self) -> PResult<()> {
        self.expect(&Tok::LParen)?;
        let mut open = 1;
        while open > 0 {
            match self.peek() {
                Tok::LParen => open += 1,
                Tok::RParen => open -= 1,
                Tok::Underscore | Tok::Lower(_) | Tok::Upper(_) => {}
                _ => return self.unexpected("a type in parentheses"),
            }
            self.bump();
        }
        Ok(())
    }

    fn function(&mut self) -> PResult<(String, Vec<String>, Surface)> {
        let name = self.lower()?;
        let mut params = Vec::new();
        while let Tok::Lower(p) = self.peek().clone() {
            self.bump();
            params.push(p);
        }
        self.expect(&Tok::Eq)?;
        let body = self.expr()?;
        Ok((name, params, body))
    }

    fn expr(&mut self) -> PResult<Surface> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return self.error("expression nested too deeply".into());
        }
        let r = stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.expr_inner());
        self.depth -= 1;
        r
    }

    fn expr_inner(&mut self) -> PResult<Surface> {
        match self.peek() {
            Tok::Let => self.let_expr(),
            Tok::Case => self.case_expr(),
            _ => {
                let left = self.app()?;
                if self.eat(&Tok::Question) {
                    let right = self.expr()?;
                    Ok(Surface::Choice(Box::new(left), Box::new(right)))
                } else {
                    Ok(left)
                }
            }
        }
    }

    fn let_expr(&mut self) -> PResult<Surface> {
        self.expect(&Tok::Let)?;
        if matches!(self.peek(), Tok::Lower(_)) && matches!(self.peek_at(1), Tok::Comma | Tok::Free) {
            let mut names = vec![self.lower()?];
            while self.eat(&Tok::Comma) {
                names.push(self.lower()?);
            }
            self.expect(&Tok::Free)?;
            self.expect(&Tok::In)?;
            let body = self.expr()?;
            return Ok(Surface::Free(names, Box::new(body)));
        }
        let mut bindings = Vec::new();
        if self.eat(&Tok::LBrace) {
            while !self.eat(&Tok::RBrace) {
                bindings.push(self.binding()?);
                if !self.eat(&Tok::Semi) {
                    self.expect(&Tok::RBrace)?;
                    break;
                }
            }
        } else {
            bindings.push(self.binding()?);
            while self.eat(&Tok::Semi) {
                bindings.push(self.binding()?);
            }
        }
        self.expect(&Tok::In)?;
        let body = self.expr()?;
        if bindings.is_empty() {
            return Ok(body);
        }
        Ok(Surface::Let(bindings, Box::new(body)))
    }

    fn binding(&mut self) -> PResult<(String, Surface)> {
        let name = self.lower()?;
        self.expect(&Tok::Eq)?;
        Ok((name, self.expr()?))
    }

    fn case_expr(&mut self) -> PResult<Surface> {
        self.expect(&Tok::Case)?;
        let scrutinee = self.expr()?;
        self.expect(&Tok::Of)?;
        self.expect(&Tok::LBrace)?;
        let mut branches = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let pat = self.pattern()?;
            self.expect(&Tok::Arrow)?;
            branches.push((pat, self.expr()?));
            if !self.eat(&Tok::Semi) {
                self.expect(&Tok::RBrace)?;
                break;
            }
        }
        Ok(Surface::Case(Box::new(scrutinee), branches))
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Pattern::Lit(n))
            }
            Tok::Upper(c) => {
                self.bump();
                let mut vars = Vec::new();
                while let Tok::Lower(v) = self.peek().clone() {
                    self.bump();
                    vars.push(v);
                }
                Ok(Pattern::Con(c, vars))
            }
            _ => self.unexpected("a pattern"),
        }
    }

    fn app(&mut self) -> PResult<Surface> {
        if self.eat(&Tok::Apply) {
            let head = self.atom()?;
            let mut args = vec![self.atom()?];
            while self.starts_atom() {
                args.push(self.atom()?);
            }
            return Ok(Surface::Apply(Box::new(head), args));
        }
        let head = self.atom()?;
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.atom()?);
        }
        if args.is_empty() {
            Ok(head)
        } else {
            Ok(Surface::App(Box::new(head), args))
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Lower(_) | Tok::Upper(_) | Tok::Int(_) | Tok::Fail | Tok::LParen)
    }

    fn atom(&mut self) -> PResult<Surface> {
        match self.peek().clone() {
            Tok::Lower(x) => {
                self.bump();
                Ok(Surface::Lower(x))
            }
            Tok::Upper(c) => {
                self.bump();
                Ok(Surface::Upper(c))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Surface::Int(n))
            }
            Tok::Fail => {
                self.bump();
                Ok(Surface::Fail)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            _ => self.unexpected("an expression"),
        }
    }
}

struct Resolver<'a> {
    funcs: &'a HashMap<String, usize>,
    ctors: &'a HashMap<String, usize>,
    scope: Vec<String>,
}

impl Resolver<'_> {
    fn resolve(&mut self, s: &Surface) -> Expr {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.resolve_inner(s))
    }

    fn resolve_inner(&mut self, s: &Surface) -> Expr {
        match s {
            Surface::Lower(x) => {
                if self.scope.contains(x) {
                    return Expr::Var(x.clone());
                }
                match self.funcs.get(x) {
                    Some(0) => Expr::FunApp(x.clone(), vec![]),
                    Some(_) => Expr::Part(x.clone()),
                    None => Expr::Var(x.clone()),
                }
            }
            Surface::Upper(c) => match self.ctors.get(c) {
                Some(k) if *k > 0 => Expr::Part(c.clone()),
                _ => Expr::ConApp(c.clone(), vec![]),
            },
            Surface::Int(n) => Expr::Lit(*n),
            Surface::Fail => Expr::Bot,
            Surface::Choice(a, b) => Expr::choice(self.resolve(a), self.resolve(b)),
            Surface::Apply(h, args) => {
                let h = self.resolve(h);
                Expr::Apply(Box::new(h), args.iter().map(|a| self.resolve(a)).collect())
            }
            Surface::App(head, args) => {
                let mut args: Vec<Expr> = args.iter().map(|a| self.resolve(a)).collect();
                match head.as_ref() {
                    Surface::Lower(f) if !self.scope.contains(f) => match self.funcs.get(f) {
                        Some(&k) if args.len() == k => Expr::FunApp(f.clone(), args),
                        Some(&k) if args.len() < k => Expr::Apply(Box::new(Expr::Part(f.clone())), args),
                        Some(&k) => {
                            let rest = args.split_off(k);
                            Expr::Apply(Box::new(Expr::FunApp(f.clone(), args)), rest)
                        }
                        None => Expr::FunApp(f.clone(), args),
                    },
                    Surface::Upper(c) => match self.ctors.get(c) {
                        Some(&k) if args.len() < k => Expr::Apply(Box::new(Expr::Part(c.clone())), args),
                        _ => Expr::ConApp(c.clone(), args),
                    },
                    other => {
                        let h = self.resolve(other);
                        Expr::Apply(Box::new(h), args)
                    }
                }
            }
            Surface::Let(bindings, body) => {
                let mark = self.scope.len();
                self.scope.extend(bindings.iter().map(|(x, _)| x.clone()));
                let bs = bindings.iter().map(|(x, e)| (x.clone(), self.resolve(e))).collect();
                let body = self.resolve(body);
                self.scope.truncate(mark);
                Expr::Let(bs, Box::new(body))
            }
            Surface::Free(names, body) => {
                let mark = self.scope.len();
                self.scope.extend(names.iter().cloned());
                let body = self.resolve(body);
                self.scope.truncate(mark);
                Expr::Free(names.clone(), Box::new(body))
            }
            Surface::Case(scrutinee, branches) => {
                let scrutinee = self.resolve(scrutinee);
                let branches = branches
                    .iter()
                    .map(|(p, e)| {
                        let mark = self.scope.len();
                        self.scope.extend(p.vars().iter().cloned());
                        let e = self.resolve(e);
                        self.scope.truncate(mark);
                        (p.clone(), e)
                    })
                    .collect();
                Expr::Case(Box::new(scrutinee), branches)
            }
        }
    }
}

pub(crate) fn parse(tokens: &[Token], opts: &ParseOptions) -> Result<Program, ParseError> {
    let mut p = Parser { tokens, pos: 0, file: &opts.file, depth: 0 };
    let mut data = Vec::new();
    let mut surface = Vec::new();
    let mut origins = Origins::new();
    loop {
        while p.eat(&Tok::Sep) {}
        if *p.peek() == Tok::Eof {
            break;
        }
        let loc = p.location();
        if *p.peek() == Tok::Data {
            let d = p.data_decl()?;
            origins.entry(d.name.clone()).or_insert(loc);
            data.push(d);
        } else {
            let f = p.function()?;
            origins.entry(f.0.clone()).or_insert(loc);
            surface.push(f);
        }
        if !matches!(p.peek(), Tok::Sep | Tok::Eof) {
            return p.unexpected("the end of the definition");
        }
    }

    let mut funcs = HashMap::new();
    for (name, params, _) in &surface {
        funcs.entry(name.clone()).or_insert(params.len());
    }
    let mut ctors = HashMap::new();
    for d in &data {
        for (c, k) in &d.constructors {
            ctors.entry(c.clone()).or_insert(*k);
        }
    }
    let mut functions = Vec::with_capacity(surface.len());
    for (name, params, body) in surface {
        let mut r = Resolver { funcs: &funcs, ctors: &ctors, scope: params.clone() };
        let body = r.resolve(&body);
        functions.push(FuncDef { name, params, body });
    }
    Ok(Program { data, functions, entry: ENTRY.to_string(), origins })
}
