//! Concrete syntax: lexer, parser and pretty-printer for `.fcy` files.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

use crate::ast::{Program, RProgram};
use crate::validate::{validate_program, validate_restricted, Diagnostic, Report};

pub use printer::{pretty_print, pretty_print_restricted, print_expr};

/// Default file name used when parsing text that did not come from a file.
pub const INPUT_NAME: &str = "<input>";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceLocation {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
}

impl SourceLocation {
    pub fn new(file: &str, line: usize, column: usize) -> SourceLocation {
        SourceLocation { file: file.to_string(), line, column }
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{location}: lexical error: {message}")]
    Lexical { location: SourceLocation, message: String },
    #[error("{location}: syntax error: {message}")]
    Syntax { location: SourceLocation, message: String },
    #[error("{location}: {message} [{rule}]")]
    Invalid { location: SourceLocation, rule: crate::validate::Rule, message: String },
}

impl ParseError {
    pub fn location(&self) -> &SourceLocation {
        match self {
            ParseError::Lexical { location, .. }
            | ParseError::Syntax { location, .. }
            | ParseError::Invalid { location, .. } => location,
        }
    }

    fn from_diagnostic(d: &Diagnostic, file: &str) -> ParseError {
        let message = match &d.function {
            Some(f) => format!("in `{f}`: {}", d.message),
            None => d.message.clone(),
        };
        ParseError::Invalid {
            location: d.location.clone().unwrap_or_else(|| SourceLocation::new(file, 1, 1)),
            rule: d.rule,
            message,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub file: String,
    /// Accept `#` inside identifiers, as produced by the restrictor.
    pub generated_names: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { file: INPUT_NAME.to_string(), generated_names: false }
    }
}

/// Parses without running validation. Every input yields either a program
/// or the first located error.
pub fn parse_unchecked(text: &str, opts: &ParseOptions) -> Result<Program, ParseError> {
    let tokens = lexer::lex(text, opts)?;
    parser::parse(&tokens, opts)
}

fn promote(report: Report, file: &str) -> Result<(), ParseError> {
    match report.diagnostics.first() {
        Some(d) => Err(ParseError::from_diagnostic(d, file)),
        None => Ok(()),
    }
}

/// Parses and validates a FlatCurry program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_program_with(text, &ParseOptions::default())
}

pub fn parse_program_with(text: &str, opts: &ParseOptions) -> Result<Program, ParseError> {
    let p = parse_unchecked(text, opts)?;
    promote(validate_program(&p), &opts.file)?;
    Ok(p)
}

/// Parses a program already in restricted form, such as the output of
/// `fcvm flatten`. Generated names containing `#` are accepted.
pub fn parse_restricted(text: &str) -> Result<RProgram, ParseError> {
    parse_restricted_with(text, &ParseOptions::default())
}

pub fn parse_restricted_with(text: &str, opts: &ParseOptions) -> Result<RProgram, ParseError> {
    let opts = ParseOptions { generated_names: true, ..opts.clone() };
    let p = parse_unchecked(text, &opts)?;
    promote(validate_restricted(&p), &opts.file)?;
    RProgram::from_program(&p).map_err(|r| ParseError::from_diagnostic(&r.diagnostics[0], &opts.file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Expr, Pattern};

    const FIG3: &str = "data Bool = False | True

and x y = case x of {
    False -> False;
    True -> case y of { False -> False; True -> True }
  }

main = and True False
";

    #[test]
    fn parses_and_listing() {
        let p = parse_program(FIG3).unwrap();
        assert_eq!(p.functions.len(), 2);
        let and = p.function("and").unwrap();
        assert_eq!(and.params, vec!["x", "y"]);
        let Expr::Case(s, branches) = &and.body else { panic!("expected case") };
        assert_eq!(**s, Expr::var("x"));
        assert_eq!(branches[0].0, Pattern::Con("False".into(), vec![]));
        assert!(matches!(branches[1].1, Expr::Case(..)));
        assert_eq!(p.origins["and"], SourceLocation::new(INPUT_NAME, 3, 1));
    }

    #[test]
    fn fail_is_bot() {
        let p = parse_program("main = fail").unwrap();
        assert_eq!(p.function("main").unwrap().body, Expr::Bot);
    }

    #[test]
    fn let_with_choice() {
        let p = parse_program("main = let x = 0 ? 1 in x").unwrap();
        assert_eq!(
            p.function("main").unwrap().body,
            Expr::Let(vec![("x".into(), Expr::choice(Expr::Lit(0), Expr::Lit(1)))], Box::new(Expr::var("x")))
        );
    }

    #[test]
    fn pick_one_member() {
        let src = "data List = Nil | Cons _ _
data Bool = False | True
pickOne xs = case xs of { Cons y ys -> y ? pickOne ys }
member x xs = case xs of { Cons y ys -> case eq x y of { True -> True; False -> member x ys } }
eq a b = case a of { 1 -> case b of { 1 -> True; 2 -> False }; 2 -> case b of { 1 -> False; 2 -> True } }
main = pickOne (Cons 1 (Cons 2 Nil))
";
        let p = parse_program(src).unwrap();
        assert!(p.function("pickOne").is_some() && p.function("member").is_some());
    }

    #[test]
    fn validation_errors_are_located() {
        let err = parse_program("data Bool = False | True\nmain = True False\n").unwrap_err();
        let ParseError::Invalid { location, rule, .. } = &err else { panic!("{err}") };
        assert_eq!(*rule, crate::validate::Rule::ConstructorArity);
        assert_eq!((location.line, location.column), (2, 1));
    }

    #[test]
    fn hash_only_in_generated_mode() {
        let err = parse_program("main = f#1\nf#1 = fail").unwrap_err();
        assert!(matches!(err, ParseError::Lexical { .. }), "{err}");
        let rp = parse_restricted("main = f#1\nf#1 = fail").unwrap();
        assert_eq!(rp.functions.len(), 2);
    }
}
