//! A backtracking graph-rewriting virtual machine for FlatCurry.
//!
//! The pipeline is: [`frontend::parse_program`] produces a [`ast::Program`],
//! [`restrict::restrict`] lowers it to an [`ast::RProgram`], and
//! [`engine::run_main`] enumerates its answers. [`oracle`] is an independent
//! big-step interpreter used to cross-check the engine.

pub mod answer;
pub mod ast;
pub mod engine;
pub mod frontend;
pub mod graph;
pub mod oracle;
pub mod restrict;
pub mod validate;

pub use answer::{Answer, Outcome, Term};
pub use ast::{Block, DataDecl, Expr, FuncDef, Pattern, Program, RExpr, RFuncDef, RProgram, Stmt};
pub use engine::{run_main, Limits, Machine, RunResult, StopReason};
pub use frontend::{parse_program, parse_restricted, pretty_print, pretty_print_restricted, ParseError};
pub use restrict::restrict;
pub use validate::{validate_program, validate_restricted, Diagnostic, Report};
