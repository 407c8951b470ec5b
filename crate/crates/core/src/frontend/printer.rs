use std::fmt::Write;

use crate::ast::{DataDecl, Expr, FuncDef, Pattern, Program, RProgram};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    ChoiceLeft,
    Arg,
}

/// Renders a program in the surface syntax accepted by the parser.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.data {
        print_data(&mut out, d);
    }
    for f in &p.functions {
        if !out.is_empty() {
            out.push('\n');
        }
        print_function(&mut out, f);
    }
    out
}

/// Renders a restricted program through its embedding into FlatCurry.
pub fn pretty_print_restricted(p: &RProgram) -> String {
    pretty_print(&p.embed())
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, Ctx::Top);
    out
}

fn print_data(out: &mut String, d: &DataDecl) {
    write!(out, "data {} =", d.name).unwrap();
    for (i, (c, k)) in d.constructors.iter().enumerate() {
        if i > 0 {
            out.push_str(" |");
        }
        write!(out, " {c}").unwrap();
        for _ in 0..*k {
            out.push_str(" _");
        }
    }
    out.push('\n');
}

fn print_function(out: &mut String, f: &FuncDef) {
    out.push_str(&f.name);
    for x in &f.params {
        write!(out, " {x}").unwrap();
    }
    out.push_str(" =");
    match &f.body {
        Expr::Case(s, branches) if !branches.is_empty() => {
            out.push_str(" case ");
            expr(out, s, Ctx::Top);
            out.push_str(" of {\n");
            for (i, (p, e)) in branches.iter().enumerate() {
                out.push_str("    ");
                pattern(out, p);
                out.push_str(" -> ");
                expr(out, e, Ctx::Top);
                if i + 1 < branches.len() {
                    out.push(';');
                }
                out.push('\n');
            }
            out.push_str("  }\n");
        }
        body => {
            out.push(' ');
            expr(out, body, Ctx::Top);
            out.push('\n');
        }
    }
}

fn pattern(out: &mut String, p: &Pattern) {
    match p {
        Pattern::Lit(l) => write!(out, "{l}").unwrap(),
        Pattern::Con(c, vars) => {
            out.push_str(c);
            for v in vars {
                write!(out, " {v}").unwrap();
            }
        }
    }
}

fn expr(out: &mut String, e: &Expr, ctx: Ctx) {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || expr_inner(out, e, ctx))
}

fn parenthesized(out: &mut String, wrap: bool, body: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    body(out);
    if wrap {
        out.push(')');
    }
}

fn expr_inner(out: &mut String, e: &Expr, ctx: Ctx) {
    match e {
        Expr::Var(x) | Expr::Part(x) => out.push_str(x),
        Expr::Lit(l) => write!(out, "{l}").unwrap(),
        Expr::Bot => out.push_str("fail"),
        Expr::FunApp(f, args) | Expr::ConApp(f, args) => {
            parenthesized(out, ctx == Ctx::Arg && !args.is_empty(), |out| {
                out.push_str(f);
                for a in args {
                    out.push(' ');
                    expr(out, a, Ctx::Arg);
                }
            })
        }
        Expr::Apply(h, args) => parenthesized(out, ctx == Ctx::Arg, |out| {
            out.push_str("apply ");
            expr(out, h, Ctx::Arg);
            for a in args {
                out.push(' ');
                expr(out, a, Ctx::Arg);
            }
        }),
        Expr::Choice(a, b) => parenthesized(out, ctx != Ctx::Top, |out| {
            expr(out, a, Ctx::ChoiceLeft);
            out.push_str(" ? ");
            expr(out, b, Ctx::Top);
        }),
        Expr::Let(bindings, body) if bindings.is_empty() => expr(out, body, ctx),
        Expr::Free(names, body) if names.is_empty() => expr(out, body, ctx),
        Expr::Let(bindings, body) => parenthesized(out, ctx != Ctx::Top, |out| {
            if let [(x, rhs)] = bindings.as_slice() {
                write!(out, "let {x} = ").unwrap();
                expr(out, rhs, Ctx::Top);
            } else {
                out.push_str("let { ");
                for (i, (x, rhs)) in bindings.iter().enumerate() {
                    if i > 0 {
                        out.push_str("; ");
                    }
                    write!(out, "{x} = ").unwrap();
                    expr(out, rhs, Ctx::Top);
                }
                out.push_str(" }");
            }
            out.push_str(" in ");
            expr(out, body, Ctx::Top);
        }),
        Expr::Free(names, body) => parenthesized(out, ctx != Ctx::Top, |out| {
            write!(out, "let {} free in ", names.join(", ")).unwrap();
            expr(out, body, Ctx::Top);
        }),
        Expr::Case(s, branches) => parenthesized(out, ctx != Ctx::Top, |out| {
            out.push_str("case ");
            expr(out, s, Ctx::Top);
            out.push_str(" of { ");
            for (i, (p, e)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                pattern(out, p);
                out.push_str(" -> ");
                expr(out, e, Ctx::Top);
            }
            out.push_str(" }");
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, parse_restricted};

    const AND: &str = "data Bool = False | True

and x y = case x of {
    False -> False;
    True -> case y of { False -> False; True -> True }
  }

main = and True False
";

    #[test]
    fn and_round_trips_textually() {
        let p = parse_program(AND).unwrap();
        assert_eq!(pretty_print(&p), AND);
        assert_eq!(parse_program(&pretty_print(&p)).unwrap(), p);
    }

    #[test]
    fn empty_let_is_not_printed() {
        let e = Expr::Let(vec![], Box::new(Expr::Free(vec![], Box::new(Expr::var("x")))));
        assert_eq!(print_expr(&e), "x");
    }

    #[test]
    fn parentheses_where_needed() {
        let e = Expr::choice(
            Expr::choice(Expr::Lit(0), Expr::Lit(1)),
            Expr::con("Cons", vec![Expr::Let(vec![("y".into(), Expr::Lit(-2))], Box::new(Expr::var("y"))), Expr::con("Nil", vec![])]),
        );
        assert_eq!(print_expr(&e), "(0 ? 1) ? Cons (let y = -2 in y) Nil");
    }

    #[test]
    fn restricted_listing() {
        let src = "data Bool = False | True
and x y = case x of { False -> False; True -> and#1 y }
and#1 y = case y of { False -> False; True -> True }
main = let { a = True; b = False } in and a b
";
        let rp = parse_restricted(src).unwrap();
        let text = pretty_print_restricted(&rp);
        assert!(text.contains("\nand x y = case x of {\n") && text.contains("\nand#1 y = case y of {\n"), "{text}");
        assert_eq!(parse_restricted(&text).unwrap(), rp);
    }
}
