use super::*;
use crate::ast::{Block, RExpr, RFuncDef, Stmt};
use crate::frontend::{parse_program, parse_restricted};
use crate::restrict::restrict;

const BOOL: &str = "data Bool = False | True\n";
const NOT: &str = "not x = case x of { True -> False; False -> True }\n";

fn machine(src: &str) -> Machine {
    let p = restrict(&parse_program(src).unwrap());
    Machine::new(&p, Limits::default()).unwrap()
}

fn values(src: &str) -> Vec<String> {
    let r = machine(src).run();
    assert_eq!(r.stop, StopReason::Exhausted, "{src}");
    r.values().iter().map(|t| t.to_string()).collect()
}

fn traced(src: &str) -> (RunResult, RecordingTracer) {
    let mut m = machine(src);
    let t = RecordingTracer::default();
    m.set_tracer(Box::new(t.clone()));
    (m.run(), t)
}

#[test]
fn instantiating_an_identity_forwards_to_the_argument() {
    let mut m = machine("id x = x\nmain = id 1\n");
    let a = m.alloc(NodeContent::Lit(1)).unwrap();
    let n = m.instantiate("id", &[a]).unwrap();
    assert_eq!(*m.graph.get(n), NodeContent::Fwd(a));
}

#[test]
fn hnf_of_and_selects_through_the_lifted_case() {
    let mut m = machine(&format!(
        "{BOOL}and x y = case x of {{ False -> False; True -> case y of {{ False -> False; True -> True }} }}\nmain = and True False\n"
    ));
    let t = m.alloc(NodeContent::con("True", vec![])).unwrap();
    let f = m.alloc(NodeContent::con("False", vec![])).unwrap();
    let n = m.alloc(NodeContent::fun("and", vec![t, f])).unwrap();
    m.hnf(n).unwrap();
    let v = m.graph.contract_fwd(n).unwrap();
    assert_eq!(*m.graph.get(v), NodeContent::con("False", vec![]));
    assert_eq!(m.rule_count(RuleName::CaseCon), 2);
}

#[test]
fn not_true_fires_one_case_con() {
    let (r, t) = traced(&format!("{BOOL}{NOT}main = not True\n"));
    assert_eq!(r.values(), vec![Term::atom("False")]);
    assert_eq!(t.count(RuleName::CaseCon), 1);
}

#[test]
fn not_of_a_choice_takes_one_choice_frame() {
    let (r, t) = traced(&format!("{BOOL}{NOT}main = not (True ? False)\n"));
    assert_eq!(r.values(), vec![Term::atom("False"), Term::atom("True")]);
    assert_eq!(t.count(RuleName::CaseChoice), 1);
    assert_eq!(t.count(RuleName::BtChoice), 1);
}

#[test]
fn trace_lines_have_the_documented_shape() {
    let (_, t) = traced(&format!("{BOOL}{NOT}main = not True\n"));
    let lines = t.lines();
    assert!(!lines.is_empty());
    for l in lines {
        let parts: Vec<&str> = l.split(' ').collect();
        assert_eq!(parts.len(), 4, "{l}");
        assert_eq!(parts[0], "RULE");
        assert!(parts[2].starts_with("node=") && parts[3].starts_with("depth="), "{l}");
    }
}

#[test]
fn narrowing_enumerates_both_branches_and_restores_the_variable() {
    let p = parse_restricted(&format!("{BOOL}{NOT}main = let x free in not x\n")).unwrap();
    let mut m = Machine::new(&p, Limits::default()).unwrap();
    let root = m.alloc_main().unwrap();
    let a = m.normalize(root).unwrap();
    assert_eq!(a.term(), Some(&Term::atom("False")));
    assert_eq!(m.rule_count(RuleName::CaseConFree), 1);
    let x = m
        .stack
        .frames()
        .iter()
        .find(|f| f.is_choice() && f.replacement == NodeContent::con("False", vec![]))
        .expect("pending alternative for x")
        .target;
    assert_eq!(*m.graph.get(x), NodeContent::con("True", vec![]));
    assert!(m.backtrack_to_choice().unwrap());
    assert_eq!(*m.graph.get(x), NodeContent::con("False", vec![]));
    let b = m.normalize(root).unwrap();
    assert_eq!(b.term(), Some(&Term::atom("True")));
    assert!(!m.backtrack_to_choice().unwrap());
    assert_eq!(*m.graph.get(x), NodeContent::Free);
    assert_eq!(m.rule_count(RuleName::CaseConFree), 1);
    assert_eq!(m.rule_count(RuleName::BtChoice), 1);
}

#[test]
fn literal_narrowing_follows_branch_order() {
    let src = "f x = case x of { 3 -> 30; 1 -> 10 }\nmain = let x free in f x\n";
    assert_eq!(values(src), ["30", "10"]);
}

#[test]
fn enumeration_is_left_first() {
    assert_eq!(values("main = 0 ? 1\n"), ["0", "1"]);
    assert_eq!(values("main = (0 ? 1) ? 2\n"), ["0", "1", "2"]);
    assert_eq!(values("main = 0 ? (1 ? 2)\n"), ["0", "1", "2"]);
}

#[test]
fn shared_choice_under_xor_gives_two_false() {
    let src = format!(
        "{BOOL}{NOT}id x = x\nxor x y = case x of {{ True -> not y; False -> y }}\nmain = let x = True ? False in xor (id x) (id x)\n"
    );
    assert_eq!(values(&src), ["False", "False"]);
}

#[test]
fn incomplete_case_fails_silently() {
    let src = format!("{BOOL}f x = case x of {{ True -> 1 }}\nmain = f False ? f True\n");
    assert_eq!(values(&src), ["1"]);
}

#[test]
fn free_variable_answer_is_printed_by_name() {
    let src = "data P = Pair _ _\nmain = let x, y free in Pair x (Pair y x)\n";
    assert_eq!(values(src), ["Pair _a (Pair _b _a)"]);
}

#[test]
fn black_hole_is_a_truncation() {
    let r = machine("main = let x = id x in x\nid y = y\n").run();
    assert!(r.is_truncated(), "{:?}", r.stop);
}

#[test]
fn step_budget_truncates_a_loop() {
    let p = restrict(&parse_program("loop = loop\nmain = loop\n").unwrap());
    let r = run_main(&p, Limits::with_steps(500)).unwrap();
    assert_eq!(r.stop, StopReason::Truncated(EngineError::StepBudget(500)));
}

#[test]
fn answer_limit_stops_early() {
    let p = restrict(&parse_program("main = 0 ? (1 ? 2)\n").unwrap());
    let r = run_main(&p, Limits { max_answers: Some(2), ..Limits::default() }).unwrap();
    assert_eq!(r.values(), vec![Term::Lit(0), Term::Lit(1)]);
    assert_eq!(r.stop, StopReason::AnswerLimit);
}

#[test]
fn failures_are_kept_on_request() {
    let p = restrict(&parse_program("main = fail ? 1\n").unwrap());
    let r = run_main(&p, Limits { keep_failures: true, ..Limits::default() }).unwrap();
    assert_eq!(r.answers.len(), 2);
    assert_eq!(r.answers[0].outcome, Outcome::Failure);
    assert_eq!(r.values(), vec![Term::Lit(1)]);
}

#[test]
fn entry_must_exist_without_arguments() {
    let p = RProgram {
        data: vec![],
        functions: vec![RFuncDef { name: "f".into(), params: vec![], body: Block::Stmt(Stmt::Return(RExpr::Lit(0))) }],
        entry: "main".into(),
    };
    assert!(matches!(Machine::new(&p, Limits::default()), Err(EngineError::Compile(_))));
}

// Apply rules, each driven on a hand-built node `apply(h, args)`.

const FUNS: &str = "data Bool = False | True\ndata P = Pair _ _\nnot x = case x of { True -> False; False -> True }\npair x y = Pair x y\nmain = 0\n";

fn apply_machine() -> Machine {
    machine(FUNS)
}

fn apply_node(m: &mut Machine, head: NodeContent, args: &[NodeContent]) -> (NodeId, Vec<NodeId>) {
    let h = m.alloc(head).unwrap();
    let xs: Vec<NodeId> = args.iter().map(|a| m.alloc(a.clone()).unwrap()).collect();
    let mut all = vec![h];
    all.extend(&xs);
    let n = m.alloc(NodeContent::fun("apply", all)).unwrap();
    (n, xs)
}

#[test]
fn apply_under_subtracts_supplied_arguments() {
    let mut m = apply_machine();
    let (n, xs) = apply_node(&mut m, NodeContent::part("pair", 2, vec![]), &[NodeContent::Lit(1)]);
    m.hnf(n).unwrap();
    assert_eq!(*m.graph.get(n), NodeContent::part("pair", 1, xs));
    assert_eq!(m.rule_count(RuleName::ApplyUnder), 1);
}

#[test]
fn apply_full_calls_the_function() {
    let mut m = apply_machine();
    let (n, _) = apply_node(&mut m, NodeContent::part("not", 1, vec![]), &[NodeContent::con("True", vec![])]);
    m.hnf(n).unwrap();
    assert_eq!(m.rule_count(RuleName::ApplyFull), 1);
    let v = m.graph.contract_fwd(n).unwrap();
    assert_eq!(*m.graph.get(v), NodeContent::con("False", vec![]));
}

#[test]
fn apply_full_on_a_constructor_builds_it() {
    let mut m = apply_machine();
    let one = m.alloc(NodeContent::Lit(1)).unwrap();
    let (n, xs) = apply_node(&mut m, NodeContent::part("Pair", 1, vec![one]), &[NodeContent::Lit(2)]);
    m.hnf(n).unwrap();
    assert_eq!(*m.graph.get(n), NodeContent::con("Pair", vec![one, xs[0]]));
}

#[test]
fn apply_over_splits_at_the_missing_count() {
    let mut m = apply_machine();
    let (n, xs) = apply_node(
        &mut m,
        NodeContent::part("pair", 1, vec![]),
        &[NodeContent::Lit(1), NodeContent::Lit(2)],
    );
    let next = m.apply_step(n).unwrap();
    assert_eq!(m.rule_count(RuleName::ApplyOver), 1);
    let NodeContent::Fun(f, rest) = next else { panic!("{next:?}") };
    assert_eq!(&*f, "apply");
    assert_eq!(rest.len(), 2);
    assert_eq!(rest[1], xs[1]);
    assert_eq!(*m.graph.get(rest[0]), NodeContent::fun("pair", vec![xs[0]]));
}

#[test]
fn apply_free_fails() {
    let mut m = apply_machine();
    let (n, _) = apply_node(&mut m, NodeContent::Free, &[NodeContent::Lit(1)]);
    m.hnf(n).unwrap();
    assert_eq!(*m.graph.get(n), NodeContent::Bot);
    assert_eq!(m.rule_count(RuleName::ApplyFree), 1);
}

#[test]
fn apply_choice_takes_the_left_function_first() {
    let mut m = apply_machine();
    let l = m.alloc(NodeContent::part("not", 1, vec![])).unwrap();
    let r = m.alloc(NodeContent::part("pair", 2, vec![])).unwrap();
    let (n, _) = apply_node(&mut m, NodeContent::Choice(l, r), &[NodeContent::con("True", vec![])]);
    let h = match m.graph.get(n) {
        NodeContent::Fun(_, a) => a[0],
        _ => unreachable!(),
    };
    m.hnf(n).unwrap();
    assert_eq!(m.rule_count(RuleName::ApplyChoice), 1);
    assert_eq!(*m.graph.get(h), NodeContent::Fwd(l));
    assert!(m.stack.frames().iter().any(|f| f.is_choice() && f.target == h && f.replacement == NodeContent::Fwd(r)));
}

#[test]
fn higher_order_programs_run_end_to_end() {
    let src = "data L = Nil | Cons _ _\nmap f xs = case xs of { Nil -> Nil; Cons y ys -> Cons (apply f y) (map f ys) }\nadd1 x = case x of { 0 -> 1; 1 -> 2 }\nmain = map add1 (Cons 0 (Cons 1 Nil))\n";
    assert_eq!(values(src), ["Cons 1 (Cons 2 Nil)"]);
}

#[test]
fn partial_answers_are_shown_with_supplied_arguments() {
    let src = "data P = Pair _ _\nmain = apply Pair 1\n";
    assert_eq!(values(src), ["Pair 1"]);
}

#[test]
fn backtracking_restores_the_pre_run_snapshot() {
    let src = format!(
        "{BOOL}{NOT}id x = x\nxor x y = case x of {{ True -> not y; False -> y }}\nmain = let x = True ? False in xor (id x) (id x)\n"
    );
    let mut m = machine(&src);
    let root = m.alloc_main().unwrap();
    let before = m.graph.snapshot_reachable(root);
    let depth = m.stack.len();
    m.normalize(root).unwrap();
    while m.stack.len() > depth {
        m.backtrack_step().unwrap();
    }
    assert_eq!(m.graph.snapshot_reachable(root), before);
}
