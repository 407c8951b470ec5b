mod common;

use flatcurry::ast::Expr;
use flatcurry::engine::{Limits, Machine, RecordingTracer, StopReason};
use flatcurry::graph::NodeContent;
use flatcurry::oracle::{compare_answers, run_oracle, run_oracle_restricted, CompareMode, OracleLimits, OracleStop};
use flatcurry::{parse_program, parse_restricted, pretty_print, pretty_print_restricted, restrict, run_main, validate_restricted, Program};
use proptest::prelude::*;

use common::{check_unwind, corpus, random_program};

const BUDGET: u64 = 1_000_000;

fn has_free(e: &Expr) -> bool {
    match e {
        Expr::Free(..) => true,
        Expr::Var(_) | Expr::Bot | Expr::Lit(_) | Expr::Part(_) => false,
        Expr::Choice(a, b) => has_free(a) || has_free(b),
        Expr::FunApp(_, args) | Expr::ConApp(_, args) => args.iter().any(has_free),
        Expr::Apply(h, args) => has_free(h) || args.iter().any(has_free),
        Expr::Let(bs, body) => bs.iter().any(|(_, e)| has_free(e)) || has_free(body),
        Expr::Case(s, bs) => has_free(s) || bs.iter().any(|(_, e)| has_free(e)),
    }
}

fn engine_matches_oracle(p: &Program) -> Result<(), String> {
    let rp = restrict(p);
    let engine = run_main(&rp, Limits::with_steps(BUDGET)).map_err(|e| e.to_string())?;
    let reference = run_oracle_restricted(&rp, OracleLimits::with_steps(BUDGET)).map_err(|e| e.to_string())?;
    if engine.is_truncated() || reference.is_truncated() {
        return Ok(());
    }
    if engine.stop != StopReason::Exhausted || reference.stop != OracleStop::Exhausted {
        return Err(format!("engine {:?}, oracle {:?}", engine.stop, reference.stop));
    }
    let cmp = compare_answers(&engine.answers, &reference.answers, CompareMode::Ordered);
    if cmp.is_equal() {
        Ok(())
    } else {
        Err(format!("{cmp}\n{}", pretty_print(p)))
    }
}

#[test]
fn engine_agrees_with_oracle_on_many_random_programs() {
    for seed in 1_000..3_000 {
        engine_matches_oracle(&random_program(seed)).unwrap_or_else(|m| panic!("seed {seed}: {m}"));
    }
}

#[test]
fn backtracking_restores_snapshots_on_many_random_programs() {
    for seed in 1_000..2_000 {
        let p = random_program(seed);
        check_unwind(&p, Limits::with_steps(BUDGET), 32).unwrap_or_else(|m| panic!("seed {seed}: {m}\n{}", pretty_print(&p)));
    }
}

#[test]
fn restriction_preserves_oracle_answers() {
    let limits = OracleLimits::with_steps(BUDGET);
    let mut programs: Vec<(String, Program)> = corpus()
        .into_iter()
        .filter(|e| e.is_first_order() && e.terminates())
        .map(|e| (e.name, e.program))
        .collect();
    programs.extend((0..500).map(|s| (format!("seed {s}"), random_program(s))));
    for (name, p) in programs {
        let source = run_oracle(&p, limits).unwrap();
        let lowered = run_oracle_restricted(&restrict(&p), limits).unwrap();
        if source.is_truncated() || lowered.is_truncated() {
            continue;
        }
        let cmp = compare_answers(&source.answers, &lowered.answers, CompareMode::Multiset);
        assert!(cmp.is_equal(), "{name}: {cmp}");
    }
}

#[test]
fn restriction_output_is_restricted_and_idempotent() {
    let mut programs: Vec<Program> = corpus().into_iter().map(|e| e.program).collect();
    programs.extend((0..500).map(random_program));
    for p in programs {
        let rp = restrict(&p);
        let embedded = rp.embed();
        let report = validate_restricted(&embedded);
        assert!(report.is_ok(), "{report}\n{}", pretty_print_restricted(&rp));
        assert_eq!(restrict(&embedded), rp, "{}", pretty_print_restricted(&rp));
        let listing = pretty_print_restricted(&rp);
        assert_eq!(parse_restricted(&listing).unwrap(), rp, "{listing}");
    }
}

#[test]
fn lifted_functions_take_exactly_their_live_variables() {
    let src = "data Bool = False | True
data P = Pair _ _
f a b c = let z = case a of { True -> b; False -> True } in Pair z c
main = f True False True
";
    let rp = restrict(&parse_program(src).unwrap());
    assert_eq!(rp.function("f#1").unwrap().params, vec!["a", "b"]);
    let reference = run_oracle(&parse_program(src).unwrap(), OracleLimits::default()).unwrap();
    let lowered = run_oracle_restricted(&rp, OracleLimits::default()).unwrap();
    assert_eq!(reference.values(), lowered.values());
}

#[test]
fn printed_random_programs_parse_back() {
    for seed in 0..1_000 {
        let p = random_program(seed);
        let text = pretty_print(&p);
        let again = parse_program(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
        assert_eq!(again, p, "seed {seed}\n{text}");
    }
}

#[test]
fn mirrored_choice_programs_enumerate_in_reverse() {
    let mut checked = 0;
    for seed in 0..1_000 {
        let p = random_program(seed);
        if p.functions.iter().any(|f| has_free(&f.body)) {
            continue;
        }
        let forward = run_main(&restrict(&p), Limits::with_steps(BUDGET)).unwrap();
        let backward = run_main(&restrict(&p.mirror_choices()), Limits::with_steps(BUDGET)).unwrap();
        if forward.is_truncated() || backward.is_truncated() {
            continue;
        }
        let mut b = backward.values();
        b.reverse();
        assert_eq!(forward.values(), b, "seed {seed}\n{}", pretty_print(&p));
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn tracing_does_not_change_answers() {
    for seed in 0..300 {
        let rp = restrict(&random_program(seed));
        let plain = run_main(&rp, Limits::with_steps(BUDGET)).unwrap();
        let mut m = Machine::new(&rp, Limits::with_steps(BUDGET)).unwrap();
        let t = RecordingTracer::default();
        m.set_tracer(Box::new(t.clone()));
        let traced = m.run();
        assert_eq!(plain.values(), traced.values());
        assert_eq!(plain.steps, traced.steps);
        assert_eq!(t.lines().iter().filter(|l| !l.starts_with("RULE BT")).count() as u64, traced.steps);
    }
}

#[test]
fn evaluating_one_referrer_updates_the_shared_node() {
    let rp = restrict(&parse_program("id x = x\nmain = 0\n").unwrap());
    let mut m = Machine::new(&rp, Limits::default()).unwrap();
    let lit = m.alloc(NodeContent::Lit(5)).unwrap();
    let shared = m.alloc(NodeContent::fun("id", vec![lit])).unwrap();
    let a = m.alloc(NodeContent::fun("id", vec![shared])).unwrap();
    let b = m.alloc(NodeContent::fun("id", vec![shared])).unwrap();
    m.hnf(a).unwrap();
    m.hnf(shared).unwrap();
    assert_eq!(*m.graph.get(shared), NodeContent::Fwd(lit));
    assert_eq!(*m.graph.get(b), NodeContent::fun("id", vec![shared]));
    m.hnf(b).unwrap();
    assert_eq!(m.graph.contract_fwd(b).unwrap(), lit);
}

#[test]
fn oracle_memoizes_shared_bindings() {
    let p = parse_program("data P = Pair _ _\nid x = x\nmain = let x = id (id 1) in Pair x (Pair x x)\n").unwrap();
    let r = run_oracle(&p, OracleLimits::default()).unwrap();
    assert_eq!(r.values().len(), 1);
    // One reduction of the shared binding; the later reads are lookups.
    assert_eq!(r.counts.fun, 3);
    assert_eq!(r.counts.var_exp, 2);
}

#[test]
fn failure_never_crashes() {
    let src = "data Bool = False | True
f x = case x of { True -> 1 }
data P = Pair _ _
main = Pair (f False) 2 ? Pair fail (f fail)
";
    let r = run_main(&restrict(&parse_program(src).unwrap()), Limits::default()).unwrap();
    assert_eq!(r.stop, StopReason::Exhausted);
    assert!(r.values().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn any_seed_gives_a_valid_program_that_agrees_with_the_oracle(seed in any::<u64>()) {
        let p = random_program(seed);
        prop_assert!(flatcurry::validate_program(&p).is_ok());
        if let Err(m) = engine_matches_oracle(&p) {
            return Err(TestCaseError::fail(m));
        }
    }
}
