//! End-to-end properties of the checking pipeline on random grammars.

mod common;

use std::time::Duration;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{big, random_clia_grammar, random_examples, random_lia_grammar, small, Outputs};
use unreal_core::booldom::LessThanMemo;
use unreal_core::cegis::equations;
use unreal_core::frontend::Scalar;
use unreal_core::clia::{solve_monolithic, solve_system};
use unreal_core::newton::NewtonOptions;
use unreal_core::synth::satisfies_on;
use unreal_core::{
    check_unrealizable, parse_problem, run_cegis, AbsValue, Backend, CegisConfig, CheckResult, ExampleSet, IlpSolver,
    Problem, Rtg, VerdictKind,
};

fn linear_problem(g: Rtg, a: i64, b: i64) -> Problem {
    let text = format!(
        "(set-logic LIA)\n(synth-fun f ((x Int)) Int ((Start Int (0))))\n(declare-var x Int)\n\
         (constraint (= (f x) (+ (* {a} x) {b})))\n(check-synth)"
    );
    let mut p = parse_problem(&text).expect("template parses");
    p.grammar = g;
    p
}

fn quick() -> CegisConfig {
    CegisConfig { max_rounds: 4, check_budget: Duration::from_secs(10), max_term_size: 9, ..CegisConfig::default() }
}

#[test]
fn unrealizable_verdicts_have_no_small_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut seen = 0;
    for i in 0..40 {
        let g = random_lia_grammar(&mut rng);
        let p = linear_problem(g, rng.gen_range(-2..=2), rng.gen_range(-3..=3));
        let v = run_cegis(&p, &quick());
        match v.kind {
            VerdictKind::Unrealizable => {
                seen += 1;
                let e = ExampleSet::new(p.variables.clone(), v.examples.clone()).unwrap();
                let xs = small(&e.var_vector("x").unwrap());
                let outs = Outputs::up_to(&p.grammar, &xs, 6, 200_000);
                for out in outs.all(p.grammar.start) {
                    assert!(!meets(&p, &e, &big(out)), "problem {i}: output {out:?} solves the final examples");
                }
            }
            VerdictKind::Realizable => {
                let t = v.witness.expect("realizable verdicts carry a term");
                for x in -20..=20 {
                    assert!(satisfies_on(&t, &p.spec, &p.variables, &[BigInt::from(x)]), "problem {i}: fails at {x}");
                }
            }
            VerdictKind::Unknown => {}
        }
    }
    assert!(seen > 0, "no unrealizable instance drawn");
}

#[test]
fn realizable_answers_name_a_reachable_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let oracle = IlpSolver::default();
    for i in 0..60 {
        let g = random_lia_grammar(&mut rng);
        let e = random_examples(&mut rng);
        let p = linear_problem(g, rng.gen_range(-2..=2), rng.gen_range(-3..=3));
        let r = check_unrealizable(&p.grammar, &p.spec, &e, &Backend::SemiLinear, &oracle).unwrap();
        let sys = equations(&p.grammar, &e).unwrap();
        let sol = solve_system(&sys, &oracle, &LessThanMemo::new(), NewtonOptions::default()).unwrap();
        let sl = sol.get(sys.start).as_sl();
        match r.result {
            CheckResult::Realizable(Some(o)) => assert!(sl.contains(&o, &oracle).unwrap(), "problem {i}: {o:?}"),
            CheckResult::Unrealizable => {
                let xs = small(&e.var_vector("x").unwrap());
                let outs = Outputs::up_to(&p.grammar, &xs, 6, 200_000);
                for out in outs.all(p.grammar.start) {
                    assert!(!meets(&p, &e, &big(out)), "problem {i}: output {out:?} meets the spec");
                }
            }
            other => panic!("problem {i}: {other:?}"),
        }
    }
}

fn meets(p: &Problem, e: &ExampleSet, out: &[BigInt]) -> bool {
    (0..e.dim()).all(|j| p.spec.holds(&Scalar::Int(out[j].clone()), &e.input(j)))
}

#[test]
fn stratified_solving_matches_monolithic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let oracle = IlpSolver::default();
    for i in 0..80 {
        let g = if i % 2 == 0 { random_lia_grammar(&mut rng) } else { random_clia_grammar(&mut rng) };
        let e = random_examples(&mut rng);
        let sys = equations(&g, &e).unwrap();
        let memo = LessThanMemo::new();
        let a = solve_system(&sys, &oracle, &memo, NewtonOptions::default()).unwrap();
        let b = solve_monolithic(&sys, &oracle, &memo, NewtonOptions::default()).unwrap();
        match (a.get(sys.start), b.get(sys.start)) {
            (AbsValue::Sl(x), AbsValue::Sl(y)) => {
                for v in x.gamma_bounded(2) {
                    assert!(y.contains(&v, &oracle).unwrap(), "grammar {i}: {v:?} only stratified");
                }
                for v in y.gamma_bounded(2) {
                    assert!(x.contains(&v, &oracle).unwrap(), "grammar {i}: {v:?} only monolithic");
                }
            }
            (x, y) => assert_eq!(x, y, "grammar {i}"),
        }
    }
}

#[test]
fn golden_problems_parse_and_round_trip() {
    for text in [
        include_str!("../../../problems/g1.sy"),
        include_str!("../../../problems/g2.sy"),
        include_str!("../../../problems/gconst.sy"),
        include_str!("../../../problems/parity.sy"),
    ] {
        let p = parse_problem(text).unwrap();
        let again = parse_problem(&p.to_sexpr()).unwrap();
        assert_eq!(again.grammar.to_string(), p.grammar.to_string());
        assert_eq!(again.to_sexpr(), p.to_sexpr());
    }
}

#[test]
fn sequential_runs_repeat_exactly() {
    let p = parse_problem(include_str!("../../../problems/g2.sy")).unwrap();
    let cfg = CegisConfig { seed: 3, ..CegisConfig::default() };
    let a = run_cegis(&p, &cfg).to_json();
    let b = run_cegis(&p, &cfg).to_json();
    assert_eq!(a, b);
}
