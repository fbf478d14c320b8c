//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails that is not listed in `KNOWN_RED`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{big, Outputs, random_clia_grammar, random_examples, random_lia_grammar, small};
use unreal_core::approx::{horn_export, predabs_solve, ShowPred};
use unreal_core::booldom::{abs_less_than, abs_not, LessThanMemo};
use unreal_core::cegis::{equations, CheckReport};
use unreal_core::clia::{ite_abstract, solve_system, Solution};
use unreal_core::frontend::specialize;
use unreal_core::grammar::{eval_term, Value};
use unreal_core::ilp::{feasible, IlpOutcome, Rel};
use unreal_core::logic::{solve_query, QueryOutcome};
use unreal_core::newton::{eval_system, newton_step, npa_solve, NewtonOptions, SlMonomial, SlPolySystem};
use unreal_core::rewrite::{rem_if, MaskedMonomial, MaskedSystem};
use unreal_core::semilinear::{iv, LinearSet};
use unreal_core::{
    check_unrealizable, parse_problem, run_cegis, Backend, BoolVec, BoolVecSet, CegisConfig, CheckResult, ExampleSet,
    IlpSolver, PolynomialSystem, PredicateDomain, Problem, SemiLinearSet, Sort, Term, VerdictKind,
};

const G1: &str = include_str!("../../../problems/g1.sy");
const G2: &str = include_str!("../../../problems/g2.sy");
const GCONST: &str = include_str!("../../../problems/gconst.sy");
const PARITY: &str = include_str!("../../../problems/parity.sy");

/// Criteria that cannot be met as stated; see the README.
const KNOWN_RED: &[usize] = &[3, 4];

type Outcome = Result<String, String>;

fn load(src: &str) -> Problem {
    parse_problem(src).expect("bundled problem parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("took {e:?}, limit {limit:?}"))
}

fn bv(s: &str) -> BoolVec {
    BoolVec::new(s.chars().map(|c| c == 't').collect())
}

fn bset(items: &[&str]) -> BoolVecSet {
    items.iter().map(|s| bv(s)).collect()
}

fn solve(g: &unreal_core::Rtg, e: &ExampleSet) -> (PolynomialSystem, Solution) {
    let sys = equations(g, e).expect("equations");
    let sol = solve_system(&sys, &IlpSolver::default(), &LessThanMemo::new(), NewtonOptions::default()).expect("solve");
    (sys, sol)
}

fn value_of(sys: &PolynomialSystem, sol: &Solution, name: &str) -> String {
    sol.get(sys.lookup(name).unwrap_or_else(|| panic!("no {name}"))).to_string()
}

fn c1_g1_golden() -> Outcome {
    let t = Instant::now();
    let p = load(G1);
    let (sys, sol) = solve(&p.grammar, &ExampleSet::over("x", &[1, 2]));
    let want = [
        ("Start", "{⟨(0,0),{(3,6)}⟩}"),
        ("S1", "{⟨(3,6),{}⟩}"),
        ("S2", "{⟨(2,4),{}⟩}"),
        ("S3", "{⟨(1,2),{}⟩}"),
    ];
    for (n, w) in want {
        let got = value_of(&sys, &sol, n);
        ensure(got == w, || format!("n({n}) = {got}, expected {w}"))?;
    }
    within(t, Duration::from_secs(1))?;
    Ok(format!("n(Start) = {} in {:?}", want[0].1, t.elapsed()))
}

fn c2_g1_end_to_end() -> Outcome {
    let t = Instant::now();
    let p = load(G1);
    let v = run_cegis(&p, &CegisConfig { seed: 0, parallel: false, ..CegisConfig::default() });
    ensure(v.kind == VerdictKind::Unrealizable, || format!("verdict {:?}", v.kind))?;
    let e = ExampleSet::over("x", &[1]);
    let oracle = IlpSolver::default();
    let r: CheckReport = check_unrealizable(&p.grammar, &p.spec, &e, &Backend::SemiLinear, &oracle)
        .map_err(|e| e.to_string())?;
    ensure(r.result == CheckResult::Unrealizable, || format!("E={{1}}: {:?}", r.result))?;
    let q = r.query_smt.clone().unwrap_or_default();
    ensure(q.contains("(= o1 (* 3 l0_0))"), || format!("query lacks o1 = 3λ: {q}"))?;
    let (sys, sol) = solve(&p.grammar, &e);
    let ps = specialize(&p.spec, &e);
    let start = sol.get(sys.start).as_sl().clone();
    let out = solve_query(&start, &ps, &oracle).map_err(|e| e.to_string())?;
    ensure(out == QueryOutcome::Unsat, || format!("query {out:?}"))?;
    // o = 3λ and o = 4 has no solution; independent check over a range of λ
    ensure((0..100).all(|l| 3 * l != 4), || "brute force found λ".into())?;
    within(t, Duration::from_secs(5))?;
    Ok(format!("Unrealizable after {} round(s), E={{1}} query unsat, {:?}", v.iterations, t.elapsed()))
}

fn c3_g2_end_to_end() -> Outcome {
    let t = Instant::now();
    let p = load(G2);
    let v = run_cegis(&p, &CegisConfig::default());
    ensure(v.kind == VerdictKind::Unrealizable, || format!("verdict {:?}", v.kind))?;
    let e = ExampleSet::over("x", &[1, 2]);
    let (sys, sol) = solve(&p.grammar, &e);
    let exp2 = value_of(&sys, &sol, "Exp2");
    let exp3 = value_of(&sys, &sol, "Exp3");
    ensure(exp2 == "{⟨(0,0),{(2,4)}⟩}", || format!("n(Exp2) = {exp2}"))?;
    ensure(exp3 == "{⟨(0,0),{(3,6)}⟩}", || format!("n(Exp3) = {exp3}"))?;
    let mutual = sol.stats.mutual_iterations.last().copied();
    ensure(mutual == Some(2), || format!("outer convergence at {mutual:?}"))?;
    within(t, Duration::from_secs(30))?;
    let bexp = sol.get(sys.lookup("BExp").unwrap()).as_bools().clone();
    let expected = bset(&["tf", "tt", "ff"]);
    ensure(expected.is_subset(&bexp), || format!("n(BExp) = {bexp} misses an expected vector"))?;
    // LessThan(0, ite(x < 2, 0, x + x + 0)) is (f,t) on E = {1, 2}
    let x = || Term::var("x");
    let inner = Term::node(
        unreal_core::Symbol::IfThenElse,
        vec![
            Term::node(unreal_core::Symbol::LessThan, vec![x(), Term::num(2)]),
            Term::num(0),
            Term::node(unreal_core::Symbol::Plus, vec![x(), x(), Term::num(0)]),
        ],
    );
    let witness = Term::node(unreal_core::Symbol::LessThan, vec![Term::num(0), inner]);
    let realized = eval_term(&witness, &e).map_err(|e| e.to_string())?;
    ensure(realized == Value::Bool(bv("ft")), || format!("witness evaluates to {realized:?}"))?;
    ensure(bexp == expected, || {
        format!(
            "n(BExp) = {bexp}, expected {expected}; the extra (f,t) is realized by {} (all other checks hold: \
             Unrealizable, Exp2/Exp3 exact, convergence at 2, {:?})",
            witness.to_sexpr(),
            t.elapsed()
        )
    })?;
    Ok(format!("Unrealizable, {:?}", t.elapsed()))
}

fn c4_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let oracle = IlpSolver::default();
    let (mut checked, mut sampled) = (0usize, 0usize);
    // sampled points with no witness of height ≤ 8, with the height that
    // finally produced one (None: none found before the search gave up)
    let mut deeper: Vec<(usize, Vec<BigInt>, Option<usize>)> = Vec::new();
    for i in 0..200 {
        let g = random_lia_grammar(&mut rng);
        let e = random_examples(&mut rng);
        let xs = small(&e.var_vector("x").unwrap());
        let (sys, sol) = solve(&g, &e);
        let sl = sol.get(sys.start).as_sl();
        let mut outs = Outputs::new(&g, &xs, 7);
        for p in &outs.levels[6][g.start.0] {
            let inside = sl.contains(&big(p), &oracle).map_err(|e| e.to_string())?;
            ensure(inside, || format!("grammar {i}: {p:?} produced by a tree but not in {sl}"))?;
            checked += 1;
        }
        for p in sl.gamma_bounded(2).iter().choose_multiple(&mut rng, 20) {
            sampled += 1;
            let key = small(p);
            let mut h = 8;
            let found = loop {
                if let Some(t) = outs.witness(g.start, h, &key) {
                    break Some(t);
                }
                if h >= 16 || !outs.deepen(5_000_000) {
                    break None;
                }
                h += 1;
            };
            match found {
                Some(t) => {
                    ensure(t.height() <= h && eval_term(&t, &e).ok() == Some(Value::Int(p.clone())), || {
                        format!("grammar {i}: bad witness {} for {p:?}", t.to_sexpr())
                    })?;
                    if h > 8 {
                        deeper.push((i, p.clone(), Some(h)));
                    }
                }
                None => deeper.push((i, p.clone(), None)),
            }
        }
    }
    let summary = format!("200 grammars: {checked} tree outputs inside, {sampled} points sampled");
    if deeper.is_empty() {
        return Ok(summary);
    }
    let lost = deeper.iter().filter(|d| d.2.is_none()).count();
    let max_h = deeper.iter().filter_map(|d| d.2).max().unwrap_or(8);
    let (gi, p, h) = &deeper[0];
    Err(format!(
        "{summary}; {} points have no tree of height ≤ 8 ({lost} without any witness, the rest need height ≤ {max_h}); \
         first: grammar {gi} point {p:?} needs height {}",
        deeper.len(),
        h.map_or("> 16".to_string(), |h| h.to_string())
    ))
}

fn random_sl(rng: &mut ChaCha8Rng, dim: usize) -> SemiLinearSet {
    let comps = rng.gen_range(0..=2);
    let mut v = Vec::new();
    for _ in 0..comps {
        let base: Vec<i64> = (0..dim).map(|_| rng.gen_range(-3..=3)).collect();
        let gens = (0..rng.gen_range(0..=2))
            .map(|_| iv(&(0..dim).map(|_| rng.gen_range(-2..=3)).collect::<Vec<_>>()))
            .collect();
        v.push(LinearSet::new(iv(&base), gens));
    }
    SemiLinearSet::from_components(dim, v)
}

fn c5_semiring_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eq = |a: &SemiLinearSet, b: &SemiLinearSet| a.gamma_bounded(3) == b.gamma_bounded(3);
    for i in 0..500 {
        let dim = rng.gen_range(1..=3);
        let (a, b, c) = (random_sl(&mut rng, dim), random_sl(&mut rng, dim), random_sl(&mut rng, dim));
        let (zero, one) = (SemiLinearSet::zero(dim), SemiLinearSet::one(dim));
        let laws: [(&str, SemiLinearSet, SemiLinearSet); 9] = [
            ("⊗ associative", a.extend(&b).extend(&c), a.extend(&b.extend(&c))),
            ("⊗ commutative", a.extend(&b), b.extend(&a)),
            ("⊗ identity", a.extend(&one), a.clone()),
            ("𝟎 annihilates", a.extend(&zero), zero.clone()),
            ("left distributive", a.extend(&b.combine(&c)), a.extend(&b).combine(&a.extend(&c))),
            ("right distributive", b.combine(&c).extend(&a), b.extend(&a).combine(&c.extend(&a))),
            ("⊕ associative", a.combine(&b).combine(&c), a.combine(&b.combine(&c))),
            ("⊕ commutative", a.combine(&b), b.combine(&a)),
            ("⊕ identity", a.combine(&zero), a.clone()),
        ];
        for (name, l, r) in &laws {
            ensure(eq(l, r), || format!("triple {i}: {name} fails for a={a}, b={b}, c={c}"))?;
        }
        // ⊕ laws hold on the canonical representation itself
        ensure(a.combine(&b) == b.combine(&a), || format!("triple {i}: ⊕ not syntactically commutative"))?;
        ensure(a.combine(&b).combine(&c) == a.combine(&b.combine(&c)), || format!("triple {i}: ⊕ assoc"))?;
        ensure(a.combine(&a) == a, || format!("triple {i}: ⊕ not idempotent on {a}"))?;
        ensure(a.combine(&zero) == a, || format!("triple {i}: 𝟎 not ⊕-neutral"))?;
    }
    Ok("500 triples, 13 laws each".into())
}

fn c6_clia_ops() -> Outcome {
    let oracle = IlpSolver::default();
    let sl1 = SemiLinearSet::linear(iv(&[1, 2]), vec![iv(&[3, 4])]);
    let sl2 = SemiLinearSet::linear(iv(&[5, 6]), vec![iv(&[7, 8])]);
    let ite = ite_abstract(&bset(&["tf", "tt"]), &sl1, &sl2).map_err(|e| e.to_string())?;
    let want = SemiLinearSet::from_components(
        2,
        vec![
            LinearSet::new(iv(&[1, 6]), vec![iv(&[3, 0]), iv(&[0, 8])]),
            LinearSet::new(iv(&[1, 2]), vec![iv(&[3, 4])]),
        ],
    );
    ensure(ite == want, || format!("ite_abstract = {ite}"))?;
    let not = abs_not(&bset(&["tf", "tt"]));
    ensure(not == bset(&["ft", "ff"]), || format!("abs_not = {not}"))?;
    let lt = abs_less_than(&sl1, &sl2, &oracle).map_err(|e| e.to_string())?;
    ensure(lt == bset(&["tt", "tf", "ff"]), || format!("abs_less_than = {lt}"))?;
    Ok(format!("ite = {ite}, not = {not}, less-than = {lt}"))
}

fn c7_remif() -> Outcome {
    let mut m = MaskedSystem::new(2);
    let s = m.add_var("Start");
    let guard = bv("tf");
    let then = SemiLinearSet::linear(iv(&[0, 0]), vec![iv(&[3, 6])]);
    m.push(s, MaskedMonomial { coeff: then.proj(&guard), factors: vec![(s, guard.not())] });
    m.push(s, MaskedMonomial { coeff: SemiLinearSet::linear(iv(&[0, 0]), vec![iv(&[2, 4])]), factors: vec![] });
    m.push(s, MaskedMonomial { coeff: then, factors: vec![] });
    let got = rem_if(&m, &[s]).system.dump();
    let want = "Start^(t,t) = {⟨(0,0),{(3,0)}⟩} ⊗ Start^(f,t) ⊕ {⟨(0,0),{(2,4)}⟩} ⊕ {⟨(0,0),{(3,6)}⟩}\n\
                Start^(f,t) = {⟨(0,0),{}⟩} ⊗ Start^(f,t) ⊕ {⟨(0,0),{(0,4)}⟩} ⊕ {⟨(0,0),{(0,6)}⟩}\n";
    ensure(got == want, || format!("got\n{got}"))?;
    Ok("two mask-indexed equations".into())
}

fn random_poly_system(rng: &mut ChaCha8Rng) -> SlPolySystem {
    let dim = rng.gen_range(1..=2);
    let n = rng.gen_range(1..=3);
    let mut sys = SlPolySystem::new(dim);
    for k in 0..n {
        sys.add_var(format!("Y{k}"));
    }
    for k in 0..n {
        for _ in 0..rng.gen_range(1..=3) {
            let base: Vec<i64> = (0..dim).map(|_| rng.gen_range(0..=4)).collect();
            let gens = (0..rng.gen_range(0..=1))
                .map(|_| iv(&(0..dim).map(|_| rng.gen_range(0..=3)).collect::<Vec<_>>()))
                .collect();
            let vars = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..n)).collect();
            sys.push(k, SlMonomial { coeff: SemiLinearSet::linear(iv(&base), gens), vars });
        }
    }
    sys
}

fn included(a: &SemiLinearSet, b: &SemiLinearSet, oracle: &IlpSolver) -> Result<bool, String> {
    for p in a.gamma_bounded(2) {
        if !b.contains(&p, oracle).map_err(|e| e.to_string())? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn c8_iteration_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let oracle = IlpSolver::default();
    let mut solves = 0;
    for i in 0..400 {
        let g = if i < 200 { random_lia_grammar(&mut rng) } else { random_clia_grammar(&mut rng) };
        let e = random_examples(&mut rng);
        let (sys, sol) = solve(&g, &e);
        let d = e.dim() as u32;
        for &(it, nb) in &sol.stats.bool_iterations {
            ensure(it <= 2usize.pow(d) * nb, || format!("grammar {i}: solve_bool took {it} > 2^{d}·{nb}"))?;
        }
        for &k in &sol.stats.mutual_iterations {
            ensure(k <= sys.len() * 2usize.pow(d), || format!("grammar {i}: solve_mutual took {k}"))?;
        }
        solves += 1;
    }
    for i in 0..100 {
        let sys = random_poly_system(&mut rng);
        let opts = NewtonOptions::default();
        let r = npa_solve(&sys, &oracle, opts).map_err(|e| e.to_string())?;
        ensure(r.iterations <= sys.len(), || format!("system {i}: {} Newton steps", r.iterations))?;
        let again = newton_step(&sys, &r.values, &oracle, opts).map_err(|e| e.to_string())?;
        let fx = eval_system(&sys, &r.values);
        for k in 0..sys.len() {
            ensure(included(&again[k], &r.values[k], &oracle)?, || format!("system {i}: extra step grows Y{k}"))?;
            ensure(included(&r.values[k], &again[k], &oracle)?, || format!("system {i}: extra step shrinks Y{k}"))?;
            ensure(included(&fx[k], &r.values[k], &oracle)?, || format!("system {i}: F(ν) ⊄ ν at Y{k}"))?;
        }
    }
    Ok(format!("{solves} grammar solves within bounds, 100 Newton systems stable"))
}

fn c9_incompleteness() -> Outcome {
    let p = load(GCONST);
    let mut kinds = Vec::new();
    for seed in 0..10 {
        let v = run_cegis(&p, &CegisConfig { seed, max_rounds: 5, ..CegisConfig::default() });
        ensure(v.kind != VerdictKind::Unrealizable, || format!("seed {seed}: Unrealizable"))?;
        ensure(v.kind == VerdictKind::Unknown, || format!("seed {seed}: {:?}", v.kind))?;
        kinds.push(v.kind);
    }
    Ok("Unknown on seeds 0..9".into())
}

fn c10_parity() -> Outcome {
    let p = load(PARITY);
    let dom = PredicateDomain::parity();
    let e = ExampleSet::over("x", &[0]);
    let r = predabs_solve(&p.grammar, &e, &dom).map_err(|e| e.to_string())?;
    let show = |n: &str| ShowPred(&dom, Sort::Int, &r.values[p.grammar.lookup(n).unwrap().0]).to_string();
    ensure(show("Start") == "{even}", || format!("n(Start) = {}", show("Start")))?;
    ensure(show("S1") == "{even, odd}", || format!("n(S1) = {}", show("S1")))?;
    let backend = Backend::PredAbs(dom.clone());
    let r = check_unrealizable(&p.grammar, &p.spec, &e, &backend, &IlpSolver::default()).map_err(|e| e.to_string())?;
    ensure(r.result == CheckResult::Unrealizable, || format!("check {:?}", r.result))?;
    let v = run_cegis(&p, &CegisConfig { backend, ..CegisConfig::default() });
    ensure(v.kind == VerdictKind::Unrealizable, || format!("verdict {:?}", v.kind))?;
    Ok("n(Start) = {even}, n(S1) = {even, odd}, Unrealizable".into())
}

fn which(cmd: &str) -> bool {
    std::env::var_os("PATH")
        .map(|p| std::env::split_paths(&p).any(|d| d.join(cmd).is_file()))
        .unwrap_or(false)
}

fn c11_horn() -> Outcome {
    let p = load(G1);
    let e = ExampleSet::over("x", &[1]);
    let ps = specialize(&p.spec, &e);
    let a = horn_export(&p.grammar, &e, &ps).map_err(|e| e.to_string())?;
    let b = horn_export(&p.grammar, &e, &ps).map_err(|e| e.to_string())?;
    ensure(a == b, || "export is not byte-stable".into())?;
    let want = "(set-logic HORN)\n\
                (declare-fun Start (Int) Bool)\n\
                (assert (forall ((v1 Int) (a4_1 Int)) (=> (and (Start a4_1) (= v1 (+ 1 1 1 a4_1))) (Start v1))))\n\
                (assert (forall ((v1 Int)) (=> (= v1 0) (Start v1))))\n\
                (assert (forall ((o1 Int)) (=> (and (Start o1) (and (not (< o1 4)) (not (< 4 o1)))) false)))\n\
                (check-sat)\n";
    ensure(a == want, || format!("got\n{a}"))?;
    if !which("z3") {
        return Ok("snapshot matches; no Horn solver on PATH, solver check skipped".into());
    }
    let dir = std::env::temp_dir().join(format!("unreal-horn-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let f = dir.join("g1.smt2");
    std::fs::write(&f, &a).map_err(|e| e.to_string())?;
    let out = std::process::Command::new("z3").arg(&f).output().map_err(|e| e.to_string())?;
    let answer = String::from_utf8_lossy(&out.stdout).trim().to_string();
    // the query is a goal clause, so a model of the clauses means no solution exists
    ensure(answer == "sat", || format!("z3 answered {answer}"))?;
    Ok("snapshot matches; z3 confirms".into())
}

fn c12_ilp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut sat = 0;
    for i in 0..1000 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=6);
        let mut sys = unreal_core::ilp::IlpSystem::new();
        for k in 0..n {
            sys.add_var(format!("x{k}"), false);
        }
        let mut rows: Vec<(Vec<i64>, Rel, i64)> = Vec::new();
        for k in 0..n {
            let mut up = vec![0; n];
            up[k] = 1;
            rows.push((up.clone(), Rel::Le, 8));
            up[k] = -1;
            rows.push((up, Rel::Le, 8));
        }
        for _ in 0..m {
            let coeffs: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
            let rel = [Rel::Eq, Rel::Le, Rel::Lt][rng.gen_range(0..3)];
            rows.push((coeffs, rel, rng.gen_range(-10..=10)));
        }
        for (c, rel, rhs) in &rows {
            sys.add_dense(big(c), *rel, BigInt::from(*rhs));
        }
        let holds = |x: &[i64]| {
            rows.iter().all(|(c, rel, rhs)| {
                let s: i64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
                match rel {
                    Rel::Eq => s == *rhs,
                    Rel::Le => s <= *rhs,
                    Rel::Lt => s < *rhs,
                }
            })
        };
        let mut x = vec![-8i64; n];
        let mut brute = false;
        'search: loop {
            if holds(&x) {
                brute = true;
                break;
            }
            for k in 0..n {
                if x[k] < 8 {
                    x[k] += 1;
                    continue 'search;
                }
                x[k] = -8;
            }
            break;
        }
        let got = feasible(&sys).map_err(|e| e.to_string())?;
        ensure(got.is_sat() == brute, || format!("system {i}: solver {got:?}, enumeration {brute}"))?;
        if let IlpOutcome::Sat(w) = got {
            ensure(holds(&small(&w)), || format!("system {i}: witness {w:?} fails"))?;
            sat += 1;
        }
    }
    Ok(format!("1000 systems agree ({sat} feasible)"))
}

fn c13_determinism() -> Outcome {
    let runs: [(&str, &str, Backend); 4] = [
        ("g1", G1, Backend::SemiLinear),
        ("g2", G2, Backend::SemiLinear),
        ("gconst", GCONST, Backend::SemiLinear),
        ("parity", PARITY, Backend::PredAbs(PredicateDomain::parity())),
    ];
    for (name, src, backend) in runs {
        let p = load(src);
        let cfg = CegisConfig { seed: 11, backend, parallel: false, ..CegisConfig::default() };
        let out: Vec<String> = (0..3).map(|_| run_cegis(&p, &cfg).to_json().to_string()).collect();
        ensure(out[0] == out[1] && out[1] == out[2], || format!("{name}: runs differ"))?;
    }
    Ok("4 problems, 3 identical runs each".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("G1 golden solve", c1_g1_golden),
        ("G1 end-to-end", c2_g1_end_to_end),
        ("G2 end-to-end", c3_g2_end_to_end),
        ("exactness oracle suite", c4_exactness),
        ("semiring laws", c5_semiring_laws),
        ("CLIA abstract-op goldens", c6_clia_ops),
        ("RemIf golden", c7_remif),
        ("iteration bounds", c8_iteration_bounds),
        ("incompleteness guard", c9_incompleteness),
        ("predicate abstraction golden", c10_parity),
        ("Horn export snapshot", c11_horn),
        ("ILP correctness", c12_ilp),
        ("determinism", c13_determinism),
    ];
    // numeric arguments select criteria, e.g. `cargo test --test acceptance -- 4 8`
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match r {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{:.2?}]", t.elapsed()),
            Err(why) if KNOWN_RED.contains(&n) => println!("FAIL {n:>2} {name} (known, documented): {why}"),
            Err(why) => {
                unexpected += 1;
                println!("FAIL {n:>2} {name}: {why}");
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
