use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use unreal_bench::{load, G1, G2, GCONST};
use unreal_core::booldom::LessThanMemo;
use unreal_core::cegis::{check_unrealizable, equations, run_cegis, Backend, CegisConfig};
use unreal_core::clia::solve_system;
use unreal_core::ilp::{IlpSolver, IlpSystem, Oracle, Rel};
use unreal_core::newton::NewtonOptions;
use unreal_core::semilinear::{iv, SemiLinearSet};
use unreal_core::synth::{enumerate_solve, SynthBudget};
use unreal_core::{frontend::specialize, ExampleSet};

fn equations_solve(c: &mut Criterion) {
    let oracle = IlpSolver::default();
    for (name, src) in [("g1", G1), ("g2", G2)] {
        let p = load(src);
        let e = ExampleSet::over("x", &[1, 2]);
        let sys = equations(&p.grammar, &e).unwrap();
        c.bench_function(&format!("solve_{name}_two_examples"), |b| {
            b.iter(|| solve_system(black_box(&sys), &oracle, &LessThanMemo::new(), NewtonOptions::default()).unwrap())
        });
    }
}

fn check(c: &mut Criterion) {
    let oracle = IlpSolver::default();
    let p = load(G2);
    let e = ExampleSet::over("x", &[1, 3]);
    c.bench_function("check_g2_two_examples", |b| {
        b.iter(|| check_unrealizable(&p.grammar, &p.spec, black_box(&e), &Backend::SemiLinear, &oracle).unwrap())
    });
}

fn cegis(c: &mut Criterion) {
    let p = load(GCONST);
    let cfg = CegisConfig { max_rounds: 5, ..CegisConfig::default() };
    c.bench_function("cegis_gconst_five_rounds", |b| b.iter(|| run_cegis(black_box(&p), &cfg)));
}

fn semilinear_ops(c: &mut Criterion) {
    let a = SemiLinearSet::linear(iv(&[1, 2]), vec![iv(&[3, 0]), iv(&[0, 4])]);
    let b = SemiLinearSet::linear(iv(&[0, 1]), vec![iv(&[2, 2])]).combine(&SemiLinearSet::point(iv(&[5, 5])));
    c.bench_function("sl_extend", |bn| bn.iter(|| black_box(&a).extend(black_box(&b))));
    c.bench_function("sl_star", |bn| bn.iter(|| black_box(&b).star()));
    let oracle = IlpSolver::default();
    let big = a.extend(&b).combine(&b.star());
    c.bench_function("sl_prune", |bn| bn.iter(|| black_box(&big).prune(&oracle)));
}

fn ilp(c: &mut Criterion) {
    let oracle = IlpSolver::default();
    let mut sys = IlpSystem::new();
    let x = sys.add_var("x", false);
    let y = sys.add_var("y", false);
    let z = sys.add_var("z", true);
    sys.add(&[(x, 3.into()), (y, 5.into()), (z, (-7).into())], Rel::Eq, 1.into());
    sys.add(&[(x, 2.into()), (y, (-3).into())], Rel::Le, 4.into());
    sys.add(&[(x, (-1).into()), (z, 2.into())], Rel::Lt, 9.into());
    c.bench_function("ilp_small", |b| b.iter(|| oracle.feasible(black_box(&sys)).unwrap()));
}

fn synth(c: &mut Criterion) {
    let p = load(G2);
    let e = ExampleSet::over("x", &[1, 2]);
    let ps = specialize(&p.spec, &e);
    let budget = SynthBudget { max_size: 9, ..SynthBudget::default() };
    c.bench_function("enumerate_g2_size9", |b| b.iter(|| enumerate_solve(&p.grammar, black_box(&ps), &e, budget)));
}

criterion_group!(benches, equations_solve, check, cegis, semilinear_ops, ilp, synth);
criterion_main!(benches);
