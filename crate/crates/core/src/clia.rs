//! Solving mixed Boolean/integer GFA systems: Kleene iteration for the
//! Boolean part, Newton for the integer part, alternated until the Boolean
//! values repeat.

use crate::booldom::{abs_and, abs_not, BoolVec, BoolVecSet, LessThanMemo};
use crate::gfa::{stratify, AbsValue, Monomial, Op, Operand, PolynomialSystem};
use crate::grammar::{NtId, Sort};
use crate::ilp::{IlpError, Oracle};
use crate::newton::{npa_solve, NewtonOptions};
use crate::rewrite::{rem_if, MaskedMonomial, MaskedSystem};
use crate::semilinear::{DimMismatch, SemiLinearSet};

/// `⟦IfThenElse⟧̂(bset, sl1, sl2) = ⊕_{b∈bset} proj(sl1, b) ⊗ proj(sl2, ¬b)`.
pub fn ite_abstract(
    bset: &BoolVecSet,
    sl1: &SemiLinearSet,
    sl2: &SemiLinearSet,
) -> Result<SemiLinearSet, DimMismatch> {
    let d = sl1.dim();
    if sl2.dim() != d {
        return Err(DimMismatch(d, sl2.dim()));
    }
    let mut acc = SemiLinearSet::zero(d);
    for b in bset.iter() {
        if b.len() != d {
            return Err(DimMismatch(d, b.len()));
        }
        acc = acc.combine(&sl1.proj(b).extend(&sl2.proj(&b.not())));
    }
    Ok(acc)
}

/// Partial valuation shared across strata.
pub type Env = Vec<Option<AbsValue>>;

fn operand_value(sys: &PolynomialSystem, env: &Env, a: &Operand) -> AbsValue {
    match a {
        Operand::Const(v) => v.clone(),
        Operand::Var(y) => env[y.0].clone().unwrap_or_else(|| AbsValue::bottom(sys.sorts[y.0], sys.dim)),
    }
}

fn eval_bool_monomial(
    sys: &PolynomialSystem,
    env: &Env,
    m: &Monomial,
    oracle: &dyn Oracle,
    memo: &LessThanMemo,
) -> Result<BoolVecSet, IlpError> {
    let arg = |k: usize| operand_value(sys, env, &m.args[k]);
    Ok(match m.op {
        Op::Id => arg(0).as_bools().clone(),
        Op::Not => abs_not(arg(0).as_bools()),
        Op::And => abs_and(arg(0).as_bools(), arg(1).as_bools()),
        Op::LessThan => memo.less_than(arg(0).as_sl(), arg(1).as_sl(), oracle)?,
        Op::Plus | Op::Ite => panic!("integer operator in a Boolean equation"),
    })
}

/// Kleene iteration from `∅` over the Boolean variables `vars`, reading every
/// other variable from `env`. Writes the fixpoint into `env` and returns the
/// number of iterations that changed some value.
pub fn solve_bool(
    sys: &PolynomialSystem,
    vars: &[NtId],
    env: &mut Env,
    oracle: &dyn Oracle,
    memo: &LessThanMemo,
) -> Result<usize, IlpError> {
    for x in vars {
        debug_assert_eq!(sys.sorts[x.0], Sort::Bool);
        env[x.0] = Some(AbsValue::Bools(BoolVecSet::empty()));
    }
    let bound = (1usize << sys.dim.min(usize::BITS as usize - 2)).saturating_mul(vars.len());
    let mut changes = 0;
    loop {
        if oracle.cancelled() {
            return Err(IlpError::Cancelled);
        }
        let mut next = Vec::with_capacity(vars.len());
        for x in vars {
            let mut acc = env[x.0].as_ref().expect("initialized").as_bools().clone();
            for m in &sys.eqs[x.0] {
                acc = acc.union(&eval_bool_monomial(sys, env, m, oracle, memo)?);
            }
            next.push(acc);
        }
        let changed = vars
            .iter()
            .zip(&next)
            .any(|(x, v)| env[x.0].as_ref().expect("initialized").as_bools() != v);
        if !changed {
            return Ok(changes);
        }
        changes += 1;
        assert!(changes <= bound, "solve_bool exceeded {bound} iterations");
        for (x, v) in vars.iter().zip(next) {
            env[x.0] = Some(AbsValue::Bools(v));
        }
    }
}

enum Piece {
    Const(SemiLinearSet),
    Factor(usize),
}

/// Expands the integer equations of `vars` into masked monomials, freezing
/// every guard and every variable outside `vars` at its `env` value.
pub fn expand_ite(sys: &PolynomialSystem, vars: &[NtId], env: &Env) -> MaskedSystem {
    let d = sys.dim;
    let top = BoolVec::all_true(d);
    let local = |y: NtId| vars.iter().position(|v| *v == y);
    let piece = |a: &Operand| -> Piece {
        match a {
            Operand::Var(y) if local(*y).is_some() => Piece::Factor(local(*y).expect("local")),
            other => Piece::Const(operand_value(sys, env, other).as_sl().clone()),
        }
    };
    let mut out = MaskedSystem::new(d);
    for x in vars {
        out.add_var(sys.names[x.0].clone());
    }
    for (i, x) in vars.iter().enumerate() {
        for m in &sys.eqs[x.0] {
            let mut push = |coeff: SemiLinearSet, factors: Vec<(usize, BoolVec)>| {
                if !coeff.is_zero() {
                    out.push(i, MaskedMonomial { coeff, factors });
                }
            };
            match m.op {
                Op::Id | Op::Plus => {
                    let mut coeff = SemiLinearSet::one(d);
                    let mut factors = Vec::new();
                    for a in &m.args {
                        match piece(a) {
                            Piece::Const(c) => coeff = coeff.extend(&c),
                            Piece::Factor(l) => factors.push((l, top.clone())),
                        }
                    }
                    push(coeff, factors);
                }
                Op::Ite => {
                    let guards = operand_value(sys, env, &m.args[0]);
                    for b in guards.as_bools().iter() {
                        let mut coeff = SemiLinearSet::one(d);
                        let mut factors = Vec::new();
                        for (a, mask) in [(&m.args[1], b.clone()), (&m.args[2], b.not())] {
                            match piece(a) {
                                Piece::Const(c) => coeff = coeff.extend(&c.proj(&mask)),
                                Piece::Factor(l) => factors.push((l, mask)),
                            }
                        }
                        push(coeff, factors);
                    }
                }
                Op::LessThan | Op::And | Op::Not => panic!("Boolean operator in an integer equation"),
            }
        }
    }
    out
}

/// Solves the integer variables `vars` with guards frozen from `env`:
/// ITE expansion, RemIf from every `(X, ⊤)`, then Newton. Returns the number
/// of Newton steps.
pub fn solve_ints(
    sys: &PolynomialSystem,
    vars: &[NtId],
    env: &mut Env,
    oracle: &dyn Oracle,
    opts: NewtonOptions,
) -> Result<usize, IlpError> {
    let masked = expand_ite(sys, vars, env);
    let roots: Vec<usize> = (0..vars.len()).collect();
    let r = rem_if(&masked, &roots);
    let solved = npa_solve(&r.system, oracle, opts)?;
    let top = BoolVec::all_true(sys.dim);
    for (i, x) in vars.iter().enumerate() {
        let k = r.var(i, &top).expect("root instantiated");
        env[x.0] = Some(AbsValue::Sl(solved.values[k].clone()));
    }
    Ok(solved.iterations)
}

/// Iteration counts of one solve, for checking the termination bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// `(changing iterations, Boolean variables)` per SolveBool call.
    pub bool_iterations: Vec<(usize, usize)>,
    /// Outer SolveMutual iterations per stratum that has integer variables.
    pub mutual_iterations: Vec<usize>,
    /// Newton steps per Newton call.
    pub newton_iterations: Vec<usize>,
    /// Human-readable per-iteration values.
    pub trace: Vec<String>,
}

impl SolveStats {
    pub fn max_mutual(&self) -> usize {
        self.mutual_iterations.iter().copied().max().unwrap_or(0)
    }
}

fn trace_vars(sys: &PolynomialSystem, vars: &[NtId], env: &Env, k: usize, stats: &mut SolveStats) {
    for x in vars {
        if let Some(v) = &env[x.0] {
            let line = format!("k={k} {} = {v}", sys.names[x.0]);
            log::debug!("{line}");
            stats.trace.push(line);
        }
    }
}

/// SolveMutual over `vars`: Booleans from the previous integer values, then
/// integers with those guards frozen, until every Boolean value repeats.
/// Returns the number of outer iterations.
pub fn solve_mutual(
    sys: &PolynomialSystem,
    vars: &[NtId],
    env: &mut Env,
    oracle: &dyn Oracle,
    memo: &LessThanMemo,
    opts: NewtonOptions,
    stats: &mut SolveStats,
) -> Result<usize, IlpError> {
    let ints: Vec<NtId> = vars.iter().copied().filter(|x| sys.sorts[x.0] == Sort::Int).collect();
    let bools: Vec<NtId> = vars.iter().copied().filter(|x| sys.sorts[x.0] == Sort::Bool).collect();
    for x in &ints {
        env[x.0] = Some(AbsValue::Sl(SemiLinearSet::zero(sys.dim)));
    }
    let run_bool = |env: &mut Env, stats: &mut SolveStats| -> Result<(), IlpError> {
        if !bools.is_empty() {
            let it = solve_bool(sys, &bools, env, oracle, memo)?;
            stats.bool_iterations.push((it, bools.len()));
        }
        Ok(())
    };
    let guarded = ints.iter().any(|x| {
        sys.eqs[x.0]
            .iter()
            .any(|m| m.op == Op::Ite && matches!(m.args[0], Operand::Var(b) if bools.contains(&b)))
    });
    if !guarded {
        // integers do not read these Booleans: one pass in dependence order
        if !ints.is_empty() {
            stats.newton_iterations.push(solve_ints(sys, &ints, env, oracle, opts)?);
        }
        run_bool(env, stats)?;
        trace_vars(sys, vars, env, 0, stats);
        return Ok(1);
    }
    let bound = sys.len().saturating_mul(1usize << sys.dim.min(usize::BITS as usize - 2));
    let mut prev: Option<Vec<BoolVecSet>> = None;
    let mut k = 0;
    loop {
        if oracle.cancelled() {
            return Err(IlpError::Cancelled);
        }
        run_bool(env, stats)?;
        let now: Vec<BoolVecSet> = bools.iter().map(|b| env[b.0].as_ref().expect("solved").as_bools().clone()).collect();
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&now) {
                assert!(a.is_subset(b), "Boolean values must grow across outer iterations");
            }
            if *p == now {
                return Ok(k);
            }
        }
        assert!(k < bound, "solve_mutual exceeded {bound} outer iterations");
        stats.newton_iterations.push(solve_ints(sys, &ints, env, oracle, opts)?);
        trace_vars(sys, vars, env, k, stats);
        prev = Some(now);
        k += 1;
    }
}

/// Solution of a whole system.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<AbsValue>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn get(&self, x: NtId) -> &AbsValue {
        &self.values[x.0]
    }
}

fn finish(sys: &PolynomialSystem, env: Env, stats: SolveStats) -> Solution {
    let values = env
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.unwrap_or_else(|| AbsValue::bottom(sys.sorts[i], sys.dim)))
        .collect();
    Solution { values, stats }
}

/// Solves stratum by stratum in topological order, substituting earlier
/// solutions as constants.
pub fn solve_system(
    sys: &PolynomialSystem,
    oracle: &dyn Oracle,
    memo: &LessThanMemo,
    opts: NewtonOptions,
) -> Result<Solution, IlpError> {
    let mut env: Env = vec![None; sys.len()];
    let mut stats = SolveStats::default();
    for stratum in stratify(sys) {
        let has_int = stratum.iter().any(|x| sys.sorts[x.0] == Sort::Int);
        if has_int {
            let k = solve_mutual(sys, &stratum, &mut env, oracle, memo, opts, &mut stats)?;
            stats.mutual_iterations.push(k);
        } else {
            let it = solve_bool(sys, &stratum, &mut env, oracle, memo)?;
            stats.bool_iterations.push((it, stratum.len()));
            trace_vars(sys, &stratum, &env, 0, &mut stats);
        }
    }
    Ok(finish(sys, env, stats))
}

/// Solves the system as a single stratum.
pub fn solve_monolithic(
    sys: &PolynomialSystem,
    oracle: &dyn Oracle,
    memo: &LessThanMemo,
    opts: NewtonOptions,
) -> Result<Solution, IlpError> {
    let mut env: Env = vec![None; sys.len()];
    let mut stats = SolveStats::default();
    let all: Vec<NtId> = sys.ids().collect();
    if all.iter().any(|x| sys.sorts[x.0] == Sort::Int) {
        let k = solve_mutual(sys, &all, &mut env, oracle, memo, opts, &mut stats)?;
        stats.mutual_iterations.push(k);
    } else {
        let it = solve_bool(sys, &all, &mut env, oracle, memo)?;
        stats.bool_iterations.push((it, all.len()));
    }
    Ok(finish(sys, env, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_problem;
    use crate::gfa::{build_equations, Domain, GfaProblem};
    use crate::grammar::ExampleSet;
    use crate::ilp::IlpSolver;
    use crate::rewrite::to_plus_form;
    use crate::semilinear::iv;

    fn bv(s: &str) -> BoolVec {
        BoolVec::new(s.chars().map(|c| c == 't').collect())
    }

    fn set(items: &[&str]) -> BoolVecSet {
        items.iter().map(|s| bv(s)).collect()
    }

    fn system(src: &str, xs: &[i64]) -> PolynomialSystem {
        let p = parse_problem(src).unwrap();
        let g = to_plus_form(&p.grammar.expand_nary());
        build_equations(&GfaProblem { grammar: g, examples: ExampleSet::over("x", xs), domain: Domain::SemiLinear })
            .unwrap()
    }

    #[test]
    fn ite_example() {
        let sl1 = SemiLinearSet::linear(iv(&[1, 2]), vec![iv(&[3, 4])]);
        let sl2 = SemiLinearSet::linear(iv(&[5, 6]), vec![iv(&[7, 8])]);
        let got = ite_abstract(&set(&["tf", "tt"]), &sl1, &sl2).unwrap();
        let want = SemiLinearSet::from_components(
            2,
            vec![
                crate::semilinear::LinearSet::new(iv(&[1, 6]), vec![iv(&[3, 0]), iv(&[0, 8])]),
                crate::semilinear::LinearSet::new(iv(&[1, 2]), vec![iv(&[3, 4])]),
            ],
        );
        assert_eq!(got, want);
        assert!(ite_abstract(&BoolVecSet::empty(), &sl1, &sl2).unwrap().is_zero());
        assert_eq!(ite_abstract(&set(&["tt"]), &sl1, &sl2).unwrap(), sl1);
    }

    #[test]
    fn g2_solution() {
        let sys = system(include_str!("../../../problems/g2.sy"), &[1, 2]);
        let oracle = IlpSolver::default();
        let memo = LessThanMemo::new();
        let sol = solve_system(&sys, &oracle, &memo, NewtonOptions::default()).unwrap();
        let get = |n: &str| sol.get(sys.lookup(n).unwrap()).clone();
        assert_eq!(get("Exp2"), AbsValue::Sl(SemiLinearSet::linear(iv(&[0, 0]), vec![iv(&[2, 4])])));
        assert_eq!(get("Exp3"), AbsValue::Sl(SemiLinearSet::linear(iv(&[0, 0]), vec![iv(&[3, 6])])));
        // (f,t) is realized by LessThan(0, ite(x < 2, 0, x + x + 0))
        assert_eq!(get("BExp"), AbsValue::Bools(set(&["tf", "tt", "ff", "ft"])));
        assert_eq!(sol.stats.mutual_iterations.last(), Some(&2));
        // f(1) = 4, f(2) = 6 is reachable through a (f,t) guard
        assert!(get("Start").as_sl().contains(&iv(&[4, 6]), &oracle).unwrap());
        let sys3 = system(include_str!("../../../problems/g2.sy"), &[1, 3]);
        let sol3 = solve_system(&sys3, &oracle, &LessThanMemo::new(), NewtonOptions::default()).unwrap();
        assert!(!sol3.get(sys3.start).as_sl().contains(&iv(&[4, 8]), &oracle).unwrap());
    }

    #[test]
    fn booleanex_fixpoint() {
        // BExp = {(t,f)} ⊕ {(t,t),(f,f)} ⊕ And(BExp, BExp)
        let sys = PolynomialSystem {
            names: vec!["BExp".into()],
            sorts: vec![Sort::Bool],
            dim: 2,
            start: NtId(0),
            eqs: vec![vec![
                Monomial { op: Op::Id, args: vec![Operand::Const(AbsValue::Bools(set(&["tf"])))] },
                Monomial { op: Op::Id, args: vec![Operand::Const(AbsValue::Bools(set(&["tt", "ff"])))] },
                Monomial { op: Op::And, args: vec![Operand::Var(NtId(0)), Operand::Var(NtId(0))] },
            ]],
        };
        let mut env = vec![None];
        let it = solve_bool(&sys, &[NtId(0)], &mut env, &IlpSolver::default(), &LessThanMemo::new()).unwrap();
        assert_eq!(env[0], Some(AbsValue::Bools(set(&["tf", "tt", "ff"]))));
        assert_eq!(it, 1);
    }

    #[test]
    fn and_without_base_is_empty() {
        let sys = PolynomialSystem {
            names: vec!["B".into()],
            sorts: vec![Sort::Bool],
            dim: 1,
            start: NtId(0),
            eqs: vec![vec![Monomial { op: Op::And, args: vec![Operand::Var(NtId(0)), Operand::Var(NtId(0))] }]],
        };
        let mut env = vec![None];
        let it = solve_bool(&sys, &[NtId(0)], &mut env, &IlpSolver::default(), &LessThanMemo::new()).unwrap();
        assert_eq!(env[0], Some(AbsValue::Bools(BoolVecSet::empty())));
        assert_eq!(it, 0);
    }

    #[test]
    fn constant_guard() {
        let src = "(set-logic CLIA)(synth-fun f ((x Int)) Int ((Start Int ((ite B 1 2))) (B Bool ((< 0 1)))))";
        let sys = system(src, &[1]);
        let oracle = IlpSolver::default();
        let sol = solve_system(&sys, &oracle, &LessThanMemo::new(), NewtonOptions::default()).unwrap();
        assert_eq!(sol.get(NtId(0)), &AbsValue::Sl(SemiLinearSet::point(iv(&[1]))));
    }

    #[test]
    fn ite_free_mixed_is_one_iteration() {
        let src = "(set-logic CLIA)(synth-fun f ((x Int)) Int ((Start Int ((+ Start x) 0)) (B Bool ((< Start 1)))))";
        let sys = system(src, &[1]);
        let sol = solve_monolithic(&sys, &IlpSolver::default(), &LessThanMemo::new(), NewtonOptions::default()).unwrap();
        assert_eq!(sol.stats.mutual_iterations, vec![1]);
        assert_eq!(sol.get(NtId(1)), &AbsValue::Bools(set(&["t", "f"])));
    }

    #[test]
    fn monolithic_agrees_on_g2() {
        let sys = system(include_str!("../../../problems/g2.sy"), &[1, 2]);
        let oracle = IlpSolver::default();
        let a = solve_system(&sys, &oracle, &LessThanMemo::new(), NewtonOptions::default()).unwrap();
        let b = solve_monolithic(&sys, &oracle, &LessThanMemo::new(), NewtonOptions::default()).unwrap();
        let s = sys.start;
        for v in a.get(s).as_sl().gamma_bounded(2) {
            assert!(b.get(s).as_sl().contains(&v, &oracle).unwrap());
        }
        for v in b.get(s).as_sl().gamma_bounded(2) {
            assert!(a.get(s).as_sl().contains(&v, &oracle).unwrap());
        }
    }
}
