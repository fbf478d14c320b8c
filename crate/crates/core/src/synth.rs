//! Bottom-up enumerative synthesis from examples and candidate verification.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::booldom::BoolVec;
use crate::frontend::{LinTerm, PointSpec, RelOp, Scalar, SpecFormula};
use crate::grammar::{eval_term, proj_z, Arg, ExampleSet, NtId, Rhs, Rtg, Symbol, Term, Value};
use crate::ilp::{IlpError, IlpOutcome, IlpSystem, Oracle, Rel};

/// A term with its outputs on the current examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub term: Term,
    pub signature: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthBudget {
    /// Largest term size (node count) explored.
    pub max_size: usize,
    /// Cap on stored bank entries across all nonterminals.
    pub max_terms: usize,
    /// Keep one term per (nonterminal, signature).
    pub prune: bool,
}

impl Default for SynthBudget {
    fn default() -> Self {
        SynthBudget { max_size: 20, max_terms: 200_000, prune: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthOutcome {
    Found(Candidate),
    /// Every term up to the size cap was explored.
    Exhausted,
    /// The term-count cap was hit.
    Budget,
}

fn combine(symbol: &Symbol, kids: &[&Value]) -> Value {
    let ints = |v: &Value| v.as_int().expect("well-sorted").to_vec();
    let bools = |v: &Value| v.as_bool().expect("well-sorted").clone();
    match symbol {
        Symbol::Plus => {
            let mut acc = ints(kids[0]);
            for k in &kids[1..] {
                for (a, b) in acc.iter_mut().zip(ints(k)) {
                    *a += b;
                }
            }
            Value::Int(acc)
        }
        Symbol::Minus => {
            Value::Int(ints(kids[0]).into_iter().zip(ints(kids[1])).map(|(a, b)| a - b).collect())
        }
        Symbol::Succ => Value::Int(ints(kids[0]).into_iter().map(|x| x + 1).collect()),
        Symbol::Double => Value::Int(ints(kids[0]).into_iter().map(|x| x * 2).collect()),
        Symbol::IfThenElse => {
            let b = bools(kids[0]);
            let t = proj_z(&ints(kids[1]), &b);
            let e = proj_z(&ints(kids[2]), &b.not());
            Value::Int(t.into_iter().zip(e).map(|(x, y)| x + y).collect())
        }
        Symbol::LessThan => {
            let (a, b) = (ints(kids[0]), ints(kids[1]));
            Value::Bool(BoolVec::new(a.iter().zip(&b).map(|(x, y)| x < y).collect()))
        }
        Symbol::And => Value::Bool(bools(kids[0]).and(&bools(kids[1]))),
        Symbol::Not => Value::Bool(bools(kids[0]).not()),
        Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => unreachable!("leaf"),
    }
}

type Entry = (Value, Term);

/// Size-by-size enumerator. Each call to [`Enumerator::step`] completes one
/// size level, so callers can interleave it with other work.
pub struct Enumerator<'a> {
    grammar: &'a Rtg,
    spec: &'a PointSpec,
    examples: &'a ExampleSet,
    budget: SynthBudget,
    /// `levels[nt][s]`: entries of size `s` first seen at that size.
    levels: Vec<Vec<Vec<Entry>>>,
    seen: Vec<HashSet<Value>>,
    stored: usize,
    size: usize,
}

impl<'a> Enumerator<'a> {
    pub fn new(grammar: &'a Rtg, spec: &'a PointSpec, examples: &'a ExampleSet, budget: SynthBudget) -> Self {
        let n = grammar.len();
        Enumerator {
            grammar,
            spec,
            examples,
            budget,
            levels: vec![vec![Vec::new()]; n],
            seen: vec![HashSet::new(); n],
            stored: 0,
            size: 0,
        }
    }

    /// Size of the last completed level.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of stored bank entries.
    pub fn stored(&self) -> usize {
        self.stored
    }

    /// Every signature recorded for `nt` so far.
    pub fn signatures(&self, nt: NtId) -> impl Iterator<Item = &Value> {
        self.levels[nt.0].iter().flatten().map(|(v, _)| v)
    }

    fn leaf(&self, s: &Symbol) -> Value {
        eval_term(&Term::leaf(s.clone()), self.examples).expect("variables bound by examples")
    }

    /// Enumerates argument tuples whose sizes sum to `rem`.
    fn tuples(&self, args: &[Arg], rem: usize, acc: &mut Vec<(Value, Term)>, out: &mut Vec<Vec<(Value, Term)>>) {
        let Some((first, rest)) = args.split_first() else {
            if rem == 0 {
                out.push(acc.clone());
            }
            return;
        };
        match first {
            Arg::Leaf(s) => {
                if rem >= 1 {
                    acc.push((self.leaf(s), Term::leaf(s.clone())));
                    self.tuples(rest, rem - 1, acc, out);
                    acc.pop();
                }
            }
            Arg::Nt(y) => {
                let min_rest = rest.len();
                for s in 1..=rem.saturating_sub(min_rest) {
                    if s >= self.levels[y.0].len() {
                        break;
                    }
                    for (v, t) in &self.levels[y.0][s] {
                        acc.push((v.clone(), t.clone()));
                        self.tuples(rest, rem - s, acc, out);
                        acc.pop();
                    }
                }
            }
        }
    }

    fn insert(&mut self, nt: NtId, v: Value, t: Term, level: &mut [Vec<Entry>]) -> bool {
        if self.budget.prune {
            if !self.seen[nt.0].insert(v.clone()) {
                return false;
            }
        } else {
            self.seen[nt.0].insert(v.clone());
        }
        level[nt.0].push((v, t));
        self.stored += 1;
        true
    }

    /// Completes the next size level. Returns a solution if one appears.
    pub fn step(&mut self) -> Result<Option<Candidate>, SynthOutcome> {
        if self.size >= self.budget.max_size {
            return Err(SynthOutcome::Exhausted);
        }
        let s = self.size + 1;
        let n = self.grammar.len();
        let mut level: Vec<Vec<Entry>> = vec![Vec::new(); n];
        for p in &self.grammar.productions {
            let Rhs::Apply { symbol, args } = &p.rhs else { continue };
            if args.is_empty() {
                if s == 1 {
                    let v = self.leaf(symbol);
                    self.insert(p.lhs, v, Term::leaf(symbol.clone()), &mut level);
                }
                continue;
            }
            let mut out = Vec::new();
            self.tuples(args, s - 1, &mut Vec::new(), &mut out);
            for tuple in out {
                let vals: Vec<&Value> = tuple.iter().map(|(v, _)| v).collect();
                let v = combine(symbol, &vals);
                let t = Term::node(symbol.clone(), tuple.iter().map(|(_, t)| t.clone()).collect());
                self.insert(p.lhs, v, t, &mut level);
                if self.stored > self.budget.max_terms {
                    return Err(SynthOutcome::Budget);
                }
            }
        }
        // chain productions copy same-size entries until nothing changes
        let mut changed = true;
        while changed {
            changed = false;
            for p in &self.grammar.productions {
                let Rhs::Chain(y) = p.rhs else { continue };
                for (v, t) in level[y.0].clone() {
                    if !self.budget.prune && level[p.lhs.0].iter().any(|(_, u)| *u == t) {
                        continue;
                    }
                    if self.insert(p.lhs, v, t, &mut level) {
                        changed = true;
                    }
                }
            }
        }
        let start = self.grammar.start.0;
        let hit = level[start]
            .iter()
            .find(|(v, _)| self.spec.holds_value(v))
            .map(|(v, t)| Candidate { term: t.clone(), signature: v.clone() });
        for (nt, entries) in level.into_iter().enumerate() {
            self.levels[nt].push(entries);
        }
        self.size = s;
        Ok(hit)
    }
}

/// Returns the first term of `g` (by size, then production order) whose
/// outputs on `e` satisfy `ps`.
pub fn enumerate_solve(g: &Rtg, ps: &PointSpec, e: &ExampleSet, budget: SynthBudget) -> SynthOutcome {
    let mut en = Enumerator::new(g, ps, e, budget);
    loop {
        match en.step() {
            Ok(Some(c)) => return SynthOutcome::Found(c),
            Ok(None) => {}
            Err(o) => return o,
        }
    }
}

/// `Σ c_i·x_i + constant` over the problem variables.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Lin {
    coeffs: Vec<BigInt>,
    constant: BigInt,
}

impl Lin {
    fn constant(n: usize, c: BigInt) -> Self {
        Lin { coeffs: vec![BigInt::zero(); n], constant: c }
    }

    fn add(&self, o: &Lin) -> Lin {
        Lin {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &o.constant,
        }
    }

    fn scale(&self, k: &BigInt) -> Lin {
        Lin { coeffs: self.coeffs.iter().map(|a| a * k).collect(), constant: &self.constant * k }
    }

    fn sub(&self, o: &Lin) -> Lin {
        self.add(&o.scale(&-BigInt::one()))
    }
}

/// A guard `form ≤ 0`.
type Guard = Lin;

#[derive(Debug, Clone)]
enum CaseValue {
    Int(Lin),
    Bool(bool),
}

#[derive(Debug, Clone)]
struct Case {
    guards: Vec<Guard>,
    value: CaseValue,
}

/// Largest number of piecewise cases before verification falls back to
/// random testing.
pub const MAX_CASES: usize = 4096;

struct TooManyCases;

fn lt_guard(a: &Lin, b: &Lin) -> Guard {
    // a < b  ⇔  a - b + 1 ≤ 0
    let mut g = a.sub(b);
    g.constant += 1;
    g
}

fn ge_guard(a: &Lin, b: &Lin) -> Guard {
    b.sub(a)
}

fn cases(t: &Term, vars: &[String]) -> Result<Vec<Case>, TooManyCases> {
    let n = vars.len();
    let int = |c: &Case| match &c.value {
        CaseValue::Int(l) => l.clone(),
        CaseValue::Bool(_) => panic!("ill-sorted term"),
    };
    let boolean = |c: &Case| match &c.value {
        CaseValue::Bool(b) => *b,
        CaseValue::Int(_) => panic!("ill-sorted term"),
    };
    let var = |x: &str| {
        let mut l = Lin::constant(n, BigInt::zero());
        let i = vars.iter().position(|v| v == x).expect("declared variable");
        l.coeffs[i] = BigInt::one();
        l
    };
    let single = |v| vec![Case { guards: Vec::new(), value: v }];
    let kids = t.children.iter().map(|c| cases(c, vars)).collect::<Result<Vec<_>, _>>()?;
    let product = |parts: &[Vec<Case>]| -> Result<Vec<Vec<Case>>, TooManyCases> {
        let mut acc: Vec<Vec<Case>> = vec![Vec::new()];
        for p in parts {
            if acc.len() * p.len() > MAX_CASES {
                return Err(TooManyCases);
            }
            acc = acc
                .iter()
                .flat_map(|a| p.iter().map(move |c| {
                    let mut v = a.clone();
                    v.push(c.clone());
                    v
                }))
                .collect();
        }
        Ok(acc)
    };
    let merged = |cs: &[Case]| cs.iter().flat_map(|c| c.guards.iter().cloned()).collect::<Vec<_>>();
    let out = match &t.symbol {
        Symbol::Num(c) => single(CaseValue::Int(Lin::constant(n, c.clone()))),
        Symbol::Var(x) => single(CaseValue::Int(var(x))),
        Symbol::NegVar(x) => single(CaseValue::Int(var(x).scale(&-BigInt::one()))),
        Symbol::Plus | Symbol::Minus | Symbol::Succ | Symbol::Double => product(&kids)?
            .into_iter()
            .map(|cs| {
                let vals: Vec<Lin> = cs.iter().map(int).collect();
                let v = match &t.symbol {
                    Symbol::Plus => vals[1..].iter().fold(vals[0].clone(), |a, b| a.add(b)),
                    Symbol::Minus => vals[0].sub(&vals[1]),
                    Symbol::Succ => vals[0].add(&Lin::constant(n, BigInt::one())),
                    _ => vals[0].scale(&BigInt::from(2)),
                };
                Case { guards: merged(&cs), value: CaseValue::Int(v) }
            })
            .collect(),
        Symbol::IfThenElse => {
            let mut out = Vec::new();
            for g in &kids[0] {
                let branch = if boolean(g) { &kids[1] } else { &kids[2] };
                for c in branch {
                    let mut guards = g.guards.clone();
                    guards.extend(c.guards.iter().cloned());
                    out.push(Case { guards, value: c.value.clone() });
                }
            }
            out
        }
        Symbol::LessThan => {
            let mut out = Vec::new();
            for cs in product(&kids)? {
                let (a, b) = (int(&cs[0]), int(&cs[1]));
                let mut yes = merged(&cs);
                let mut no = yes.clone();
                yes.push(lt_guard(&a, &b));
                no.push(ge_guard(&a, &b));
                out.push(Case { guards: yes, value: CaseValue::Bool(true) });
                out.push(Case { guards: no, value: CaseValue::Bool(false) });
            }
            out
        }
        Symbol::And => product(&kids)?
            .into_iter()
            .map(|cs| Case { guards: merged(&cs), value: CaseValue::Bool(boolean(&cs[0]) && boolean(&cs[1])) })
            .collect(),
        Symbol::Not => kids[0]
            .iter()
            .map(|c| Case { guards: c.guards.clone(), value: CaseValue::Bool(!boolean(c)) })
            .collect(),
    };
    if out.len() > MAX_CASES {
        return Err(TooManyCases);
    }
    Ok(out)
}

fn lin_of(t: &LinTerm, out: &Lin, vars: &[String]) -> Lin {
    let mut l = out.scale(&t.out);
    l.constant += &t.constant;
    for (x, c) in &t.vars {
        let i = vars.iter().position(|v| v == x).expect("declared variable");
        l.coeffs[i] += c;
    }
    l
}

/// DNF of `ψ` (or its negation) with the output replaced by a case value;
/// every literal is `form ≤ 0`.
fn spec_dnf(f: &SpecFormula, pos: bool, out: &CaseValue, vars: &[String]) -> Vec<Vec<Guard>> {
    let n = vars.len();
    let truth = |b: bool| if b == pos { vec![vec![]] } else { vec![] };
    match f {
        SpecFormula::True => truth(true),
        SpecFormula::False => truth(false),
        SpecFormula::OutBool => match out {
            CaseValue::Bool(b) => truth(*b),
            CaseValue::Int(_) => panic!("Boolean spec on an integer term"),
        },
        SpecFormula::Atom(a, op, b) => {
            let o = match out {
                CaseValue::Int(l) => l.clone(),
                CaseValue::Bool(_) => Lin::constant(n, BigInt::zero()),
            };
            let (a, b) = (lin_of(a, &o, vars), lin_of(b, &o, vars));
            let op = if pos { *op } else { negate(*op) };
            match op {
                RelOp::Lt => vec![vec![lt_guard(&a, &b)]],
                RelOp::Gt => vec![vec![lt_guard(&b, &a)]],
                RelOp::Le => vec![vec![ge_guard(&b, &a)]],
                RelOp::Ge => vec![vec![ge_guard(&a, &b)]],
                RelOp::Eq => vec![vec![ge_guard(&a, &b), ge_guard(&b, &a)]],
                RelOp::Ne => vec![vec![lt_guard(&a, &b)], vec![lt_guard(&b, &a)]],
            }
        }
        SpecFormula::Not(g) => spec_dnf(g, !pos, out, vars),
        SpecFormula::And(gs) | SpecFormula::Or(gs) => {
            let conj = matches!(f, SpecFormula::And(_)) == pos;
            if conj {
                let mut acc = vec![vec![]];
                for g in gs {
                    let d = spec_dnf(g, pos, out, vars);
                    acc = acc
                        .iter()
                        .flat_map(|a| d.iter().map(move |b| [a.clone(), b.clone()].concat()))
                        .collect();
                }
                acc
            } else {
                gs.iter().flat_map(|g| spec_dnf(g, pos, out, vars)).collect()
            }
        }
    }
}

fn negate(op: RelOp) -> RelOp {
    match op {
        RelOp::Eq => RelOp::Ne,
        RelOp::Ne => RelOp::Eq,
        RelOp::Lt => RelOp::Ge,
        RelOp::Ge => RelOp::Lt,
        RelOp::Le => RelOp::Gt,
        RelOp::Gt => RelOp::Le,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    /// Proven correct on every input.
    Valid,
    /// No counterexample found by random testing; not a proof.
    ValidUnknown,
    Counterexample(Vec<BigInt>),
    Unknown(String),
}

/// Whether `t` satisfies `spec` on one input.
pub fn satisfies_on(t: &Term, spec: &SpecFormula, vars: &[String], input: &[BigInt]) -> bool {
    let e = ExampleSet::new(vars.to_vec(), vec![input.to_vec()]).expect("one input");
    let out = match eval_term(t, &e).expect("bound variables") {
        Value::Int(v) => Scalar::Int(v[0].clone()),
        Value::Bool(b) => Scalar::Bool(b.bits()[0]),
    };
    spec.holds(&out, &e.input(0))
}

const SHRINK_LIMIT: i64 = 64;

fn shrink(t: &Term, spec: &SpecFormula, vars: &[String], mut x: Vec<BigInt>) -> Vec<BigInt> {
    for i in 0..x.len() {
        let cur = x[i].abs();
        for k in 0..=SHRINK_LIMIT {
            let k = BigInt::from(k);
            if k >= cur {
                break;
            }
            let mut found = false;
            for cand in [k.clone(), -k.clone()] {
                let mut y = x.clone();
                y[i] = cand;
                if !satisfies_on(t, spec, vars, &y) {
                    x = y;
                    found = true;
                    break;
                }
            }
            if found {
                break;
            }
        }
    }
    x
}

/// Number of random inputs tried when the case split is too large.
pub const FALLBACK_SAMPLES: usize = 10_000;

fn random_test(t: &Term, spec: &SpecFormula, vars: &[String]) -> VerifyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..FALLBACK_SAMPLES {
        let x: Vec<BigInt> = vars.iter().map(|_| BigInt::from(rng.gen_range(-100i64..=100))).collect();
        if !satisfies_on(t, spec, vars, &x) {
            return VerifyOutcome::Counterexample(shrink(t, spec, vars, x));
        }
    }
    VerifyOutcome::ValidUnknown
}

/// Decides `∀x̄. ψ(⟦t⟧(x̄), x̄)` by splitting on the guards of `t` and asking
/// the oracle for a falsifying input in each case.
pub fn verify(t: &Term, spec: &SpecFormula, vars: &[String], oracle: &dyn Oracle) -> VerifyOutcome {
    let Ok(cs) = cases(t, vars) else {
        return random_test(t, spec, vars);
    };
    for c in &cs {
        for branch in spec_dnf(spec, false, &c.value, vars) {
            let mut sys = IlpSystem::new();
            for x in vars {
                sys.add_var(x.clone(), false);
            }
            for g in c.guards.iter().chain(&branch) {
                let terms: Vec<(usize, BigInt)> =
                    g.coeffs.iter().cloned().enumerate().filter(|(_, a)| !a.is_zero()).collect();
                sys.add(&terms, Rel::Le, -g.constant.clone());
            }
            match oracle.feasible(&sys) {
                Ok(IlpOutcome::Sat(w)) => {
                    debug_assert!(!satisfies_on(t, spec, vars, &w));
                    return VerifyOutcome::Counterexample(shrink(t, spec, vars, w));
                }
                Ok(IlpOutcome::Unsat) => {}
                Err(IlpError::Cancelled) => return VerifyOutcome::Unknown("cancelled".into()),
                Err(e) => return VerifyOutcome::Unknown(e.to_string()),
            }
        }
    }
    VerifyOutcome::Valid
}
