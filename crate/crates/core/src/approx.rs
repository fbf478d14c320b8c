//! Sound but incomplete backends: predicate abstraction over a finite
//! partition of the integers, and export to constrained Horn clauses.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::booldom::BoolVec;
use crate::frontend::{OutTerm, PointFormula, PointSpec};
use crate::grammar::{Arg, ExampleError, ExampleSet, Rhs, Rtg, Sort, Symbol, Value};
use crate::ilp::{smt_int, IlpError, IlpOutcome, IlpSystem, Oracle, Rel};

/// One predicate of a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredCond {
    /// `o ≡ r (mod m)`.
    Residue { m: u32, r: u32 },
    /// `lo ≤ o ≤ hi`, either side optional.
    Range { lo: Option<BigInt>, hi: Option<BigInt> },
}

impl PredCond {
    pub fn holds(&self, v: &BigInt) -> bool {
        match self {
            PredCond::Residue { m, r } => v.mod_floor(&BigInt::from(*m)) == BigInt::from(*r),
            PredCond::Range { lo, hi } => {
                lo.as_ref().is_none_or(|l| l <= v) && hi.as_ref().is_none_or(|h| v <= h)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tables {
    Residue(u32),
    Sign,
    /// No exact transformers: every non-leaf result is the whole domain.
    Top,
}

/// A finite set of pairwise disjoint, jointly exhaustive predicates over one
/// integer output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDomain {
    pub names: Vec<String>,
    pub conds: Vec<PredCond>,
    tables: Tables,
}

impl PredicateDomain {
    /// `{even, odd}`.
    pub fn parity() -> Self {
        PredicateDomain {
            names: vec!["even".into(), "odd".into()],
            conds: vec![PredCond::Residue { m: 2, r: 0 }, PredCond::Residue { m: 2, r: 1 }],
            tables: Tables::Residue(2),
        }
    }

    /// Residue classes modulo `m`.
    pub fn modulo(m: u32) -> Self {
        assert!(m >= 1, "modulus must be positive");
        if m == 2 {
            return PredicateDomain::parity();
        }
        PredicateDomain {
            names: (0..m).map(|r| format!("mod{m}={r}")).collect(),
            conds: (0..m).map(|r| PredCond::Residue { m, r }).collect(),
            tables: Tables::Residue(m),
        }
    }

    /// `{neg, zero, pos}`.
    pub fn sign() -> Self {
        let one = BigInt::one();
        PredicateDomain {
            names: vec!["neg".into(), "zero".into(), "pos".into()],
            conds: vec![
                PredCond::Range { lo: None, hi: Some(-one.clone()) },
                PredCond::Range { lo: Some(BigInt::zero()), hi: Some(BigInt::zero()) },
                PredCond::Range { lo: Some(one), hi: None },
            ],
            tables: Tables::Sign,
        }
    }

    /// A user partition with no transformer tables.
    pub fn custom(names: Vec<String>, conds: Vec<PredCond>) -> Self {
        assert_eq!(names.len(), conds.len());
        PredicateDomain { names, conds, tables: Tables::Top }
    }

    /// `parity`, `sign` or `mod:K`.
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "parity" => Ok(PredicateDomain::parity()),
            "sign" => Ok(PredicateDomain::sign()),
            _ => {
                let k = s
                    .strip_prefix("mod:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| format!("unknown predicate set `{s}` (expected parity, sign or mod:K)"))?;
                Ok(PredicateDomain::modulo(k))
            }
        }
    }

    pub fn len(&self) -> usize {
        self.conds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conds.is_empty()
    }

    /// Index of the predicate holding for `v`.
    pub fn classify(&self, v: &BigInt) -> usize {
        let hits: Vec<usize> = (0..self.len()).filter(|&i| self.conds[i].holds(v)).collect();
        assert_eq!(hits.len(), 1, "predicates must partition the integers");
        hits[0]
    }

    fn residue(&self, i: usize) -> i64 {
        match self.conds[i] {
            PredCond::Residue { r, .. } => i64::from(r),
            _ => unreachable!(),
        }
    }

    fn all(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Possible results of an integer symbol on one coordinate.
    fn int_op(&self, s: &Symbol, args: &[usize]) -> Vec<usize> {
        match self.tables {
            Tables::Top => self.all(),
            Tables::Residue(m) => {
                let m = i64::from(m);
                let r = |i: usize| self.residue(i);
                let v = match s {
                    Symbol::Plus => args.iter().map(|a| r(*a)).sum::<i64>(),
                    Symbol::Minus => r(args[0]) - r(args[1]),
                    Symbol::Succ => r(args[0]) + 1,
                    Symbol::Double => 2 * r(args[0]),
                    _ => unreachable!("integer operator"),
                };
                vec![self.classify(&BigInt::from(v.rem_euclid(m)))]
            }
            Tables::Sign => {
                const NEG: usize = 0;
                const ZERO: usize = 1;
                const POS: usize = 2;
                let flip = |a: usize| 2 - a;
                let plus = |a: usize, b: usize| -> Vec<usize> {
                    match (a, b) {
                        (ZERO, x) | (x, ZERO) => vec![x],
                        (x, y) if x == y => vec![x],
                        _ => vec![NEG, ZERO, POS],
                    }
                };
                match s {
                    Symbol::Plus => {
                        let mut acc: BTreeSet<usize> = [args[0]].into();
                        for b in &args[1..] {
                            acc = acc.iter().flat_map(|a| plus(*a, *b)).collect();
                        }
                        acc.into_iter().collect()
                    }
                    Symbol::Minus => plus(args[0], flip(args[1])),
                    Symbol::Succ => match args[0] {
                        NEG => vec![NEG, ZERO],
                        _ => vec![POS],
                    },
                    Symbol::Double => vec![args[0]],
                    _ => unreachable!("integer operator"),
                }
            }
        }
    }

    fn less_than(&self, a: usize, b: usize) -> Vec<usize> {
        if self.tables == Tables::Sign && (a != b || a == 1) {
            // neg < zero < pos, and zero < zero is false
            return vec![usize::from(a < b)];
        }
        vec![0, 1]
    }
}

/// Abstract value of one nonterminal: a set of tuples, one entry per
/// example. Integer entries index predicates; Boolean entries are 0 or 1.
pub type PredValue = BTreeSet<Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredAbsResult {
    pub values: Vec<PredValue>,
    /// Iterations that changed the valuation.
    pub iterations: usize,
}

fn product(options: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut acc = vec![Vec::new()];
    for o in options {
        acc = acc
            .iter()
            .flat_map(|a| o.iter().map(move |x| {
                let mut v = a.clone();
                v.push(*x);
                v
            }))
            .collect();
    }
    acc
}

fn leaf_tuple(dom: &PredicateDomain, s: &Symbol, e: &ExampleSet) -> Result<Vec<usize>, ExampleError> {
    Ok(match s {
        Symbol::Num(c) => vec![dom.classify(c); e.dim()],
        Symbol::Var(x) => e.var_vector(x)?.iter().map(|v| dom.classify(v)).collect(),
        Symbol::NegVar(x) => e.var_vector(x)?.iter().map(|v| dom.classify(&-v)).collect(),
        other => panic!("{other} is not a leaf"),
    })
}

/// Kleene iteration over sets of predicate tuples, starting from ∅.
pub fn predabs_solve(g: &Rtg, e: &ExampleSet, dom: &PredicateDomain) -> Result<PredAbsResult, ExampleError> {
    let n = g.len();
    let d = e.dim();
    let mut env: Vec<PredValue> = vec![BTreeSet::new(); n];
    let mut iterations = 0;
    let bound = n * dom.len().max(2).pow(d as u32);
    loop {
        let mut next = env.clone();
        for p in &g.productions {
            let out = &mut next[p.lhs.0];
            let (symbol, args) = match &p.rhs {
                Rhs::Chain(y) => {
                    out.extend(env[y.0].iter().cloned());
                    continue;
                }
                Rhs::Apply { symbol, args } => (symbol, args),
            };
            if args.is_empty() {
                out.insert(leaf_tuple(dom, symbol, e)?);
                continue;
            }
            let arg_sets: Vec<Vec<Vec<usize>>> = args
                .iter()
                .map(|a| match a {
                    Arg::Nt(y) => Ok(env[y.0].iter().cloned().collect()),
                    Arg::Leaf(s) => leaf_tuple(dom, s, e).map(|t| vec![t]),
                })
                .collect::<Result<_, _>>()?;
            if arg_sets.iter().any(Vec::is_empty) {
                continue;
            }
            let mut combos: Vec<Vec<&Vec<usize>>> = vec![Vec::new()];
            for set in &arg_sets {
                combos = combos
                    .iter()
                    .flat_map(|c| set.iter().map(move |t| {
                        let mut c = c.clone();
                        c.push(t);
                        c
                    }))
                    .collect();
            }
            for c in combos {
                let per_coord: Vec<Vec<usize>> = (0..d)
                    .map(|j| {
                        let at: Vec<usize> = c.iter().map(|t| t[j]).collect();
                        match symbol {
                            Symbol::IfThenElse => vec![if at[0] == 1 { at[1] } else { at[2] }],
                            Symbol::LessThan => dom.less_than(at[0], at[1]),
                            Symbol::And => vec![at[0] & at[1]],
                            Symbol::Not => vec![1 - at[0]],
                            s => dom.int_op(s, &at),
                        }
                    })
                    .collect();
                out.extend(product(&per_coord));
            }
        }
        if next == env {
            break;
        }
        env = next;
        iterations += 1;
        assert!(iterations <= bound, "predicate abstraction exceeded {bound} iterations");
    }
    Ok(PredAbsResult { values: env, iterations })
}

/// Renders a predicate value, e.g. `{even}` or `{(even,odd)}`.
pub struct ShowPred<'a>(pub &'a PredicateDomain, pub Sort, pub &'a PredValue);

impl fmt::Display for ShowPred<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ShowPred(dom, sort, v) = self;
        let name = |i: &usize| match sort {
            Sort::Int => dom.names[*i].clone(),
            Sort::Bool => if *i == 1 { "t".into() } else { "f".into() },
        };
        let items: Vec<String> = v
            .iter()
            .map(|t| {
                let parts: Vec<String> = t.iter().map(name).collect();
                if parts.len() == 1 {
                    parts[0].clone()
                } else {
                    format!("({})", parts.join(","))
                }
            })
            .collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// Whether some output tuple allowed by `value` satisfies the specification.
/// `false` proves the examples unrealizable.
pub fn predabs_sat(
    value: &PredValue,
    sort: Sort,
    dom: &PredicateDomain,
    ps: &PointSpec,
    oracle: &dyn Oracle,
) -> Result<bool, IlpError> {
    if sort == Sort::Bool {
        return Ok(value
            .iter()
            .any(|t| ps.holds_value(&Value::Bool(BoolVec::new(t.iter().map(|b| *b == 1).collect())))));
    }
    let branches = ps.dnf();
    for t in value {
        for branch in &branches {
            let mut sys = IlpSystem::new();
            let d = t.len();
            for j in 0..d {
                sys.add_var(format!("o{}", j + 1), false);
            }
            for (j, p) in t.iter().enumerate() {
                match &dom.conds[*p] {
                    PredCond::Residue { m, r } => {
                        let k = sys.add_var(format!("k{}", j + 1), false);
                        sys.add(&[(j, BigInt::one()), (k, -BigInt::from(*m))], Rel::Eq, BigInt::from(*r));
                    }
                    PredCond::Range { lo, hi } => {
                        if let Some(lo) = lo {
                            sys.add(&[(j, -BigInt::one())], Rel::Le, -lo.clone());
                        }
                        if let Some(hi) = hi {
                            sys.add(&[(j, BigInt::one())], Rel::Le, hi.clone());
                        }
                    }
                }
            }
            for (j, lit) in branch {
                if lit.strict {
                    sys.add(&[(*j, lit.coeff.clone())], Rel::Lt, -lit.constant.clone());
                } else {
                    sys.add(&[(*j, -lit.coeff.clone())], Rel::Le, lit.constant.clone());
                }
            }
            if let IlpOutcome::Sat(_) = oracle.feasible(&sys)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn smt_symbol(name: &str) -> String {
    if !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn out_term_smt(t: &OutTerm, o: &str) -> String {
    let scaled = if t.coeff.is_zero() {
        None
    } else if t.coeff.is_one() {
        Some(o.to_string())
    } else {
        Some(format!("(* {} {o})", smt_int(&t.coeff)))
    };
    match scaled {
        None => smt_int(&t.constant),
        Some(s) if t.constant.is_zero() => s,
        Some(s) => format!("(+ {s} {})", smt_int(&t.constant)),
    }
}

fn point_smt(f: &PointFormula, o: &str, sort: Sort) -> String {
    let join = |head: &str, fs: &[PointFormula], unit: &str| {
        if fs.is_empty() {
            return unit.to_string();
        }
        let parts: Vec<String> = fs.iter().map(|g| point_smt(g, o, sort)).collect();
        if parts.len() == 1 { parts[0].clone() } else { format!("({head} {})", parts.join(" ")) }
    };
    match f {
        PointFormula::True => "true".into(),
        PointFormula::False => "false".into(),
        PointFormula::Lt(a, b) => match sort {
            Sort::Int => format!("(< {} {})", out_term_smt(a, o), out_term_smt(b, o)),
            Sort::Bool => format!("(< {} {})", smt_int(&a.constant), smt_int(&b.constant)),
        },
        PointFormula::OutBool => o.to_string(),
        PointFormula::Not(g) => format!("(not {})", point_smt(g, o, sort)),
        PointFormula::And(gs) => join("and", gs, "true"),
        PointFormula::Or(gs) => join("or", gs, "false"),
    }
}

fn smt_sort(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Bool => "Bool",
    }
}

struct Clause {
    binders: Vec<(String, Sort)>,
    body: Vec<String>,
    head: String,
}

impl Clause {
    fn render(&self) -> String {
        let body = match self.body.len() {
            0 => "true".to_string(),
            1 => self.body[0].clone(),
            _ => format!("(and {})", self.body.join(" ")),
        };
        if self.binders.is_empty() {
            return format!("(assert (=> {body} {}))", self.head);
        }
        let bs: Vec<String> = self.binders.iter().map(|(v, s)| format!("({v} {})", smt_sort(*s))).collect();
        format!("(assert (forall ({}) (=> {body} {})))", bs.join(" "), self.head)
    }
}

fn app(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        smt_symbol(name)
    } else {
        format!("({} {})", smt_symbol(name), args.join(" "))
    }
}

/// Constrained Horn clauses whose least model is the grammar's output
/// relation on `e`, followed by a goal clause `Start(o⃗) ∧ ψ^E(o⃗) ⇒ false`.
/// A Horn solver answers `sat` exactly when the examples are unrealizable.
pub fn horn_export(g: &Rtg, e: &ExampleSet, ps: &PointSpec) -> Result<String, ExampleError> {
    let d = e.dim();
    let mut out = String::from("(set-logic HORN)\n");
    for nt in &g.nonterminals {
        let sorts = vec![smt_sort(nt.sort); d].join(" ");
        let _ = writeln!(out, "(declare-fun {} ({sorts}) Bool)", smt_symbol(&nt.name));
    }
    let vs: Vec<String> = (1..=d).map(|j| format!("v{j}")).collect();
    for p in &g.productions {
        let sort = g.sort(p.lhs);
        let head = app(g.name(p.lhs), &vs);
        let binders: Vec<(String, Sort)> = vs.iter().map(|v| (v.clone(), sort)).collect();
        let (symbol, args) = match &p.rhs {
            Rhs::Chain(y) => {
                out.push_str(&Clause { binders, body: vec![app(g.name(*y), &vs)], head }.render());
                out.push('\n');
                continue;
            }
            Rhs::Apply { symbol, args } => (symbol, args),
        };
        // per argument: its binders, its predicate literal and the
        // expression for each coordinate
        let mut parts: Vec<(Vec<(String, Sort)>, Option<String>)> = Vec::new();
        let mut cols: Vec<Vec<String>> = Vec::new();
        for (k, a) in args.iter().enumerate() {
            match a {
                Arg::Nt(y) => {
                    let names: Vec<String> = (1..=d).map(|j| format!("a{}_{j}", k + 1)).collect();
                    let bs = names.iter().map(|n| (n.clone(), g.sort(*y))).collect();
                    parts.push((bs, Some(app(g.name(*y), &names))));
                    cols.push(names);
                }
                Arg::Leaf(s) => {
                    parts.push((Vec::new(), None));
                    cols.push(leaf_smt(s, e)?);
                }
            }
        }
        let using = |keep: &[usize]| {
            let mut bs = binders.clone();
            let mut body = Vec::new();
            for &k in keep {
                bs.extend(parts[k].0.iter().cloned());
                body.extend(parts[k].1.iter().cloned());
            }
            (bs, body)
        };
        let all: Vec<usize> = (0..args.len()).collect();
        let eq = |j: usize, rhs: String| format!("(= {} {rhs})", vs[j]);
        let (binders, mut body) = using(&all);
        match symbol {
            Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => {
                body.extend(leaf_smt(symbol, e)?.into_iter().enumerate().map(|(j, c)| eq(j, c)));
            }
            Symbol::IfThenElse if d == 1 => {
                // one clause per branch; only the chosen branch is constrained
                for (branch, guard) in [(1, cols[0][0].clone()), (2, format!("(not {})", cols[0][0]))] {
                    let (bs, mut body) = using(&[0, branch]);
                    body.push(guard);
                    body.push(eq(0, cols[branch][0].clone()));
                    out.push_str(&Clause { binders: bs, body, head: head.clone() }.render());
                    out.push('\n');
                }
                continue;
            }
            Symbol::IfThenElse => {
                // split on the guard of the first example
                for guard in [cols[0][0].clone(), format!("(not {})", cols[0][0])] {
                    let (bs, mut body) = using(&all);
                    body.push(guard);
                    for j in 0..d {
                        body.push(eq(j, format!("(ite {} {} {})", cols[0][j], cols[1][j], cols[2][j])));
                    }
                    out.push_str(&Clause { binders: bs, body, head: head.clone() }.render());
                    out.push('\n');
                }
                continue;
            }
            s => {
                for j in 0..d {
                    let at: Vec<&str> = cols.iter().map(|c| c[j].as_str()).collect();
                    let rhs = match s {
                        Symbol::Plus => format!("(+ {})", at.join(" ")),
                        Symbol::Minus => format!("(- {} {})", at[0], at[1]),
                        Symbol::Succ => format!("(+ {} 1)", at[0]),
                        Symbol::Double => format!("(* 2 {})", at[0]),
                        Symbol::LessThan => format!("(< {} {})", at[0], at[1]),
                        Symbol::And => format!("(and {} {})", at[0], at[1]),
                        Symbol::Not => format!("(not {})", at[0]),
                        _ => unreachable!(),
                    };
                    body.push(eq(j, rhs));
                }
            }
        }
        out.push_str(&Clause { binders, body, head }.render());
        out.push('\n');
    }
    let start_sort = g.sort(g.start);
    let os: Vec<String> = (1..=d).map(|j| format!("o{j}")).collect();
    let mut body = vec![app(g.name(g.start), &os)];
    body.extend(ps.phis.iter().zip(&os).map(|(f, o)| point_smt(f, o, start_sort)));
    let goal = Clause { binders: os.iter().map(|o| (o.clone(), start_sort)).collect(), body, head: "false".into() };
    out.push_str(&goal.render());
    out.push_str("\n(check-sat)\n");
    Ok(out)
}

fn leaf_smt(s: &Symbol, e: &ExampleSet) -> Result<Vec<String>, ExampleError> {
    let vals: Vec<BigInt> = match s {
        Symbol::Num(c) => vec![c.clone(); e.dim()],
        Symbol::Var(x) => e.var_vector(x)?,
        Symbol::NegVar(x) => e.var_vector(x)?.into_iter().map(|v| -v).collect(),
        other => panic!("{other} is not a leaf"),
    };
    Ok(vals.iter().map(smt_int).collect())
}

/// Number of clauses [`horn_export`] emits, goal excluded.
pub fn horn_clause_count(g: &Rtg) -> usize {
    g.productions
        .iter()
        .map(|p| match &p.rhs {
            Rhs::Apply { symbol: Symbol::IfThenElse, .. } => 2,
            _ => 1,
        })
        .sum()
}
