//! Linear-arithmetic formulas: symbolic concretization of semi-linear sets,
//! the unrealizability query, its ILP decision and SMT-LIB2 printing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::frontend::{PointFormula, PointSpec, RelOp};
use crate::ilp::{smt_int, IlpError, IlpOutcome, IlpSystem, Oracle, Rel};
use crate::semilinear::{LinearSet, SemiLinearSet};

/// `Σ c_v·v + constant`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinExpr {
    pub terms: BTreeMap<String, BigInt>,
    pub constant: BigInt,
}

impl LinExpr {
    pub fn constant(c: BigInt) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: &str) -> Self {
        LinExpr::term(v, BigInt::one())
    }

    pub fn term(v: &str, c: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(v.to_string(), c);
        }
        LinExpr { terms, constant: BigInt::zero() }
    }

    pub fn plus(mut self, v: &str, c: &BigInt) -> Self {
        if !c.is_zero() {
            let e = self.terms.entry(v.to_string()).or_default();
            *e += c;
            if e.is_zero() {
                self.terms.remove(v);
            }
        }
        self
    }

    fn to_smt(&self) -> String {
        if self.terms.is_empty() {
            return smt_int(&self.constant);
        }
        let mut parts = vec![smt_int(&self.constant)];
        for (v, c) in &self.terms {
            parts.push(if c.is_one() { v.clone() } else { format!("(* {} {v})", smt_int(c)) });
        }
        if self.constant.is_zero() && parts.len() == 2 {
            return parts.pop().unwrap();
        }
        format!("(+ {})", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LiaFormula {
    True,
    False,
    Atom(LinExpr, RelOp, LinExpr),
    And(Vec<LiaFormula>),
    Or(Vec<LiaFormula>),
    Not(Box<LiaFormula>),
    /// Existential over nonnegative integers.
    Exists(Vec<String>, Box<LiaFormula>),
}

/// Name of output coordinate `j` (0-based), printed 1-based.
pub fn out_var(j: usize) -> String {
    format!("o{}", j + 1)
}

fn lambda(comp: usize, k: usize) -> String {
    format!("l{comp}_{k}")
}

fn concretize_linear(l: &LinearSet, comp: usize) -> LiaFormula {
    let lams: Vec<String> = (0..l.gens().len()).map(|k| lambda(comp, k)).collect();
    let atoms = (0..l.dim())
        .map(|j| {
            let mut rhs = LinExpr::constant(l.base()[j].clone());
            for (k, g) in l.gens().iter().enumerate() {
                rhs = rhs.plus(&lams[k], &g[j]);
            }
            LiaFormula::Atom(LinExpr::var(&out_var(j)), RelOp::Eq, rhs)
        })
        .collect();
    let body = LiaFormula::And(atoms);
    if lams.is_empty() {
        body
    } else {
        LiaFormula::Exists(lams, Box::new(body))
    }
}

/// `γ̂(sl, o⃗)`: one existential disjunct per component, sharing `o⃗`.
pub fn concretize(sl: &SemiLinearSet) -> LiaFormula {
    let mut ds: Vec<LiaFormula> =
        sl.components().iter().enumerate().map(|(i, l)| concretize_linear(l, i)).collect();
    match ds.len() {
        0 => LiaFormula::False,
        1 => ds.pop().unwrap(),
        _ => LiaFormula::Or(ds),
    }
}

fn point_formula(f: &PointFormula, j: usize) -> LiaFormula {
    let o = out_var(j);
    match f {
        PointFormula::True => LiaFormula::True,
        PointFormula::False => LiaFormula::False,
        PointFormula::Lt(a, b) => {
            let side = |t: &crate::frontend::OutTerm| LinExpr {
                constant: t.constant.clone(),
                ..LinExpr::term(&o, t.coeff.clone())
            };
            LiaFormula::Atom(side(a), RelOp::Lt, side(b))
        }
        PointFormula::OutBool => panic!("Boolean output in an integer query"),
        PointFormula::Not(g) => LiaFormula::Not(Box::new(point_formula(g, j))),
        PointFormula::And(gs) => LiaFormula::And(gs.iter().map(|g| point_formula(g, j)).collect()),
        PointFormula::Or(gs) => LiaFormula::Or(gs.iter().map(|g| point_formula(g, j)).collect()),
    }
}

/// `𝒫 = γ̂(sl, o⃗) ∧ ⋀_j φ_j(o_j)`.
pub fn build_query(sl: &SemiLinearSet, ps: &PointSpec) -> LiaFormula {
    assert_eq!(sl.dim(), ps.dim(), "dimension mismatch");
    let mut conj = vec![concretize(sl)];
    conj.extend(ps.phis.iter().enumerate().map(|(j, f)| point_formula(f, j)));
    LiaFormula::And(conj)
}

/// ILP systems whose disjunction is the query: one per component and DNF
/// branch of the specification. Variables `0..d` are the outputs.
pub fn query_systems(sl: &SemiLinearSet, ps: &PointSpec) -> Vec<IlpSystem> {
    let d = sl.dim();
    let branches = ps.dnf();
    let mut out = Vec::new();
    for (i, l) in sl.components().iter().enumerate() {
        for branch in &branches {
            let mut sys = IlpSystem::new();
            for j in 0..d {
                sys.add_var(out_var(j), false);
            }
            let lams: Vec<usize> = (0..l.gens().len()).map(|k| sys.add_var(lambda(i, k), true)).collect();
            for j in 0..d {
                // o_j - Σ v_kj λ_k = u_j
                let mut terms = vec![(j, BigInt::one())];
                for (k, g) in l.gens().iter().enumerate() {
                    if !g[j].is_zero() {
                        terms.push((lams[k], -g[j].clone()));
                    }
                }
                sys.add(&terms, Rel::Eq, l.base()[j].clone());
            }
            for (j, lit) in branch {
                if lit.strict {
                    // c·o + k < 0
                    sys.add(&[(*j, lit.coeff.clone())], Rel::Lt, -lit.constant.clone());
                } else {
                    // c·o + k >= 0, i.e. -c·o <= k
                    sys.add(&[(*j, -lit.coeff.clone())], Rel::Le, lit.constant.clone());
                }
            }
            out.push(sys);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryOutcome {
    /// Output vector satisfying the query.
    Sat(Vec<BigInt>),
    Unsat,
}

/// Decides the query; the first satisfiable system (component order, then
/// branch order) provides the witness.
pub fn solve_query(sl: &SemiLinearSet, ps: &PointSpec, oracle: &dyn Oracle) -> Result<QueryOutcome, IlpError> {
    for sys in query_systems(sl, ps) {
        if let IlpOutcome::Sat(w) = oracle.feasible(&sys)? {
            return Ok(QueryOutcome::Sat(w[..sl.dim()].to_vec()));
        }
    }
    Ok(QueryOutcome::Unsat)
}

struct Printer {
    free: Vec<String>,
    lifted: Vec<String>,
}

impl Printer {
    fn note_free(&mut self, e: &LinExpr, bound: &[String]) {
        for v in e.terms.keys() {
            if !bound.contains(v) && !self.lifted.contains(v) && !self.free.contains(v) {
                self.free.push(v.clone());
            }
        }
    }

    fn print(&mut self, f: &LiaFormula, positive: bool, bound: &mut Vec<String>) -> String {
        match f {
            LiaFormula::True => "true".into(),
            LiaFormula::False => "false".into(),
            LiaFormula::Atom(a, op, b) => {
                self.note_free(a, bound);
                self.note_free(b, bound);
                format!("({} {} {})", op.smt(), a.to_smt(), b.to_smt())
            }
            LiaFormula::And(fs) | LiaFormula::Or(fs) if fs.is_empty() => {
                if matches!(f, LiaFormula::And(_)) { "true".into() } else { "false".into() }
            }
            LiaFormula::And(fs) | LiaFormula::Or(fs) => {
                let head = if matches!(f, LiaFormula::And(_)) { "and" } else { "or" };
                let parts: Vec<String> = fs.iter().map(|g| self.print(g, positive, bound)).collect();
                if parts.len() == 1 {
                    parts.into_iter().next().unwrap()
                } else {
                    format!("({head} {})", parts.join(" "))
                }
            }
            LiaFormula::Not(g) => format!("(not {})", self.print(g, !positive, bound)),
            LiaFormula::Exists(vs, body) if positive => {
                // existentials in positive position become global constants
                self.lifted.extend(vs.iter().cloned());
                self.print(body, positive, bound)
            }
            LiaFormula::Exists(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                let inner = self.print(body, positive, bound);
                bound.truncate(n);
                let decls: Vec<String> = vs.iter().map(|v| format!("({v} Int)")).collect();
                let nonneg: Vec<String> = vs.iter().map(|v| format!("(>= {v} 0)")).collect();
                format!("(exists ({}) (and {} {inner}))", decls.join(" "), nonneg.join(" "))
            }
        }
    }
}

/// SMT-LIB2 script deciding the formula.
pub fn export_smtlib(f: &LiaFormula) -> String {
    let mut p = Printer { free: Vec::new(), lifted: Vec::new() };
    let body = p.print(f, true, &mut Vec::new());
    let mut out = String::from("(set-logic LIA)\n");
    for v in p.free.iter().chain(&p.lifted) {
        let _ = writeln!(out, "(declare-fun {v} () Int)");
    }
    for v in &p.lifted {
        let _ = writeln!(out, "(assert (>= {v} 0))");
    }
    let _ = writeln!(out, "(assert {body})");
    out.push_str("(check-sat)\n");
    out
}
