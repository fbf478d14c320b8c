//! Exact integer feasibility for conjunctions of linear constraints.
//!
//! Equalities are eliminated first by unimodular column operations, which
//! leaves a system of inequalities over free integer parameters. That system
//! is boxed by an a-priori bound on minimal solutions and decided by
//! branch-and-bound over an exact rational simplex.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Default branch-and-bound node budget.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpVar {
    pub name: String,
    pub nonneg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
}

/// `coeffs · x rel rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpConstraint {
    pub coeffs: Vec<BigInt>,
    pub rel: Rel,
    pub rhs: BigInt,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IlpSystem {
    pub vars: Vec<IlpVar>,
    pub constraints: Vec<IlpConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IlpOutcome {
    Sat(Vec<BigInt>),
    Unsat,
}

impl IlpOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, IlpOutcome::Sat(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IlpError {
    #[error("node budget of {0} exhausted")]
    ResourceLimit(u64),
    #[error("cancelled")]
    Cancelled,
}

impl IlpSystem {
    pub fn new() -> Self {
        IlpSystem::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, nonneg: bool) -> usize {
        self.vars.push(IlpVar { name: name.into(), nonneg });
        for c in &mut self.constraints {
            c.coeffs.push(BigInt::zero());
        }
        self.vars.len() - 1
    }

    /// Adds a constraint given as sparse `(var, coeff)` terms.
    pub fn add(&mut self, terms: &[(usize, BigInt)], rel: Rel, rhs: BigInt) {
        let mut coeffs = vec![BigInt::zero(); self.vars.len()];
        for (v, c) in terms {
            coeffs[*v] += c;
        }
        self.constraints.push(IlpConstraint { coeffs, rel, rhs });
    }

    pub fn add_dense(&mut self, coeffs: Vec<BigInt>, rel: Rel, rhs: BigInt) {
        assert_eq!(coeffs.len(), self.vars.len(), "constraint width");
        self.constraints.push(IlpConstraint { coeffs, rel, rhs });
    }

    /// Exact check of an assignment against every constraint and bound.
    pub fn holds(&self, x: &[BigInt]) -> bool {
        if x.len() != self.vars.len() {
            return false;
        }
        if self.vars.iter().zip(x).any(|(v, val)| v.nonneg && val.is_negative()) {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs: BigInt = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            match c.rel {
                Rel::Eq => lhs == c.rhs,
                Rel::Le => lhs <= c.rhs,
                Rel::Lt => lhs < c.rhs,
            }
        })
    }

    /// SMT-LIB2 rendering of the system.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::from("(set-logic LIA)\n");
        for v in &self.vars {
            let _ = writeln!(out, "(declare-const {} Int)", v.name);
        }
        for v in &self.vars {
            if v.nonneg {
                let _ = writeln!(out, "(assert (>= {} 0))", v.name);
            }
        }
        for c in &self.constraints {
            let mut terms: Vec<String> = Vec::new();
            for (a, v) in c.coeffs.iter().zip(&self.vars) {
                if a.is_zero() {
                    continue;
                }
                if a.is_one() {
                    terms.push(v.name.clone());
                } else {
                    terms.push(format!("(* {} {})", smt_int(a), v.name));
                }
            }
            let lhs = match terms.len() {
                0 => "0".to_string(),
                1 => terms.pop().unwrap(),
                _ => format!("(+ {})", terms.join(" ")),
            };
            let op = match c.rel {
                Rel::Eq => "=",
                Rel::Le => "<=",
                Rel::Lt => "<",
            };
            let _ = writeln!(out, "(assert ({op} {lhs} {}))", smt_int(&c.rhs));
        }
        out.push_str("(check-sat)\n");
        out
    }
}

pub(crate) fn smt_int(v: &BigInt) -> String {
    if v.is_negative() {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

/// Anything that decides integer feasibility.
pub trait Oracle: Send + Sync {
    fn feasible(&self, sys: &IlpSystem) -> Result<IlpOutcome, IlpError>;

    /// Whether the surrounding computation should stop early.
    fn cancelled(&self) -> bool {
        false
    }
}

/// The built-in solver with a node budget, optional query export and an
/// optional cancellation flag checked between branch-and-bound nodes.
#[derive(Debug)]
pub struct IlpSolver {
    node_budget: u64,
    export_dir: Option<PathBuf>,
    queries: Arc<AtomicUsize>,
    cancel: Option<Arc<AtomicBool>>,
}

impl Default for IlpSolver {
    fn default() -> Self {
        IlpSolver::new(DEFAULT_NODE_BUDGET)
    }
}

impl IlpSolver {
    pub fn new(node_budget: u64) -> Self {
        IlpSolver {
            node_budget,
            export_dir: None,
            queries: Arc::new(AtomicUsize::new(0)),
            cancel: None,
        }
    }

    /// Dump every query as `DIR/query-NNNNN.smt2`.
    pub fn with_export(mut self, dir: PathBuf) -> Self {
        self.export_dir = Some(dir);
        self
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    /// Shares the query counter of another solver so exported files are
    /// numbered across both.
    pub fn sharing_counter(mut self, other: &IlpSolver) -> Self {
        self.queries = Arc::clone(&other.queries);
        self
    }

    pub fn node_budget(&self) -> u64 {
        self.node_budget
    }

    pub fn queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }
}

impl Oracle for IlpSolver {
    fn feasible(&self, sys: &IlpSystem) -> Result<IlpOutcome, IlpError> {
        let n = self.queries.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(dir) = &self.export_dir {
            let path = dir.join(format!("query-{n:05}.smt2"));
            if let Err(e) = fs::write(&path, sys.to_smtlib()) {
                log::warn!("cannot write {}: {e}", path.display());
            }
        }
        feasible_with(sys, self.node_budget, self.cancel.as_deref())
    }

    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

/// Decides the system with the default budget.
pub fn feasible(sys: &IlpSystem) -> Result<IlpOutcome, IlpError> {
    feasible_with(sys, DEFAULT_NODE_BUDGET, None)
}

/// Decides the system. A `Sat` witness has been rechecked exactly.
pub fn feasible_with(
    sys: &IlpSystem,
    node_budget: u64,
    cancel: Option<&AtomicBool>,
) -> Result<IlpOutcome, IlpError> {
    let out = decide(sys, node_budget, cancel)?;
    if let IlpOutcome::Sat(w) = &out {
        assert!(sys.holds(w), "ILP witness failed recheck: {w:?}");
    }
    Ok(out)
}

fn gcd_all<'a>(it: impl Iterator<Item = &'a BigInt>) -> BigInt {
    it.fold(BigInt::zero(), |g, a| g.gcd(a))
}

/// `x = t0 + T·y` over integer parameters `y`.
struct Param {
    t0: Vec<BigInt>,
    // columns of T, each of length n
    cols: Vec<Vec<BigInt>>,
}

impl Param {
    fn identity(n: usize) -> Self {
        let cols = (0..n)
            .map(|j| (0..n).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Param { t0: vec![BigInt::zero(); n], cols }
    }

    /// Row `a` over x rewritten over y: returns (a·T, a·t0).
    fn pull(&self, a: &[BigInt]) -> (Vec<BigInt>, BigInt) {
        let row = self.cols.iter().map(|c| dot(a, c)).collect();
        (row, dot(a, &self.t0))
    }

    fn eval(&self, y: &[BigInt]) -> Vec<BigInt> {
        let mut x = self.t0.clone();
        for (c, yv) in self.cols.iter().zip(y) {
            if yv.is_zero() {
                continue;
            }
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += ci * yv;
            }
        }
        x
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

fn decide(
    sys: &IlpSystem,
    node_budget: u64,
    cancel: Option<&AtomicBool>,
) -> Result<IlpOutcome, IlpError> {
    let n = sys.vars.len();
    let mut eqs: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    let mut les: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    for c in &sys.constraints {
        match c.rel {
            Rel::Eq => eqs.push((c.coeffs.clone(), c.rhs.clone())),
            Rel::Le => les.push((c.coeffs.clone(), c.rhs.clone())),
            Rel::Lt => les.push((c.coeffs.clone(), &c.rhs - 1)),
        }
    }
    for (i, v) in sys.vars.iter().enumerate() {
        if v.nonneg {
            let mut row = vec![BigInt::zero(); n];
            row[i] = -BigInt::one();
            les.push((row, BigInt::zero()));
        }
    }

    let mut param = Param::identity(n);
    for (a, b) in &eqs {
        let (mut row, off) = param.pull(a);
        let rhs = b - off;
        let Some(p) = row.iter().position(|v| !v.is_zero()) else {
            if rhs.is_zero() {
                continue;
            }
            return Ok(IlpOutcome::Unsat);
        };
        let g = gcd_all(row.iter());
        if !rhs.is_multiple_of(&g) {
            return Ok(IlpOutcome::Unsat);
        }
        for j in p + 1..row.len() {
            if row[j].is_zero() {
                continue;
            }
            let e = row[p].extended_gcd(&row[j]);
            let (s, t, gg) = (e.x, e.y, e.gcd);
            let cp = -(&row[j] / &gg);
            let cj = &row[p] / &gg;
            let col_p = param.cols[p].clone();
            let col_j = param.cols[j].clone();
            param.cols[p] = col_p.iter().zip(&col_j).map(|(x, y)| &s * x + &t * y).collect();
            param.cols[j] = col_p.iter().zip(&col_j).map(|(x, y)| &cp * x + &cj * y).collect();
            row[p] = gg;
            row[j] = BigInt::zero();
        }
        // now row = (0..0, g', 0..0) with g' = ±g
        let fixed = &rhs / &row[p];
        let col = param.cols.remove(p);
        for (t, c) in param.t0.iter_mut().zip(&col) {
            *t += c * &fixed;
        }
    }

    // inequalities over the parameters, gcd-tightened
    let k = param.cols.len();
    let mut rows: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    for (a, b) in &les {
        let (row, off) = param.pull(a);
        let rhs = b - off;
        let g = gcd_all(row.iter());
        if g.is_zero() {
            if rhs.is_negative() {
                return Ok(IlpOutcome::Unsat);
            }
            continue;
        }
        let row: Vec<BigInt> = row.iter().map(|v| v / &g).collect();
        rows.push((row, rhs.div_floor(&g)));
    }
    rows.sort();
    rows.dedup();
    if rows.is_empty() {
        return Ok(IlpOutcome::Sat(param.t0.clone()));
    }
    let y = branch_and_bound(&rows, k, node_budget, cancel)?;
    Ok(match y {
        Some(y) => IlpOutcome::Sat(param.eval(&y)),
        None => IlpOutcome::Unsat,
    })
}

/// Magnitude bound on some solution of `C y ≤ d` if any exists, from the
/// standard-form translation `[C, -C, I](p, q, s) = d`.
fn solution_bound(rows: &[(Vec<BigInt>, BigInt)], k: usize) -> BigInt {
    let m = rows.len();
    let mut a = BigInt::one();
    for (r, d) in rows {
        for v in r.iter().chain(std::iter::once(d)) {
            if v.abs() > a {
                a = v.abs();
            }
        }
    }
    let n_std = BigInt::from(2 * k + m);
    let base = BigInt::from(m) * a;
    n_std * num_traits::pow(base, 2 * m + 1)
}

fn branch_and_bound(
    rows: &[(Vec<BigInt>, BigInt)],
    k: usize,
    node_budget: u64,
    cancel: Option<&AtomicBool>,
) -> Result<Option<Vec<BigInt>>, IlpError> {
    let bound = solution_bound(rows, k);
    let mut nodes = 0u64;
    // Small boxes first: vertices of the full box sit at astronomical
    // magnitudes, where depth-first branching rarely closes.
    for r in [4u32, 64, 4096] {
        let r = BigInt::from(r);
        if r >= bound {
            break;
        }
        let share = node_budget / 16;
        let cap = nodes + share;
        match search_box(rows, vec![-r.clone(); k], vec![r; k], &mut nodes, cap, cancel) {
            Ok(Some(y)) => return Ok(Some(y)),
            Ok(None) | Err(IlpError::ResourceLimit(_)) => {}
            Err(e) => return Err(e),
        }
    }
    match search_box(rows, vec![-bound.clone(); k], vec![bound; k], &mut nodes, node_budget, cancel) {
        Err(IlpError::ResourceLimit(_)) => Err(IlpError::ResourceLimit(node_budget)),
        other => other,
    }
}

fn search_box(
    rows: &[(Vec<BigInt>, BigInt)],
    lo: Vec<BigInt>,
    hi: Vec<BigInt>,
    nodes: &mut u64,
    node_budget: u64,
    cancel: Option<&AtomicBool>,
) -> Result<Option<Vec<BigInt>>, IlpError> {
    let mut stack: Vec<(Vec<BigInt>, Vec<BigInt>)> = vec![(lo, hi)];
    while let Some((lo, hi)) = stack.pop() {
        *nodes += 1;
        if *nodes > node_budget {
            return Err(IlpError::ResourceLimit(node_budget));
        }
        if *nodes % 64 == 0 {
            if let Some(flag) = cancel {
                if flag.load(Ordering::Relaxed) {
                    return Err(IlpError::Cancelled);
                }
            }
        }
        let Some(sol) = lp_feasible(rows, &lo, &hi) else { continue };
        match sol.iter().position(|v| !v.is_integer()) {
            None => return Ok(Some(sol.iter().map(|v| v.to_integer()).collect())),
            Some(i) => {
                let fl = sol[i].floor().to_integer();
                let mut hi_left = hi.clone();
                hi_left[i] = fl.clone();
                let mut lo_right = lo.clone();
                lo_right[i] = fl + 1;
                // explore the floor side first
                stack.push((lo_right, hi));
                stack.push((lo, hi_left));
            }
        }
    }
    Ok(None)
}

/// Rational feasibility of `C y ≤ d, lo ≤ y ≤ hi`; returns a vertex.
fn lp_feasible(
    rows: &[(Vec<BigInt>, BigInt)],
    lo: &[BigInt],
    hi: &[BigInt],
) -> Option<Vec<BigRational>> {
    let k = lo.len();
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return None;
    }
    // y = lo + w, w >= 0
    let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(rows.len() + k);
    let mut b: Vec<BigInt> = Vec::with_capacity(rows.len() + k);
    for (r, d) in rows {
        a.push(r.clone());
        b.push(d - dot(r, lo));
    }
    for i in 0..k {
        let mut r = vec![BigInt::zero(); k];
        r[i] = BigInt::one();
        a.push(r);
        b.push(&hi[i] - &lo[i]);
    }
    let w = simplex_phase1(&a, &b)?;
    Some(w.into_iter().zip(lo).map(|(wi, l)| wi + BigRational::from_integer(l.clone())).collect())
}

/// Finds `w ≥ 0` with `A w ≤ b` by phase-one simplex (Bland's rule).
fn simplex_phase1(a: &[Vec<BigInt>], b: &[BigInt]) -> Option<Vec<BigRational>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let neg: Vec<usize> = (0..m).filter(|&i| b[i].is_negative()).collect();
    if neg.is_empty() {
        return Some(vec![BigRational::zero(); n]);
    }
    // columns: w (n), slacks (m), artificials (|neg|)
    let cols = n + m + neg.len();
    let zero = BigRational::zero();
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut rhs: Vec<BigRational> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut art = 0;
    for i in 0..m {
        let mut row = vec![zero.clone(); cols];
        let flip = b[i].is_negative();
        for j in 0..n {
            let v = BigRational::from_integer(a[i][j].clone());
            row[j] = if flip { -v } else { v };
        }
        row[n + i] = if flip { -BigRational::one() } else { BigRational::one() };
        let r = BigRational::from_integer(b[i].clone());
        if flip {
            row[n + m + art] = BigRational::one();
            basis.push(n + m + art);
            art += 1;
            rhs.push(-r);
        } else {
            basis.push(n + i);
            rhs.push(r);
        }
        t.push(row);
    }
    // objective: minimize sum of artificials; reduced costs c_j - c_B B^-1 A_j
    let mut cost = vec![zero.clone(); cols];
    let mut obj = zero.clone();
    for (i, &bi) in basis.iter().enumerate() {
        if bi >= n + m {
            for j in 0..cols {
                cost[j] -= &t[i][j];
            }
            obj -= &rhs[i];
        }
    }
    for j in n + m..cols {
        cost[j] += BigRational::one();
    }
    loop {
        let Some(enter) = (0..cols).find(|&j| cost[j].is_negative()) else { break };
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &rhs[i] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // phase one is bounded below by 0, so a pivot row always exists
        let (r, _) = leave.expect("phase one is bounded");
        let piv = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v /= &piv;
        }
        rhs[r] /= &piv;
        let prow = t[r].clone();
        let prhs = rhs[r].clone();
        for i in 0..m {
            if i != r && !t[i][enter].is_zero() {
                let f = t[i][enter].clone();
                for (v, p) in t[i].iter_mut().zip(&prow) {
                    if !p.is_zero() {
                        *v -= &f * p;
                    }
                }
                rhs[i] -= &f * &prhs;
            }
        }
        if !cost[enter].is_zero() {
            let f = cost[enter].clone();
            for (v, p) in cost.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            obj -= &f * &prhs;
        }
        basis[r] = enter;
    }
    // obj holds -(sum of artificials)
    if !obj.is_zero() {
        return None;
    }
    let mut w = vec![zero; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            w[bi] = rhs[i].clone();
        }
    }
    Some(w)
}
