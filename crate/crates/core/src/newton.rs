//! Polynomial fixpoint systems over semi-linear sets, solved by Newton's
//! method (NPA) with an exact linear solver by semiring Gaussian
//! elimination.

use std::fmt;

use crate::ilp::{IlpError, Oracle};
use crate::semilinear::SemiLinearSet;

/// `coeff ⊗ Y_{vars[0]} ⊗ Y_{vars[1]} ⊗ …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlMonomial {
    pub coeff: SemiLinearSet,
    pub vars: Vec<usize>,
}

impl SlMonomial {
    pub fn constant(coeff: SemiLinearSet) -> Self {
        SlMonomial { coeff, vars: Vec::new() }
    }

    /// Value at a valuation.
    pub fn eval(&self, nu: &[SemiLinearSet]) -> SemiLinearSet {
        let mut acc = self.coeff.clone();
        for v in &self.vars {
            if acc.is_zero() {
                break;
            }
            acc = acc.extend(&nu[*v]);
        }
        acc
    }
}

/// `Y_i = ⊕ monomials` for each variable `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlPolySystem {
    pub names: Vec<String>,
    pub dim: usize,
    pub eqs: Vec<Vec<SlMonomial>>,
}

impl SlPolySystem {
    pub fn new(dim: usize) -> Self {
        SlPolySystem { names: Vec::new(), dim, eqs: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.eqs.push(Vec::new());
        self.names.len() - 1
    }

    pub fn push(&mut self, var: usize, m: SlMonomial) {
        assert_eq!(m.coeff.dim(), self.dim, "monomial dimension");
        self.eqs[var].push(m);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Stable algebraic text, one equation per line.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SlPolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, eq) in self.eqs.iter().enumerate() {
            write!(f, "{} = ", self.names[i])?;
            if eq.is_empty() {
                write!(f, "{}", SemiLinearSet::zero(self.dim))?;
            }
            for (k, m) in eq.iter().enumerate() {
                if k > 0 {
                    write!(f, " ⊕ ")?;
                }
                write!(f, "{}", m.coeff)?;
                for v in &m.vars {
                    write!(f, " ⊗ {}", self.names[*v])?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn tidy(s: SemiLinearSet, oracle: &dyn Oracle, prune: bool) -> SemiLinearSet {
    if prune {
        s.prune(oracle)
    } else {
        s
    }
}

fn check_cancel(oracle: &dyn Oracle) -> Result<(), IlpError> {
    if oracle.cancelled() {
        Err(IlpError::Cancelled)
    } else {
        Ok(())
    }
}

/// `∂m/∂Y_wrt` at `at`: the ⊕ over occurrences of `wrt` of the monomial with
/// that occurrence removed and every other factor evaluated.
pub fn derivative(m: &SlMonomial, wrt: usize, at: &[SemiLinearSet]) -> SemiLinearSet {
    let mut acc = SemiLinearSet::zero(m.coeff.dim());
    for (p, v) in m.vars.iter().enumerate() {
        if *v != wrt {
            continue;
        }
        let mut term = m.coeff.clone();
        for (q, w) in m.vars.iter().enumerate() {
            if q != p {
                term = term.extend(&at[*w]);
            }
        }
        acc = acc.combine(&term);
    }
    acc
}

/// `Y_i = ⊕_j A_ij ⊗ Y_j ⊕ c_i`. Missing coefficients are `𝟎`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub dim: usize,
    pub coeffs: Vec<Vec<Option<SemiLinearSet>>>,
    pub consts: Vec<SemiLinearSet>,
}

impl LinearSystem {
    pub fn new(dim: usize, n: usize) -> Self {
        LinearSystem {
            dim,
            coeffs: vec![vec![None; n]; n],
            consts: vec![SemiLinearSet::zero(dim); n],
        }
    }

    pub fn set(&mut self, i: usize, j: usize, a: SemiLinearSet) {
        self.coeffs[i][j] = if a.is_zero() { None } else { Some(a) };
    }
}

fn add_opt(a: Option<SemiLinearSet>, b: SemiLinearSet) -> Option<SemiLinearSet> {
    match a {
        _ if b.is_zero() => a,
        Some(a) => Some(a.combine(&b)),
        None => Some(b),
    }
}

/// Least solution of a linear system, by elimination with `Y_k = A_kk⊛ ⊗ (…)`
/// and back-substitution. Variables with the fewest occurrences go first.
pub fn solve_linear(
    sys: &LinearSystem,
    oracle: &dyn Oracle,
    prune: bool,
) -> Result<Vec<SemiLinearSet>, IlpError> {
    let n = sys.consts.len();
    let mut a = sys.coeffs.clone();
    let mut c = sys.consts.clone();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        check_cancel(oracle)?;
        let k = (0..n)
            .filter(|&k| alive[k])
            .min_by_key(|&k| (0..n).filter(|&i| alive[i] && i != k && a[i][k].is_some()).count())
            .expect("some variable alive");
        let s = match a[k][k].take() {
            Some(self_loop) => self_loop.star(),
            None => SemiLinearSet::one(sys.dim),
        };
        for j in 0..n {
            if let Some(x) = a[k][j].take() {
                a[k][j] = Some(tidy(s.extend(&x), oracle, prune));
            }
        }
        c[k] = tidy(s.extend(&c[k]), oracle, prune);
        alive[k] = false;
        order.push(k);
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let Some(f) = a[i][k].take() else { continue };
            for j in 0..n {
                if !alive[j] {
                    continue;
                }
                if let Some(x) = &a[k][j] {
                    let prod = f.extend(x);
                    let merged = add_opt(a[i][j].take(), prod);
                    a[i][j] = merged.map(|m| tidy(m, oracle, prune));
                }
            }
            c[i] = tidy(c[i].combine(&f.extend(&c[k])), oracle, prune);
        }
    }
    let mut y: Vec<Option<SemiLinearSet>> = vec![None; n];
    for &k in order.iter().rev() {
        let mut val = c[k].clone();
        for (j, x) in a[k].iter().enumerate() {
            if let (Some(x), Some(yj)) = (x, &y[j]) {
                val = val.combine(&x.extend(yj));
            }
        }
        y[k] = Some(tidy(val, oracle, prune));
    }
    Ok(y.into_iter().map(|v| v.expect("solved")).collect())
}

/// `F(ν)`: every equation's right-hand side evaluated at `nu`.
pub fn eval_system(sys: &SlPolySystem, nu: &[SemiLinearSet]) -> Vec<SemiLinearSet> {
    sys.eqs
        .iter()
        .map(|eq| {
            eq.iter()
                .fold(SemiLinearSet::zero(sys.dim), |acc, m| acc.combine(&m.eval(nu)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NewtonOptions {
    /// Prune after every ⊕.
    pub prune: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { prune: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonResult {
    pub values: Vec<SemiLinearSet>,
    /// Newton steps taken; at most the number of variables.
    pub iterations: usize,
}

/// `ν ⊕ (DF|_ν)⊛(F(ν))`.
pub fn newton_step(
    sys: &SlPolySystem,
    nu: &[SemiLinearSet],
    oracle: &dyn Oracle,
    opts: NewtonOptions,
) -> Result<Vec<SemiLinearSet>, IlpError> {
    let n = sys.len();
    let fnu: Vec<SemiLinearSet> =
        eval_system(sys, nu).into_iter().map(|s| tidy(s, oracle, opts.prune)).collect();
    let mut lin = LinearSystem::new(sys.dim, n);
    lin.consts = fnu;
    for (i, eq) in sys.eqs.iter().enumerate() {
        for m in eq {
            let mut vars = m.vars.clone();
            vars.sort_unstable();
            vars.dedup();
            for j in vars {
                let d = derivative(m, j, nu);
                let merged = add_opt(lin.coeffs[i][j].take(), d);
                lin.coeffs[i][j] = merged;
            }
        }
    }
    for row in &mut lin.coeffs {
        for x in row.iter_mut() {
            if let Some(v) = x.take() {
                *x = Some(tidy(v, oracle, opts.prune));
            }
        }
    }
    let delta = solve_linear(&lin, oracle, opts.prune)?;
    Ok(nu
        .iter()
        .zip(delta)
        .map(|(a, d)| tidy(a.combine(&d), oracle, opts.prune))
        .collect())
}

/// Least fixpoint by NPA: `ν⁰ = F(𝟎)`, then at most `|N|` Newton steps. Stops
/// early when a step leaves the valuation unchanged.
pub fn npa_solve(
    sys: &SlPolySystem,
    oracle: &dyn Oracle,
    opts: NewtonOptions,
) -> Result<NewtonResult, IlpError> {
    let n = sys.len();
    let zeros = vec![SemiLinearSet::zero(sys.dim); n];
    let mut nu: Vec<SemiLinearSet> =
        eval_system(sys, &zeros).into_iter().map(|s| tidy(s, oracle, opts.prune)).collect();
    let mut iterations = 0;
    for _ in 0..n {
        check_cancel(oracle)?;
        let next = newton_step(sys, &nu, oracle, opts)?;
        iterations += 1;
        if log::log_enabled!(log::Level::Trace) {
            for (name, v) in sys.names.iter().zip(&next) {
                log::trace!("newton {iterations}: {name} = {v}");
            }
        }
        if next == nu {
            break;
        }
        nu = next;
    }
    Ok(NewtonResult { values: nu, iterations })
}

/// Plain Kleene iteration `ν ← F(ν)` from `𝟎`, pruned each round. Returns
/// `None` if no syntactic fixpoint appears within `max_iters` rounds.
pub fn kleene_solve(
    sys: &SlPolySystem,
    max_iters: usize,
    oracle: &dyn Oracle,
) -> Option<Vec<SemiLinearSet>> {
    let mut nu = vec![SemiLinearSet::zero(sys.dim); sys.len()];
    for _ in 0..max_iters {
        let next: Vec<SemiLinearSet> = eval_system(sys, &nu)
            .into_iter()
            .zip(&nu)
            .map(|(s, old)| s.combine(old).prune(oracle))
            .collect();
        if next == nu {
            return Some(nu);
        }
        nu = next;
    }
    None
}
