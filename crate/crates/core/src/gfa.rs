//! Grammar flow analysis: one equation per nonterminal over the abstract
//! domain, and the stratification of those equations by dependence SCCs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::booldom::BoolVecSet;
use crate::grammar::{Arg, ExampleError, ExampleSet, NtId, Rhs, Rtg, Sort, Symbol};
use crate::semilinear::SemiLinearSet;

/// A value of the two-sorted domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbsValue {
    Sl(SemiLinearSet),
    Bools(BoolVecSet),
}

impl AbsValue {
    pub fn bottom(sort: Sort, dim: usize) -> AbsValue {
        match sort {
            Sort::Int => AbsValue::Sl(SemiLinearSet::zero(dim)),
            Sort::Bool => AbsValue::Bools(BoolVecSet::empty()),
        }
    }

    pub fn as_sl(&self) -> &SemiLinearSet {
        match self {
            AbsValue::Sl(s) => s,
            AbsValue::Bools(_) => panic!("expected an integer value"),
        }
    }

    pub fn as_bools(&self) -> &BoolVecSet {
        match self {
            AbsValue::Bools(b) => b,
            AbsValue::Sl(_) => panic!("expected a Boolean value"),
        }
    }
}

impl fmt::Display for AbsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsValue::Sl(s) => write!(f, "{s}"),
            AbsValue::Bools(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(NtId),
    Const(AbsValue),
}

/// Interpreted operator of a monomial. `Id` passes its single operand
/// through (chain productions and leaf productions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Id,
    Plus,
    Ite,
    LessThan,
    And,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub op: Op,
    pub args: Vec<Operand>,
}

impl Monomial {
    pub fn vars(&self) -> impl Iterator<Item = NtId> + '_ {
        self.args.iter().filter_map(|a| match a {
            Operand::Var(y) => Some(*y),
            Operand::Const(_) => None,
        })
    }
}

/// `n(X) = ⊕ monomials` for every nonterminal `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialSystem {
    pub names: Vec<String>,
    pub sorts: Vec<Sort>,
    pub dim: usize,
    pub start: NtId,
    pub eqs: Vec<Vec<Monomial>>,
}

impl PolynomialSystem {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<NtId> {
        self.names.iter().position(|n| n == name).map(NtId)
    }

    pub fn ids(&self) -> impl Iterator<Item = NtId> {
        (0..self.names.len()).map(NtId)
    }

    pub fn has_ite(&self) -> bool {
        self.eqs.iter().flatten().any(|m| m.op == Op::Ite)
    }

    pub fn dump(&self) -> String {
        self.to_string()
    }

    fn operand(&self, a: &Operand) -> String {
        match a {
            Operand::Var(y) => self.names[y.0].clone(),
            Operand::Const(v) => v.to_string(),
        }
    }
}

impl fmt::Display for PolynomialSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, eq) in self.eqs.iter().enumerate() {
            let terms: Vec<String> = eq
                .iter()
                .map(|m| {
                    let args: Vec<String> = m.args.iter().map(|a| self.operand(a)).collect();
                    match m.op {
                        Op::Id => args[0].clone(),
                        Op::Plus => args.join(" ⊗ "),
                        Op::Ite => format!("IfThenElse({})", args.join(", ")),
                        Op::LessThan => format!("LessThan({})", args.join(", ")),
                        Op::And => format!("And({})", args.join(", ")),
                        Op::Not => format!("Not({})", args.join(", ")),
                    }
                })
                .collect();
            let rhs = if terms.is_empty() {
                AbsValue::bottom(self.sorts[i], self.dim).to_string()
            } else {
                terms.join(" ⊕ ")
            };
            writeln!(f, "{} = {rhs}", self.names[i])?;
        }
        Ok(())
    }
}

/// Which abstract domain interprets the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    SemiLinear,
    Predicates,
}

#[derive(Debug, Clone)]
pub struct GfaProblem {
    pub grammar: Rtg,
    pub examples: ExampleSet,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GfaError {
    #[error("{0} is not supported by the semi-linear domain")]
    Unsupported(Symbol),
    #[error("grammar still contains Minus; rewrite it to plus form first")]
    NotPlusForm,
    #[error(transparent)]
    Examples(#[from] ExampleError),
}

/// `⟦c⟧̂_E` for a 0-ary symbol.
pub fn leaf_value(s: &Symbol, e: &ExampleSet) -> Result<SemiLinearSet, GfaError> {
    Ok(match s {
        Symbol::Num(c) => SemiLinearSet::point(vec![c.clone(); e.dim()]),
        Symbol::Var(x) => SemiLinearSet::point(e.var_vector(x)?),
        Symbol::NegVar(x) => SemiLinearSet::point(e.var_vector(x)?.into_iter().map(|v| -v).collect()),
        other => return Err(GfaError::Unsupported(other.clone())),
    })
}

/// Builds `n(X) = ⊕_{X→g(X₁…X_k)} ⟦g⟧̂(n(X₁),…,n(X_k))` for a plus-form grammar.
pub fn build_equations(p: &GfaProblem) -> Result<PolynomialSystem, GfaError> {
    let g = &p.grammar;
    let e = &p.examples;
    let mut eqs = vec![Vec::new(); g.len()];
    let operand = |a: &Arg| -> Result<Operand, GfaError> {
        match a {
            Arg::Nt(y) => Ok(Operand::Var(*y)),
            Arg::Leaf(s) => Ok(Operand::Const(AbsValue::Sl(leaf_value(s, e)?))),
        }
    };
    for prod in &g.productions {
        let m = match &prod.rhs {
            Rhs::Chain(y) => Monomial { op: Op::Id, args: vec![Operand::Var(*y)] },
            Rhs::Apply { symbol, args } => {
                let op = match symbol {
                    Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => {
                        let v = leaf_value(symbol, e)?;
                        eqs[prod.lhs.0].push(Monomial { op: Op::Id, args: vec![Operand::Const(AbsValue::Sl(v))] });
                        continue;
                    }
                    Symbol::Plus => Op::Plus,
                    Symbol::IfThenElse => Op::Ite,
                    Symbol::LessThan => Op::LessThan,
                    Symbol::And => Op::And,
                    Symbol::Not => Op::Not,
                    Symbol::Minus => return Err(GfaError::NotPlusForm),
                    Symbol::Succ | Symbol::Double => return Err(GfaError::Unsupported(symbol.clone())),
                };
                let args = args.iter().map(operand).collect::<Result<Vec<_>, _>>()?;
                Monomial { op, args }
            }
        };
        eqs[prod.lhs.0].push(m);
    }
    Ok(PolynomialSystem {
        names: g.nonterminals.iter().map(|n| n.name.clone()).collect(),
        sorts: g.nonterminals.iter().map(|n| n.sort).collect(),
        dim: e.dim(),
        start: g.start,
        eqs,
    })
}

/// Successor lists of the dependence graph: `Y → X` whenever `Y` occurs in
/// the equation of `X`.
fn dependence_graph(sys: &PolynomialSystem) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); sys.len()];
    for (x, eq) in sys.eqs.iter().enumerate() {
        for m in eq {
            for y in m.vars() {
                if !succ[y.0].contains(&x) {
                    succ[y.0].push(x);
                }
            }
        }
    }
    succ
}

struct Tarjan<'a> {
    succ: &'a [Vec<usize>],
    index: Vec<Option<usize>>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    next: usize,
    comps: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.index[v] = Some(self.next);
        self.low[v] = self.next;
        self.next += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
        for k in 0..self.succ[v].len() {
            let w = self.succ[v][k];
            match self.index[w] {
                None => {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(self.low[v]) == self.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = self.stack.pop().expect("non-empty");
                self.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            self.comps.push(comp);
        }
    }
}

/// SCCs of the dependence graph in topological order; among ready strata the
/// one with the smallest nonterminal id goes first.
pub fn stratify(sys: &PolynomialSystem) -> Vec<Vec<NtId>> {
    let n = sys.len();
    let succ = dependence_graph(sys);
    let mut t = Tarjan {
        succ: &succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comps: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    let comps = t.comps;
    let mut comp_of = vec![0; n];
    for (c, vs) in comps.iter().enumerate() {
        for v in vs {
            comp_of[*v] = c;
        }
    }
    let mut indeg = vec![0usize; comps.len()];
    let mut csucc: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for v in 0..n {
        for w in &succ[v] {
            let (a, b) = (comp_of[v], comp_of[*w]);
            if a != b && !csucc[a].contains(&b) {
                csucc[a].push(b);
                indeg[b] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    for (c, vs) in comps.iter().enumerate() {
        if indeg[c] == 0 {
            ready.push(Reverse((vs[0], c)));
        }
    }
    let mut out = Vec::with_capacity(comps.len());
    while let Some(Reverse((_, c))) = ready.pop() {
        out.push(comps[c].iter().map(|v| NtId(*v)).collect());
        for &d in &csucc[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(Reverse((comps[d][0], d)));
            }
        }
    }
    out
}
