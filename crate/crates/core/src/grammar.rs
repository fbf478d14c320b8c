//! Ranked alphabets, regular tree grammars, expression trees and their
//! evaluation on a finite set of example inputs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::booldom::BoolVec;

/// Result sort of a symbol or nonterminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "Int"),
            Sort::Bool => write!(f, "Bool"),
        }
    }
}

/// A symbol of the ranked alphabet.
///
/// `Succ` and `Double` are unary integer extensions (x+1 and 2x). They are
/// only understood by the predicate-abstraction backend.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Plus,
    Minus,
    Num(BigInt),
    Var(String),
    NegVar(String),
    IfThenElse,
    And,
    Not,
    LessThan,
    Succ,
    Double,
}

const INT2: &[Sort] = &[Sort::Int, Sort::Int];
const BOOL2: &[Sort] = &[Sort::Bool, Sort::Bool];
const ITE: &[Sort] = &[Sort::Bool, Sort::Int, Sort::Int];

impl Symbol {
    /// Fixed rank of the symbol. `Plus` is binary in a validated grammar;
    /// surface grammars may use it with more arguments.
    pub fn rank(&self) -> usize {
        match self {
            Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => 0,
            Symbol::Not | Symbol::Succ | Symbol::Double => 1,
            Symbol::Plus | Symbol::Minus | Symbol::And | Symbol::LessThan => 2,
            Symbol::IfThenElse => 3,
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Symbol::And | Symbol::Not | Symbol::LessThan => Sort::Bool,
            _ => Sort::Int,
        }
    }

    /// Sort of argument `i`. For n-ary `Plus` every argument is `Int`.
    pub fn arg_sort(&self, i: usize) -> Sort {
        match self {
            Symbol::Plus | Symbol::Minus | Symbol::LessThan | Symbol::Succ | Symbol::Double => {
                Sort::Int
            }
            Symbol::And | Symbol::Not => Sort::Bool,
            Symbol::IfThenElse => ITE[i],
            Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => Sort::Int,
        }
    }

    pub fn arg_sorts(&self) -> &'static [Sort] {
        match self {
            Symbol::Plus | Symbol::Minus | Symbol::LessThan => INT2,
            Symbol::Succ | Symbol::Double => &INT2[..1],
            Symbol::And => BOOL2,
            Symbol::Not => &BOOL2[..1],
            Symbol::IfThenElse => ITE,
            Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.rank() == 0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Plus => write!(f, "Plus"),
            Symbol::Minus => write!(f, "Minus"),
            Symbol::Num(c) => write!(f, "Num({c})"),
            Symbol::Var(x) => write!(f, "Var({x})"),
            Symbol::NegVar(x) => write!(f, "NegVar({x})"),
            Symbol::IfThenElse => write!(f, "IfThenElse"),
            Symbol::And => write!(f, "And"),
            Symbol::Not => write!(f, "Not"),
            Symbol::LessThan => write!(f, "LessThan"),
            Symbol::Succ => write!(f, "Succ"),
            Symbol::Double => write!(f, "Double"),
        }
    }
}

/// Index of a nonterminal inside its grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NtId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Nonterminal {
    pub name: String,
    pub sort: Sort,
}

/// Argument position of a production: either a nonterminal or an inline
/// 0-ary symbol such as `Var(x)` in `Plus(S2, Var(x))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arg {
    Nt(NtId),
    Leaf(Symbol),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rhs {
    Apply { symbol: Symbol, args: Vec<Arg> },
    /// Unit production `X ::= Y`.
    Chain(NtId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Production {
    pub lhs: NtId,
    pub rhs: Rhs,
}

impl Production {
    pub fn apply(lhs: NtId, symbol: Symbol, args: Vec<Arg>) -> Self {
        Production { lhs, rhs: Rhs::Apply { symbol, args } }
    }

    pub fn leaf(lhs: NtId, symbol: Symbol) -> Self {
        Production::apply(lhs, symbol, Vec::new())
    }

    pub fn chain(lhs: NtId, target: NtId) -> Self {
        Production { lhs, rhs: Rhs::Chain(target) }
    }

    /// Nonterminals referenced on the right-hand side, in argument order.
    pub fn rhs_nonterminals(&self) -> Vec<NtId> {
        match &self.rhs {
            Rhs::Chain(y) => vec![*y],
            Rhs::Apply { args, .. } => args
                .iter()
                .filter_map(|a| match a {
                    Arg::Nt(y) => Some(*y),
                    Arg::Leaf(_) => None,
                })
                .collect(),
        }
    }
}

/// A regular tree grammar `(N, Σ, S, δ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rtg {
    pub nonterminals: Vec<Nonterminal>,
    pub start: NtId,
    pub productions: Vec<Production>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    UndeclaredNonterminal { production: usize, id: NtId },
    BadArity { production: usize, symbol: Symbol, expected: usize, found: usize },
    SortMismatch { production: usize, expected: Sort, found: Sort, position: Option<usize> },
    LeafArgument { production: usize, symbol: Symbol },
    Unproductive { nonterminal: String },
    BadStart,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UndeclaredNonterminal { production, id } => {
                write!(f, "production {production}: undeclared nonterminal #{}", id.0)
            }
            Diagnostic::BadArity { production, symbol, expected, found } => write!(
                f,
                "production {production}: {symbol} expects {expected} arguments, found {found}"
            ),
            Diagnostic::SortMismatch { production, expected, found, position } => match position {
                Some(p) => write!(
                    f,
                    "production {production}: argument {p} has sort {found}, expected {expected}"
                ),
                None => write!(
                    f,
                    "production {production}: right-hand side has sort {found}, nonterminal is {expected}"
                ),
            },
            Diagnostic::LeafArgument { production, symbol } => {
                write!(f, "production {production}: {symbol} cannot be an inline argument")
            }
            Diagnostic::Unproductive { nonterminal } => {
                write!(f, "nonterminal {nonterminal} derives no finite tree")
            }
            Diagnostic::BadStart => write!(f, "start symbol is not a declared nonterminal"),
        }
    }
}

impl Rtg {
    pub fn new(nonterminals: Vec<Nonterminal>, start: NtId, productions: Vec<Production>) -> Self {
        Rtg { nonterminals, start, productions }
    }

    pub fn len(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nonterminals.is_empty()
    }

    pub fn name(&self, id: NtId) -> &str {
        &self.nonterminals[id.0].name
    }

    pub fn sort(&self, id: NtId) -> Sort {
        self.nonterminals[id.0].sort
    }

    pub fn lookup(&self, name: &str) -> Option<NtId> {
        self.nonterminals.iter().position(|n| n.name == name).map(NtId)
    }

    pub fn ids(&self) -> impl Iterator<Item = NtId> {
        (0..self.nonterminals.len()).map(NtId)
    }

    /// Productions with the given left-hand side, in declaration order.
    pub fn productions_of(&self, lhs: NtId) -> impl Iterator<Item = &Production> {
        self.productions.iter().filter(move |p| p.lhs == lhs)
    }

    /// Adds a nonterminal and returns its id.
    pub fn add_nonterminal(&mut self, name: impl Into<String>, sort: Sort) -> NtId {
        self.nonterminals.push(Nonterminal { name: name.into(), sort });
        NtId(self.nonterminals.len() - 1)
    }

    fn arg_sort(&self, arg: &Arg) -> Option<Sort> {
        match arg {
            Arg::Nt(y) => self.nonterminals.get(y.0).map(|n| n.sort),
            Arg::Leaf(s) => Some(s.sort()),
        }
    }

    /// Set of nonterminals deriving at least one finite tree.
    pub fn productive(&self) -> Vec<bool> {
        let mut productive = vec![false; self.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for p in &self.productions {
                if p.lhs.0 >= self.len() || productive[p.lhs.0] {
                    continue;
                }
                let ok = p
                    .rhs_nonterminals()
                    .iter()
                    .all(|y| y.0 < productive.len() && productive[y.0]);
                if ok {
                    productive[p.lhs.0] = true;
                    changed = true;
                }
            }
        }
        productive
    }

    /// Every diagnostic for this grammar; empty when the grammar is valid.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.start.0 >= self.len() {
            out.push(Diagnostic::BadStart);
        }
        for (i, p) in self.productions.iter().enumerate() {
            if p.lhs.0 >= self.len() {
                out.push(Diagnostic::UndeclaredNonterminal { production: i, id: p.lhs });
                continue;
            }
            let lhs_sort = self.sort(p.lhs);
            match &p.rhs {
                Rhs::Chain(y) => match self.nonterminals.get(y.0) {
                    None => out.push(Diagnostic::UndeclaredNonterminal { production: i, id: *y }),
                    Some(n) if n.sort != lhs_sort => out.push(Diagnostic::SortMismatch {
                        production: i,
                        expected: lhs_sort,
                        found: n.sort,
                        position: None,
                    }),
                    Some(_) => {}
                },
                Rhs::Apply { symbol, args } => {
                    if args.len() != symbol.rank() {
                        out.push(Diagnostic::BadArity {
                            production: i,
                            symbol: symbol.clone(),
                            expected: symbol.rank(),
                            found: args.len(),
                        });
                    }
                    if symbol.sort() != lhs_sort {
                        out.push(Diagnostic::SortMismatch {
                            production: i,
                            expected: lhs_sort,
                            found: symbol.sort(),
                            position: None,
                        });
                    }
                    for (k, a) in args.iter().enumerate() {
                        if let Arg::Leaf(s) = a {
                            if !s.is_leaf() {
                                out.push(Diagnostic::LeafArgument {
                                    production: i,
                                    symbol: s.clone(),
                                });
                                continue;
                            }
                        }
                        match self.arg_sort(a) {
                            None => {
                                if let Arg::Nt(y) = a {
                                    out.push(Diagnostic::UndeclaredNonterminal {
                                        production: i,
                                        id: *y,
                                    });
                                }
                            }
                            Some(found) => {
                                let expected = symbol.arg_sort(k.min(2));
                                if found != expected {
                                    out.push(Diagnostic::SortMismatch {
                                        production: i,
                                        expected,
                                        found,
                                        position: Some(k),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            for (i, ok) in self.productive().into_iter().enumerate() {
                if !ok {
                    out.push(Diagnostic::Unproductive {
                        nonterminal: self.nonterminals[i].name.clone(),
                    });
                }
            }
        }
        out
    }

    /// Returns the grammar unchanged when every invariant holds, otherwise
    /// every violated invariant.
    pub fn validate(self) -> Result<Rtg, Vec<Diagnostic>> {
        let diags = self.diagnostics();
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(diags)
        }
    }

    /// True when only unproductiveness is reported; such grammars are still
    /// usable, the offending nonterminals denote the empty language.
    pub fn only_unproductive(diags: &[Diagnostic]) -> bool {
        diags.iter().all(|d| matches!(d, Diagnostic::Unproductive { .. }))
    }

    /// Replaces every n-ary `Plus` (n > 2) with a right-associated chain of
    /// binary `Plus` productions over fresh nonterminals named `S1`, `S2`, ….
    ///
    /// `Start ::= Plus(x, x, x, Start)` becomes `Start ::= Plus(S1, Start)`,
    /// `S1 ::= Plus(S2, x)`, `S2 ::= Plus(S3, x)`, `S3 ::= x`.
    pub fn expand_nary(&self) -> Rtg {
        let mut out = Rtg {
            nonterminals: self.nonterminals.clone(),
            start: self.start,
            productions: Vec::with_capacity(self.productions.len()),
        };
        let mut taken: HashSet<String> = self.nonterminals.iter().map(|n| n.name.clone()).collect();
        let mut counter = 0usize;
        let mut fresh = |out: &mut Rtg| -> NtId {
            loop {
                counter += 1;
                let name = format!("S{counter}");
                if taken.insert(name.clone()) {
                    return out.add_nonterminal(name, Sort::Int);
                }
            }
        };
        let mut extra = Vec::new();
        for p in &self.productions {
            match &p.rhs {
                Rhs::Apply { symbol: Symbol::Plus, args } if args.len() > 2 => {
                    let n = args.len();
                    // chain[k] stands for the sum of the first n-1-k arguments
                    let chain: Vec<NtId> = (0..n - 2).map(|_| fresh(&mut out)).collect();
                    out.productions.push(Production::apply(
                        p.lhs,
                        Symbol::Plus,
                        vec![Arg::Nt(chain[0]), args[n - 1].clone()],
                    ));
                    for k in 0..n - 2 {
                        let prefix_len = n - 1 - k;
                        let lhs = chain[k];
                        if prefix_len == 2 {
                            let first = match &args[0] {
                                Arg::Nt(y) => Arg::Nt(*y),
                                Arg::Leaf(s) => {
                                    let id = fresh(&mut out);
                                    extra.push(Production::leaf(id, s.clone()));
                                    Arg::Nt(id)
                                }
                            };
                            extra.push(Production::apply(
                                lhs,
                                Symbol::Plus,
                                vec![first, args[1].clone()],
                            ));
                        } else {
                            extra.push(Production::apply(
                                lhs,
                                Symbol::Plus,
                                vec![Arg::Nt(chain[k + 1]), args[prefix_len - 1].clone()],
                            ));
                        }
                    }
                }
                _ => out.productions.push(p.clone()),
            }
        }
        out.productions.extend(extra);
        out
    }

    /// Whether any production uses the given symbol.
    pub fn uses(&self, pred: impl Fn(&Symbol) -> bool) -> bool {
        self.productions.iter().any(|p| match &p.rhs {
            Rhs::Apply { symbol, args } => {
                pred(symbol) || args.iter().any(|a| matches!(a, Arg::Leaf(s) if pred(s)))
            }
            Rhs::Chain(_) => false,
        })
    }

    /// Variables occurring in `Var`/`NegVar` leaves.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        let mut note = |s: &Symbol| {
            if let Symbol::Var(x) | Symbol::NegVar(x) = s {
                vars.insert(x.clone());
            }
        };
        for p in &self.productions {
            if let Rhs::Apply { symbol, args } = &p.rhs {
                note(symbol);
                for a in args {
                    if let Arg::Leaf(s) = a {
                        note(s);
                    }
                }
            }
        }
        vars
    }

    /// Yields every tree of `L(x)` of height at most `depth`, each once.
    /// Trees come out by increasing height; within a height, productions in
    /// declaration order and children left to right.
    pub fn enumerate_trees(&self, x: NtId, depth: usize) -> Vec<Term> {
        let by_height = self.trees_by_height(depth);
        let mut out = Vec::new();
        for level in by_height.iter().skip(1) {
            out.extend(level[x.0].iter().cloned());
        }
        out
    }

    /// `levels[h][X]` holds the trees of `L(X)` with height exactly `h`.
    fn trees_by_height(&self, depth: usize) -> Vec<Vec<Vec<Term>>> {
        let n = self.len();
        let mut levels: Vec<Vec<Vec<Term>>> = vec![vec![Vec::new(); n]];
        // upto[h][X]: trees of height <= h
        let mut upto: Vec<Vec<Vec<Term>>> = vec![vec![Vec::new(); n]];
        for h in 1..=depth {
            let mut level: Vec<Vec<Term>> = vec![Vec::new(); n];
            let mut seen: Vec<HashSet<Term>> = vec![HashSet::new(); n];
            for p in &self.productions {
                let Rhs::Apply { symbol, args } = &p.rhs else { continue };
                for t in self.combine_children(symbol, args, h, &levels, &upto) {
                    if seen[p.lhs.0].insert(t.clone()) {
                        level[p.lhs.0].push(t);
                    }
                }
            }
            // unit productions copy trees of the same height; iterate to a fixpoint
            let mut changed = true;
            while changed {
                changed = false;
                for p in &self.productions {
                    let Rhs::Chain(y) = p.rhs else { continue };
                    let from = level[y.0].clone();
                    for t in from {
                        if seen[p.lhs.0].insert(t.clone()) {
                            level[p.lhs.0].push(t);
                            changed = true;
                        }
                    }
                }
            }
            let mut all = upto[h - 1].clone();
            for (x, ts) in level.iter().enumerate() {
                all[x].extend(ts.iter().cloned());
            }
            levels.push(level);
            upto.push(all);
        }
        levels
    }

    /// Trees `symbol(t1..tk)` of height exactly `h`: every child has height
    /// at most `h-1` and at least one has height exactly `h-1`.
    fn combine_children(
        &self,
        symbol: &Symbol,
        args: &[Arg],
        h: usize,
        levels: &[Vec<Vec<Term>>],
        upto: &[Vec<Vec<Term>>],
    ) -> Vec<Term> {
        if args.is_empty() {
            return if h == 1 { vec![Term::leaf(symbol.clone())] } else { Vec::new() };
        }
        if h < 2 {
            return Vec::new();
        }
        // choices[i] = (trees of height <= h-1, trees of height exactly h-1)
        let choices: Vec<(Vec<Term>, Vec<Term>)> = args
            .iter()
            .map(|a| match a {
                Arg::Leaf(s) => {
                    let t = Term::leaf(s.clone());
                    let exact = if h - 1 == 1 { vec![t.clone()] } else { Vec::new() };
                    (vec![t], exact)
                }
                Arg::Nt(y) => (upto[h - 1][y.0].clone(), levels[h - 1][y.0].clone()),
            })
            .collect();
        let mut out = Vec::new();
        let k = args.len();
        // Cartesian product, keeping combinations with at least one child of
        // height h-1. Each combination is generated once by tagging the first
        // position holding a maximal-height child.
        for first_max in 0..k {
            let mut pools: Vec<&[Term]> = Vec::with_capacity(k);
            let mut below: Vec<Vec<Term>> = Vec::with_capacity(k);
            for (i, (all, exact)) in choices.iter().enumerate() {
                if i < first_max {
                    let exact_set: HashSet<&Term> = exact.iter().collect();
                    below.push(all.iter().filter(|t| !exact_set.contains(t)).cloned().collect());
                } else {
                    below.push(Vec::new());
                }
                let _ = all;
            }
            for (i, (all, exact)) in choices.iter().enumerate() {
                if i < first_max {
                    pools.push(&below[i]);
                } else if i == first_max {
                    pools.push(exact);
                } else {
                    pools.push(all);
                }
            }
            if pools.iter().any(|p| p.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; k];
            loop {
                let children = (0..k).map(|i| pools[i][idx[i]].clone()).collect();
                out.push(Term { symbol: symbol.clone(), children });
                let mut i = k;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    idx[i] += 1;
                    if idx[i] < pools[i].len() {
                        break;
                    }
                    idx[i] = 0;
                    if i == 0 {
                        i = usize::MAX;
                        break;
                    }
                }
                if i == usize::MAX || (i == 0 && idx[0] == 0) {
                    break;
                }
            }
        }
        out
    }
}

impl fmt::Display for Rtg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in self.ids() {
            let alts: Vec<String> = self
                .productions_of(x)
                .map(|p| match &p.rhs {
                    Rhs::Chain(y) => self.name(*y).to_string(),
                    Rhs::Apply { symbol, args } if args.is_empty() => symbol.to_string(),
                    Rhs::Apply { symbol, args } => {
                        let args: Vec<String> = args
                            .iter()
                            .map(|a| match a {
                                Arg::Nt(y) => self.name(*y).to_string(),
                                Arg::Leaf(s) => s.to_string(),
                            })
                            .collect();
                        format!("{symbol}({})", args.join(", "))
                    }
                })
                .collect();
            writeln!(f, "{} ::= {}", self.name(x), alts.join(" | "))?;
        }
        Ok(())
    }
}

/// An expression tree over the ranked alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub symbol: Symbol,
    pub children: Vec<Term>,
}

impl Term {
    pub fn leaf(symbol: Symbol) -> Self {
        Term { symbol, children: Vec::new() }
    }

    pub fn node(symbol: Symbol, children: Vec<Term>) -> Self {
        Term { symbol, children }
    }

    pub fn num(c: i64) -> Self {
        Term::leaf(Symbol::Num(BigInt::from(c)))
    }

    pub fn var(x: &str) -> Self {
        Term::leaf(Symbol::Var(x.to_string()))
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Term::height).max().unwrap_or(0)
    }

    /// Node count.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Term::size).sum::<usize>()
    }

    pub fn sort(&self) -> Sort {
        self.symbol.sort()
    }

    /// Well-ranked and well-sorted, recursively. `Plus` may be n-ary.
    pub fn well_formed(&self) -> bool {
        let arity_ok = match self.symbol {
            Symbol::Plus => self.children.len() >= 2,
            _ => self.children.len() == self.symbol.rank(),
        };
        arity_ok
            && self
                .children
                .iter()
                .enumerate()
                .all(|(i, c)| c.sort() == self.symbol.arg_sort(i.min(2)) && c.well_formed())
    }

    /// Renders the term as an SMT-LIB style s-expression.
    pub fn to_sexpr(&self) -> String {
        let head = match &self.symbol {
            Symbol::Num(c) if c.sign() == num_bigint::Sign::Minus => return format!("(- {})", -c),
            Symbol::Num(c) => return c.to_string(),
            Symbol::Var(x) => return x.clone(),
            Symbol::NegVar(x) => return format!("(- {x})"),
            Symbol::Plus => "+",
            Symbol::Minus => "-",
            Symbol::IfThenElse => "ite",
            Symbol::And => "and",
            Symbol::Not => "not",
            Symbol::LessThan => "<",
            Symbol::Succ => "succ",
            Symbol::Double => "double",
        };
        let kids: Vec<String> = self.children.iter().map(Term::to_sexpr).collect();
        format!("({head} {})", kids.join(" "))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return write!(f, "{}", self.symbol);
        }
        write!(f, "{}(", self.symbol)?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// An ordered list of input valuations `E = ⟨i_1, …, i_n⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExampleSet {
    vars: Vec<String>,
    inputs: Vec<Vec<BigInt>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExampleError {
    #[error("example {index} binds {found} values, expected {expected}")]
    Width { index: usize, expected: usize, found: usize },
    #[error("an example set needs at least one input")]
    Empty,
    #[error("unbound variable {0}")]
    Unbound(String),
}

impl ExampleSet {
    pub fn new(vars: Vec<String>, inputs: Vec<Vec<BigInt>>) -> Result<Self, ExampleError> {
        if inputs.is_empty() {
            return Err(ExampleError::Empty);
        }
        for (index, i) in inputs.iter().enumerate() {
            if i.len() != vars.len() {
                return Err(ExampleError::Width { index, expected: vars.len(), found: i.len() });
            }
        }
        Ok(ExampleSet { vars, inputs })
    }

    /// Single-variable example set, e.g. `E = {1, 2}` over `x`.
    pub fn over(var: &str, values: &[i64]) -> Self {
        ExampleSet::new(
            vec![var.to_string()],
            values.iter().map(|v| vec![BigInt::from(*v)]).collect(),
        )
        .expect("non-empty")
    }

    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn inputs(&self) -> &[Vec<BigInt>] {
        &self.inputs
    }

    pub fn input(&self, j: usize) -> BTreeMap<String, BigInt> {
        self.vars.iter().cloned().zip(self.inputs[j].iter().cloned()).collect()
    }

    /// `μ_E(x)`: the vector of values bound to `x` across the examples.
    pub fn var_vector(&self, x: &str) -> Result<Vec<BigInt>, ExampleError> {
        let k = self
            .vars
            .iter()
            .position(|v| v == x)
            .ok_or_else(|| ExampleError::Unbound(x.to_string()))?;
        Ok(self.inputs.iter().map(|i| i[k].clone()).collect())
    }

    /// Appends inputs, returning a new set.
    pub fn extended(&self, more: &[Vec<BigInt>]) -> ExampleSet {
        let mut inputs = self.inputs.clone();
        inputs.extend(more.iter().cloned());
        ExampleSet { vars: self.vars.clone(), inputs }
    }

    pub fn contains(&self, input: &[BigInt]) -> bool {
        self.inputs.iter().any(|i| i.as_slice() == input)
    }
}

/// Output of a term on every example.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(Vec<BigInt>),
    Bool(BoolVec),
}

impl Value {
    pub fn as_int(&self) -> Option<&[BigInt]> {
        match self {
            Value::Int(v) => Some(v),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<&BoolVec> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Int(_) => None,
        }
    }
}

/// `proj_ℤ(v, b)`: zero every coordinate where `b` is false.
pub fn proj_z(v: &[BigInt], b: &BoolVec) -> Vec<BigInt> {
    assert_eq!(v.len(), b.len(), "dimension mismatch");
    v.iter()
        .zip(b.bits())
        .map(|(x, keep)| if *keep { x.clone() } else { BigInt::zero() })
        .collect()
}

/// Evaluates a term componentwise on every example.
pub fn eval_term(t: &Term, e: &ExampleSet) -> Result<Value, ExampleError> {
    let d = e.dim();
    let ints = |v: &Value| v.as_int().expect("well-sorted").to_vec();
    let bools = |v: &Value| v.as_bool().expect("well-sorted").clone();
    let kids = t.children.iter().map(|c| eval_term(c, e)).collect::<Result<Vec<_>, _>>()?;
    Ok(match &t.symbol {
        Symbol::Num(c) => Value::Int(vec![c.clone(); d]),
        Symbol::Var(x) => Value::Int(e.var_vector(x)?),
        Symbol::NegVar(x) => Value::Int(e.var_vector(x)?.into_iter().map(|v| -v).collect()),
        Symbol::Plus => {
            let mut acc = vec![BigInt::zero(); d];
            for k in &kids {
                for (a, b) in acc.iter_mut().zip(ints(k)) {
                    *a += b;
                }
            }
            Value::Int(acc)
        }
        Symbol::Minus => {
            let (a, b) = (ints(&kids[0]), ints(&kids[1]));
            Value::Int(a.into_iter().zip(b).map(|(x, y)| x - y).collect())
        }
        Symbol::Succ => Value::Int(ints(&kids[0]).into_iter().map(|x| x + BigInt::one()).collect()),
        Symbol::Double => Value::Int(ints(&kids[0]).into_iter().map(|x| x * 2).collect()),
        Symbol::IfThenElse => {
            let b = bools(&kids[0]);
            let then = proj_z(&ints(&kids[1]), &b);
            let els = proj_z(&ints(&kids[2]), &b.not());
            Value::Int(then.into_iter().zip(els).map(|(x, y)| x + y).collect())
        }
        Symbol::LessThan => {
            let (a, b) = (ints(&kids[0]), ints(&kids[1]));
            Value::Bool(BoolVec::new(a.iter().zip(&b).map(|(x, y)| x < y).collect()))
        }
        Symbol::And => Value::Bool(bools(&kids[0]).and(&bools(&kids[1]))),
        Symbol::Not => Value::Bool(bools(&kids[0]).not()),
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// `Start ::= Plus(x, x, x, Start) | Num 0` in surface form.
    pub fn g1_surface() -> Rtg {
        let mut g = Rtg::new(Vec::new(), NtId(0), Vec::new());
        let start = g.add_nonterminal("Start", Sort::Int);
        let x = || Arg::Leaf(Symbol::Var("x".into()));
        g.productions.push(Production::apply(start, Symbol::Plus, vec![x(), x(), x(), Arg::Nt(start)]));
        g.productions.push(Production::leaf(start, Symbol::Num(0.into())));
        g
    }
}
