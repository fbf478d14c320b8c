//! Problem files: s-expression parsing, specifications and their
//! specialization to finite example sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::grammar::{Arg, ExampleSet, NtId, Production, Rhs, Rtg, Sort, Symbol};
use crate::ilp::smt_int;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.pos();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }
}

/// Splits text into top-level s-expressions. `;` starts a line comment.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let (mut line, mut col) = (1usize, 0usize);
    let mut chars = text.chars().peekable();
    let mut atom = String::new();
    let mut atom_pos = (0, 0);
    let flush = |atom: &mut String, pos: (usize, usize), stack: &mut Vec<(Vec<Sexp>, usize, usize)>, top: &mut Vec<Sexp>| {
        if atom.is_empty() {
            return;
        }
        let s = Sexp::Atom { text: std::mem::take(atom), line: pos.0, col: pos.1 };
        match stack.last_mut() {
            Some((items, _, _)) => items.push(s),
            None => top.push(s),
        }
    };
    while let Some(c) = chars.next() {
        if c == '\n' {
            line += 1;
            col = 0;
        } else {
            col += 1;
        }
        match c {
            ';' => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                stack.push((Vec::new(), line, col));
            }
            ')' => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                let Some((items, l, c0)) = stack.pop() else {
                    return Err(ParseError { line, col, msg: "unbalanced ')'".into() });
                };
                let s = Sexp::List { items, line: l, col: c0 };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(s),
                    None => top.push(s),
                }
            }
            c if c.is_whitespace() => flush(&mut atom, atom_pos, &mut stack, &mut top),
            c => {
                if atom.is_empty() {
                    atom_pos = (line, col);
                }
                atom.push(c);
            }
        }
    }
    flush(&mut atom, atom_pos, &mut stack, &mut top);
    if let Some((_, l, c)) = stack.pop() {
        return Err(ParseError { line: l, col: c, msg: "unclosed '('".into() });
    }
    Ok(top)
}

fn parse_int(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.trim_start_matches('-').chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn smt(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "distinct",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn holds(self, a: &BigInt, b: &BigInt) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }
}

/// `out·f(x̄) + Σ c_x·x + constant`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinTerm {
    pub out: BigInt,
    pub vars: BTreeMap<String, BigInt>,
    pub constant: BigInt,
}

impl LinTerm {
    pub fn constant(c: BigInt) -> Self {
        LinTerm { constant: c, ..Default::default() }
    }

    pub fn var(x: &str) -> Self {
        let mut t = LinTerm::default();
        t.vars.insert(x.to_string(), BigInt::one());
        t
    }

    pub fn output() -> Self {
        LinTerm { out: BigInt::one(), ..Default::default() }
    }

    pub fn is_constant(&self) -> bool {
        self.out.is_zero() && self.vars.is_empty()
    }

    fn add(mut self, other: &LinTerm) -> LinTerm {
        self.out += &other.out;
        for (x, c) in &other.vars {
            *self.vars.entry(x.clone()).or_default() += c;
        }
        self.vars.retain(|_, c| !c.is_zero());
        self.constant += &other.constant;
        self
    }

    fn scale(mut self, k: &BigInt) -> LinTerm {
        self.out *= k;
        for c in self.vars.values_mut() {
            *c *= k;
        }
        self.vars.retain(|_, c| !c.is_zero());
        self.constant *= k;
        self
    }

    /// Value with `f(x̄) = out` and the input bound.
    pub fn eval(&self, out: &BigInt, input: &BTreeMap<String, BigInt>) -> BigInt {
        let mut v = &self.out * out + &self.constant;
        for (x, c) in &self.vars {
            v += c * &input[x];
        }
        v
    }

    fn to_sexpr(&self, call: &str) -> String {
        let mut parts = Vec::new();
        let mono = |c: &BigInt, x: &str| {
            if c.is_one() {
                x.to_string()
            } else {
                format!("(* {} {x})", smt_int(c))
            }
        };
        if !self.out.is_zero() {
            parts.push(mono(&self.out, call));
        }
        for (x, c) in &self.vars {
            parts.push(mono(c, x));
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(smt_int(&self.constant));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
}

/// Quantifier-free specification over `f(x̄)` and the inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpecFormula {
    True,
    False,
    Atom(LinTerm, RelOp, LinTerm),
    /// `f(x̄)` itself, for Boolean-valued functions.
    OutBool,
    Not(Box<SpecFormula>),
    And(Vec<SpecFormula>),
    Or(Vec<SpecFormula>),
}

/// A concrete output value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Int(BigInt),
    Bool(bool),
}

impl SpecFormula {
    /// `ψ(out, input)`.
    pub fn holds(&self, out: &Scalar, input: &BTreeMap<String, BigInt>) -> bool {
        match self {
            SpecFormula::True => true,
            SpecFormula::False => false,
            SpecFormula::Atom(a, op, b) => {
                let o = match out {
                    Scalar::Int(v) => v.clone(),
                    Scalar::Bool(_) => BigInt::zero(),
                };
                op.holds(&a.eval(&o, input), &b.eval(&o, input))
            }
            SpecFormula::OutBool => matches!(out, Scalar::Bool(true)),
            SpecFormula::Not(f) => !f.holds(out, input),
            SpecFormula::And(fs) => fs.iter().all(|f| f.holds(out, input)),
            SpecFormula::Or(fs) => fs.iter().any(|f| f.holds(out, input)),
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, acc: &mut BTreeSet<String>) {
        match self {
            SpecFormula::Atom(a, _, b) => {
                acc.extend(a.vars.keys().cloned());
                acc.extend(b.vars.keys().cloned());
            }
            SpecFormula::Not(f) => f.collect_vars(acc),
            SpecFormula::And(fs) | SpecFormula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(acc)),
            _ => {}
        }
    }

    pub fn to_sexpr(&self, call: &str) -> String {
        match self {
            SpecFormula::True => "true".into(),
            SpecFormula::False => "false".into(),
            SpecFormula::Atom(a, op, b) => {
                format!("({} {} {})", op.smt(), a.to_sexpr(call), b.to_sexpr(call))
            }
            SpecFormula::OutBool => call.to_string(),
            SpecFormula::Not(f) => format!("(not {})", f.to_sexpr(call)),
            SpecFormula::And(fs) => nary("and", fs, call),
            SpecFormula::Or(fs) => nary("or", fs, call),
        }
    }
}

fn nary(head: &str, fs: &[SpecFormula], call: &str) -> String {
    let parts: Vec<String> = fs.iter().map(|f| f.to_sexpr(call)).collect();
    format!("({head} {})", parts.join(" "))
}

/// `coeff·o_j + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutTerm {
    pub coeff: BigInt,
    pub constant: BigInt,
}

impl OutTerm {
    pub fn eval(&self, o: &BigInt) -> BigInt {
        &self.coeff * o + &self.constant
    }
}

/// Per-example constraint over the output coordinate only, using strict `<`
/// as the sole comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PointFormula {
    True,
    False,
    Lt(OutTerm, OutTerm),
    OutBool,
    Not(Box<PointFormula>),
    And(Vec<PointFormula>),
    Or(Vec<PointFormula>),
}

/// A literal of a DNF branch: `coeff·o + constant < 0` (strict) or `≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutLiteral {
    pub coeff: BigInt,
    pub constant: BigInt,
    pub strict: bool,
}

impl PointFormula {
    pub fn holds(&self, out: &Scalar) -> bool {
        match self {
            PointFormula::True => true,
            PointFormula::False => false,
            PointFormula::Lt(a, b) => match out {
                Scalar::Int(o) => a.eval(o) < b.eval(o),
                Scalar::Bool(_) => a.constant < b.constant,
            },
            PointFormula::OutBool => matches!(out, Scalar::Bool(true)),
            PointFormula::Not(f) => !f.holds(out),
            PointFormula::And(fs) => fs.iter().all(|f| f.holds(out)),
            PointFormula::Or(fs) => fs.iter().any(|f| f.holds(out)),
        }
    }

    /// Disjunctive normal form over integer literals. `OutBool` literals are
    /// not representable and must not occur.
    pub fn dnf(&self) -> Vec<Vec<OutLiteral>> {
        self.dnf_pol(true)
    }

    fn dnf_pol(&self, pos: bool) -> Vec<Vec<OutLiteral>> {
        match (self, pos) {
            (PointFormula::True, true) | (PointFormula::False, false) => vec![vec![]],
            (PointFormula::True, false) | (PointFormula::False, true) => vec![],
            (PointFormula::Lt(a, b), _) => vec![vec![OutLiteral {
                coeff: &a.coeff - &b.coeff,
                constant: &a.constant - &b.constant,
                strict: pos,
            }]],
            (PointFormula::OutBool, _) => panic!("Boolean output in an integer query"),
            (PointFormula::Not(f), _) => f.dnf_pol(!pos),
            (PointFormula::And(fs), true) | (PointFormula::Or(fs), false) => {
                let mut acc = vec![vec![]];
                for f in fs {
                    let d = f.dnf_pol(pos);
                    let mut next = Vec::with_capacity(acc.len() * d.len());
                    for a in &acc {
                        for b in &d {
                            let mut c: Vec<OutLiteral> = a.clone();
                            c.extend(b.iter().cloned());
                            next.push(c);
                        }
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            (PointFormula::Or(fs), true) | (PointFormula::And(fs), false) => {
                fs.iter().flat_map(|f| f.dnf_pol(pos)).collect()
            }
        }
    }
}

/// `ψ^E`: one point formula per example.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSpec {
    pub phis: Vec<PointFormula>,
}

impl PointSpec {
    pub fn dim(&self) -> usize {
        self.phis.len()
    }

    pub fn holds(&self, outs: &[Scalar]) -> bool {
        self.phis.iter().zip(outs).all(|(p, o)| p.holds(o))
    }

    pub fn holds_value(&self, v: &crate::grammar::Value) -> bool {
        match v {
            crate::grammar::Value::Int(xs) => {
                self.phis.iter().zip(xs).all(|(p, o)| p.holds(&Scalar::Int(o.clone())))
            }
            crate::grammar::Value::Bool(bs) => {
                self.phis.iter().zip(bs.bits()).all(|(p, b)| p.holds(&Scalar::Bool(*b)))
            }
        }
    }

    /// DNF of the conjunction over all examples; literals tagged by example.
    pub fn dnf(&self) -> Vec<Vec<(usize, OutLiteral)>> {
        let mut acc: Vec<Vec<(usize, OutLiteral)>> = vec![vec![]];
        for (j, phi) in self.phis.iter().enumerate() {
            let d = phi.dnf();
            let mut next = Vec::with_capacity(acc.len() * d.len());
            for a in &acc {
                for b in &d {
                    let mut c = a.clone();
                    c.extend(b.iter().cloned().map(|l| (j, l)));
                    next.push(c);
                }
            }
            acc = next;
        }
        acc
    }
}

fn out_term(t: &LinTerm, input: &BTreeMap<String, BigInt>) -> OutTerm {
    OutTerm { coeff: t.out.clone(), constant: t.eval(&BigInt::zero(), input) }
}

fn lt(a: OutTerm, b: OutTerm) -> PointFormula {
    PointFormula::Lt(a, b)
}

fn not(f: PointFormula) -> PointFormula {
    PointFormula::Not(Box::new(f))
}

fn specialize_one(f: &SpecFormula, input: &BTreeMap<String, BigInt>) -> PointFormula {
    match f {
        SpecFormula::True => PointFormula::True,
        SpecFormula::False => PointFormula::False,
        SpecFormula::OutBool => PointFormula::OutBool,
        SpecFormula::Atom(a, op, b) => {
            let (a, b) = (out_term(a, input), out_term(b, input));
            match op {
                RelOp::Lt => lt(a, b),
                RelOp::Gt => lt(b, a),
                RelOp::Le => not(lt(b, a)),
                RelOp::Ge => not(lt(a, b)),
                RelOp::Eq => PointFormula::And(vec![not(lt(a.clone(), b.clone())), not(lt(b, a))]),
                RelOp::Ne => not(PointFormula::And(vec![not(lt(a.clone(), b.clone())), not(lt(b, a))])),
            }
        }
        SpecFormula::Not(g) => not(specialize_one(g, input)),
        SpecFormula::And(gs) => PointFormula::And(gs.iter().map(|g| specialize_one(g, input)).collect()),
        SpecFormula::Or(gs) => PointFormula::Or(gs.iter().map(|g| specialize_one(g, input)).collect()),
    }
}

/// `ψ^E`: substitutes each input of `e` into the specification.
pub fn specialize(spec: &SpecFormula, e: &ExampleSet) -> PointSpec {
    PointSpec { phis: (0..e.dim()).map(|j| specialize_one(spec, &e.input(j))).collect() }
}

/// A parsed synthesis problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub logic: String,
    pub variables: Vec<String>,
    pub out_sort: Sort,
    /// Surface grammar; `Plus` may be n-ary.
    pub grammar: Rtg,
    pub spec: SpecFormula,
    pub options: BTreeMap<String, String>,
}

impl Problem {
    /// Renders the problem in the input format.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(set-logic {})", self.logic);
        for (k, v) in &self.options {
            let _ = writeln!(out, "(set-option :{k} {v})");
        }
        let params: Vec<String> = self.variables.iter().map(|x| format!("({x} Int)")).collect();
        let _ = writeln!(out, "(synth-fun {} ({}) {}", self.name, params.join(" "), self.out_sort);
        out.push_str("  (");
        let g = &self.grammar;
        for (i, x) in g.ids().enumerate() {
            if i > 0 {
                out.push_str("\n   ");
            }
            let alts: Vec<String> = g.productions_of(x).map(|p| production_sexpr(g, p)).collect();
            let _ = write!(out, "({} {} ({}))", g.name(x), g.sort(x), alts.join(" "));
        }
        out.push_str("))\n");
        for x in &self.variables {
            let _ = writeln!(out, "(declare-var {x} Int)");
        }
        let call = self.call();
        let _ = writeln!(out, "(constraint {})", self.spec.to_sexpr(&call));
        out.push_str("(check-synth)\n");
        out
    }

    fn call(&self) -> String {
        if self.variables.is_empty() {
            format!("({})", self.name)
        } else {
            format!("({} {})", self.name, self.variables.join(" "))
        }
    }
}

fn leaf_sexpr(s: &Symbol) -> String {
    match s {
        Symbol::Num(c) => smt_int(c),
        Symbol::Var(x) => x.clone(),
        Symbol::NegVar(x) => format!("(- {x})"),
        other => other.to_string(),
    }
}

fn production_sexpr(g: &Rtg, p: &Production) -> String {
    match &p.rhs {
        Rhs::Chain(y) => g.name(*y).to_string(),
        Rhs::Apply { symbol, args } if args.is_empty() => leaf_sexpr(symbol),
        Rhs::Apply { symbol, args } => {
            let head = match symbol {
                Symbol::Plus => "+",
                Symbol::Minus => "-",
                Symbol::IfThenElse => "ite",
                Symbol::And => "and",
                Symbol::Not => "not",
                Symbol::LessThan => "<",
                Symbol::Succ => "succ",
                Symbol::Double => "double",
                _ => unreachable!("leaf symbols have no arguments"),
            };
            let args: Vec<String> = args
                .iter()
                .map(|a| match a {
                    Arg::Nt(y) => g.name(*y).to_string(),
                    Arg::Leaf(s) => leaf_sexpr(s),
                })
                .collect();
            format!("({head} {})", args.join(" "))
        }
    }
}

fn parse_sort(s: &Sexp) -> Result<Sort, ParseError> {
    match s.atom() {
        Some("Int") => Ok(Sort::Int),
        Some("Bool") => Ok(Sort::Bool),
        _ => s.err("expected sort Int or Bool"),
    }
}

struct GrammarCtx<'a> {
    nts: BTreeMap<String, NtId>,
    params: &'a [String],
}

impl GrammarCtx<'_> {
    fn leaf(&self, s: &Sexp) -> Result<Option<Symbol>, ParseError> {
        match s {
            Sexp::Atom { text, .. } => {
                if let Some(c) = parse_int(text) {
                    Ok(Some(Symbol::Num(c)))
                } else if self.params.contains(text) {
                    Ok(Some(Symbol::Var(text.clone())))
                } else {
                    Ok(None)
                }
            }
            Sexp::List { items, .. } => {
                if items.len() == 2 && items[0].atom() == Some("-") {
                    if let Some(a) = items[1].atom() {
                        if let Some(c) = parse_int(a) {
                            return Ok(Some(Symbol::Num(-c)));
                        }
                        if self.params.iter().any(|p| p == a) {
                            return Ok(Some(Symbol::NegVar(a.to_string())));
                        }
                    }
                }
                Ok(None)
            }
        }
    }

    fn arg(&self, s: &Sexp) -> Result<Arg, ParseError> {
        if let Some(name) = s.atom() {
            if let Some(id) = self.nts.get(name) {
                return Ok(Arg::Nt(*id));
            }
        }
        match self.leaf(s)? {
            Some(sym) => Ok(Arg::Leaf(sym)),
            None => match s {
                Sexp::Atom { text, .. } => s.err(format!("unknown symbol '{text}'")),
                Sexp::List { .. } => s.err("nested operators must go through a nonterminal"),
            },
        }
    }

    fn production(&self, lhs: NtId, s: &Sexp) -> Result<Production, ParseError> {
        if let Some(name) = s.atom() {
            if let Some(id) = self.nts.get(name) {
                return Ok(Production::chain(lhs, *id));
            }
        }
        if let Some(sym) = self.leaf(s)? {
            return Ok(Production::leaf(lhs, sym));
        }
        let Some(items) = s.list() else {
            return s.err(format!("unknown symbol '{}'", s.atom().unwrap_or("")));
        };
        let Some(head) = items.first().and_then(Sexp::atom) else {
            return s.err("expected an operator");
        };
        let args = items[1..].iter().map(|a| self.arg(a)).collect::<Result<Vec<_>, _>>()?;
        let (symbol, arity_ok) = match head {
            "+" => (Symbol::Plus, args.len() >= 2),
            "-" => (Symbol::Minus, args.len() == 2),
            "ite" => (Symbol::IfThenElse, args.len() == 3),
            "and" => (Symbol::And, args.len() == 2),
            "not" => (Symbol::Not, args.len() == 1),
            "<" => (Symbol::LessThan, args.len() == 2),
            "succ" => (Symbol::Succ, args.len() == 1),
            "double" => (Symbol::Double, args.len() == 1),
            other => return s.err(format!("unknown operator '{other}'")),
        };
        if !arity_ok {
            return s.err(format!("wrong number of arguments for '{head}'"));
        }
        Ok(Production::apply(lhs, symbol, args))
    }
}

#[derive(Debug, Clone)]
enum STerm {
    Int(LinTerm),
    Bool(SpecFormula),
}

struct SpecCtx<'a> {
    fname: &'a str,
    out_sort: Sort,
    /// names usable as inputs
    inputs: BTreeSet<String>,
    /// the argument list of the first call seen
    call: Option<Vec<String>>,
}

impl SpecCtx<'_> {
    fn int(&mut self, s: &Sexp) -> Result<LinTerm, ParseError> {
        match self.term(s)? {
            STerm::Int(t) => Ok(t),
            STerm::Bool(_) => s.err("expected an integer term"),
        }
    }

    fn boolean(&mut self, s: &Sexp) -> Result<SpecFormula, ParseError> {
        match self.term(s)? {
            STerm::Bool(f) => Ok(f),
            STerm::Int(_) => s.err("expected a Boolean term"),
        }
    }

    fn output(&self) -> STerm {
        match self.out_sort {
            Sort::Int => STerm::Int(LinTerm::output()),
            Sort::Bool => STerm::Bool(SpecFormula::OutBool),
        }
    }

    fn term(&mut self, s: &Sexp) -> Result<STerm, ParseError> {
        match s {
            Sexp::Atom { text, .. } => {
                if let Some(c) = parse_int(text) {
                    return Ok(STerm::Int(LinTerm::constant(c)));
                }
                match text.as_str() {
                    "true" => return Ok(STerm::Bool(SpecFormula::True)),
                    "false" => return Ok(STerm::Bool(SpecFormula::False)),
                    _ => {}
                }
                if text == self.fname {
                    return self.call_term(s, &[]);
                }
                if self.inputs.contains(text) {
                    return Ok(STerm::Int(LinTerm::var(text)));
                }
                s.err(format!("unknown symbol '{text}'"))
            }
            Sexp::List { items, .. } => {
                let Some(head) = items.first().and_then(Sexp::atom) else {
                    return s.err("expected an operator");
                };
                let args = &items[1..];
                if head == self.fname {
                    return self.call_term(s, args);
                }
                let arity = |n: usize| -> Result<(), ParseError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        s.err(format!("'{head}' expects {n} arguments"))
                    }
                };
                match head {
                    "+" => {
                        let mut acc = LinTerm::default();
                        for a in args {
                            acc = acc.add(&self.int(a)?);
                        }
                        Ok(STerm::Int(acc))
                    }
                    "-" => {
                        if args.is_empty() {
                            return s.err("'-' expects arguments");
                        }
                        let first = self.int(&args[0])?;
                        if args.len() == 1 {
                            return Ok(STerm::Int(first.scale(&-BigInt::one())));
                        }
                        let mut acc = first;
                        for a in &args[1..] {
                            acc = acc.add(&self.int(a)?.scale(&-BigInt::one()));
                        }
                        Ok(STerm::Int(acc))
                    }
                    "*" => {
                        let mut acc = LinTerm::constant(BigInt::one());
                        for a in args {
                            let t = self.int(a)?;
                            if acc.is_constant() {
                                acc = t.scale(&acc.constant);
                            } else if t.is_constant() {
                                acc = acc.scale(&t.constant);
                            } else {
                                return a.err("nonlinear multiplication");
                            }
                        }
                        Ok(STerm::Int(acc))
                    }
                    "<" | "<=" | ">" | ">=" | "distinct" => {
                        arity(2)?;
                        let op = match head {
                            "<" => RelOp::Lt,
                            "<=" => RelOp::Le,
                            ">" => RelOp::Gt,
                            ">=" => RelOp::Ge,
                            _ => RelOp::Ne,
                        };
                        let a = self.term(&args[0])?;
                        let b = self.term(&args[1])?;
                        match (a, b, op) {
                            (STerm::Int(a), STerm::Int(b), _) => Ok(STerm::Bool(SpecFormula::Atom(a, op, b))),
                            (STerm::Bool(a), STerm::Bool(b), RelOp::Ne) => Ok(STerm::Bool(SpecFormula::Not(
                                Box::new(iff(a, b)),
                            ))),
                            _ => s.err("comparison of mismatched sorts"),
                        }
                    }
                    "=" => {
                        arity(2)?;
                        let a = self.term(&args[0])?;
                        let b = self.term(&args[1])?;
                        match (a, b) {
                            (STerm::Int(a), STerm::Int(b)) => Ok(STerm::Bool(SpecFormula::Atom(a, RelOp::Eq, b))),
                            (STerm::Bool(a), STerm::Bool(b)) => Ok(STerm::Bool(iff(a, b))),
                            _ => s.err("comparison of mismatched sorts"),
                        }
                    }
                    "and" | "or" => {
                        let fs = args.iter().map(|a| self.boolean(a)).collect::<Result<Vec<_>, _>>()?;
                        Ok(STerm::Bool(if head == "and" { SpecFormula::And(fs) } else { SpecFormula::Or(fs) }))
                    }
                    "not" => {
                        arity(1)?;
                        Ok(STerm::Bool(SpecFormula::Not(Box::new(self.boolean(&args[0])?))))
                    }
                    "=>" => {
                        arity(2)?;
                        let a = self.boolean(&args[0])?;
                        let b = self.boolean(&args[1])?;
                        Ok(STerm::Bool(SpecFormula::Or(vec![SpecFormula::Not(Box::new(a)), b])))
                    }
                    other => s.err(format!("unknown operator '{other}'")),
                }
            }
        }
    }

    fn call_term(&mut self, s: &Sexp, args: &[Sexp]) -> Result<STerm, ParseError> {
        let mut names = Vec::with_capacity(args.len());
        for a in args {
            match a.atom() {
                Some(x) if self.inputs.contains(x) => names.push(x.to_string()),
                _ => return a.err("function arguments must be input variables (single invocation)"),
            }
        }
        match &self.call {
            None => self.call = Some(names),
            Some(prev) if *prev == names => {}
            Some(_) => return s.err("function applied to different arguments (not single invocation)"),
        }
        Ok(self.output())
    }
}

fn iff(a: SpecFormula, b: SpecFormula) -> SpecFormula {
    SpecFormula::And(vec![
        SpecFormula::Or(vec![SpecFormula::Not(Box::new(a.clone())), b.clone()]),
        SpecFormula::Or(vec![a, SpecFormula::Not(Box::new(b))]),
    ])
}

fn rename_spec(f: SpecFormula, map: &BTreeMap<String, String>) -> SpecFormula {
    let rn = |t: LinTerm| LinTerm {
        vars: t.vars.into_iter().map(|(x, c)| (map.get(&x).cloned().unwrap_or(x), c)).collect(),
        ..t
    };
    match f {
        SpecFormula::Atom(a, op, b) => SpecFormula::Atom(rn(a), op, rn(b)),
        SpecFormula::Not(g) => SpecFormula::Not(Box::new(rename_spec(*g, map))),
        SpecFormula::And(gs) => SpecFormula::And(gs.into_iter().map(|g| rename_spec(g, map)).collect()),
        SpecFormula::Or(gs) => SpecFormula::Or(gs.into_iter().map(|g| rename_spec(g, map)).collect()),
        other => other,
    }
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let forms = parse_sexps(text)?;
    let mut logic = None;
    let mut options = BTreeMap::new();
    let mut synth: Option<(String, Vec<String>, Sort, Rtg)> = None;
    let mut declared: Vec<String> = Vec::new();
    let mut constraints: Vec<&Sexp> = Vec::new();
    let mut at = (1, 1);
    for form in &forms {
        at = form.pos();
        let Some(items) = form.list() else { return form.err("expected a command") };
        let Some(head) = items.first().and_then(Sexp::atom) else {
            return form.err("expected a command");
        };
        match head {
            "set-logic" => match items.get(1).and_then(Sexp::atom) {
                Some(l @ ("LIA" | "CLIA")) => logic = Some(l.to_string()),
                _ => return form.err("logic must be LIA or CLIA"),
            },
            "set-option" => {
                let key = items.get(1).and_then(Sexp::atom).and_then(|k| k.strip_prefix(':'));
                let val = items.get(2).and_then(Sexp::atom);
                match (key, val) {
                    (Some(k), Some(v)) if items.len() == 3 => {
                        options.insert(k.to_string(), v.to_string());
                    }
                    _ => return form.err("expected (set-option :key value)"),
                }
            }
            "declare-var" => {
                match (items.get(1).and_then(Sexp::atom), items.get(2).map(parse_sort)) {
                    (Some(x), Some(Ok(Sort::Int))) if items.len() == 3 => declared.push(x.to_string()),
                    _ => return form.err("expected (declare-var name Int)"),
                }
            }
            "synth-fun" => {
                if synth.is_some() {
                    return form.err("only one synth-fun is supported");
                }
                synth = Some(parse_synth_fun(form, items)?);
            }
            "constraint" => {
                if items.len() != 2 {
                    return form.err("expected (constraint term)");
                }
                constraints.push(&items[1]);
            }
            "check-synth" => {}
            other => return form.err(format!("unrecognized command '{other}'")),
        }
    }
    let Some((name, params, out_sort, grammar)) = synth else {
        return Err(ParseError { line: at.0, col: at.1, msg: "missing synth-fun".into() });
    };
    let mut ctx = SpecCtx {
        fname: &name,
        out_sort,
        inputs: declared.iter().chain(&params).cloned().collect(),
        call: None,
    };
    let mut conj = Vec::new();
    for c in &constraints {
        conj.push(ctx.boolean(c)?);
    }
    let spec = match conj.len() {
        0 => SpecFormula::True,
        1 => conj.pop().unwrap(),
        _ => SpecFormula::And(conj),
    };
    // map call arguments onto the function's parameters
    let mut rename = BTreeMap::new();
    if let Some(call) = &ctx.call {
        if call.len() != params.len() {
            let (l, c) = constraints[0].pos();
            return Err(ParseError { line: l, col: c, msg: "wrong number of function arguments".into() });
        }
        for (a, p) in call.iter().zip(&params) {
            rename.insert(a.clone(), p.clone());
        }
    }
    let spec = rename_spec(spec, &rename);
    for v in spec.variables() {
        if !params.contains(&v) {
            let (l, c) = constraints.first().map_or(at, |s| s.pos());
            return Err(ParseError {
                line: l,
                col: c,
                msg: format!("variable '{v}' is not an argument of {name}"),
            });
        }
    }
    Ok(Problem {
        name,
        logic: logic.unwrap_or_else(|| "CLIA".into()),
        variables: params,
        out_sort,
        grammar,
        spec,
        options,
    })
}

fn parse_synth_fun(form: &Sexp, items: &[Sexp]) -> Result<(String, Vec<String>, Sort, Rtg), ParseError> {
    if items.len() < 5 {
        return form.err("expected (synth-fun name (params) sort (grammar))");
    }
    let Some(name) = items[1].atom() else { return items[1].err("expected a function name") };
    let Some(plist) = items[2].list() else { return items[2].err("expected a parameter list") };
    let mut params = Vec::new();
    for p in plist {
        match p.list() {
            Some([x, s]) if x.atom().is_some() && parse_sort(s)? == Sort::Int => {
                params.push(x.atom().unwrap().to_string())
            }
            _ => return p.err("expected (name Int)"),
        }
    }
    let out_sort = parse_sort(&items[3])?;
    // optional predeclaration list ((NT Sort) ...) before the rules
    let rules = if items.len() == 6 { &items[5] } else { &items[4] };
    let Some(groups) = rules.list() else { return rules.err("expected grammar rules") };
    let mut g = Rtg::new(Vec::new(), NtId(0), Vec::new());
    let mut ctx = GrammarCtx { nts: BTreeMap::new(), params: &params };
    for grp in groups {
        match grp.list() {
            Some([n, s, _]) if n.atom().is_some() => {
                let nm = n.atom().unwrap();
                if ctx.nts.contains_key(nm) {
                    return n.err(format!("duplicate nonterminal '{nm}'"));
                }
                let id = g.add_nonterminal(nm, parse_sort(s)?);
                ctx.nts.insert(nm.to_string(), id);
            }
            _ => return grp.err("expected (Name Sort (productions ...))"),
        }
    }
    if g.is_empty() {
        return rules.err("grammar has no nonterminals");
    }
    for grp in groups {
        let items = grp.list().expect("checked");
        let lhs = ctx.nts[items[0].atom().expect("checked")];
        let Some(prods) = items[2].list() else { return items[2].err("expected a production list") };
        for p in prods {
            g.productions.push(ctx.production(lhs, p)?);
        }
    }
    if g.sort(g.start) != out_sort {
        return items[3].err("start nonterminal sort differs from the function sort");
    }
    let diags = g.expand_nary().diagnostics();
    let hard: Vec<String> = diags
        .iter()
        .filter(|d| !matches!(d, crate::grammar::Diagnostic::Unproductive { .. }))
        .map(ToString::to_string)
        .collect();
    if !hard.is_empty() {
        return rules.err(hard.join("; "));
    }
    Ok((name.to_string(), params, out_sort, g))
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

/// Parses `"x=1,y=2;x=3,y=4"` into an example set over `vars`.
pub fn parse_examples(text: &str, vars: &[String]) -> Result<ExampleSet, String> {
    let mut inputs = Vec::new();
    for chunk in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let mut vals: BTreeMap<String, BigInt> = BTreeMap::new();
        for kv in chunk.split(',').map(str::trim) {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("bad binding '{kv}'"))?;
            let v: BigInt = v.trim().parse().map_err(|_| format!("bad integer in '{kv}'"))?;
            vals.insert(k.trim().to_string(), v);
        }
        let row = vars
            .iter()
            .map(|x| vals.remove(x).ok_or_else(|| format!("example '{chunk}' does not bind {x}")))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(extra) = vals.keys().next() {
            return Err(format!("unknown variable '{extra}'"));
        }
        inputs.push(row);
    }
    if vars.is_empty() && inputs.is_empty() && !text.trim().is_empty() {
        inputs.push(Vec::new());
    }
    ExampleSet::new(vars.to_vec(), inputs).map_err(|e| e.to_string())
}

/// Whether any input is a negative number; used for pretty printing only.
pub fn has_negative(e: &ExampleSet) -> bool {
    e.inputs().iter().flatten().any(Signed::is_negative)
}
