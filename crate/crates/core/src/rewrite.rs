//! Grammar and equation rewrites: Minus elimination into plus form, and
//! RemIf, which turns projected variables into mask-indexed ones.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::booldom::BoolVec;
use crate::grammar::{Arg, NtId, Production, Rhs, Rtg, Sort, Symbol};
use crate::newton::{SlMonomial, SlPolySystem};
use crate::semilinear::SemiLinearSet;

/// Name of the negative copy of `X`.
pub fn negative_name(name: &str) -> String {
    format!("{name}⁻")
}

fn negate_leaf(s: &Symbol) -> Symbol {
    match s {
        Symbol::Num(c) => Symbol::Num(-c),
        Symbol::Var(x) => Symbol::NegVar(x.clone()),
        Symbol::NegVar(x) => Symbol::Var(x.clone()),
        other => panic!("{other} is not an integer leaf"),
    }
}

/// `h(G)`: pushes negation to the leaves. Every Int nonterminal `X` gets a
/// copy `X⁻` deriving the negated trees; copies not reachable from the start
/// symbol are dropped. Boolean productions are copied unchanged.
pub fn to_plus_form(g: &Rtg) -> Rtg {
    let n = g.len();
    let mut out = Rtg::new(g.nonterminals.clone(), g.start, Vec::new());
    let neg_ids: Vec<Option<NtId>> = g
        .ids()
        .map(|x| match g.sort(x) {
            Sort::Int => Some(out.add_nonterminal(negative_name(g.name(x)), Sort::Int)),
            Sort::Bool => None,
        })
        .collect();
    let neg = |a: &Arg| -> Arg {
        match a {
            Arg::Nt(y) => Arg::Nt(neg_ids[y.0].expect("integer nonterminal")),
            Arg::Leaf(s) => Arg::Leaf(negate_leaf(s)),
        }
    };
    let mut pos_prods = Vec::new();
    let mut neg_prods = Vec::new();
    for p in &g.productions {
        let x = p.lhs;
        let Some(xn) = neg_ids[x.0] else {
            pos_prods.push(p.clone());
            continue;
        };
        match &p.rhs {
            Rhs::Chain(y) => {
                pos_prods.push(p.clone());
                neg_prods.push(Production::chain(xn, neg_ids[y.0].expect("integer chain")));
            }
            Rhs::Apply { symbol, args } => match symbol {
                Symbol::Plus => {
                    pos_prods.push(p.clone());
                    neg_prods.push(Production::apply(xn, Symbol::Plus, args.iter().map(neg).collect()));
                }
                Symbol::Minus => {
                    pos_prods.push(Production::apply(x, Symbol::Plus, vec![args[0].clone(), neg(&args[1])]));
                    neg_prods.push(Production::apply(xn, Symbol::Plus, vec![neg(&args[0]), args[1].clone()]));
                }
                Symbol::Num(_) | Symbol::Var(_) | Symbol::NegVar(_) => {
                    pos_prods.push(p.clone());
                    neg_prods.push(Production::leaf(xn, negate_leaf(symbol)));
                }
                Symbol::IfThenElse => {
                    pos_prods.push(p.clone());
                    neg_prods.push(Production::apply(
                        xn,
                        Symbol::IfThenElse,
                        vec![args[0].clone(), neg(&args[1]), neg(&args[2])],
                    ));
                }
                Symbol::Double => {
                    pos_prods.push(p.clone());
                    neg_prods.push(Production::apply(xn, Symbol::Double, vec![neg(&args[0])]));
                }
                Symbol::Succ => {
                    // -(y + 1) = (-y) + (-1)
                    pos_prods.push(p.clone());
                    neg_prods.push(Production::apply(
                        xn,
                        Symbol::Plus,
                        vec![neg(&args[0]), Arg::Leaf(Symbol::Num((-1).into()))],
                    ));
                }
                Symbol::And | Symbol::Not | Symbol::LessThan => {
                    unreachable!("Boolean symbol under an integer nonterminal")
                }
            },
        }
    }
    out.productions = pos_prods;
    out.productions.extend(neg_prods);
    prune_negatives(out, n)
}

/// Drops nonterminals with index `>= first_neg` that are unreachable from the
/// start symbol, renumbering the rest.
fn prune_negatives(g: Rtg, first_neg: usize) -> Rtg {
    let mut reach = vec![false; g.len()];
    reach[g.start.0] = true;
    for x in 0..first_neg {
        reach[x] = true;
    }
    let mut queue: VecDeque<NtId> = g.ids().filter(|x| reach[x.0]).collect();
    while let Some(x) = queue.pop_front() {
        for p in g.productions_of(x) {
            for y in p.rhs_nonterminals() {
                if !reach[y.0] {
                    reach[y.0] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    // only originals are seeded, so a reachable copy is used by some original
    let mut remap = vec![None; g.len()];
    let mut nts = Vec::new();
    for x in g.ids() {
        if reach[x.0] {
            remap[x.0] = Some(NtId(nts.len()));
            nts.push(g.nonterminals[x.0].clone());
        }
    }
    let map = |y: NtId| remap[y.0].expect("reachable");
    let productions = g
        .productions
        .iter()
        .filter(|p| reach[p.lhs.0])
        .map(|p| Production {
            lhs: map(p.lhs),
            rhs: match &p.rhs {
                Rhs::Chain(y) => Rhs::Chain(map(*y)),
                Rhs::Apply { symbol, args } => Rhs::Apply {
                    symbol: symbol.clone(),
                    args: args
                        .iter()
                        .map(|a| match a {
                            Arg::Nt(y) => Arg::Nt(map(*y)),
                            Arg::Leaf(s) => Arg::Leaf(s.clone()),
                        })
                        .collect(),
                },
            },
        })
        .collect();
    Rtg::new(nts, map(g.start), productions)
}

/// `coeff ⊗ proj(Y_{v1}, m1) ⊗ proj(Y_{v2}, m2) ⊗ …`; an all-true mask is a
/// bare variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskedMonomial {
    pub coeff: SemiLinearSet,
    pub factors: Vec<(usize, BoolVec)>,
}

/// Integer equations whose variables may appear under projections, the
/// input of [`rem_if`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSystem {
    pub names: Vec<String>,
    pub dim: usize,
    pub eqs: Vec<Vec<MaskedMonomial>>,
}

impl MaskedSystem {
    pub fn new(dim: usize) -> Self {
        MaskedSystem { names: Vec::new(), dim, eqs: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.eqs.push(Vec::new());
        self.names.len() - 1
    }

    pub fn push(&mut self, var: usize, m: MaskedMonomial) {
        self.eqs[var].push(m);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl fmt::Display for MaskedSystem {
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
                for (v, mask) in &m.factors {
                    if mask.is_all_true() {
                        write!(f, " ⊗ {}", self.names[*v])?;
                    } else {
                        write!(f, " ⊗ proj({}, {mask})", self.names[*v])?;
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Name of `X^b`, e.g. `Start^(t,f)`.
pub fn indexed_name(name: &str, mask: &BoolVec) -> String {
    format!("{name}^{mask}")
}

/// Output of [`rem_if`]: the indexed system and where each `(X, b)` landed.
#[derive(Debug, Clone)]
pub struct RemIf {
    pub system: SlPolySystem,
    pub index: BTreeMap<(usize, BoolVec), usize>,
}

impl RemIf {
    pub fn var(&self, x: usize, mask: &BoolVec) -> Option<usize> {
        self.index.get(&(x, mask.clone())).copied()
    }
}

/// RemIf: for each reachable `(X, b)` emits `X^b = ⊕ π_b(α)`, where `π_b`
/// maps `proj(Y, b')` to `Y^{b∧b'}` and a constant `sl` to `proj(sl, b)`.
/// Instantiation starts from `(root, ⊤)` for every root.
pub fn rem_if(sys: &MaskedSystem, roots: &[usize]) -> RemIf {
    let top = BoolVec::all_true(sys.dim);
    let mut out = SlPolySystem::new(sys.dim);
    let mut index: BTreeMap<(usize, BoolVec), usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |x: usize, b: BoolVec, out: &mut SlPolySystem, queue: &mut VecDeque<(usize, BoolVec, usize)>| {
        *index.entry((x, b.clone())).or_insert_with(|| {
            let id = out.add_var(indexed_name(&sys.names[x], &b));
            queue.push_back((x, b, id));
            id
        })
    };
    for &r in roots {
        intern(r, top.clone(), &mut out, &mut queue);
    }
    while let Some((x, b, id)) = queue.pop_front() {
        for m in &sys.eqs[x] {
            let coeff = m.coeff.proj(&b);
            let vars = m
                .factors
                .iter()
                .map(|(y, mask)| intern(*y, b.and(mask), &mut out, &mut queue))
                .collect();
            out.push(id, SlMonomial { coeff, vars });
        }
    }
    RemIf { system: out, index }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{eval_term, ExampleSet, Value};
    use crate::ilp::IlpSolver;
    use crate::newton::{npa_solve, NewtonOptions};
    use crate::semilinear::iv;
    use std::collections::BTreeSet;

    fn minus_grammar(leaves: &[Symbol]) -> Rtg {
        let mut g = Rtg::new(Vec::new(), NtId(0), Vec::new());
        let s = g.add_nonterminal("Start", Sort::Int);
        g.productions.push(Production::apply(s, Symbol::Minus, vec![Arg::Nt(s), Arg::Nt(s)]));
        for l in leaves {
            g.productions.push(Production::leaf(s, l.clone()));
        }
        g
    }

    #[test]
    fn plus_form_example() {
        let g = minus_grammar(&[Symbol::Num(1.into()), Symbol::Var("x".into())]);
        let h = to_plus_form(&g);
        let expected = "Start ::= Plus(Start, Start⁻) | Num(1) | Var(x)\nStart⁻ ::= Plus(Start⁻, Start) | Num(-1) | NegVar(x)\n";
        assert_eq!(h.to_string(), expected);
    }

    #[test]
    fn minus_free_prunes_copies() {
        let g = crate::grammar::fixtures::g1_surface().expand_nary();
        let h = to_plus_form(&g);
        assert_eq!(h, g);
    }

    fn outputs(g: &Rtg, x: NtId, e: &ExampleSet, depth: usize) -> BTreeSet<Value> {
        g.enumerate_trees(x, depth).iter().map(|t| eval_term(t, e).unwrap()).collect()
    }

    #[test]
    fn plus_form_preserves_outputs() {
        let g = minus_grammar(&[Symbol::Num(5.into())]);
        let h = to_plus_form(&g);
        let e = ExampleSet::over("x", &[1]);
        // depth-5 trees of h(G) carry one extra level per Minus, so compare
        // values that fit within both
        let a = outputs(&g, g.start, &e, 4);
        let b = outputs(&h, h.start, &e, 5);
        assert!(a.is_subset(&b));
        let neg = h.lookup("Start⁻").unwrap();
        let nb = outputs(&h, neg, &e, 5);
        for v in &b {
            let Value::Int(xs) = v else { panic!() };
            assert!(nb.contains(&Value::Int(xs.iter().map(|x| -x).collect())));
        }
    }

    fn bv(s: &str) -> BoolVec {
        BoolVec::new(s.chars().map(|c| c == 't').collect())
    }

    #[test]
    fn itesplitting() {
        // Start = ite({(t,f)}, ⟨0,{(3,6)}⟩, Start) ⊕ ⟨0,{(2,4)}⟩ ⊕ ⟨0,{(3,6)}⟩
        let mut m = MaskedSystem::new(2);
        let s = m.add_var("Start");
        let b = bv("tf");
        let then = SemiLinearSet::linear(iv(&[0, 0]), vec![iv(&[3, 6])]);
        m.push(s, MaskedMonomial { coeff: then.proj(&b), factors: vec![(s, b.not())] });
        m.push(s, MaskedMonomial { coeff: SemiLinearSet::linear(iv(&[0, 0]), vec![iv(&[2, 4])]), factors: vec![] });
        m.push(s, MaskedMonomial { coeff: then.clone(), factors: vec![] });
        let r = rem_if(&m, &[s]);
        assert_eq!(
            r.system.dump(),
            "Start^(t,t) = {⟨(0,0),{(3,0)}⟩} ⊗ Start^(f,t) ⊕ {⟨(0,0),{(2,4)}⟩} ⊕ {⟨(0,0),{(3,6)}⟩}\n\
             Start^(f,t) = {⟨(0,0),{}⟩} ⊗ Start^(f,t) ⊕ {⟨(0,0),{(0,4)}⟩} ⊕ {⟨(0,0),{(0,6)}⟩}\n"
        );
    }

    #[test]
    fn one_dimensional_wrapper_matches_direct() {
        let oracle = IlpSolver::default();
        let mut m = MaskedSystem::new(1);
        let x = m.add_var("X");
        let t = bv("t");
        m.push(x, MaskedMonomial { coeff: SemiLinearSet::point(iv(&[2])), factors: vec![(x, t.clone())] });
        m.push(x, MaskedMonomial { coeff: SemiLinearSet::point(iv(&[1])), factors: vec![] });
        let r = rem_if(&m, &[x]);
        assert_eq!(r.system.len(), 1);
        let v = npa_solve(&r.system, &oracle, NewtonOptions::default()).unwrap();
        assert_eq!(v.values[0], SemiLinearSet::linear(iv(&[1]), vec![iv(&[2])]));
    }

    #[test]
    fn mask_composition_and_bound() {
        let mut m = MaskedSystem::new(2);
        let x = m.add_var("X");
        let y = m.add_var("Y");
        m.push(x, MaskedMonomial { coeff: SemiLinearSet::one(2), factors: vec![(y, bv("tf")), (x, bv("ft"))] });
        m.push(y, MaskedMonomial { coeff: SemiLinearSet::point(iv(&[1, 1])), factors: vec![(x, bv("tf"))] });
        let r = rem_if(&m, &[x, y]);
        assert!(r.system.len() <= 2 * 4);
        for ((v, mask), id) in &r.index {
            for mono in &r.system.eqs[*id] {
                for w in &mono.vars {
                    let (&(_, ref wm), _) = r.index.iter().find(|(_, i)| *i == w).unwrap();
                    // every child mask is below its parent
                    assert_eq!(&wm.and(mask), wm, "{v}");
                }
            }
        }
    }
}
