#![allow(dead_code)]

use std::collections::HashSet;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use unreal_core::grammar::{Arg, Production, Rhs};
use unreal_core::{ExampleSet, NtId, Rtg, Sort, Symbol, Term};

pub fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn small(v: &[BigInt]) -> Vec<i64> {
    v.iter().map(|x| i64::try_from(x).expect("fits in i64")).collect()
}

/// One or two distinct inputs for `x` drawn from [-3, 3].
pub fn random_examples(rng: &mut ChaCha8Rng) -> ExampleSet {
    let d = rng.gen_range(1..=2);
    let mut pool: Vec<i64> = (-3..=3).collect();
    pool.shuffle(rng);
    ExampleSet::over("x", &pool[..d])
}

fn random_leaf(rng: &mut ChaCha8Rng) -> Symbol {
    match rng.gen_range(0..4) {
        0 | 1 => Symbol::Num(rng.gen_range(-3..=3).into()),
        2 => Symbol::Var("x".into()),
        _ => Symbol::NegVar("x".into()),
    }
}

fn random_int_arg(rng: &mut ChaCha8Rng, ints: &[NtId]) -> Arg {
    if rng.gen_bool(0.6) {
        Arg::Nt(*ints.choose(rng).unwrap())
    } else {
        Arg::Leaf(random_leaf(rng))
    }
}

/// A Minus-free grammar with at most 3 nonterminals and 6 productions over
/// binary Plus, constants in [-3, 3], `x`, `-x` and chains.
pub fn random_lia_grammar(rng: &mut ChaCha8Rng) -> Rtg {
    loop {
        let mut g = Rtg::new(Vec::new(), NtId(0), Vec::new());
        let n = rng.gen_range(1..=3);
        let ids: Vec<NtId> = ["Start", "A", "B"][..n].iter().map(|s| g.add_nonterminal(*s, Sort::Int)).collect();
        let total = rng.gen_range(n..=6);
        for k in 0..total {
            let lhs = if k < n { ids[k] } else { *ids.choose(rng).unwrap() };
            let p = match rng.gen_range(0..6) {
                0 | 1 => Production::leaf(lhs, random_leaf(rng)),
                2 if n > 1 => Production::chain(lhs, *ids.choose(rng).unwrap()),
                _ => {
                    let args = (0..2).map(|_| random_int_arg(rng, &ids)).collect();
                    Production::apply(lhs, Symbol::Plus, args)
                }
            };
            g.productions.push(p);
        }
        if let Ok(g) = g.validate() {
            return g;
        }
    }
}

/// A conditional grammar: up to two integer and two Boolean nonterminals,
/// at most 8 productions.
pub fn random_clia_grammar(rng: &mut ChaCha8Rng) -> Rtg {
    loop {
        let mut g = Rtg::new(Vec::new(), NtId(0), Vec::new());
        let ni = rng.gen_range(1..=2);
        let nb = rng.gen_range(1..=2);
        let ints: Vec<NtId> = ["Start", "I"][..ni].iter().map(|s| g.add_nonterminal(*s, Sort::Int)).collect();
        let bools: Vec<NtId> = ["B", "C"][..nb].iter().map(|s| g.add_nonterminal(*s, Sort::Bool)).collect();
        for &i in &ints {
            g.productions.push(Production::leaf(i, random_leaf(rng)));
        }
        for &b in &bools {
            let args = vec![random_int_arg(rng, &ints), random_int_arg(rng, &ints)];
            g.productions.push(Production::apply(b, Symbol::LessThan, args));
        }
        g.productions.push(Production::apply(
            ints[0],
            Symbol::IfThenElse,
            vec![Arg::Nt(*bools.choose(rng).unwrap()), random_int_arg(rng, &ints), random_int_arg(rng, &ints)],
        ));
        let extra = rng.gen_range(0..=(8 - g.productions.len()));
        for _ in 0..extra {
            let p = if rng.gen_bool(0.5) {
                let lhs = *ints.choose(rng).unwrap();
                match rng.gen_range(0..3) {
                    0 => Production::apply(
                        lhs,
                        Symbol::IfThenElse,
                        vec![Arg::Nt(*bools.choose(rng).unwrap()), random_int_arg(rng, &ints), random_int_arg(rng, &ints)],
                    ),
                    1 => Production::leaf(lhs, random_leaf(rng)),
                    _ => Production::apply(lhs, Symbol::Plus, vec![random_int_arg(rng, &ints), random_int_arg(rng, &ints)]),
                }
            } else {
                let lhs = *bools.choose(rng).unwrap();
                let b1 = Arg::Nt(*bools.choose(rng).unwrap());
                let b2 = Arg::Nt(*bools.choose(rng).unwrap());
                match rng.gen_range(0..3) {
                    0 => Production::apply(lhs, Symbol::And, vec![b1, b2]),
                    1 => Production::apply(lhs, Symbol::Not, vec![b1]),
                    _ => Production::apply(lhs, Symbol::LessThan, vec![random_int_arg(rng, &ints), random_int_arg(rng, &ints)]),
                }
            };
            g.productions.push(p);
        }
        if let Ok(g) = g.validate() {
            return g;
        }
    }
}

/// An output vector, one entry per example.
pub type Point = Vec<i64>;

fn leaf_point(s: &Symbol, xs: &[i64]) -> Point {
    xs.iter()
        .map(|x| match s {
            Symbol::Num(c) => i64::try_from(c).unwrap(),
            Symbol::Var(_) => *x,
            Symbol::NegVar(_) => -x,
            other => panic!("not a leaf: {other}"),
        })
        .collect()
}

fn plus(a: &Point, b: &Point) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn minus(a: &Point, b: &Point) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Output vectors of trees of a binary-Plus grammar, level by level:
/// `levels[h][X]` holds the outputs of every tree of height at most `h`
/// derived from `X`. Chain productions do not add height.
pub struct Outputs<'a> {
    g: &'a Rtg,
    xs: Vec<i64>,
    pub levels: Vec<Vec<HashSet<Point>>>,
}

impl<'a> Outputs<'a> {
    pub fn new(g: &'a Rtg, xs: &[i64], depth: usize) -> Self {
        Self::up_to(g, xs, depth, usize::MAX)
    }

    /// Like `new`, but stops early rather than form more than `cap` sums
    /// for one production.
    pub fn up_to(g: &'a Rtg, xs: &[i64], depth: usize, cap: usize) -> Self {
        let mut o = Outputs { g, xs: xs.to_vec(), levels: vec![vec![HashSet::new(); g.len()]] };
        while o.depth() < depth && o.deepen(cap) {}
        o
    }

    /// Outputs of all tabulated trees derived from `x`.
    pub fn all(&self, x: NtId) -> &HashSet<Point> {
        &self.levels[self.depth()][x.0]
    }

    /// Tabulates one more level unless its size would exceed `cap` points.
    pub fn deepen(&mut self, cap: usize) -> bool {
        let h = self.levels.len();
        let prev = self.levels.last().unwrap();
        let mut next = prev.clone();
        for p in &self.g.productions {
            let Rhs::Apply { args, symbol } = &p.rhs else { continue };
            let opts: Vec<Vec<Point>> = args
                .iter()
                .map(|a| match a {
                    Arg::Nt(y) => prev[y.0].iter().cloned().collect(),
                    Arg::Leaf(s) if h > 1 => vec![leaf_point(s, &self.xs)],
                    Arg::Leaf(_) => Vec::new(),
                })
                .collect();
            match opts.len() {
                0 => {
                    next[p.lhs.0].insert(leaf_point(symbol, &self.xs));
                }
                2 => {
                    if opts[0].len().saturating_mul(opts[1].len()) > cap {
                        return false;
                    }
                    for a in &opts[0] {
                        for b in &opts[1] {
                            next[p.lhs.0].insert(plus(a, b));
                        }
                    }
                }
                n => panic!("Plus with {n} arguments"),
            }
        }
        close_chains(self.g, &mut next);
        self.levels.push(next);
        true
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    fn options(&self, a: &Arg, h: usize) -> Vec<Point> {
        match a {
            Arg::Nt(y) => self.levels[h][y.0].iter().cloned().collect(),
            Arg::Leaf(s) if h > 0 => vec![leaf_point(s, &self.xs)],
            Arg::Leaf(_) => Vec::new(),
        }
    }

    fn has(&self, a: &Arg, h: usize, p: &Point) -> bool {
        match a {
            Arg::Nt(y) => self.levels[h][y.0].contains(p),
            Arg::Leaf(s) => h > 0 && leaf_point(s, &self.xs) == *p,
        }
    }

    /// A tree of height at most `h` derived from `x` with output `p`; `h`
    /// may exceed the tabulated depth by one.
    pub fn witness(&self, x: NtId, h: usize, p: &Point) -> Option<Term> {
        self.witness_in(x, h, p, &mut Vec::new())
    }

    fn witness_in(&self, x: NtId, h: usize, p: &Point, seen: &mut Vec<NtId>) -> Option<Term> {
        if h == 0 || seen.contains(&x) {
            return None;
        }
        if h <= self.depth() && !self.levels[h][x.0].contains(p) {
            return None;
        }
        seen.push(x);
        let mut found = None;
        for prod in self.g.productions_of(x) {
            found = match &prod.rhs {
                Rhs::Chain(y) => self.witness_in(*y, h, p, seen),
                Rhs::Apply { symbol, args } if args.is_empty() => {
                    (leaf_point(symbol, &self.xs) == *p).then(|| Term::leaf(symbol.clone()))
                }
                Rhs::Apply { args, .. } => self.options(&args[0], h - 1).iter().find_map(|a| {
                    let b = minus(p, a);
                    if !self.has(&args[1], h - 1, &b) {
                        return None;
                    }
                    Some(Term::node(Symbol::Plus, vec![self.subtree(&args[0], h - 1, a)?, self.subtree(&args[1], h - 1, &b)?]))
                }),
            };
            if found.is_some() {
                break;
            }
        }
        seen.pop();
        found
    }

    fn subtree(&self, a: &Arg, h: usize, p: &Point) -> Option<Term> {
        match a {
            Arg::Nt(y) => self.witness(*y, h, p),
            Arg::Leaf(s) => Some(Term::leaf(s.clone())),
        }
    }
}

fn close_chains(g: &Rtg, level: &mut [HashSet<Point>]) {
    loop {
        let mut changed = false;
        for p in &g.productions {
            if let Rhs::Chain(y) = p.rhs {
                if y == p.lhs {
                    continue;
                }
                let add: Vec<Point> = level[y.0].difference(&level[p.lhs.0]).cloned().collect();
                changed |= !add.is_empty();
                level[p.lhs.0].extend(add);
            }
        }
        if !changed {
            break;
        }
    }
}
