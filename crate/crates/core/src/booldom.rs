//! Sets of Boolean vectors and the abstract Boolean operators.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::One;

use crate::ilp::{IlpError, IlpSystem, Oracle, Rel};
use crate::semilinear::{LinearSet, SemiLinearSet};

/// One Boolean per example.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolVec(Vec<bool>);

impl BoolVec {
    pub fn new(bits: Vec<bool>) -> Self {
        BoolVec(bits)
    }

    pub fn all_true(d: usize) -> Self {
        BoolVec(vec![true; d])
    }

    pub fn all_false(d: usize) -> Self {
        BoolVec(vec![false; d])
    }

    /// The `i`-th of the `2^d` vectors; bit `j` of `i` (most significant
    /// first) decides coordinate `j`.
    pub fn from_index(d: usize, i: usize) -> Self {
        BoolVec((0..d).map(|j| (i >> (d - 1 - j)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_all_true(&self) -> bool {
        self.0.iter().all(|b| *b)
    }

    pub fn not(&self) -> BoolVec {
        BoolVec(self.0.iter().map(|b| !b).collect())
    }

    pub fn and(&self, other: &BoolVec) -> BoolVec {
        assert_eq!(self.len(), other.len(), "dimension mismatch");
        BoolVec(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }
}

impl fmt::Display for BoolVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<&str> = self.0.iter().map(|b| if *b { "t" } else { "f" }).collect();
        write!(f, "({})", s.join(","))
    }
}

/// A finite set of Boolean vectors, canonically ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolVecSet(BTreeSet<BoolVec>);

impl BoolVecSet {
    pub fn empty() -> Self {
        BoolVecSet(BTreeSet::new())
    }

    pub fn singleton(b: BoolVec) -> Self {
        BoolVecSet(std::iter::once(b).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BoolVec> {
        self.0.iter()
    }

    pub fn contains(&self, b: &BoolVec) -> bool {
        self.0.contains(b)
    }

    pub fn insert(&mut self, b: BoolVec) -> bool {
        self.0.insert(b)
    }

    pub fn union(&self, other: &BoolVecSet) -> BoolVecSet {
        BoolVecSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &BoolVecSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<BoolVec> for BoolVecSet {
    fn from_iter<I: IntoIterator<Item = BoolVec>>(iter: I) -> Self {
        BoolVecSet(iter.into_iter().collect())
    }
}

impl fmt::Display for BoolVecSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", s.join(", "))
    }
}

pub fn abs_not(s: &BoolVecSet) -> BoolVecSet {
    s.iter().map(BoolVec::not).collect()
}

pub fn abs_and(s1: &BoolVecSet, s2: &BoolVecSet) -> BoolVecSet {
    let mut out = BoolVecSet::empty();
    for a in s1.iter() {
        for b in s2.iter() {
            out.insert(a.and(b));
        }
    }
    out
}

/// Points enumerated per side before falling back to ILP alone.
const CHEAP_WITNESS_CAP: usize = 256;

fn comparison(a: &[BigInt], b: &[BigInt]) -> BoolVec {
    BoolVec(a.iter().zip(b).map(|(x, y)| x < y).collect())
}

/// Is some `o1 ∈ γ(l1)`, `o2 ∈ γ(l2)` related by exactly pattern `b`?
fn pattern_feasible(
    l1: &LinearSet,
    l2: &LinearSet,
    b: &BoolVec,
    oracle: &dyn Oracle,
) -> Result<bool, IlpError> {
    let mut sys = IlpSystem::new();
    let lam: Vec<usize> = (0..l1.gens().len()).map(|k| sys.add_var(format!("l{k}"), true)).collect();
    let mu: Vec<usize> = (0..l2.gens().len()).map(|k| sys.add_var(format!("m{k}"), true)).collect();
    for (j, bit) in b.bits().iter().enumerate() {
        // diff = o1_j - o2_j = (u1_j - u2_j) + Σλ v1_j - Σμ v2_j
        let mut terms = Vec::new();
        for (k, v) in l1.gens().iter().enumerate() {
            terms.push((lam[k], v[j].clone()));
        }
        for (k, v) in l2.gens().iter().enumerate() {
            terms.push((mu[k], -v[j].clone()));
        }
        let off = &l1.base()[j] - &l2.base()[j];
        if *bit {
            // diff < 0, i.e. diff <= -1
            sys.add(&terms, Rel::Le, -off - BigInt::one());
        } else {
            // diff >= 0, i.e. -diff <= 0
            let neg: Vec<(usize, BigInt)> = terms.into_iter().map(|(v, c)| (v, -c)).collect();
            sys.add(&neg, Rel::Le, off);
        }
    }
    Ok(oracle.feasible(&sys)?.is_sat())
}

/// `⟦LessThan⟧̂(sl1, sl2)`: every comparison pattern realized by a pair of
/// concrete vectors.
pub fn abs_less_than(
    sl1: &SemiLinearSet,
    sl2: &SemiLinearSet,
    oracle: &dyn Oracle,
) -> Result<BoolVecSet, IlpError> {
    let d = sl1.dim();
    assert_eq!(d, sl2.dim(), "dimension mismatch");
    let mut found = BoolVecSet::empty();
    if sl1.is_zero() || sl2.is_zero() {
        return Ok(found);
    }
    if let (Some(p1), Some(p2)) = (
        sl1.gamma_bounded_capped(2, CHEAP_WITNESS_CAP),
        sl2.gamma_bounded_capped(2, CHEAP_WITNESS_CAP),
    ) {
        for a in &p1 {
            for b in &p2 {
                found.insert(comparison(a, b));
            }
        }
    }
    for i in 0..(1usize << d) {
        let b = BoolVec::from_index(d, i);
        if found.contains(&b) {
            continue;
        }
        'pairs: for l1 in sl1.components() {
            for l2 in sl2.components() {
                if pattern_feasible(l1, l2, &b, oracle)? {
                    found.insert(b.clone());
                    break 'pairs;
                }
            }
        }
    }
    Ok(found)
}

/// Memo table for [`abs_less_than`], safe to share between threads.
#[derive(Debug, Default)]
pub struct LessThanMemo {
    table: Mutex<HashMap<(SemiLinearSet, SemiLinearSet), BoolVecSet>>,
}

impl LessThanMemo {
    pub fn new() -> Self {
        LessThanMemo::default()
    }

    pub fn less_than(
        &self,
        sl1: &SemiLinearSet,
        sl2: &SemiLinearSet,
        oracle: &dyn Oracle,
    ) -> Result<BoolVecSet, IlpError> {
        let key = (sl1.clone(), sl2.clone());
        if let Some(hit) = self.table.lock().expect("memo poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let v = abs_less_than(sl1, sl2, oracle)?;
        self.table.lock().expect("memo poisoned").insert(key, v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.table.lock().expect("memo poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
