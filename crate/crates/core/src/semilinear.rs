//! Semi-linear sets over ℤ^d: the exact abstract domain for integer outputs.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::booldom::BoolVec;
use crate::ilp::{feasible_with, IlpError, IlpSystem, Oracle, Rel};

/// Node budget of the ILP behind `in_span`.
const REDUCE_BUDGET: u64 = 2_000;

pub type IntVec = Vec<BigInt>;

/// Whether `t` is a nonnegative integer combination of `gens`. Tries single
/// generators and pairs before a small ILP; an exhausted budget counts as no.
fn in_span(gens: &[IntVec], t: &IntVec) -> bool {
    if is_zero_vec(t) || gens.contains(t) {
        return true;
    }
    if gens.is_empty() {
        return false;
    }
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i..] {
            if add(a, b) == *t {
                return true;
            }
        }
    }
    let span = LinearSet { base: vec![BigInt::zero(); t.len()], gens: gens.to_vec() };
    matches!(feasible_with(&span.membership_system(t), REDUCE_BUDGET, None), Ok(o) if o.is_sat())
}

/// Integer vector from machine integers.
pub fn iv(v: &[i64]) -> IntVec {
    v.iter().map(|x| BigInt::from(*x)).collect()
}

fn add(a: &[BigInt], b: &[BigInt]) -> IntVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[BigInt], b: &[BigInt]) -> IntVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn is_zero_vec(v: &[BigInt]) -> bool {
    v.iter().all(Zero::is_zero)
}

fn fmt_vec(v: &[BigInt]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("dimension mismatch: {0} vs {1}")]
pub struct DimMismatch(pub usize, pub usize);

/// `⟨u, V⟩ = { u + Σ λ_k v_k | λ_k ∈ ℕ }`, generators sorted, deduplicated
/// and never zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearSet {
    base: IntVec,
    gens: Vec<IntVec>,
}

impl LinearSet {
    pub fn new(base: IntVec, gens: Vec<IntVec>) -> Self {
        let d = base.len();
        let mut gens: Vec<IntVec> = gens
            .into_iter()
            .inspect(|g| assert_eq!(g.len(), d, "generator dimension"))
            .filter(|g| !is_zero_vec(g))
            .collect();
        gens.sort();
        gens.dedup();
        LinearSet { base, gens }
    }

    pub fn base(&self) -> &[BigInt] {
        &self.base
    }

    pub fn gens(&self) -> &[IntVec] {
        &self.gens
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn proj(&self, b: &BoolVec) -> LinearSet {
        LinearSet::new(
            crate::grammar::proj_z(&self.base, b),
            self.gens.iter().map(|g| crate::grammar::proj_z(g, b)).collect(),
        )
    }

    /// ILP encoding `v = u + Σλ_k g_k` with one nonnegative λ per generator.
    pub fn membership_system(&self, v: &[BigInt]) -> IlpSystem {
        let mut sys = IlpSystem::new();
        let lam: Vec<usize> =
            (0..self.gens.len()).map(|k| sys.add_var(format!("l{k}"), true)).collect();
        let target = sub(v, &self.base);
        for (j, t) in target.into_iter().enumerate() {
            let terms: Vec<(usize, BigInt)> =
                self.gens.iter().enumerate().map(|(k, g)| (lam[k], g[j].clone())).collect();
            sys.add(&terms, Rel::Eq, t);
        }
        sys
    }

    pub fn contains(&self, v: &[BigInt], oracle: &dyn Oracle) -> Result<bool, IlpError> {
        if self.gens.is_empty() {
            return Ok(self.base.as_slice() == v);
        }
        Ok(oracle.feasible(&self.membership_system(v))?.is_sat())
    }

    /// The exact star `{0} ∪ ⟨u, V ∪ {u}⟩`, in the single-set form
    /// `⟨0, V ∪ {u}⟩` when that form denotes the same set.
    fn star(&self) -> SemiLinearSet {
        let d = self.dim();
        let mut gens = self.gens.clone();
        gens.push(self.base.clone());
        let single = self.gens.iter().all(|v| {
            let diff = sub(v, &self.base);
            is_zero_vec(&diff) || diff == self.base || self.gens.binary_search(&diff).is_ok()
        });
        if single {
            SemiLinearSet::from_components(d, vec![LinearSet::new(vec![BigInt::zero(); d], gens)])
        } else {
            SemiLinearSet::from_components(
                d,
                vec![LinearSet::new(vec![BigInt::zero(); d], vec![]), LinearSet::new(self.base.clone(), gens)],
            )
        }
    }

    /// Whether `-v` is a nonnegative integer combination of the generators.
    fn negation_in_span(&self, v: &IntVec) -> bool {
        let neg: IntVec = v.iter().map(|x| -x).collect();
        in_span(&self.gens, &neg)
    }

    /// Drops generators that are nonnegative combinations of the others.
    fn reduce_gens(&self) -> LinearSet {
        let norm = |u: &IntVec| -> BigInt { u.iter().map(|x| x.abs()).sum() };
        let mut gens = self.gens.clone();
        let mut order: Vec<IntVec> = gens.clone();
        order.sort_by_key(|g| std::cmp::Reverse(norm(g)));
        for g in order {
            if gens.len() < 2 {
                break;
            }
            let rest: Vec<IntVec> = gens.iter().filter(|h| **h != g).cloned().collect();
            if in_span(&rest, &g) {
                gens = rest;
            }
        }
        LinearSet { base: self.base.clone(), gens }
    }

    fn reduce_base(&self) -> LinearSet {
        let d = self.dim();
        let sign_blocked = |v: &IntVec| {
            (0..d).any(|i| {
                let s = v[i].sign();
                s != Sign::NoSign && self.gens.iter().all(|g| g[i].sign() != -s)
            })
        };
        let movable: Vec<&IntVec> = self
            .gens
            .iter()
            .filter(|v| !sign_blocked(v))
            .filter(|v| self.negation_in_span(v))
            .collect();
        if movable.is_empty() {
            return self.clone();
        }
        let norm = |u: &[BigInt]| -> BigInt { u.iter().map(|x| x.abs()).sum() };
        let mut base = self.base.clone();
        while let Some(next) = movable
            .iter()
            .map(|v| sub(&base, v))
            .filter(|u| norm(u) < norm(&base))
            .min_by_key(|u| norm(u))
        {
            base = next;
        }
        LinearSet { base, gens: self.gens.clone() }
    }

    fn gens_within(&self, other: &LinearSet) -> bool {
        self.gens.iter().all(|g| other.gens.binary_search(g).is_ok() || in_span(&other.gens, g))
    }
}

impl fmt::Display for LinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.gens.iter().map(|g| fmt_vec(g)).collect();
        write!(f, "⟨{},{{{}}}⟩", fmt_vec(&self.base), gens.join(","))
    }
}

/// A finite union of linear sets of one dimension. The empty union is `𝟎`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemiLinearSet {
    dim: usize,
    comps: Vec<LinearSet>,
}

impl SemiLinearSet {
    pub fn from_components(dim: usize, mut comps: Vec<LinearSet>) -> Self {
        for c in &comps {
            assert_eq!(c.dim(), dim, "component dimension");
        }
        comps.sort();
        comps.dedup();
        SemiLinearSet { dim, comps }
    }

    /// `𝟎`, the empty set.
    pub fn zero(dim: usize) -> Self {
        SemiLinearSet { dim, comps: Vec::new() }
    }

    /// `𝟏 = {⟨0⃗, ∅⟩}`.
    pub fn one(dim: usize) -> Self {
        SemiLinearSet::point(vec![BigInt::zero(); dim])
    }

    pub fn point(v: IntVec) -> Self {
        let d = v.len();
        SemiLinearSet { dim: d, comps: vec![LinearSet::new(v, Vec::new())] }
    }

    pub fn linear(base: IntVec, gens: Vec<IntVec>) -> Self {
        let d = base.len();
        SemiLinearSet { dim: d, comps: vec![LinearSet::new(base, gens)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn components(&self) -> &[LinearSet] {
        &self.comps
    }

    fn check(&self, other: &SemiLinearSet) -> Result<(), DimMismatch> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(DimMismatch(self.dim, other.dim))
        }
    }

    /// `a ⊕ b`: union of components.
    pub fn try_combine(&self, other: &SemiLinearSet) -> Result<SemiLinearSet, DimMismatch> {
        self.check(other)?;
        let comps = self.comps.iter().chain(&other.comps).cloned().collect();
        Ok(SemiLinearSet::from_components(self.dim, comps))
    }

    /// Panics on dimension mismatch; see [`SemiLinearSet::try_combine`].
    pub fn combine(&self, other: &SemiLinearSet) -> SemiLinearSet {
        self.try_combine(other).expect("combine")
    }

    /// `a ⊗ b`: pairwise base sums with generator unions.
    pub fn try_extend(&self, other: &SemiLinearSet) -> Result<SemiLinearSet, DimMismatch> {
        self.check(other)?;
        let mut comps = Vec::with_capacity(self.comps.len() * other.comps.len());
        for a in &self.comps {
            for b in &other.comps {
                let gens = a.gens.iter().chain(&b.gens).cloned().collect();
                comps.push(LinearSet::new(add(&a.base, &b.base), gens));
            }
        }
        Ok(SemiLinearSet::from_components(self.dim, comps))
    }

    /// Panics on dimension mismatch; see [`SemiLinearSet::try_extend`].
    pub fn extend(&self, other: &SemiLinearSet) -> SemiLinearSet {
        self.try_extend(other).expect("extend")
    }

    /// `a⊛ = 𝟏 ⊕ a ⊕ a⊗a ⊕ …`, computed exactly as the product of the
    /// per-component stars.
    pub fn star(&self) -> SemiLinearSet {
        let mut acc = SemiLinearSet::one(self.dim);
        for c in &self.comps {
            acc = acc.extend(&c.star());
        }
        acc
    }

    pub fn try_proj(&self, b: &BoolVec) -> Result<SemiLinearSet, DimMismatch> {
        if b.len() != self.dim {
            return Err(DimMismatch(self.dim, b.len()));
        }
        Ok(SemiLinearSet::from_components(self.dim, self.comps.iter().map(|c| c.proj(b)).collect()))
    }

    /// `proj_SL(a, b)`: zero every coordinate where `b` is false.
    pub fn proj(&self, b: &BoolVec) -> SemiLinearSet {
        self.try_proj(b).expect("proj")
    }

    /// Drops components `⟨u1,V1⟩` for which a kept `⟨u2,V2⟩` has
    /// `V1 ⊆ V2` and `u1 ∈ ⟨u2,V2⟩`. Undecided membership keeps the component.
    pub fn prune(&self, oracle: &dyn Oracle) -> SemiLinearSet {
        let reduced = SemiLinearSet::from_components(
            self.dim,
            self.comps.iter().map(|c| c.reduce_gens().reduce_base()).collect(),
        );
        if reduced.comps.len() < 2 {
            return reduced;
        }
        let mut kept = vec![true; reduced.comps.len()];
        // try to drop components with fewer generators first and, among
        // mutually subsuming ones, keep the smallest base
        let mut order: Vec<usize> = (0..reduced.comps.len()).collect();
        order.sort_by_key(|&i| {
            let c = &reduced.comps[i];
            let norm: BigInt = c.base.iter().map(|x| x.abs()).sum();
            (c.gens.len(), std::cmp::Reverse(norm))
        });
        for &i in &order {
            let l1 = &reduced.comps[i];
            let subsumed = (0..reduced.comps.len()).any(|j| {
                if j == i || !kept[j] {
                    return false;
                }
                let l2 = &reduced.comps[j];
                l1.gens_within(l2) && l2.contains(&l1.base, oracle).unwrap_or(false)
            });
            if subsumed {
                kept[i] = false;
            }
        }
        let comps = reduced.comps.iter().zip(&kept).filter(|(_, k)| **k).map(|(c, _)| c.clone()).collect();
        SemiLinearSet { dim: self.dim, comps }
    }

    /// `Σ_i (|V_i| + 1)`.
    pub fn size(&self) -> usize {
        self.comps.iter().map(|c| c.gens.len() + 1).sum()
    }

    /// `{ u + Σ λ_k v_k | 0 ≤ λ_k ≤ budget }` over all components.
    pub fn gamma_bounded(&self, budget: u32) -> BTreeSet<IntVec> {
        self.gamma_bounded_capped(budget, usize::MAX).expect("uncapped")
    }

    /// Like [`SemiLinearSet::gamma_bounded`], but gives up (returns `None`)
    /// when more than `cap` combinations would be enumerated.
    pub fn gamma_bounded_capped(&self, budget: u32, cap: usize) -> Option<BTreeSet<IntVec>> {
        let per = budget as usize + 1;
        let mut total = 0usize;
        for c in &self.comps {
            let mut n = 1usize;
            for _ in &c.gens {
                n = n.checked_mul(per)?;
            }
            total = total.checked_add(n)?;
            if total > cap {
                return None;
            }
        }
        let mut out = BTreeSet::new();
        for c in &self.comps {
            let k = c.gens.len();
            let mut lam = vec![0u32; k];
            loop {
                let mut v = c.base.clone();
                for (l, g) in lam.iter().zip(&c.gens) {
                    if *l > 0 {
                        let l = BigInt::from(*l);
                        for (x, y) in v.iter_mut().zip(g) {
                            *x += &l * y;
                        }
                    }
                }
                out.insert(v);
                let mut i = 0;
                while i < k {
                    lam[i] += 1;
                    if lam[i] <= budget {
                        break;
                    }
                    lam[i] = 0;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
        }
        Some(out)
    }

    /// Exact membership `v ∈ γ(a)`.
    pub fn contains(&self, v: &[BigInt], oracle: &dyn Oracle) -> Result<bool, IlpError> {
        let mut err = None;
        for c in &self.comps {
            match c.contains(v, oracle) {
                Ok(true) => return Ok(true),
                Ok(false) => {}
                Err(e) => err = Some(e),
            }
        }
        match err {
            Some(e) => Err(e),
            None => Ok(false),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        fn num(v: &BigInt) -> serde_json::Value {
            match v.to_i64() {
                Some(i) => serde_json::Value::from(i),
                None => serde_json::Value::from(v.to_string()),
            }
        }
        let vec = |v: &[BigInt]| serde_json::Value::Array(v.iter().map(num).collect());
        let comps: Vec<serde_json::Value> = self
            .comps
            .iter()
            .map(|c| {
                serde_json::json!({
                    "base": vec(&c.base),
                    "gens": c.gens.iter().map(|g| vec(g)).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "components": comps })
    }
}

impl Serialize for SemiLinearSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl fmt::Display for SemiLinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.comps.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
