//! Element sets over a small indexed universe.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Hard cap on the universe size; sets are stored as a single `u128`.
pub const MAX_UNIVERSE: usize = 128;

/// A subset of a universe of at most 128 indexed elements.
///
/// The `Ord` impl is the canonical order used everywhere: sets compare
/// lexicographically by their sorted member lists, so `{0} < {0,1} < {1}`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ElemSet(pub u128);

impl ElemSet {
    pub const EMPTY: ElemSet = ElemSet(0);

    pub fn singleton(e: usize) -> Self {
        ElemSet(1u128 << e)
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 128 {
            ElemSet(u128::MAX)
        } else {
            ElemSet((1u128 << n) - 1)
        }
    }

    pub fn contains(self, e: usize) -> bool {
        e < 128 && self.0 >> e & 1 == 1
    }

    pub fn insert(&mut self, e: usize) {
        self.0 |= 1u128 << e;
    }

    pub fn remove(&mut self, e: usize) {
        self.0 &= !(1u128 << e);
    }

    pub fn with(self, e: usize) -> Self {
        ElemSet(self.0 | 1u128 << e)
    }

    pub fn without(self, e: usize) -> Self {
        ElemSet(self.0 & !(1u128 << e))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: Self) -> Self {
        ElemSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        ElemSet(self.0 & o.0)
    }

    pub fn difference(self, o: Self) -> Self {
        ElemSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: Self) -> bool {
        self.0 & o.0 == 0
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `self`, in canonical order.
    pub fn subsets(self) -> Vec<ElemSet> {
        let mut out = self.subsets_unordered();
        out.sort();
        out
    }

    /// All subsets of `self` in bit-counting order (cheap, not canonical).
    pub fn subsets_unordered(self) -> Vec<ElemSet> {
        let members = self.to_vec();
        let m = members.len();
        assert!(m < 32, "subset enumeration over {m} elements");
        let mut out = Vec::with_capacity(1 << m);
        for code in 0u64..(1u64 << m) {
            let mut s = 0u128;
            for (i, &e) in members.iter().enumerate() {
                if code >> i & 1 == 1 {
                    s |= 1u128 << e;
                }
            }
            out.push(ElemSet(s));
        }
        out
    }

    /// Subsets of `self` with exactly `k` elements, canonical order.
    pub fn subsets_of_size(self, k: usize) -> Vec<ElemSet> {
        let members = self.to_vec();
        let mut out = Vec::new();
        let mut pick = Vec::with_capacity(k);
        fn rec(members: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<ElemSet>) {
            if pick.len() == k {
                out.push(ElemSet::from_iter(pick.iter().copied()));
                return;
            }
            for i in start..members.len() {
                if members.len() - i < k - pick.len() {
                    break;
                }
                pick.push(members[i]);
                rec(members, k, i + 1, pick, out);
                pick.pop();
            }
        }
        rec(&members, k, 0, &mut pick, &mut out);
        out.sort();
        out
    }
}

impl Ord for ElemSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.0 ^ other.0;
        if d == 0 {
            return Ordering::Equal;
        }
        let lo = d.trailing_zeros();
        // elements strictly above the first difference
        let above = if lo >= 127 { 0 } else { u128::MAX << (lo + 1) };
        if self.0 >> lo & 1 == 1 {
            // self holds the smaller next element unless other has ended
            if other.0 & above != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        } else if self.0 & above != 0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

impl PartialOrd for ElemSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ElemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut s = ElemSet::EMPTY;
        for e in it {
            s.insert(e);
        }
        s
    }
}

pub struct Iter(u128);

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let e = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(e)
    }
}

/// Named elements of a universe, indexed in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ground {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Ground {
    pub fn new<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let mut g = Ground::default();
        for id in ids {
            g.push(id.as_ref())?;
        }
        Ok(g)
    }

    /// Appends a fresh element and returns its index.
    pub fn push(&mut self, id: &str) -> Result<usize> {
        if self.index.contains_key(id) {
            return Err(Error::Schema(format!("duplicate element id `{id}`")));
        }
        if self.ids.len() >= MAX_UNIVERSE {
            return Err(Error::Budget(format!(
                "universe exceeds {MAX_UNIVERSE} elements"
            )));
        }
        self.index.insert(id.to_string(), self.ids.len());
        self.ids.push(id.to_string());
        Ok(self.ids.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn all(&self) -> ElemSet {
        ElemSet::full(self.ids.len())
    }

    pub fn id(&self, e: usize) -> &str {
        &self.ids[e]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn lookup(&self, id: &str) -> Result<usize> {
        self.get(id)
            .ok_or_else(|| Error::Domain(format!("unknown element `{id}`")))
    }

    pub fn set_of<S: AsRef<str>>(&self, ids: &[S]) -> Result<ElemSet> {
        let mut s = ElemSet::EMPTY;
        for id in ids {
            let e = self.lookup(id.as_ref())?;
            if s.contains(e) {
                return Err(Error::Schema(format!(
                    "element `{}` listed twice",
                    id.as_ref()
                )));
            }
            s.insert(e);
        }
        Ok(s)
    }

    pub fn names(&self, s: ElemSet) -> Vec<String> {
        s.iter().map(|e| self.ids[e].clone()).collect()
    }

    /// `{a, b}` style rendering for messages.
    pub fn show(&self, s: ElemSet) -> String {
        format!("{{{}}}", self.names(s).join(", "))
    }
}
