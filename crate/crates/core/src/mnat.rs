//! Set functions on finite families, M-natural concavity, and the base-family matroid.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::rational::{sum_over, zero, Q};
use crate::set::ElemSet;

/// A function from a finite family of subsets of `ground` to the rationals.
/// Sets outside the family have value minus infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuedFamily {
    ground: ElemSet,
    values: BTreeMap<ElemSet, Q>,
}

/// Members `x`, `y` of the domain and `element` in `x - y` for which
/// neither exchange of the concavity condition holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MnatViolation {
    pub x: ElemSet,
    pub y: ElemSet,
    pub element: usize,
}

impl ValuedFamily {
    pub fn new(ground: ElemSet, values: BTreeMap<ElemSet, Q>) -> Result<Self> {
        if let Some(x) = values.keys().find(|x| !x.is_subset(ground)) {
            return Err(Error::Domain(format!("member {x:?} is not a subset of the ground")));
        }
        Ok(ValuedFamily { ground, values })
    }

    /// The indicator of a family: zero on members.
    pub fn indicator(ground: ElemSet, family: &[ElemSet]) -> Result<Self> {
        ValuedFamily::new(ground, family.iter().map(|&x| (x, zero())).collect())
    }

    pub fn ground(&self) -> ElemSet {
        self.ground
    }

    pub fn value(&self, x: ElemSet) -> Option<&Q> {
        self.values.get(&x)
    }

    pub fn contains(&self, x: ElemSet) -> bool {
        self.values.contains_key(&x)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Domain members with their values, canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (ElemSet, &Q)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn domain(&self) -> Vec<ElemSet> {
        self.values.keys().copied().collect()
    }

    /// `f[q](x) = f(x) + q(x)`.
    pub fn shift(&self, q: &[Q]) -> ValuedFamily {
        ValuedFamily {
            ground: self.ground,
            values: self
                .values
                .iter()
                .map(|(x, v)| (*x, v + sum_over(*x, q)))
                .collect(),
        }
    }

    /// Maximum value and all maximizers; `None` on an empty domain.
    pub fn maximize(&self) -> Option<(Q, Vec<ElemSet>)> {
        let best = self.values.values().max()?.clone();
        let arg = self
            .values
            .iter()
            .filter(|(_, v)| **v == best)
            .map(|(x, _)| *x)
            .collect();
        Some((best, arg))
    }

    /// The maximizers as a zero-valued family.
    pub fn argmax_family(&self) -> ValuedFamily {
        let arg = self.maximize().map(|(_, a)| a).unwrap_or_default();
        ValuedFamily {
            ground: self.ground,
            values: arg.into_iter().map(|x| (x, zero())).collect(),
        }
    }

    /// Members contained in `within`.
    pub fn restrict_to(&self, within: ElemSet) -> ValuedFamily {
        ValuedFamily {
            ground: self.ground.intersection(within),
            values: self
                .values
                .iter()
                .filter(|(x, _)| x.is_subset(within))
                .map(|(x, v)| (*x, v.clone()))
                .collect(),
        }
    }

    /// First violation of the exchange condition in canonical order, if any.
    pub fn mnat_violation(&self) -> Option<MnatViolation> {
        let members: Vec<(ElemSet, &Q)> = self.iter().collect();
        for &(x, fx) in &members {
            for &(y, fy) in &members {
                let lhs = fx + fy;
                for e in x.difference(y).iter() {
                    if !self.exchange_holds(x, y, e, &lhs) {
                        return Some(MnatViolation { x, y, element: e });
                    }
                }
            }
        }
        None
    }

    fn exchange_holds(&self, x: ElemSet, y: ElemSet, e: usize, lhs: &Q) -> bool {
        let pair = |a: ElemSet, b: ElemSet| match (self.value(a), self.value(b)) {
            (Some(fa), Some(fb)) => fa + fb >= *lhs,
            _ => false,
        };
        if pair(x.without(e), y.with(e)) {
            return true;
        }
        y.difference(x)
            .iter()
            .any(|f| pair(x.without(e).with(f), y.with(e).without(f)))
    }

    pub fn is_mnat_concave(&self) -> bool {
        !self.is_empty() && self.mnat_violation().is_none()
    }
}

/// The family `{B within S + D : B & S in family, |B| = t}` as an explicit base matroid.
///
/// The family must be M-natural convex (checked here when the ground is small)
/// and `dummies` must avoid its ground.
pub fn base_family_from(family: &ValuedFamily, dummies: ElemSet, t: usize) -> Result<Matroid> {
    let s = family.ground();
    if !s.is_disjoint(dummies) {
        return Err(Error::Precondition("dummies overlap the family ground".into()));
    }
    if s.len() <= 12 {
        let convex = ValuedFamily::indicator(s, &family.domain())?;
        if let Some(v) = convex.mnat_violation() {
            return Err(Error::Precondition(format!(
                "family is not M-natural convex: exchange fails for {:?}, {:?} at {}",
                v.x, v.y, v.element
            )));
        }
    }
    let mut bases = Vec::new();
    for x in family.domain() {
        if x.len() > t || t - x.len() > dummies.len() {
            continue;
        }
        for e in dummies.subsets_of_size(t - x.len()) {
            bases.push(x.union(e));
        }
    }
    if bases.is_empty() {
        return Err(Error::Infeasible(format!("no member extends to a set of size {t}")));
    }
    Matroid::from_bases(s.union(dummies), bases)
}
