//! Brute-force oracles over small ground sets.

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::set::ElemSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_ground: usize,
    pub max_candidates: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_ground: 12,
            max_candidates: 1 << 22,
        }
    }
}

impl EnumerationBudget {
    pub fn with_max_ground(max_ground: usize) -> Self {
        EnumerationBudget {
            max_ground,
            ..Default::default()
        }
    }

    pub fn check_ground(&self, ground: ElemSet) -> Result<()> {
        if ground.len() > self.max_ground {
            return Err(Error::Budget(format!(
                "ground of {} elements exceeds the limit of {}",
                ground.len(),
                self.max_ground
            )));
        }
        Ok(())
    }

    pub fn check_count(&self, n: usize) -> Result<()> {
        if n > self.max_candidates {
            return Err(Error::Budget(format!(
                "{n} candidates exceed the limit of {}",
                self.max_candidates
            )));
        }
        Ok(())
    }
}

/// Subsets of `ground` satisfying `pred`, canonical order.
pub fn enumerate_family(
    ground: ElemSet,
    budget: &EnumerationBudget,
    pred: impl Fn(ElemSet) -> bool,
) -> Result<Vec<ElemSet>> {
    budget.check_ground(ground)?;
    let mut out: Vec<ElemSet> = ground
        .subsets_unordered()
        .into_iter()
        .filter(|s| pred(*s))
        .collect();
    budget.check_count(out.len())?;
    out.sort();
    Ok(out)
}

fn same_ground(m1: &Matroid, m2: &Matroid) -> Result<ElemSet> {
    if m1.ground() != m2.ground() {
        return Err(Error::Precondition(
            "both matroids must share one ground set".into(),
        ));
    }
    Ok(m1.ground())
}

/// Common independent sets, canonical order.
pub fn enumerate_cis(m1: &Matroid, m2: &Matroid, budget: &EnumerationBudget) -> Result<Vec<ElemSet>> {
    let g = same_ground(m1, m2)?;
    enumerate_family(g, budget, |x| m1.indep(x) && m2.indep(x))
}

/// Common bases, canonical order (empty when the ranks differ).
pub fn enumerate_common_bases(
    m1: &Matroid,
    m2: &Matroid,
    budget: &EnumerationBudget,
) -> Result<Vec<ElemSet>> {
    let g = same_ground(m1, m2)?;
    budget.check_ground(g)?;
    let r = m1.full_rank();
    if r != m2.full_rank() {
        return Ok(Vec::new());
    }
    Ok(g.subsets_of_size(r)
        .into_iter()
        .filter(|x| m1.indep(*x) && m2.indep(*x))
        .collect())
}

/// Members attaining the maximum of `value`, with that maximum.
pub fn maximizers<V: Ord + Clone>(family: &[ElemSet], value: impl Fn(ElemSet) -> V) -> Option<(V, Vec<ElemSet>)> {
    let mut best: Option<V> = None;
    let mut arg = Vec::new();
    for &x in family {
        let v = value(x);
        match &best {
            Some(b) if v < *b => {}
            Some(b) if v == *b => arg.push(x),
            _ => {
                best = Some(v);
                arg = vec![x];
            }
        }
    }
    best.map(|b| (b, arg))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dominated {
    pub member: ElemSet,
    pub rival: ElemSet,
    /// `score(member, rival)`, always negative.
    pub margin: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BrutePopular {
    pub popular: Vec<ElemSet>,
    pub dominated: Vec<Dominated>,
}

/// Members `x` with `score(x, y) >= 0` against every `y`; the others get a witness.
pub fn brute_popular(
    family: &[ElemSet],
    mut score: impl FnMut(ElemSet, ElemSet) -> Result<i64>,
) -> Result<BrutePopular> {
    let mut out = BrutePopular::default();
    'members: for &x in family {
        for &y in family {
            let s = score(x, y)?;
            if s < 0 {
                out.dominated.push(Dominated {
                    member: x,
                    rival: y,
                    margin: s,
                });
                continue 'members;
            }
        }
        out.popular.push(x);
    }
    Ok(out)
}
