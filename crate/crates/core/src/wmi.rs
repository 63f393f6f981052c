//! Weighted matroid intersection: exact maxima, chain duals, complementary
//! slackness, and splitting vectors for sums of M-natural concave functions.

use std::collections::BTreeMap;

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exhaustive::{enumerate_cis, maximizers, EnumerationBudget};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::matroid::{Matroid, RankOracle};
use crate::mnat::ValuedFamily;
use crate::rational::{one, q, sum_over, zero, Q};
use crate::set::ElemSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxWeight {
    pub opt: Q,
    /// All maximizers, canonical order.
    pub maximizers: Vec<ElemSet>,
}

/// Maximum of `w(I)` over common independent sets, by enumeration.
pub fn max_weight_cis(
    m1: &Matroid,
    m2: &Matroid,
    w: &[Q],
    budget: &EnumerationBudget,
) -> Result<MaxWeight> {
    let cis = enumerate_cis(m1, m2, budget)?;
    let (opt, maximizers) =
        maximizers(&cis, |x| sum_over(x, w)).expect("the empty set is always common independent");
    Ok(MaxWeight { opt, maximizers })
}

/// Splitting vector `p` with `argmax(f1 + f2) = argmax(f1[+p]) & argmax(f2[-p])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSplit {
    pub p: Vec<Q>,
    /// The common maximizer the vector was built around.
    pub pivot: ElemSet,
}

/// Finds a splitting vector by exact LP feasibility around one maximizer of `f1 + f2`.
pub fn weight_split(f1: &ValuedFamily, f2: &ValuedFamily) -> Result<WeightSplit> {
    if f1.ground() != f2.ground() {
        return Err(Error::Precondition("both functions need the same ground".into()));
    }
    let ground = f1.ground();
    let sum = sum_family(f1, f2)?;
    let (_, arg) = sum
        .maximize()
        .ok_or_else(|| Error::Infeasible("the domains share no member".into()))?;
    let pivot = arg[0];
    let elems = ground.to_vec();
    let k = elems.len();
    let col = |j: usize| j; // p+ at j, p- at k + j
    // p(A) - p(B) as a sparse row over (p+, p-)
    let diff = |a: ElemSet, b: ElemSet| {
        let mut row = Vec::new();
        for (j, &e) in elems.iter().enumerate() {
            let c = a.contains(e) as i64 - b.contains(e) as i64;
            if c != 0 {
                row.push((col(j), q(c)));
                row.push((k + j, q(-c)));
            }
        }
        row
    };
    let mut lp = LinearProgram::new(2 * k);
    lp.objective = vec![one(); 2 * k];
    let f1x = f1.value(pivot).expect("pivot in domain");
    let f2x = f2.value(pivot).expect("pivot in domain");
    for (y, f1y) in f1.iter() {
        // f1(X*) + p(X*) >= f1(Y) + p(Y)
        lp.add(diff(pivot, y), Relation::Ge, f1y - f1x);
    }
    for (z, f2z) in f2.iter() {
        // f2(X*) - p(X*) >= f2(Z) - p(Z)
        lp.add(diff(z, pivot), Relation::Ge, f2z - f2x);
    }
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        _ => {
            return Err(Error::Precondition(
                "no splitting vector exists; the functions are not both M-natural concave".into(),
            ))
        }
    };
    let n = elems.last().map_or(0, |m| m + 1);
    let mut p = vec![zero(); n];
    for (j, &e) in elems.iter().enumerate() {
        p[e] = &x[j] - &x[k + j];
    }
    let split = WeightSplit { p, pivot };
    let lhs = sum.argmax_family().domain();
    let rhs = split_intersection(f1, f2, &split.p);
    if lhs != rhs {
        return Err(Error::Internal(
            "splitting vector does not reproduce the maximizers".into(),
        ));
    }
    Ok(split)
}

/// `argmax(f1[+p]) & argmax(f2[-p])`, canonical order.
pub fn split_intersection(f1: &ValuedFamily, f2: &ValuedFamily, p: &[Q]) -> Vec<ElemSet> {
    let neg: Vec<Q> = p.iter().map(|v| -v.clone()).collect();
    let a = f1.shift(p).argmax_family();
    let b = f2.shift(&neg).argmax_family();
    a.domain().into_iter().filter(|x| b.contains(*x)).collect()
}

/// Pointwise sum on the common domain.
pub fn sum_family(f1: &ValuedFamily, f2: &ValuedFamily) -> Result<ValuedFamily> {
    let values = f1
        .iter()
        .filter_map(|(x, a)| f2.value(x).map(|b| (x, a + b)))
        .collect();
    ValuedFamily::new(f1.ground(), values)
}

/// Chain-supported optimal dual for a partition matroid with unit capacities
/// (one `alpha` per part) intersected with `m2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneSidedDual {
    pub y: BTreeMap<ElemSet, Q>,
    pub alpha: Vec<Q>,
    pub value: Q,
}

/// Chain-supported optimal dual for two general matroids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoSidedDual {
    pub y: BTreeMap<ElemSet, Q>,
    pub z: BTreeMap<ElemSet, Q>,
    pub value: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsViolation {
    /// Which slackness condition failed: `1.1`, `1.2`, `1.3`, `2.1` or `2.2`.
    pub condition: &'static str,
    pub detail: String,
}

/// Support of a chain-supported dual, smallest set first.
pub fn chain_of(y: &BTreeMap<ElemSet, Q>) -> Vec<ElemSet> {
    let mut c: Vec<ElemSet> = y.keys().copied().collect();
    c.sort_by_key(|x| x.len());
    c
}

pub fn is_chain(sets: &[ElemSet]) -> bool {
    sets.iter()
        .all(|a| sets.iter().all(|b| a.is_subset(*b) || b.is_subset(*a)))
}

/// `sum over X containing u of y(X)` for every `u`.
pub fn coverage(y: &BTreeMap<ElemSet, Q>, u: usize) -> Q {
    y.iter()
        .filter(|(x, _)| x.contains(u))
        .fold(zero(), |acc, (_, v)| acc + v)
}

/// Replaces `y` by the chain with the same coverage: the terminal state of
/// repeated uncrossing steps. Zero entries and the empty set are dropped.
pub fn uncross(y: &BTreeMap<ElemSet, Q>) -> BTreeMap<ElemSet, Q> {
    let support = y
        .iter()
        .filter(|(_, v)| v.is_positive())
        .fold(ElemSet::EMPTY, |acc, (x, _)| acc.union(*x));
    let mut levels: Vec<(Q, usize)> = support.iter().map(|u| (coverage(y, u), u)).collect();
    levels.sort_by(|a, b| b.0.cmp(&a.0));
    let mut out = BTreeMap::new();
    let mut set = ElemSet::EMPTY;
    for i in 0..levels.len() {
        set.insert(levels[i].1);
        let next = levels.get(i + 1).map_or_else(zero, |l| l.0.clone());
        let gap = &levels[i].0 - &next;
        if gap.is_positive() {
            out.insert(set, gap);
        }
    }
    out
}

/// One uncrossing step on the first incomparable pair of the support, if any.
pub fn uncross_step(y: &BTreeMap<ElemSet, Q>) -> Option<BTreeMap<ElemSet, Q>> {
    let support: Vec<ElemSet> = y
        .iter()
        .filter(|(x, v)| v.is_positive() && !x.is_empty())
        .map(|(x, _)| *x)
        .collect();
    for (i, &a) in support.iter().enumerate() {
        for &b in &support[i + 1..] {
            if a.is_subset(b) || b.is_subset(a) {
                continue;
            }
            let eps = y[&a].clone().min(y[&b].clone());
            let mut out = y.clone();
            for (x, d) in [(a, -eps.clone()), (b, -eps.clone()), (a.intersection(b), eps.clone()), (a.union(b), eps.clone())] {
                *out.entry(x).or_insert_with(zero) += d;
            }
            out.retain(|x, v| !v.is_zero() && !x.is_empty());
            return Some(out);
        }
    }
    None
}

fn nonempty_subsets(ground: ElemSet, budget: &EnumerationBudget) -> Result<Vec<ElemSet>> {
    budget.check_ground(ground)?;
    let mut v = ground.subsets();
    v.retain(|x| !x.is_empty());
    Ok(v)
}

fn part_index(parts: &[ElemSet], ground: ElemSet) -> Result<Vec<usize>> {
    let mut covered = ElemSet::EMPTY;
    let n = ground.iter().last().map_or(0, |m| m + 1);
    let mut idx = vec![usize::MAX; n];
    for (i, p) in parts.iter().enumerate() {
        if !p.is_disjoint(covered) {
            return Err(Error::Precondition("parts overlap".into()));
        }
        covered = covered.union(*p);
        for u in p.iter() {
            if u < n {
                idx[u] = i;
            }
        }
    }
    if covered != ground {
        return Err(Error::Precondition("parts must partition the ground of M2".into()));
    }
    Ok(idx)
}

/// Optimal dual with chain support for the one-sided problem.
pub fn solve_dual_one(
    parts: &[ElemSet],
    m2: &Matroid,
    w: &[Q],
    budget: &EnumerationBudget,
) -> Result<OneSidedDual> {
    let ground = m2.ground();
    let part_of = part_index(parts, ground)?;
    let subsets = nonempty_subsets(ground, budget)?;
    let rank = RankOracle::new(m2);
    let ns = subsets.len();
    let mut lp = LinearProgram::new(ns + parts.len());
    for (j, x) in subsets.iter().enumerate() {
        lp.objective[j] = q(rank.rank(*x) as i64);
    }
    for i in 0..parts.len() {
        lp.objective[ns + i] = one();
    }
    for u in ground.iter() {
        let mut row: Vec<(usize, Q)> = subsets
            .iter()
            .enumerate()
            .filter(|(_, x)| x.contains(u))
            .map(|(j, _)| (j, one()))
            .collect();
        row.push((ns + part_of[u], one()));
        lp.add(row, Relation::Ge, w[u].clone());
    }
    let LpOutcome::Optimal { x, value } = lp.solve() else {
        return Err(Error::Internal("dual LP has no optimum".into()));
    };
    let y: BTreeMap<ElemSet, Q> = subsets
        .iter()
        .zip(&x)
        .filter(|(_, v)| !v.is_zero())
        .map(|(s, v)| (*s, v.clone()))
        .collect();
    let y = uncross(&y);
    let alpha = x[ns..].to_vec();
    Ok(OneSidedDual { y, alpha, value })
}

/// Optimal dual with chain supports for the two-sided problem.
pub fn solve_dual_two(
    m1: &Matroid,
    m2: &Matroid,
    w: &[Q],
    budget: &EnumerationBudget,
) -> Result<TwoSidedDual> {
    if m1.ground() != m2.ground() {
        return Err(Error::Precondition("both matroids must share one ground set".into()));
    }
    let ground = m1.ground();
    let subsets = nonempty_subsets(ground, budget)?;
    let (r1, r2) = (RankOracle::new(m1), RankOracle::new(m2));
    let ns = subsets.len();
    let mut lp = LinearProgram::new(2 * ns);
    for (j, x) in subsets.iter().enumerate() {
        lp.objective[j] = q(r1.rank(*x) as i64);
        lp.objective[ns + j] = q(r2.rank(*x) as i64);
    }
    for u in ground.iter() {
        let mut row = Vec::new();
        for (j, x) in subsets.iter().enumerate() {
            if x.contains(u) {
                row.push((j, one()));
                row.push((ns + j, one()));
            }
        }
        lp.add(row, Relation::Ge, w[u].clone());
    }
    let LpOutcome::Optimal { x, value } = lp.solve() else {
        return Err(Error::Internal("dual LP has no optimum".into()));
    };
    let pick = |off: usize| -> BTreeMap<ElemSet, Q> {
        subsets
            .iter()
            .zip(&x[off..off + ns])
            .filter(|(_, v)| !v.is_zero())
            .map(|(s, v)| (*s, v.clone()))
            .collect()
    };
    Ok(TwoSidedDual {
        y: uncross(&pick(0)),
        z: uncross(&pick(ns)),
        value,
    })
}

impl OneSidedDual {
    /// Covering slack is zero: `y`-coverage plus the part's `alpha` equals `w(u)`.
    pub fn is_tight(&self, parts: &[ElemSet], w: &[Q], u: usize) -> bool {
        let i = parts.iter().position(|p| p.contains(u)).expect("element in a part");
        coverage(&self.y, u) + &self.alpha[i] == w[u]
    }

    pub fn tight_elements(&self, parts: &[ElemSet], w: &[Q]) -> ElemSet {
        parts
            .iter()
            .fold(ElemSet::EMPTY, |a, p| a.union(*p))
            .iter()
            .filter(|&u| self.is_tight(parts, w, u))
            .collect()
    }

    pub fn objective(&self, m2: &Matroid) -> Q {
        let mut v = self.alpha.iter().fold(zero(), |a, b| a + b);
        for (x, y) in &self.y {
            v += y * q(m2.rank(*x) as i64);
        }
        v
    }

    pub fn is_feasible(&self, parts: &[ElemSet], w: &[Q]) -> bool {
        self.y.values().all(|v| !v.is_negative())
            && self.alpha.iter().all(|v| !v.is_negative())
            && parts.iter().enumerate().all(|(i, p)| {
                p.iter()
                    .all(|u| coverage(&self.y, u) + &self.alpha[i] >= w[u])
            })
    }
}

impl TwoSidedDual {
    pub fn tight_elements(&self, ground: ElemSet, w: &[Q]) -> ElemSet {
        ground
            .iter()
            .filter(|&u| coverage(&self.y, u) + coverage(&self.z, u) == w[u])
            .collect()
    }

    pub fn objective(&self, m1: &Matroid, m2: &Matroid) -> Q {
        let mut v = zero();
        for (x, y) in &self.y {
            v += y * q(m1.rank(*x) as i64);
        }
        for (x, z) in &self.z {
            v += z * q(m2.rank(*x) as i64);
        }
        v
    }

    pub fn is_feasible(&self, ground: ElemSet, w: &[Q]) -> bool {
        self.y.values().chain(self.z.values()).all(|v| !v.is_negative())
            && ground
                .iter()
                .all(|u| coverage(&self.y, u) + coverage(&self.z, u) >= w[u])
    }
}

fn require_cis(i: ElemSet, m1: &Matroid, m2: &Matroid) -> Result<()> {
    if !(m1.is_independent(i)? && m2.is_independent(i)?) {
        return Err(Error::Precondition(format!("{i:?} is not common independent")));
    }
    Ok(())
}

/// Complementary slackness against a one-sided chain dual; `None` when all conditions hold.
pub fn check_cs_one(
    i: ElemSet,
    dual: &OneSidedDual,
    parts: &[ElemSet],
    m2: &Matroid,
    w: &[Q],
) -> Result<Option<CsViolation>> {
    let m1 = Matroid::partition(parts.iter().map(|p| (*p, 1)).collect())?;
    require_cis(i, &m1, m2)?;
    for u in i.iter() {
        if !dual.is_tight(parts, w, u) {
            return Ok(Some(CsViolation {
                condition: "1.1",
                detail: format!("element {u} of I is not tight"),
            }));
        }
    }
    for (k, p) in parts.iter().enumerate() {
        if dual.alpha[k].is_positive() && i.intersection(*p).len() != 1 {
            return Ok(Some(CsViolation {
                condition: "1.2",
                detail: format!("part {k} has positive alpha but is not covered once"),
            }));
        }
    }
    for c in chain_of(&dual.y) {
        if i.intersection(c).len() != m2.rank(c) {
            return Ok(Some(CsViolation {
                condition: "1.3",
                detail: format!("chain set {c:?} is not spanned by I"),
            }));
        }
    }
    Ok(None)
}

/// Complementary slackness against a two-sided chain dual; `None` when all conditions hold.
pub fn check_cs_two(
    i: ElemSet,
    dual: &TwoSidedDual,
    m1: &Matroid,
    m2: &Matroid,
    w: &[Q],
) -> Result<Option<CsViolation>> {
    require_cis(i, m1, m2)?;
    for u in i.iter() {
        if coverage(&dual.y, u) + coverage(&dual.z, u) != w[u] {
            return Ok(Some(CsViolation {
                condition: "2.1",
                detail: format!("element {u} of I is not tight"),
            }));
        }
    }
    for (side, chain, m) in [(1, &dual.y, m1), (2, &dual.z, m2)] {
        for c in chain_of(chain) {
            if i.intersection(c).len() != m.rank(c) {
                return Ok(Some(CsViolation {
                    condition: "2.2",
                    detail: format!("chain set {c:?} of side {side} is not spanned by I"),
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    fn s(v: &[usize]) -> ElemSet {
        v.iter().copied().collect()
    }

    fn ws(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn three_element_example_duals_and_slackness() {
        let parts = [s(&[0, 1]), s(&[2])];
        let m1 = Matroid::partition(vec![(parts[0], 1), (parts[1], 1)]).unwrap();
        let m2 = Matroid::uniform(s(&[0, 1, 2]), 2);
        let w = ws(&[1, 2, 0]);
        let b = EnumerationBudget::default();
        let mw = max_weight_cis(&m1, &m2, &w, &b).unwrap();
        assert_eq!(mw.opt, q(2));
        assert_eq!(mw.maximizers, vec![s(&[1]), s(&[1, 2])]);
        let dual = solve_dual_one(&parts, &m2, &w, &b).unwrap();
        assert_eq!(dual.value, q(2));
        assert_eq!(dual.objective(&m2), q(2));
        assert!(dual.is_feasible(&parts, &w));
        assert!(is_chain(&chain_of(&dual.y)));
        assert!(check_cs_one(s(&[1, 2]), &dual, &parts, &m2, &w).unwrap().is_none());
        assert!(check_cs_one(s(&[0, 2]), &dual, &parts, &m2, &w).unwrap().is_some());
        assert!(check_cs_one(s(&[0, 1]), &dual, &parts, &m2, &w).is_err());
    }

    #[test]
    fn uncross_matches_stepwise_uncrossing() {
        let mut y = BTreeMap::new();
        y.insert(s(&[0, 1]), q(1));
        y.insert(s(&[1, 2]), qf(1, 2));
        y.insert(s(&[2, 3]), q(2));
        let mut cur = y.clone();
        let mut steps = 0;
        while let Some(next) = uncross_step(&cur) {
            cur = next;
            steps += 1;
            assert!(steps < 1000);
        }
        assert_eq!(cur, uncross(&y));
        assert!(is_chain(&chain_of(&cur)));
        for u in 0..4 {
            assert_eq!(coverage(&cur, u), coverage(&y, u));
        }
    }

    #[test]
    fn uncross_two_singletons() {
        let mut y = BTreeMap::new();
        y.insert(s(&[0]), q(1));
        y.insert(s(&[1]), q(1));
        let u = uncross(&y);
        assert_eq!(u.into_iter().collect::<Vec<_>>(), vec![(s(&[0, 1]), q(1))]);
    }

    #[test]
    fn two_sided_dual_value_is_optimum() {
        let m1 = Matroid::uniform(s(&[0, 1, 2]), 1);
        let m2 = Matroid::partition(vec![(s(&[0, 1]), 1), (s(&[2]), 1)]).unwrap();
        let w = ws(&[3, -1, 2]);
        let b = EnumerationBudget::default();
        let dual = solve_dual_two(&m1, &m2, &w, &b).unwrap();
        let mw = max_weight_cis(&m1, &m2, &w, &b).unwrap();
        assert_eq!(dual.value, mw.opt);
        assert_eq!(dual.objective(&m1, &m2), mw.opt);
        for i in enumerate_cis(&m1, &m2, &b).unwrap() {
            let cs = check_cs_two(i, &dual, &m1, &m2, &w).unwrap().is_none();
            assert_eq!(cs, mw.maximizers.contains(&i));
        }
    }

    #[test]
    fn weight_split_on_partition_and_concave_function() {
        let ground = s(&[0, 1, 2]);
        let m1 = Matroid::partition(vec![(s(&[0, 1]), 1), (s(&[2]), 1)]).unwrap();
        let f1 = ValuedFamily::indicator(ground, &m1.independent_sets()).unwrap();
        let f2 = ValuedFamily::new(
            ground,
            ground
                .subsets()
                .into_iter()
                .map(|x| {
                    let k = x.len() as i64;
                    (x, q(3 * k - k * k) + q(x.contains(0) as i64))
                })
                .collect(),
        )
        .unwrap();
        assert!(f2.is_mnat_concave());
        let split = weight_split(&f1, &f2).unwrap();
        let want = sum_family(&f1, &f2).unwrap().argmax_family().domain();
        assert_eq!(split_intersection(&f1, &f2, &split.p), want);
    }
}
