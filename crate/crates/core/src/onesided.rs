//! One-sided model: agents own the blocks of a unit partition matroid and
//! vote by strict partial orders. Popular max-weight and max-utility solutions
//! are found through a popular common base instance.

use std::collections::BTreeSet;

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exhaustive::{brute_popular, enumerate_cis, enumerate_common_bases, BrutePopular, EnumerationBudget};
use crate::matroid::Matroid;
use crate::mnat::{base_family_from, ValuedFamily};
use crate::rational::{sum_over, Q};
use crate::set::{ElemSet, Ground};
use crate::wmi::{chain_of, max_weight_cis, solve_dual_one, weight_split, OneSidedDual, WeightSplit};

/// Strict partial order on one agent's elements. Every element beats the empty choice.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialOrder {
    better: BTreeSet<(usize, usize)>,
}

impl PartialOrder {
    /// Transitive closure of the generator pairs `(a, b)` meaning `a` beats `b`.
    pub fn from_pairs(elems: ElemSet, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut better: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in pairs {
            if !elems.contains(a) || !elems.contains(b) {
                return Err(Error::Domain(format!(
                    "preference pair ({a}, {b}) leaves the agent's block"
                )));
            }
            better.insert((a, b));
        }
        let members = elems.to_vec();
        for &k in &members {
            for &i in &members {
                if !better.contains(&(i, k)) {
                    continue;
                }
                for &j in &members {
                    if better.contains(&(k, j)) {
                        better.insert((i, j));
                    }
                }
            }
        }
        if let Some(&(a, _)) = better.iter().find(|(a, b)| a == b) {
            return Err(Error::Schema(format!("preferences of element {a} contain a cycle")));
        }
        Ok(PartialOrder { better })
    }

    /// Weak order from tiers, best tier first; elements in one tier are tied.
    pub fn from_tiers(tiers: &[Vec<usize>]) -> Result<Self> {
        let elems: ElemSet = tiers.iter().flatten().copied().collect();
        let mut pairs = Vec::new();
        for (i, hi) in tiers.iter().enumerate() {
            for lo in &tiers[i + 1..] {
                for &a in hi {
                    for &b in lo {
                        pairs.push((a, b));
                    }
                }
            }
        }
        PartialOrder::from_pairs(elems, &pairs)
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.better.contains(&(a, b))
    }

    /// +1 if `a` beats `b`, -1 if `b` beats `a`, 0 otherwise; `None` is the empty choice.
    pub fn compare(&self, a: Option<usize>, b: Option<usize>) -> i64 {
        match (a, b) {
            (Some(x), Some(y)) if self.prefers(x, y) => 1,
            (Some(x), Some(y)) if self.prefers(y, x) => -1,
            (Some(_), None) => 1,
            (None, Some(_)) => -1,
            _ => 0,
        }
    }

    /// All strict pairs of the closure.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.better.iter().copied()
    }

    /// Keeps pairs inside `within` and ranks every element of `within` above `dummy`.
    fn restricted_with_dummy(&self, within: ElemSet, dummy: Option<usize>) -> PartialOrder {
        let mut better: BTreeSet<(usize, usize)> = self
            .better
            .iter()
            .filter(|(a, b)| within.contains(*a) && within.contains(*b))
            .copied()
            .collect();
        if let Some(d) = dummy {
            for v in within.iter() {
                better.insert((v, d));
            }
        }
        PartialOrder { better }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub part: ElemSet,
    pub order: PartialOrder,
}

/// `Delta(I, J)`: agents preferring their `I` element minus agents preferring their `J` element.
pub fn delta(agents: &[Agent], i: ElemSet, j: ElemSet) -> i64 {
    agents
        .iter()
        .map(|a| {
            a.order
                .compare(i.intersection(a.part).first(), j.intersection(a.part).first())
        })
        .sum()
}

fn unit_partition(agents: &[Agent]) -> Result<Matroid> {
    Matroid::partition(agents.iter().map(|a| (a.part, 1)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Dense weights indexed by element.
    Weights(Vec<Q>),
    /// Utility with domain inside the independent sets of `m2`.
    Utility(ValuedFamily),
}

#[derive(Clone, Debug)]
pub struct OneSidedInstance {
    pub ground: Ground,
    pub agents: Vec<Agent>,
    pub m2: Matroid,
    pub objective: Objective,
}

impl OneSidedInstance {
    pub fn new(ground: Ground, agents: Vec<Agent>, m2: Matroid, objective: Objective) -> Result<Self> {
        let inst = OneSidedInstance {
            ground,
            agents,
            m2,
            objective,
        };
        let m1 = inst.m1()?;
        if m1.ground() != inst.m2.ground() {
            return Err(Error::Precondition(
                "agent blocks must partition the ground of M2".into(),
            ));
        }
        match &inst.objective {
            Objective::Weights(w) if w.len() < inst.ground.len() => {
                return Err(Error::Schema("weight vector is too short".into()))
            }
            Objective::Utility(f) => {
                if f.ground() != inst.m2.ground() {
                    return Err(Error::Precondition("utility ground differs from M2".into()));
                }
                if let Some(x) = f.domain().into_iter().find(|x| !inst.m2.indep(*x)) {
                    return Err(Error::Precondition(format!(
                        "utility domain member {} is dependent in M2",
                        inst.ground.show(x)
                    )));
                }
                if !f.is_mnat_concave() {
                    return Err(Error::Precondition("utility is not M-natural concave".into()));
                }
            }
            _ => {}
        }
        Ok(inst)
    }

    pub fn m1(&self) -> Result<Matroid> {
        unit_partition(&self.agents)
    }

    pub fn elements(&self) -> ElemSet {
        self.m2.ground()
    }

    /// `Delta(I, J)` after checking both sets are independent in `M1`.
    pub fn delta(&self, i: ElemSet, j: ElemSet) -> Result<i64> {
        let m1 = self.m1()?;
        for x in [i, j] {
            if !m1.is_independent(x)? {
                return Err(Error::Precondition(format!(
                    "{} takes two elements from one agent",
                    self.ground.show(x)
                )));
            }
        }
        Ok(delta(&self.agents, i, j))
    }

    /// Optimal value as a rational and all optimal common independent sets.
    pub fn optimal_family(&self, budget: &EnumerationBudget) -> Result<(Q, Vec<ElemSet>)> {
        let m1 = self.m1()?;
        match &self.objective {
            Objective::Weights(w) => {
                let mw = max_weight_cis(&m1, &self.m2, w, budget)?;
                Ok((mw.opt, mw.maximizers))
            }
            Objective::Utility(f) => {
                let cis = enumerate_cis(&m1, &self.m2, budget)?;
                let feasible: Vec<ElemSet> = cis.into_iter().filter(|x| f.contains(*x)).collect();
                let values = feasible.iter().map(|x| (*x, f.value(*x).unwrap().clone())).collect();
                let restricted = ValuedFamily::new(f.ground(), values)?;
                restricted
                    .maximize()
                    .ok_or_else(|| Error::Infeasible("no utility member is feasible for M1".into()))
            }
        }
    }

    pub fn value(&self, x: ElemSet) -> Option<Q> {
        match &self.objective {
            Objective::Weights(w) => Some(sum_over(x, w)),
            Objective::Utility(f) => f.value(x).cloned(),
        }
    }
}

/// Popular common base problem: unit partition matroid from the agents and `m2`.
#[derive(Clone, Debug)]
pub struct PopularBaseInstance {
    pub ground: Ground,
    pub agents: Vec<Agent>,
    pub m2: Matroid,
}

impl PopularBaseInstance {
    pub fn m1(&self) -> Result<Matroid> {
        unit_partition(&self.agents)
    }

    pub fn common_bases(&self, budget: &EnumerationBudget) -> Result<Vec<ElemSet>> {
        let bases = enumerate_common_bases(&self.m1()?, &self.m2, budget)?;
        if bases.is_empty() {
            return Err(Error::Infeasible("the matroids share no common base".into()));
        }
        Ok(bases)
    }

    /// Every popular common base with witnesses for the rest.
    pub fn popularity(&self, budget: &EnumerationBudget) -> Result<BrutePopular> {
        let bases = self.common_bases(budget)?;
        brute_popular(&bases, |a, b| Ok(delta(&self.agents, a, b)))
    }
}

/// Least popular common base in canonical order, or `None`.
pub fn solve_popular_common_base(
    inst: &PopularBaseInstance,
    budget: &EnumerationBudget,
) -> Result<Option<ElemSet>> {
    Ok(inst.popularity(budget)?.popular.first().copied())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionCertificate {
    Weights { dual: OneSidedDual, chain: Vec<ElemSet> },
    /// `best[i]` is the largest split value in block `i`, `None` for an empty block.
    Utility { split: WeightSplit, best: Vec<Option<Q>> },
}

/// A popular common base instance equivalent to a one-sided problem.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub reduced: PopularBaseInstance,
    /// Original elements; dummies are appended after them.
    pub original: ElemSet,
    pub dummies: Vec<Option<usize>>,
    /// Elements that may appear in an optimal solution.
    pub kept: ElemSet,
    pub certificate: ReductionCertificate,
}

impl Reduction {
    /// `B_I`: `I` plus the dummy of every agent `I` leaves unserved.
    pub fn lift(&self, i: ElemSet) -> ElemSet {
        let mut b = i;
        for (a, d) in self.reduced.agents.iter().zip(&self.dummies) {
            if let Some(d) = d {
                if i.intersection(a.part).is_empty() {
                    b.insert(*d);
                }
            }
        }
        b
    }

    pub fn project(&self, b: ElemSet) -> ElemSet {
        b.intersection(self.original)
    }

    pub fn dummy_set(&self) -> ElemSet {
        self.dummies.iter().flatten().copied().collect()
    }
}

fn extend_ground(ground: &Ground, n: usize, wanted: &[bool]) -> Result<(Ground, Vec<Option<usize>>)> {
    let mut g = ground.clone();
    let mut dummies = Vec::with_capacity(n);
    for (i, &want) in wanted.iter().enumerate() {
        if !want {
            dummies.push(None);
            continue;
        }
        let mut id = format!("dummy{i}");
        while g.get(&id).is_some() {
            id.push('\'');
        }
        dummies.push(Some(g.push(&id)?));
    }
    Ok((g, dummies))
}

fn reduced_agents(inst_agents: &[Agent], keep: &[ElemSet], dummies: &[Option<usize>]) -> Vec<Agent> {
    inst_agents
        .iter()
        .zip(keep)
        .zip(dummies)
        .map(|((a, &k), &d)| {
            let mut part = k;
            if let Some(d) = d {
                part.insert(d);
            }
            Agent {
                part,
                order: a.order.restricted_with_dummy(k, d),
            }
        })
        .collect()
}

/// Max-weight problem to popular common base, through a chain-supported optimal dual.
pub fn reduce_weighted(inst: &OneSidedInstance, w: &[Q], budget: &EnumerationBudget) -> Result<Reduction> {
    let s = inst.elements();
    let parts: Vec<ElemSet> = inst.agents.iter().map(|a| a.part).collect();
    let n = parts.len();
    let dual = solve_dual_one(&parts, &inst.m2, w, budget)?;
    let tight = dual.tight_elements(&parts, w);
    let chain = chain_of(&dual.y);
    let keep: Vec<ElemSet> = parts.iter().map(|p| p.intersection(tight)).collect();
    let wanted: Vec<bool> = dual.alpha.iter().map(|a| a.is_zero()).collect();
    let (ground, dummies) = extend_ground(&inst.ground, n, &wanted)?;
    let dset: ElemSet = dummies.iter().flatten().copied().collect();

    let mut summands = Vec::new();
    let mut prev = ElemSet::EMPTY;
    for &c in &chain {
        let piece = c.difference(prev).intersection(tight);
        summands.push(inst.m2.contract(prev)?.restrict(piece)?);
        prev = c;
    }
    let top = s.difference(prev).intersection(tight);
    let last = inst.m2.contract(prev)?.restrict(top)?;
    let spanned = inst.m2.rank(prev);
    if spanned > n {
        return Err(Error::Internal("chain rank exceeds the number of agents".into()));
    }
    let tail = Matroid::direct_sum(vec![last, Matroid::free(dset)])?.truncate(n - spanned);
    summands.push(tail);
    let m2 = Matroid::direct_sum(summands)?;

    let agents = reduced_agents(&inst.agents, &keep, &dummies);
    Ok(Reduction {
        reduced: PopularBaseInstance { ground, agents, m2 },
        original: s,
        dummies,
        kept: tight,
        certificate: ReductionCertificate::Weights { dual, chain },
    })
}

/// Max-utility problem to popular common base, through a splitting vector.
pub fn reduce_mnat(inst: &OneSidedInstance, f: &ValuedFamily, budget: &EnumerationBudget) -> Result<Reduction> {
    let s = inst.elements();
    budget.check_ground(s)?;
    if let Some(x) = f.domain().into_iter().find(|x| !inst.m2.indep(*x)) {
        return Err(Error::Precondition(format!(
            "utility domain member {} is dependent in M2",
            inst.ground.show(x)
        )));
    }
    let m1 = inst.m1()?;
    let indicator = ValuedFamily::indicator(s, &m1.independent_sets())?;
    let split = weight_split(&indicator, f)?;
    let p = &split.p;
    let n = inst.agents.len();
    let mut best = Vec::with_capacity(n);
    let mut keep = Vec::with_capacity(n);
    let mut wanted = Vec::with_capacity(n);
    let mut star = ElemSet::EMPTY;
    for a in &inst.agents {
        let top = a.part.iter().map(|u| p[u].clone()).max();
        let argmax: ElemSet = match &top {
            Some(t) => a.part.iter().filter(|&u| p[u] == *t).collect(),
            None => ElemSet::EMPTY,
        };
        let (k, d) = match &top {
            Some(t) if t.is_positive() => (argmax, false),
            Some(t) if t.is_zero() => (argmax, true),
            _ => (ElemSet::EMPTY, true),
        };
        star = star.union(k);
        keep.push(k);
        wanted.push(d);
        best.push(top);
    }
    let neg: Vec<Q> = p.iter().map(|v| -v.clone()).collect();
    let family = f.shift(&neg).argmax_family().restrict_to(star);
    let (ground, dummies) = extend_ground(&inst.ground, n, &wanted)?;
    let dset: ElemSet = dummies.iter().flatten().copied().collect();
    let m2 = base_family_from(&family, dset, n)?;
    let agents = reduced_agents(&inst.agents, &keep, &dummies);
    Ok(Reduction {
        reduced: PopularBaseInstance { ground, agents, m2 },
        original: s,
        dummies,
        kept: star,
        certificate: ReductionCertificate::Utility { split, best },
    })
}

#[derive(Clone, Debug)]
pub struct OneSidedSolution {
    /// Least popular optimal solution in canonical order, or `None`.
    pub solution: Option<ElemSet>,
    pub reduced_solution: Option<ElemSet>,
    pub reduction: Reduction,
}

/// Popular solution among the optimal common independent sets, via reduction.
pub fn solve_popular_max_weight(inst: &OneSidedInstance, budget: &EnumerationBudget) -> Result<OneSidedSolution> {
    let reduction = match &inst.objective {
        Objective::Weights(w) => reduce_weighted(inst, w, budget)?,
        Objective::Utility(f) => reduce_mnat(inst, f, budget)?,
    };
    let popular = match reduction.reduced.popularity(budget) {
        Ok(p) => p.popular,
        Err(Error::Infeasible(_)) => {
            return Err(Error::Internal(
                "reduced instance lost the lift of an optimal solution".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    let best = popular
        .into_iter()
        .map(|b| (reduction.project(b), b))
        .min_by_key(|(i, _)| *i);
    Ok(OneSidedSolution {
        solution: best.map(|(i, _)| i),
        reduced_solution: best.map(|(_, b)| b),
        reduction,
    })
}

/// Exhaustive check of one candidate against every optimal rival.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub optimal: bool,
    /// `(rival, Delta(candidate, rival))` for every optimal rival, canonical order.
    pub rivals: Vec<(ElemSet, i64)>,
}

impl Verification {
    pub fn popular(&self) -> bool {
        self.optimal && self.rivals.iter().all(|(_, d)| *d >= 0)
    }
}

pub fn verify_popular(inst: &OneSidedInstance, i: ElemSet, budget: &EnumerationBudget) -> Result<Verification> {
    let (_, family) = inst.optimal_family(budget)?;
    let optimal = family.contains(&i);
    if optimal {
        inst.delta(i, i)?;
    }
    let rivals = family
        .iter()
        .map(|&j| (j, delta(&inst.agents, i, j)))
        .collect();
    Ok(Verification { optimal, rivals })
}

/// Popular members of the optimal family by direct enumeration.
pub fn brute_popular_one(inst: &OneSidedInstance, budget: &EnumerationBudget) -> Result<BrutePopular> {
    let (_, family) = inst.optimal_family(budget)?;
    brute_popular(&family, |a, b| Ok(delta(&inst.agents, a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn s(v: &[usize]) -> ElemSet {
        v.iter().copied().collect()
    }

    /// Blocks {x, y} and {z}; M2 uniform of rank 2; w = (1, 2, 0).
    fn small() -> OneSidedInstance {
        let ground = Ground::new(&["x", "y", "z"]).unwrap();
        let agents = vec![
            Agent {
                part: s(&[0, 1]),
                order: PartialOrder::from_pairs(s(&[0, 1]), &[(0, 1)]).unwrap(),
            },
            Agent {
                part: s(&[2]),
                order: PartialOrder::default(),
            },
        ];
        let m2 = Matroid::uniform(s(&[0, 1, 2]), 2);
        OneSidedInstance::new(ground, agents, m2, Objective::Weights(vec![q(1), q(2), q(0)])).unwrap()
    }

    #[test]
    fn delta_counts_strict_preferences() {
        let inst = small();
        assert_eq!(inst.delta(s(&[0]), s(&[1, 2])).unwrap(), 0);
        assert_eq!(inst.delta(s(&[1, 2]), s(&[1])).unwrap(), 1);
        assert!(inst.delta(s(&[0, 1]), s(&[2])).is_err());
    }

    #[test]
    fn small_example_solution() {
        let inst = small();
        let b = EnumerationBudget::default();
        let sol = solve_popular_max_weight(&inst, &b).unwrap();
        assert_eq!(sol.solution, Some(s(&[1, 2])));
        let v = verify_popular(&inst, s(&[1, 2]), &b).unwrap();
        assert!(v.popular());
        assert_eq!(v.rivals, vec![(s(&[1]), 1), (s(&[1, 2]), 0)]);
        let red = &sol.reduction;
        let bases = red.reduced.common_bases(&b).unwrap();
        let mapped: Vec<ElemSet> = bases.iter().map(|x| red.project(*x)).collect();
        let mut sorted = mapped.clone();
        sorted.sort();
        assert_eq!(sorted, vec![s(&[1]), s(&[1, 2])]);
    }

    #[test]
    fn partial_order_rejects_cycles_and_outsiders() {
        assert!(PartialOrder::from_pairs(s(&[0, 1]), &[(0, 1), (1, 0)]).is_err());
        assert!(PartialOrder::from_pairs(s(&[0, 1]), &[(0, 2)]).is_err());
        let o = PartialOrder::from_pairs(s(&[0, 1, 2]), &[(0, 1), (1, 2)]).unwrap();
        assert!(o.prefers(0, 2));
        assert_eq!(o.compare(Some(2), None), 1);
        assert_eq!(o.compare(None, None), 0);
        let t = PartialOrder::from_tiers(&[vec![0, 1], vec![2]]).unwrap();
        assert_eq!(t.compare(Some(0), Some(1)), 0);
        assert_eq!(t.compare(Some(1), Some(2)), 1);
    }

    #[test]
    fn no_common_base_is_infeasible() {
        let ground = Ground::new(&["a", "b"]).unwrap();
        let agents = vec![
            Agent { part: s(&[0]), order: PartialOrder::default() },
            Agent { part: s(&[1]), order: PartialOrder::default() },
        ];
        let inst = PopularBaseInstance { ground, agents, m2: Matroid::uniform(s(&[0, 1]), 1) };
        let err = solve_popular_common_base(&inst, &EnumerationBudget::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }
}
