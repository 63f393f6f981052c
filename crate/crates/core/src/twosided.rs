//! Two-sided model: both matroids are direct sums of ordered summands.
//! Popular critical and popular max-weight common independent sets via
//! matroid kernels on a leveled copy of the ground set.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exhaustive::{enumerate_cis, EnumerationBudget};
use crate::matroid::{Matroid, Ranking};
use crate::rational::{sum_over, Q};
use crate::set::{ElemSet, Ground};
use crate::wmi::{chain_of, max_weight_cis, solve_dual_two, TwoSidedDual};

/// A direct sum of summands (agents) with a strict total order on its ground.
#[derive(Clone, Debug)]
pub struct OrderedMatroid {
    summands: Vec<Matroid>,
    matroid: Matroid,
    order: Ranking,
}

impl OrderedMatroid {
    pub fn new(summands: Vec<Matroid>, order: Ranking) -> Result<Self> {
        let matroid = Matroid::direct_sum(summands.clone())?;
        if !order.covers(matroid.ground()) {
            return Err(Error::Precondition("the order must rank every element".into()));
        }
        Ok(OrderedMatroid {
            summands,
            matroid,
            order,
        })
    }

    pub fn matroid(&self) -> &Matroid {
        &self.matroid
    }

    pub fn summands(&self) -> &[Matroid] {
        &self.summands
    }

    pub fn order(&self) -> &Ranking {
        &self.order
    }

    pub fn ground(&self) -> ElemSet {
        self.matroid.ground()
    }

    pub fn summand_of(&self, e: usize) -> Option<usize> {
        self.summands.iter().position(|m| m.ground().contains(e))
    }

    /// Every summand restricted to `t`.
    pub fn restrict(&self, t: ElemSet) -> Result<OrderedMatroid> {
        self.matroid.check_subset(t)?;
        let summands = self
            .summands
            .iter()
            .map(|m| m.restrict(m.ground().intersection(t)))
            .collect::<Result<Vec<_>>>()?;
        OrderedMatroid::new(summands, self.order.clone())
    }
}

/// Pairs `(u, v)` with `u` in `I - J` and `v` in `J - I`.
pub type Pairing = Vec<(usize, usize)>;

/// Feasible pairings inside one summand.
pub fn summand_pairings(m: &OrderedMatroid, k: usize, i: ElemSet, j: ElemSet) -> Vec<Pairing> {
    let g = m.summands[k].ground();
    let a = i.difference(j).intersection(g).to_vec();
    let b = j.difference(i).intersection(g).to_vec();
    let mat = &m.matroid;
    let swap_ok = |u: usize, v: usize| mat.indep(i.without(u).with(v));
    let mut out = Vec::new();
    let mut cur = Vec::new();
    if a.len() <= b.len() {
        // every u is paired; the unpaired v must extend I on their own
        fn rec(
            idx: usize,
            a: &[usize],
            b: &[usize],
            used: &mut Vec<bool>,
            cur: &mut Pairing,
            ok: &dyn Fn(usize, usize) -> bool,
            tail_ok: &dyn Fn(&[bool]) -> bool,
            out: &mut Vec<Pairing>,
        ) {
            if idx == a.len() {
                if tail_ok(used) {
                    let mut p = cur.clone();
                    p.sort();
                    out.push(p);
                }
                return;
            }
            for t in 0..b.len() {
                if used[t] || !ok(a[idx], b[t]) {
                    continue;
                }
                used[t] = true;
                cur.push((a[idx], b[t]));
                rec(idx + 1, a, b, used, cur, ok, tail_ok, out);
                cur.pop();
                used[t] = false;
            }
        }
        let tail_ok = |used: &[bool]| {
            b.iter()
                .zip(used)
                .all(|(&v, &u)| u || mat.indep(i.with(v)))
        };
        let mut used = vec![false; b.len()];
        rec(0, &a, &b, &mut used, &mut cur, &swap_ok, &tail_ok, &mut out);
    } else {
        // every v is paired to a distinct u
        fn rec(
            idx: usize,
            a: &[usize],
            b: &[usize],
            used: &mut Vec<bool>,
            cur: &mut Pairing,
            ok: &dyn Fn(usize, usize) -> bool,
            out: &mut Vec<Pairing>,
        ) {
            if idx == b.len() {
                let mut p = cur.clone();
                p.sort();
                out.push(p);
                return;
            }
            for t in 0..a.len() {
                if used[t] || !ok(a[t], b[idx]) {
                    continue;
                }
                used[t] = true;
                cur.push((a[t], b[idx]));
                rec(idx + 1, a, b, used, cur, ok, out);
                cur.pop();
                used[t] = false;
            }
        }
        let mut used = vec![false; a.len()];
        rec(0, &a, &b, &mut used, &mut cur, &swap_ok, &mut out);
    }
    out.sort();
    out
}

fn require_indep(m: &Matroid, x: ElemSet) -> Result<()> {
    if !m.is_independent(x)? {
        return Err(Error::Precondition(format!("{x:?} is not independent")));
    }
    Ok(())
}

/// All feasible pairings between `I - J` and `J - I`, as the product over summands.
pub fn feasible_pairings(m: &OrderedMatroid, i: ElemSet, j: ElemSet) -> Result<Vec<Pairing>> {
    require_indep(&m.matroid, i)?;
    require_indep(&m.matroid, j)?;
    let mut acc: Vec<Pairing> = vec![Vec::new()];
    for k in 0..m.summands.len() {
        let local = summand_pairings(m, k, i, j);
        let mut next = Vec::with_capacity(acc.len() * local.len());
        for p in &acc {
            for q in &local {
                let mut r = p.clone();
                r.extend_from_slice(q);
                r.sort();
                next.push(r);
            }
        }
        acc = next;
    }
    acc.sort();
    Ok(acc)
}

fn pair_votes(order: &Ranking, pairs: &[(usize, usize)]) -> i64 {
    pairs
        .iter()
        .map(|&(u, v)| {
            if order.prefers(u, v) {
                1
            } else if order.prefers(v, u) {
                -1
            } else {
                0
            }
        })
        .sum()
}

/// `vote(I, J, N)`; the pairing is checked for feasibility first.
pub fn vote(m: &OrderedMatroid, i: ElemSet, j: ElemSet, n: &Pairing) -> Result<i64> {
    let mut sorted = n.clone();
    sorted.sort();
    if !feasible_pairings(m, i, j)?.contains(&sorted) {
        return Err(Error::Precondition("the pairing is not feasible".into()));
    }
    Ok(pair_votes(&m.order, n) + i.len() as i64 - j.len() as i64)
}

/// Minimum of `vote(I, J, N)` over all feasible pairings `N`.
pub fn vote_min(m: &OrderedMatroid, i: ElemSet, j: ElemSet) -> Result<i64> {
    require_indep(&m.matroid, i)?;
    require_indep(&m.matroid, j)?;
    let mut total = i.len() as i64 - j.len() as i64;
    for k in 0..m.summands.len() {
        let best = summand_pairings(m, k, i, j)
            .iter()
            .map(|p| pair_votes(&m.order, p))
            .min()
            .ok_or_else(|| Error::Internal("a summand admits no feasible pairing".into()))?;
        total += best;
    }
    Ok(total)
}

/// `v` outside `I` is dominated: `I + v` is dependent and every exchange partner beats `v`.
pub fn dominated(m: &OrderedMatroid, i: ElemSet, v: usize) -> bool {
    let mat = &m.matroid;
    !mat.indep(i.with(v))
        && i
            .iter()
            .filter(|&u| mat.indep(i.without(u).with(v)))
            .all(|u| m.order.prefers(u, v))
}

pub fn is_kernel(m1: &OrderedMatroid, m2: &OrderedMatroid, i: ElemSet) -> bool {
    let g = m1.ground();
    i.is_subset(g)
        && m1.matroid.indep(i)
        && m2.matroid.indep(i)
        && g
            .difference(i)
            .iter()
            .all(|v| dominated(m1, i, v) || dominated(m2, i, v))
}

/// Proposal and rejection until the first side's greedy pick is independent for the second.
pub fn matroid_kernel(m1: &OrderedMatroid, m2: &OrderedMatroid) -> Result<ElemSet> {
    if m1.ground() != m2.ground() {
        return Err(Error::Precondition("both matroids must share one ground set".into()));
    }
    let s = m1.ground();
    let mut rejected = ElemSet::EMPTY;
    loop {
        let i = m1.matroid.greedy_choice(s.difference(rejected), &m1.order)?;
        let k = m2.matroid.greedy_choice(i, &m2.order)?;
        if k == i {
            if !is_kernel(m1, m2, i) {
                return Err(Error::Internal("proposal loop ended on a non-kernel".into()));
            }
            return Ok(i);
        }
        rejected = rejected.union(i.difference(k));
    }
}

/// `|I & C| = r(C)` for every chain member on both sides.
pub fn is_critical(i: ElemSet, m1: &Matroid, m2: &Matroid, c1: &[ElemSet], c2: &[ElemSet]) -> bool {
    c1.iter().all(|c| i.intersection(*c).len() == m1.rank(*c))
        && c2.iter().all(|c| i.intersection(*c).len() == m2.rank(*c))
}

/// Sorted by inclusion, without the empty set or repeats; errors if not a chain.
pub fn normalize_chain(chain: &[ElemSet], ground: ElemSet) -> Result<Vec<ElemSet>> {
    let mut c: Vec<ElemSet> = chain.iter().copied().filter(|x| !x.is_empty()).collect();
    c.sort_by_key(|x| x.len());
    c.dedup();
    for w in c.windows(2) {
        if !w[0].is_subset(w[1]) || w[0] == w[1] {
            return Err(Error::Precondition("chain members are not nested".into()));
        }
    }
    if let Some(top) = c.last() {
        if !top.is_subset(ground) {
            return Err(Error::Domain("chain leaves the ground".into()));
        }
    }
    Ok(c)
}

/// Summands `M / C(j-1) | (C(j) - C(j-1))` for the chain closed by the ground.
pub fn transform_chains(m: &Matroid, chain: &[ElemSet]) -> Result<Vec<Matroid>> {
    let c = normalize_chain(chain, m.ground())?;
    let mut out = Vec::with_capacity(c.len() + 1);
    let mut prev = ElemSet::EMPTY;
    for top in c.iter().copied().chain(std::iter::once(m.ground())) {
        let gap = top.difference(prev);
        if !gap.is_empty() {
            out.push(m.contract(prev)?.restrict(gap)?);
        }
        prev = top;
    }
    Ok(out)
}

/// Copies of each element at several levels, with lifted matroids and orders.
#[derive(Clone, Debug)]
pub struct Leveled {
    pub ground: Ground,
    pub m1: OrderedMatroid,
    pub m2: OrderedMatroid,
    pub origin: Vec<usize>,
    pub level: Vec<i32>,
}

impl Leveled {
    pub fn project(&self, x: ElemSet) -> ElemSet {
        x.iter().map(|e| self.origin[e]).collect()
    }
}

/// Level 0 for all, levels `1..=r1(C1max)` on `C1max`, levels `-1..=-r2(C2max)` on `C2max`.
pub fn build_leveled(
    names: &Ground,
    m1: &OrderedMatroid,
    m2: &OrderedMatroid,
    c1: &[ElemSet],
    c2: &[ElemSet],
) -> Result<Leveled> {
    let s = m1.ground();
    let c1 = normalize_chain(c1, s)?;
    let c2 = normalize_chain(c2, s)?;
    let top1 = c1.last().copied().unwrap_or_default();
    let top2 = c2.last().copied().unwrap_or_default();
    let (rho1, rho2) = (m1.matroid.rank(top1) as i32, m2.matroid.rank(top2) as i32);
    let mut ground = Ground::default();
    let mut origin = Vec::new();
    let mut level = Vec::new();
    for u in s.iter() {
        let mut levels = vec![0];
        if top1.contains(u) {
            levels.extend(1..=rho1);
        }
        if top2.contains(u) {
            levels.extend((1..=rho2).map(|k| -k));
        }
        for l in levels {
            ground.push(&format!("{}@{}", names.id(u), l))?;
            origin.push(u);
            level.push(l);
        }
    }
    let copies_in = |g: ElemSet| -> Vec<(usize, usize)> {
        (0..origin.len())
            .filter(|&e| g.contains(origin[e]))
            .map(|e| (e, origin[e]))
            .collect()
    };
    let lift_side = |m: &OrderedMatroid, chain: &[ElemSet], up: bool| -> Result<OrderedMatroid> {
        let summands = transform_chains(&m.matroid, chain)?
            .iter()
            .map(|g| Matroid::lift(g, &copies_in(g.ground())))
            .collect::<Result<Vec<_>>>()?;
        let mut list: Vec<usize> = (0..origin.len()).collect();
        list.sort_by_key(|&e| {
            let l = if up { level[e] } else { -level[e] };
            (l, m.order.position(origin[e]).expect("ranked"))
        });
        OrderedMatroid::new(summands, Ranking::from_list(&list)?)
    };
    let lm1 = lift_side(m1, &c1, true)?;
    let lm2 = lift_side(m2, &c2, false)?;
    Ok(Leveled {
        ground,
        m1: lm1,
        m2: lm2,
        origin,
        level,
    })
}

#[derive(Clone, Debug)]
pub struct CriticalSolution {
    pub solution: ElemSet,
    /// Kernel of the leveled instance.
    pub kernel: ElemSet,
    pub leveled: Leveled,
    /// Level of the copy chosen for each solution element.
    pub levels: BTreeMap<usize, i32>,
}

/// Popular critical common independent set via the leveled kernel.
pub fn solve_popular_critical(
    names: &Ground,
    m1: &OrderedMatroid,
    m2: &OrderedMatroid,
    c1: &[ElemSet],
    c2: &[ElemSet],
    budget: &EnumerationBudget,
) -> Result<CriticalSolution> {
    if m1.ground() != m2.ground() {
        return Err(Error::Precondition("both matroids must share one ground set".into()));
    }
    let c1 = normalize_chain(c1, m1.ground())?;
    let c2 = normalize_chain(c2, m2.ground())?;
    if m1.ground().len() <= budget.max_ground {
        let any = enumerate_cis(&m1.matroid, &m2.matroid, budget)?
            .into_iter()
            .any(|x| is_critical(x, &m1.matroid, &m2.matroid, &c1, &c2));
        if !any {
            return Err(Error::Infeasible("no critical common independent set exists".into()));
        }
    }
    let leveled = build_leveled(names, m1, m2, &c1, &c2)?;
    let kernel = matroid_kernel(&leveled.m1, &leveled.m2)?;
    let solution = leveled.project(kernel);
    let levels = kernel
        .iter()
        .map(|e| (leveled.origin[e], leveled.level[e]))
        .collect();
    if !(m1.matroid.indep(solution) && m2.matroid.indep(solution)) {
        return Err(Error::Internal("projected kernel is not common independent".into()));
    }
    if !is_critical(solution, &m1.matroid, &m2.matroid, &c1, &c2) {
        return Err(Error::Internal("projected kernel is not critical".into()));
    }
    Ok(CriticalSolution {
        solution,
        kernel,
        leveled,
        levels,
    })
}

#[derive(Clone, Debug)]
pub struct TwoSidedInstance {
    pub ground: Ground,
    pub m1: OrderedMatroid,
    pub m2: OrderedMatroid,
    pub weights: Vec<Q>,
}

impl TwoSidedInstance {
    pub fn new(ground: Ground, m1: OrderedMatroid, m2: OrderedMatroid, weights: Vec<Q>) -> Result<Self> {
        if m1.ground() != ground.all() || m2.ground() != ground.all() {
            return Err(Error::Precondition(
                "both matroids must be defined on the whole ground".into(),
            ));
        }
        if weights.len() < ground.len() {
            return Err(Error::Schema("weight vector is too short".into()));
        }
        Ok(TwoSidedInstance {
            ground,
            m1,
            m2,
            weights,
        })
    }

    pub fn elements(&self) -> ElemSet {
        self.m1.ground()
    }

    /// `vote_min` on both sides.
    pub fn margin(&self, i: ElemSet, j: ElemSet) -> Result<i64> {
        Ok(vote_min(&self.m1, i, j)? + vote_min(&self.m2, i, j)?)
    }
}

/// Restriction to the tight elements with the dual chains cut down to them.
#[derive(Clone, Debug)]
pub struct WeightedReduction {
    pub dual: TwoSidedDual,
    pub tight: ElemSet,
    pub m1: OrderedMatroid,
    pub m2: OrderedMatroid,
    pub c1: Vec<ElemSet>,
    pub c2: Vec<ElemSet>,
}

pub fn reduce_weighted_two(inst: &TwoSidedInstance, budget: &EnumerationBudget) -> Result<WeightedReduction> {
    let dual = solve_dual_two(inst.m1.matroid(), inst.m2.matroid(), &inst.weights, budget)?;
    let tight = dual.tight_elements(inst.elements(), &inst.weights);
    let cut = |chain: &BTreeMap<ElemSet, Q>| -> Result<Vec<ElemSet>> {
        let c: Vec<ElemSet> = chain_of(chain).iter().map(|c| c.intersection(tight)).collect();
        normalize_chain(&c, tight)
    };
    let c1 = cut(&dual.y)?;
    let c2 = cut(&dual.z)?;
    Ok(WeightedReduction {
        m1: inst.m1.restrict(tight)?,
        m2: inst.m2.restrict(tight)?,
        dual,
        tight,
        c1,
        c2,
    })
}

#[derive(Clone, Debug)]
pub struct TwoSidedSolution {
    pub solution: ElemSet,
    pub reduction: WeightedReduction,
    pub critical: CriticalSolution,
}

/// A popular max-weight common independent set; one always exists.
pub fn solve_popular_max_weight_two(inst: &TwoSidedInstance, budget: &EnumerationBudget) -> Result<TwoSidedSolution> {
    let reduction = reduce_weighted_two(inst, budget)?;
    let critical = solve_popular_critical(
        &inst.ground,
        &reduction.m1,
        &reduction.m2,
        &reduction.c1,
        &reduction.c2,
        budget,
    )?;
    let solution = critical.solution;
    if sum_over(solution, &inst.weights) != reduction.dual.value {
        return Err(Error::Internal("solution weight differs from the dual optimum".into()));
    }
    Ok(TwoSidedSolution {
        solution,
        reduction,
        critical,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoSidedVerification {
    pub optimal: bool,
    /// `(rival, vote_min on side 1 + vote_min on side 2)` per optimal rival.
    pub rivals: Vec<(ElemSet, i64)>,
}

impl TwoSidedVerification {
    pub fn popular(&self) -> bool {
        self.optimal && self.rivals.iter().all(|(_, m)| *m >= 0)
    }
}

/// Checks a candidate against every max-weight common independent set.
pub fn verify_popular_two(inst: &TwoSidedInstance, i: ElemSet, budget: &EnumerationBudget) -> Result<TwoSidedVerification> {
    let mw = max_weight_cis(inst.m1.matroid(), inst.m2.matroid(), &inst.weights, budget)?;
    let optimal = mw.maximizers.contains(&i);
    let mut rivals = Vec::new();
    if optimal {
        for &j in &mw.maximizers {
            rivals.push((j, inst.margin(i, j)?));
        }
    }
    Ok(TwoSidedVerification { optimal, rivals })
}
