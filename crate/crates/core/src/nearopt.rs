//! Popular matchings among near-optimal matchings: the k-popularity verifier,
//! an exhaustive solver, the exact-matching reduction and the cycle gadget.

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exhaustive::EnumerationBudget;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{one, q, zero, Q};
use crate::set::{ElemSet, Ground};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Which vertices vote: only the left side (agents over objects) or both sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Voters {
    Left,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub left: usize,
    pub right: usize,
    pub weight: Q,
}

/// Bipartite graph with weak preferences over incident edges and edge weights.
#[derive(Clone, Debug)]
pub struct PrefBipartite {
    pub vertices: Ground,
    pub side: Vec<Side>,
    pub edge_ids: Ground,
    pub edges: Vec<Edge>,
    /// Per vertex, tiers of incident edges, best tier first.
    pub tiers: Vec<Vec<Vec<usize>>>,
    pub voters: Voters,
    tier_of: Vec<Vec<(usize, u8)>>,
    /// Tier of edge `e` at its left and right end.
    end_tiers: Vec<(u8, u8)>,
    /// Position of each voter in a profile, `usize::MAX` for non-voters.
    voter_slot: Vec<usize>,
    nvoters: usize,
}

pub const UNMATCHED: u8 = u8::MAX;

impl PrefBipartite {
    pub fn new(
        vertices: Ground,
        side: Vec<Side>,
        edge_ids: Ground,
        edges: Vec<Edge>,
        tiers: Vec<Vec<Vec<usize>>>,
        voters: Voters,
    ) -> Result<Self> {
        let nv = vertices.len();
        if side.len() != nv || tiers.len() != nv || edge_ids.len() != edges.len() {
            return Err(Error::Schema("vertex and edge tables have mismatched lengths".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.left >= nv || e.right >= nv || side[e.left] != Side::Left || side[e.right] != Side::Right {
                return Err(Error::Schema(format!(
                    "edge `{}` must join a left vertex to a right vertex",
                    edge_ids.id(i)
                )));
            }
        }
        let mut tier_of = vec![Vec::new(); nv];
        for v in 0..nv {
            let mut incident: Vec<usize> = (0..edges.len())
                .filter(|&e| edges[e].left == v || edges[e].right == v)
                .collect();
            let mut listed: Vec<usize> = tiers[v].iter().flatten().copied().collect();
            incident.sort();
            listed.sort();
            if incident != listed {
                return Err(Error::Schema(format!(
                    "preferences of `{}` must rank each incident edge exactly once",
                    vertices.id(v)
                )));
            }
            if tiers[v].len() >= UNMATCHED as usize {
                return Err(Error::Schema("too many preference tiers".into()));
            }
            for (t, tier) in tiers[v].iter().enumerate() {
                for &e in tier {
                    tier_of[v].push((e, t as u8));
                }
            }
        }
        let lookup = |v: usize, e: usize| tier_of[v].iter().find(|(x, _)| *x == e).map(|(_, t)| *t).expect("incident");
        let end_tiers = edges.iter().enumerate().map(|(i, e)| (lookup(e.left, i), lookup(e.right, i))).collect();
        let mut voter_slot = vec![usize::MAX; nv];
        let mut nvoters = 0;
        for v in 0..nv {
            if voters == Voters::Both || side[v] == Side::Left {
                voter_slot[v] = nvoters;
                nvoters += 1;
            }
        }
        Ok(PrefBipartite {
            vertices,
            side,
            edge_ids,
            edges,
            tiers,
            voters,
            tier_of,
            end_tiers,
            voter_slot,
            nvoters,
        })
    }

    pub fn all_edges(&self) -> ElemSet {
        ElemSet::full(self.edges.len())
    }

    pub fn votes(&self, v: usize) -> bool {
        self.voters == Voters::Both || self.side[v] == Side::Left
    }

    pub fn tier(&self, v: usize, e: Option<usize>) -> u8 {
        match e {
            None => UNMATCHED,
            Some(e) => self.tier_of[v]
                .iter()
                .find(|(x, _)| *x == e)
                .map(|(_, t)| *t)
                .expect("incident edge"),
        }
    }

    pub fn is_matching(&self, m: ElemSet) -> bool {
        let mut used = ElemSet::EMPTY;
        for e in m.iter() {
            if e >= self.edges.len() {
                return false;
            }
            let (a, b) = (self.edges[e].left, self.edges[e].right);
            if used.contains(a) || used.contains(b) {
                return false;
            }
            used.insert(a);
            used.insert(b);
        }
        true
    }

    pub fn weight(&self, m: ElemSet) -> Q {
        m.iter().fold(zero(), |acc, e| acc + &self.edges[e].weight)
    }

    pub fn mate(&self, m: ElemSet, v: usize) -> Option<usize> {
        m.iter()
            .find(|&e| self.edges[e].left == v || self.edges[e].right == v)
    }

    /// Tier of each voter's partner under `m`.
    pub fn profile(&self, m: ElemSet) -> Vec<u8> {
        let mut p = vec![UNMATCHED; self.nvoters];
        self.write_profile(m, &mut p);
        p
    }

    fn write_profile(&self, m: ElemSet, p: &mut [u8]) {
        p.fill(UNMATCHED);
        for e in m.iter() {
            let Edge { left, right, .. } = self.edges[e];
            let (tl, tr) = self.end_tiers[e];
            if let Some(slot) = p.get_mut(self.voter_slot[left]) {
                *slot = tl;
            }
            if let Some(slot) = p.get_mut(self.voter_slot[right]) {
                *slot = tr;
            }
        }
    }

    /// Profiles of many matchings packed into one buffer, `nvoters` bytes each.
    fn profiles(&self, family: &[ElemSet]) -> Vec<u8> {
        let w = self.nvoters;
        let mut buf = vec![UNMATCHED; family.len() * w];
        for (i, &m) in family.iter().enumerate() {
            self.write_profile(m, &mut buf[i * w..(i + 1) * w]);
        }
        buf
    }

    /// `Delta(M, N)`: voters preferring `M` minus voters preferring `N`.
    pub fn delta(&self, m: ElemSet, n: ElemSet) -> i64 {
        profile_delta(&self.profile(m), &self.profile(n))
    }

    /// All matchings of weight at least `k`, canonical order.
    pub fn matchings_at_least(&self, k: &Q, budget: &EnumerationBudget) -> Result<Vec<ElemSet>> {
        // scale to integers so the search runs on machine words
        let scale = self
            .edges
            .iter()
            .fold(k.denom().clone(), |acc, e| num::integer::lcm(acc, e.weight.denom().clone()));
        let to_int = |x: &Q| -> Result<i64> {
            (x * Q::from_integer(scale.clone()))
                .to_integer()
                .try_into()
                .map_err(|_| Error::Budget("weights too large for matching enumeration".into()))
        };
        let weights: Vec<i64> = self.edges.iter().map(|e| to_int(&e.weight)).collect::<Result<_>>()?;
        let k = to_int(k)?;
        let lefts: Vec<usize> = (0..self.vertices.len()).filter(|&v| self.side[v] == Side::Left).collect();
        let by_left: Vec<Vec<usize>> = lefts
            .iter()
            .map(|&v| (0..self.edges.len()).filter(|&e| self.edges[e].left == v).collect())
            .collect();
        let mut best_from = vec![0i64; lefts.len() + 1];
        for i in (0..lefts.len()).rev() {
            let top = by_left[i].iter().map(|&e| weights[e].max(0)).max().unwrap_or(0);
            best_from[i] = best_from[i + 1] + top;
        }
        let search = Search {
            edges: &self.edges,
            weights: &weights,
            by_left: &by_left,
            best_from: &best_from,
            k,
            budget,
        };
        let mut out = Vec::new();
        search.extend(0, ElemSet::EMPTY, ElemSet::EMPTY, 0, &mut out)?;
        out.sort();
        Ok(out)
    }
}

struct Search<'a> {
    edges: &'a [Edge],
    weights: &'a [i64],
    by_left: &'a [Vec<usize>],
    best_from: &'a [i64],
    k: i64,
    budget: &'a EnumerationBudget,
}

impl Search<'_> {
    fn extend(&self, i: usize, m: ElemSet, used: ElemSet, w: i64, out: &mut Vec<ElemSet>) -> Result<()> {
        if w + self.best_from[i] < self.k {
            return Ok(());
        }
        if i == self.by_left.len() {
            out.push(m);
            return self.budget.check_count(out.len());
        }
        self.extend(i + 1, m, used, w, out)?;
        for &e in &self.by_left[i] {
            let r = self.edges[e].right;
            if !used.contains(r) {
                self.extend(i + 1, m.with(e), used.with(r), w + self.weights[e], out)?;
            }
        }
        Ok(())
    }
}

fn profile_delta(a: &[u8], b: &[u8]) -> i64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x < y) as i64 - (y < x) as i64)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Enumerate every rival matching.
    Enumerate,
    /// Exact LP over the extended graph with self-loops; falls back to
    /// enumeration when the optimum is fractional.
    Lp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KVerdict {
    pub popular: bool,
    /// A rival `N` with `Delta(M, N) < 0` when not popular.
    pub rival: Option<ElemSet>,
    /// Minimum of `Delta(M, N)` over rivals of weight at least `k`.
    pub min_delta: i64,
}

/// Is `m` popular among matchings of weight at least `k`?
pub fn verify_k_popular(
    g: &PrefBipartite,
    m: ElemSet,
    k: &Q,
    backend: Backend,
    budget: &EnumerationBudget,
) -> Result<KVerdict> {
    if !g.is_matching(m) {
        return Err(Error::Precondition("the candidate is not a matching".into()));
    }
    if g.weight(m) < *k {
        return Err(Error::Precondition("the candidate is below the threshold".into()));
    }
    match backend {
        Backend::Enumerate => verify_by_enumeration(g, m, k, budget),
        Backend::Lp => match verify_by_lp(g, m, k) {
            Some(v) => Ok(v),
            None => verify_by_enumeration(g, m, k, budget),
        },
    }
}

fn verify_by_enumeration(g: &PrefBipartite, m: ElemSet, k: &Q, budget: &EnumerationBudget) -> Result<KVerdict> {
    let pm = g.profile(m);
    let mut best = (0i64, None);
    let mut pn = vec![UNMATCHED; g.nvoters];
    for n in g.matchings_at_least(k, budget)? {
        g.write_profile(n, &mut pn);
        let d = profile_delta(&pm, &pn);
        if d < best.0 {
            best = (d, Some(n));
        }
    }
    Ok(KVerdict {
        popular: best.1.is_none(),
        rival: best.1,
        min_delta: best.0,
    })
}

/// `None` when the LP optimum is negative but fractional.
fn verify_by_lp(g: &PrefBipartite, m: ElemSet, k: &Q) -> Option<KVerdict> {
    let ne = g.edges.len();
    let nv = g.vertices.len();
    let vote = |v: usize, e: Option<usize>| -> i64 {
        if !g.votes(v) {
            return 0;
        }
        let (mine, other) = (g.tier(v, g.mate(m, v)), g.tier(v, e));
        (mine < other) as i64 - (other < mine) as i64
    };
    let mut lp = LinearProgram::new(ne + nv);
    for (e, edge) in g.edges.iter().enumerate() {
        lp.objective[e] = q(vote(edge.left, Some(e)) + vote(edge.right, Some(e)));
    }
    for v in 0..nv {
        lp.objective[ne + v] = q(vote(v, None));
        let mut row: Vec<(usize, Q)> = (0..ne)
            .filter(|&e| g.edges[e].left == v || g.edges[e].right == v)
            .map(|e| (e, one()))
            .collect();
        row.push((ne + v, one()));
        lp.add(row, Relation::Eq, one());
    }
    lp.add(
        (0..ne).map(|e| (e, g.edges[e].weight.clone())).collect(),
        Relation::Ge,
        k.clone(),
    );
    let LpOutcome::Optimal { x, value } = lp.solve() else {
        unreachable!("the candidate itself is feasible and costs are bounded");
    };
    if !value.is_negative() {
        return Some(KVerdict {
            popular: true,
            rival: None,
            min_delta: 0,
        });
    }
    if x.iter().any(|v| !v.is_integer()) {
        return None;
    }
    let rival: ElemSet = (0..ne).filter(|&e| !x[e].is_zero()).collect();
    Some(KVerdict {
        popular: false,
        rival: Some(rival),
        min_delta: value.to_integer().try_into().expect("small delta"),
    })
}

/// A matching popular among all matchings of weight at least `k`, or `None`.
/// Candidates are tried from largest to smallest, then in canonical order.
pub fn solve_near_opt_brute(g: &PrefBipartite, k: &Q, budget: &EnumerationBudget) -> Result<Option<ElemSet>> {
    let family = g.matchings_at_least(k, budget)?;
    let w = g.nvoters;
    let buf = g.profiles(&family);
    let prof = |i: usize| &buf[i * w..(i + 1) * w];
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(family[i].len()), family[i]));
    // rivals that recently beat a candidate are tried first
    let mut champions: Vec<usize> = Vec::new();
    'candidates: for &c in &order {
        for (slot, &r) in champions.iter().enumerate() {
            if profile_delta(prof(c), prof(r)) < 0 {
                champions[..=slot].rotate_right(1);
                continue 'candidates;
            }
        }
        for r in 0..family.len() {
            if profile_delta(prof(c), prof(r)) < 0 {
                champions.insert(0, r);
                champions.truncate(16);
                continue 'candidates;
            }
        }
        return Ok(Some(family[c]));
    }
    Ok(None)
}

/// Every matching popular among matchings of weight at least `k`, canonical order.
pub fn all_near_opt_popular(g: &PrefBipartite, k: &Q, budget: &EnumerationBudget) -> Result<Vec<ElemSet>> {
    let family = g.matchings_at_least(k, budget)?;
    let w = g.nvoters;
    let buf = g.profiles(&family);
    let prof = |i: usize| &buf[i * w..(i + 1) * w];
    Ok((0..family.len())
        .filter(|&c| (0..family.len()).all(|r| profile_delta(prof(c), prof(r)) >= 0))
        .map(|c| family[c])
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Color {
    Red,
    Blue,
}

/// Bipartite graph with red and blue edges, for exact perfect matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredBipartite {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub edges: Vec<(usize, usize, Color)>,
}

impl ColoredBipartite {
    /// Is there a perfect matching with exactly `k` red edges?
    pub fn has_exact_matching(&self, k: usize) -> bool {
        if self.left.len() != self.right.len() {
            return false;
        }
        fn rec(g: &ColoredBipartite, a: usize, used: &mut Vec<bool>, red: usize, k: usize) -> bool {
            if a == g.left.len() {
                return red == k;
            }
            for &(x, b, c) in &g.edges {
                if x != a || used[b] {
                    continue;
                }
                let r = red + (c == Color::Red) as usize;
                if r > k {
                    continue;
                }
                used[b] = true;
                let found = rec(g, a + 1, used, r, k);
                used[b] = false;
                if found {
                    return true;
                }
            }
            false
        }
        rec(self, 0, &mut vec![false; self.right.len()], 0, k)
    }

    /// Is `m` (edge indices) a perfect matching with exactly `k` red edges?
    pub fn is_exact_matching(&self, m: &[usize], k: usize) -> bool {
        let n = self.left.len();
        if self.right.len() != n || m.len() != n {
            return false;
        }
        let mut la = vec![false; n];
        let mut rb = vec![false; n];
        for &e in m {
            let (a, b, _) = self.edges[e];
            if la[a] || rb[b] {
                return false;
            }
            la[a] = true;
            rb[b] = true;
        }
        m.iter().filter(|&&e| self.edges[e].2 == Color::Red).count() == k
    }
}

#[derive(Clone, Debug)]
pub struct ExactMatchingReduction {
    pub graph: PrefBipartite,
    pub threshold: Q,
    /// For each original edge, the edge joining its agent copy to the object copy of its right end.
    pub via: Vec<usize>,
}

impl ExactMatchingReduction {
    /// Original edges whose copies are used by `m`.
    pub fn induced(&self, m: ElemSet) -> Vec<usize> {
        (0..self.via.len()).filter(|&e| m.contains(self.via[e])).collect()
    }
}

struct Builder {
    vertices: Ground,
    side: Vec<Side>,
    edge_ids: Ground,
    edges: Vec<Edge>,
    tiers: Vec<Vec<Vec<usize>>>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vertices: Ground::default(),
            side: Vec::new(),
            edge_ids: Ground::default(),
            edges: Vec::new(),
            tiers: Vec::new(),
        }
    }

    fn vertex(&mut self, id: &str, side: Side) -> Result<usize> {
        let v = self.vertices.push(id)?;
        self.side.push(side);
        self.tiers.push(Vec::new());
        Ok(v)
    }

    fn edge(&mut self, left: usize, right: usize, weight: Q) -> Result<usize> {
        let id = format!("{}~{}", self.vertices.id(left), self.vertices.id(right));
        let e = self.edge_ids.push(&id)?;
        self.edges.push(Edge { left, right, weight });
        Ok(e)
    }

    fn finish(self, voters: Voters) -> Result<PrefBipartite> {
        PrefBipartite::new(self.vertices, self.side, self.edge_ids, self.edges, self.tiers, voters)
    }
}

/// Agents `a(i,l)`, `c(i,l)` per original edge; objects `b'(j)`, `o(i,l)`, `x(i,p)`.
/// Agents vote; threshold `2|E| + k - n`.
pub fn reduce_exact_matching(g: &ColoredBipartite, k: usize) -> Result<ExactMatchingReduction> {
    let n = g.left.len();
    if g.right.len() != n {
        return Err(Error::Precondition("both sides need the same size".into()));
    }
    if k > n {
        return Err(Error::Precondition("k exceeds the number of vertices per side".into()));
    }
    let mut bld = Builder::new();
    let bprime: Vec<usize> = g
        .right
        .iter()
        .map(|b| bld.vertex(&format!("{b}'"), Side::Right))
        .collect::<Result<_>>()?;
    let mut via = vec![usize::MAX; g.edges.len()];
    for (i, a) in g.left.iter().enumerate() {
        let incident: Vec<usize> = (0..g.edges.len()).filter(|&e| g.edges[e].0 == i).collect();
        let d = incident.len();
        let xs: Vec<usize> = (1..d)
            .map(|p| bld.vertex(&format!("x[{a},{p}]"), Side::Right))
            .collect::<Result<_>>()?;
        for (l, &ge) in incident.iter().enumerate() {
            let (_, b, color) = g.edges[ge];
            let av = bld.vertex(&format!("a[{a},{}]", l + 1), Side::Left)?;
            let cv = bld.vertex(&format!("c[{a},{}]", l + 1), Side::Left)?;
            let ov = bld.vertex(&format!("o[{a},{}]", l + 1), Side::Right)?;
            let ao = bld.edge(av, ov, one())?;
            let red = color == Color::Red;
            let ab = bld.edge(av, bprime[b], if red { one() } else { zero() })?;
            via[ge] = ab;
            bld.tiers[av] = if red { vec![vec![ao], vec![ab]] } else { vec![vec![ab], vec![ao]] };
            let co = bld.edge(cv, ov, one())?;
            let cx: Vec<usize> = xs.iter().map(|&x| bld.edge(cv, x, one())).collect::<Result<_>>()?;
            bld.tiers[cv] = if cx.is_empty() { vec![vec![co]] } else { vec![cx, vec![co]] };
        }
    }
    // objects do not vote; give them one tie tier
    for v in 0..bld.vertices.len() {
        if bld.side[v] == Side::Right {
            let inc: Vec<usize> = (0..bld.edges.len()).filter(|&e| bld.edges[e].right == v).collect();
            bld.tiers[v] = if inc.is_empty() { vec![] } else { vec![inc] };
        }
    }
    let threshold = q(2 * g.edges.len() as i64 + k as i64 - n as i64);
    Ok(ExactMatchingReduction {
        graph: bld.finish(Voters::Left)?,
        threshold,
        via,
    })
}

/// Decides exact perfect matching by solving the reduced near-optimal instance.
pub fn decide_exact_matching(g: &ColoredBipartite, k: usize, budget: &EnumerationBudget) -> Result<bool> {
    let red = reduce_exact_matching(g, k)?;
    Ok(match solve_near_opt_brute(&red.graph, &red.threshold, budget)? {
        None => false,
        Some(m) => g.is_exact_matching(&red.induced(m), k),
    })
}

/// Vertex names of an `l`-special edge between `vi` and `vj`, in path order.
pub fn special_edge_vertices(vi: &str, vj: &str, l: usize) -> Vec<String> {
    let mut path = Vec::with_capacity(2 * l);
    for h in 1..=l {
        for s in 1..=2 {
            path.push(format!("{vi}-{vj}/{h}.{s}"));
        }
    }
    path
}

/// Cycle of `2K` corners joined by `l`-special edges; both sides vote.
/// Returns the graph; the interesting thresholds lie strictly between `2lK` and `(2l+1)K`.
pub fn cycle_gadget(k: usize, l: usize) -> Result<PrefBipartite> {
    if k == 0 || l == 0 {
        return Err(Error::Precondition("the gadget needs K >= 1 and l >= 1".into()));
    }
    let corners: Vec<String> = (1..=2 * k).map(|i| format!("v{i}")).collect();
    // walk the cycle once, collecting vertices in order
    let mut walk: Vec<String> = Vec::new();
    for i in 0..2 * k {
        walk.push(corners[i].clone());
        walk.extend(special_edge_vertices(&corners[i], &corners[(i + 1) % (2 * k)], l));
    }
    let len = walk.len();
    let mut bld = Builder::new();
    for (p, id) in walk.iter().enumerate() {
        bld.vertex(id, if p % 2 == 0 { Side::Left } else { Side::Right })?;
    }
    // edge p joins walk[p] and walk[p + 1]
    let mut edge_at = Vec::with_capacity(len);
    for p in 0..len {
        let (u, v) = (p, (p + 1) % len);
        let (a, b) = if bld.side[u] == Side::Left { (u, v) } else { (v, u) };
        edge_at.push(bld.edge(a, b, one())?);
    }
    let stride = 2 * l + 1;
    for p in 0..len {
        let forward = edge_at[p];
        let backward = edge_at[(p + len - 1) % len];
        let pos = p % stride;
        bld.tiers[p] = if pos == 0 {
            // corner: its own special edge first
            vec![vec![forward], vec![backward]]
        } else if pos % 2 == 1 {
            // first vertex of a connector pair: partner lies forward
            vec![vec![forward], vec![backward]]
        } else {
            vec![vec![backward], vec![forward]]
        };
    }
    bld.finish(Voters::Both)
}
