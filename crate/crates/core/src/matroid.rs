//! Oracle matroids: independence, rank, minors, sums and greedy choice.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::set::ElemSet;

/// Bound below which explicit families are checked against the axioms eagerly.
pub const EAGER_AXIOM_CHECK: usize = 10;

#[derive(Clone, Debug)]
pub struct Matroid {
    ground: ElemSet,
    kind: Arc<MatroidKind>,
}

#[derive(Debug)]
pub enum MatroidKind {
    Free,
    Uniform { rank: usize },
    Partition { parts: Vec<(ElemSet, usize)> },
    /// `ends[e]` holds the endpoints of edge element `e`.
    Graphic {
        ends: Vec<Option<(usize, usize)>>,
        vertices: Vec<String>,
    },
    Independents { sets: HashSet<ElemSet> },
    Bases {
        bases: Vec<ElemSet>,
        closure: Option<HashSet<ElemSet>>,
    },
    DirectSum { children: Vec<Matroid> },
    Restriction { child: Matroid },
    /// `base` is the greedy base of `contracted` used by the independence test.
    Contraction {
        child: Matroid,
        contracted: ElemSet,
        base: ElemSet,
    },
    Truncation { child: Matroid, k: usize },
    /// Parallel copies: `origin[e]` is the child element that copy `e` stands for.
    Lift {
        child: Matroid,
        origin: Vec<Option<usize>>,
    },
}

impl Matroid {
    fn make(ground: ElemSet, kind: MatroidKind) -> Matroid {
        Matroid {
            ground,
            kind: Arc::new(kind),
        }
    }

    pub fn free(ground: ElemSet) -> Matroid {
        Matroid::make(ground, MatroidKind::Free)
    }

    pub fn uniform(ground: ElemSet, rank: usize) -> Matroid {
        Matroid::make(ground, MatroidKind::Uniform { rank })
    }

    pub fn partition(parts: Vec<(ElemSet, usize)>) -> Result<Matroid> {
        let mut ground = ElemSet::EMPTY;
        for (p, _) in &parts {
            if !p.is_disjoint(ground) {
                return Err(Error::Precondition("partition blocks overlap".into()));
            }
            ground = ground.union(*p);
        }
        Ok(Matroid::make(ground, MatroidKind::Partition { parts }))
    }

    /// Graphic matroid; `edges` lists `(element, tail, head)` over vertex names.
    pub fn graphic(edges: Vec<(usize, String, String)>) -> Result<Matroid> {
        let mut vertices: Vec<String> = Vec::new();
        let mut vidx: HashMap<String, usize> = HashMap::new();
        let mut ends = Vec::new();
        let mut ground = ElemSet::EMPTY;
        for (e, a, b) in edges {
            if ground.contains(e) {
                return Err(Error::Precondition(format!("edge element {e} listed twice")));
            }
            ground.insert(e);
            let mut id = |v: String| {
                *vidx.entry(v.clone()).or_insert_with(|| {
                    vertices.push(v);
                    vertices.len() - 1
                })
            };
            let (u, v) = (id(a), id(b));
            if ends.len() <= e {
                ends.resize(e + 1, None);
            }
            ends[e] = Some((u, v));
        }
        Ok(Matroid::make(ground, MatroidKind::Graphic { ends, vertices }))
    }

    /// Explicit family of independent sets, axiom-checked when the ground is small.
    pub fn from_independents(ground: ElemSet, sets: Vec<ElemSet>) -> Result<Matroid> {
        let family: HashSet<ElemSet> = sets.into_iter().collect();
        for s in &family {
            if !s.is_subset(ground) {
                return Err(Error::Domain("independent set outside the ground".into()));
            }
        }
        let m = Matroid::make(ground, MatroidKind::Independents { sets: family });
        if ground.len() <= EAGER_AXIOM_CHECK {
            m.check_independence_axioms()?;
        }
        Ok(m)
    }

    /// Explicit list of bases, checked against the exchange axiom when the ground is small.
    pub fn from_bases(ground: ElemSet, bases: Vec<ElemSet>) -> Result<Matroid> {
        let mut bases = bases;
        bases.sort();
        bases.dedup();
        if bases.is_empty() {
            return Err(Error::Axiom("a matroid needs at least one base".into()));
        }
        for b in &bases {
            if !b.is_subset(ground) {
                return Err(Error::Domain("base outside the ground".into()));
            }
        }
        if ground.len() <= EAGER_AXIOM_CHECK {
            check_base_exchange(&bases)?;
        }
        let budget: usize = bases.iter().map(|b| 1usize << b.len().min(30)).sum();
        let closure = (budget <= 1 << 18).then(|| {
            let mut c = HashSet::new();
            for b in &bases {
                for s in b.subsets_unordered() {
                    c.insert(s);
                }
            }
            c
        });
        Ok(Matroid::make(ground, MatroidKind::Bases { bases, closure }))
    }

    pub fn direct_sum(children: Vec<Matroid>) -> Result<Matroid> {
        let mut ground = ElemSet::EMPTY;
        for c in &children {
            if !c.ground.is_disjoint(ground) {
                return Err(Error::Precondition(
                    "direct sum summands must have disjoint grounds".into(),
                ));
            }
            ground = ground.union(c.ground);
        }
        Ok(Matroid::make(ground, MatroidKind::DirectSum { children }))
    }

    /// `M | t`.
    pub fn restrict(&self, t: ElemSet) -> Result<Matroid> {
        self.check_subset(t)?;
        Ok(Matroid::make(
            t,
            MatroidKind::Restriction {
                child: self.clone(),
            },
        ))
    }

    /// `M / t`; independence is tested against a fixed greedy base of `t`.
    pub fn contract(&self, t: ElemSet) -> Result<Matroid> {
        self.check_subset(t)?;
        let base = self.greedy_base(t);
        Ok(Matroid::make(
            self.ground.difference(t),
            MatroidKind::Contraction {
                child: self.clone(),
                contracted: t,
                base,
            },
        ))
    }

    /// Keeps the independent sets of size at most `k`.
    pub fn truncate(&self, k: usize) -> Matroid {
        Matroid::make(
            self.ground,
            MatroidKind::Truncation {
                child: self.clone(),
                k,
            },
        )
    }

    /// Matroid on copies: `X` is independent when no two copies share an
    /// origin and the origins form an independent set of `child`.
    pub fn lift(child: &Matroid, copies: &[(usize, usize)]) -> Result<Matroid> {
        let mut ground = ElemSet::EMPTY;
        let mut origin = Vec::new();
        for &(copy, orig) in copies {
            if !child.ground.contains(orig) {
                return Err(Error::Domain(format!("lift origin {orig} outside the ground")));
            }
            ground.insert(copy);
            if origin.len() <= copy {
                origin.resize(copy + 1, None);
            }
            origin[copy] = Some(orig);
        }
        Ok(Matroid::make(
            ground,
            MatroidKind::Lift {
                child: child.clone(),
                origin,
            },
        ))
    }

    pub fn ground(&self) -> ElemSet {
        self.ground
    }

    pub fn kind(&self) -> &MatroidKind {
        &self.kind
    }

    pub fn check_subset(&self, x: ElemSet) -> Result<()> {
        if x.is_subset(self.ground) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "elements {:?} are outside the ground set",
                x.difference(self.ground)
            )))
        }
    }

    /// Independence test; `x` must lie inside the ground set.
    pub fn indep(&self, x: ElemSet) -> bool {
        debug_assert!(x.is_subset(self.ground));
        match &*self.kind {
            MatroidKind::Free => true,
            MatroidKind::Uniform { rank } => x.len() <= *rank,
            MatroidKind::Partition { parts } => {
                parts.iter().all(|(p, cap)| x.intersection(*p).len() <= *cap)
            }
            MatroidKind::Graphic { ends, vertices } => is_forest(x, ends, vertices.len()),
            MatroidKind::Independents { sets } => sets.contains(&x),
            MatroidKind::Bases { bases, closure } => match closure {
                Some(c) => c.contains(&x),
                None => bases.iter().any(|b| x.is_subset(*b)),
            },
            MatroidKind::DirectSum { children } => children
                .iter()
                .all(|c| c.indep(x.intersection(c.ground))),
            MatroidKind::Restriction { child } => child.indep(x),
            MatroidKind::Contraction { child, base, .. } => child.indep(x.union(*base)),
            MatroidKind::Truncation { child, k } => x.len() <= *k && child.indep(x),
            MatroidKind::Lift { child, origin } => {
                let mut image = ElemSet::EMPTY;
                for e in x.iter() {
                    let o = origin[e].expect("copy has an origin");
                    if image.contains(o) {
                        return false;
                    }
                    image.insert(o);
                }
                child.indep(image)
            }
        }
    }

    pub fn is_independent(&self, x: ElemSet) -> Result<bool> {
        self.check_subset(x)?;
        Ok(self.indep(x))
    }

    /// Greedy maximal independent subset of `x`, scanning in ground order.
    pub fn greedy_base(&self, x: ElemSet) -> ElemSet {
        let mut b = ElemSet::EMPTY;
        for e in x.iter() {
            if self.indep(b.with(e)) {
                b.insert(e);
            }
        }
        b
    }

    pub fn rank(&self, x: ElemSet) -> usize {
        self.greedy_base(x).len()
    }

    pub fn rank_of(&self, x: ElemSet) -> Result<usize> {
        self.check_subset(x)?;
        Ok(self.rank(x))
    }

    pub fn full_rank(&self) -> usize {
        self.rank(self.ground)
    }

    pub fn is_base(&self, x: ElemSet) -> bool {
        self.indep(x) && x.len() == self.full_rank()
    }

    /// The unique circuit in `i + v`.
    pub fn fundamental_circuit(&self, i: ElemSet, v: usize) -> Result<ElemSet> {
        self.check_subset(i.with(v))?;
        if i.contains(v) || !self.indep(i) {
            return Err(Error::Precondition(
                "fundamental circuit needs an independent set and an outside element".into(),
            ));
        }
        if self.indep(i.with(v)) {
            return Err(Error::Precondition(format!(
                "element {v} does not close a circuit"
            )));
        }
        let mut c = ElemSet::singleton(v);
        for u in i.iter() {
            if self.indep(i.without(u).with(v)) {
                c.insert(u);
            }
        }
        Ok(c)
    }

    /// Scans `x` from most to least preferred, keeping elements that preserve independence.
    pub fn greedy_choice(&self, x: ElemSet, order: &Ranking) -> Result<ElemSet> {
        self.check_subset(x)?;
        let mut out = ElemSet::EMPTY;
        for e in order.sorted(x)? {
            if self.indep(out.with(e)) {
                out.insert(e);
            }
        }
        Ok(out)
    }

    /// All independent sets, canonical order.
    pub fn independent_sets(&self) -> Vec<ElemSet> {
        self.ground
            .subsets()
            .into_iter()
            .filter(|s| self.indep(*s))
            .collect()
    }

    /// Checks (I1) and (I2) by enumeration.
    pub fn check_independence_axioms(&self) -> Result<()> {
        let family: Vec<ElemSet> = self.independent_sets();
        if !self.indep(ElemSet::EMPTY) {
            return Err(Error::Axiom("the empty set must be independent".into()));
        }
        let set: HashSet<ElemSet> = family.iter().copied().collect();
        for &i in &family {
            for e in i.iter() {
                if !set.contains(&i.without(e)) {
                    return Err(Error::Axiom(format!(
                        "(I1) fails: {:?} is independent but {:?} is not",
                        i,
                        i.without(e)
                    )));
                }
            }
        }
        for &i in &family {
            for &j in &family {
                if i.len() < j.len() && !j.difference(i).iter().any(|e| set.contains(&i.with(e))) {
                    return Err(Error::Axiom(format!(
                        "(I2) fails for {i:?} and {j:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// All bases, canonical order.
    pub fn bases(&self) -> Vec<ElemSet> {
        let r = self.full_rank();
        self.ground
            .subsets_of_size(r)
            .into_iter()
            .filter(|s| self.indep(*s))
            .collect()
    }
}

/// Base exchange: for bases `a`, `b` and `x` in `a - b` some `y` in `b - a` has `a - x + y` a base.
pub fn check_base_exchange(bases: &[ElemSet]) -> Result<()> {
    let set: HashSet<ElemSet> = bases.iter().copied().collect();
    for &a in bases {
        for &b in bases {
            for x in a.difference(b).iter() {
                let ok = b
                    .difference(a)
                    .iter()
                    .any(|y| set.contains(&a.without(x).with(y)));
                if !ok {
                    return Err(Error::Axiom(format!(
                        "base exchange fails: bases {a:?}, {b:?} and element {x}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn is_forest(x: ElemSet, ends: &[Option<(usize, usize)>], nverts: usize) -> bool {
    let mut parent: Vec<usize> = (0..nverts).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    for e in x.iter() {
        let (a, b) = ends[e].expect("edge element has endpoints");
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Rank queries memoized by set; safe to share across threads.
pub struct RankOracle<'a> {
    matroid: &'a Matroid,
    memo: RwLock<HashMap<ElemSet, usize>>,
}

impl<'a> RankOracle<'a> {
    pub fn new(matroid: &'a Matroid) -> Self {
        RankOracle {
            matroid,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn rank(&self, x: ElemSet) -> usize {
        if let Some(r) = self.memo.read().expect("rank memo poisoned").get(&x) {
            return *r;
        }
        let r = self.matroid.rank(x);
        self.memo.write().expect("rank memo poisoned").insert(x, r);
        r
    }

    pub fn matroid(&self) -> &Matroid {
        self.matroid
    }
}

/// A strict total order on a set of elements; position 0 is the most preferred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    pos: Vec<u32>,
}

impl Ranking {
    pub fn from_list(list: &[usize]) -> Result<Ranking> {
        let n = list.iter().max().map_or(0, |m| m + 1);
        let mut pos = vec![u32::MAX; n];
        for (i, &e) in list.iter().enumerate() {
            if pos[e] != u32::MAX {
                return Err(Error::Schema(format!("element {e} ranked twice")));
            }
            pos[e] = i as u32;
        }
        Ok(Ranking { pos })
    }

    pub fn position(&self, e: usize) -> Option<u32> {
        self.pos.get(e).copied().filter(|&p| p != u32::MAX)
    }

    /// `a` strictly preferred to `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(x), Some(y)) => x < y,
            _ => false,
        }
    }

    pub fn covers(&self, x: ElemSet) -> bool {
        x.iter().all(|e| self.position(e).is_some())
    }

    /// Members of `x` from most to least preferred.
    pub fn sorted(&self, x: ElemSet) -> Result<Vec<usize>> {
        let mut v = x.to_vec();
        if let Some(e) = v.iter().find(|&&e| self.position(e).is_none()) {
            return Err(Error::Domain(format!("element {e} is not ranked")));
        }
        v.sort_by_key(|&e| self.pos[e]);
        Ok(v)
    }

    pub fn list(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.pos.len())
            .filter(|&e| self.pos[e] != u32::MAX)
            .collect();
        v.sort_by_key(|&e| self.pos[e]);
        v
    }
}
