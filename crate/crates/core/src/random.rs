//! Seeded random instance generators for tests, benchmarks and the CLI.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matroid::{Matroid, Ranking};
use crate::mnat::ValuedFamily;
use crate::onesided::{Agent, Objective, OneSidedInstance, PartialOrder};
use crate::rational::{q, Q};
use crate::set::{ElemSet, Ground};
use crate::twosided::{OrderedMatroid, TwoSidedInstance};

pub fn ground_of(n: usize) -> Ground {
    let ids: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    Ground::new(&ids).expect("distinct ids")
}

/// Splits `ground` into `k` blocks (some possibly empty), in random order.
pub fn random_blocks<R: Rng>(rng: &mut R, ground: ElemSet, k: usize) -> Vec<ElemSet> {
    let mut blocks = vec![ElemSet::EMPTY; k.max(1)];
    for e in ground.iter() {
        let b = rng.gen_range(0..blocks.len());
        blocks[b].insert(e);
    }
    blocks
}

/// Graphic matroid with the elements of `ground` as random edges on `verts` vertices.
pub fn random_graphic<R: Rng>(rng: &mut R, ground: ElemSet, verts: usize) -> Matroid {
    let edges = ground
        .iter()
        .map(|e| {
            let a = rng.gen_range(0..verts);
            let mut b = rng.gen_range(0..verts);
            if verts > 1 && rng.gen_bool(0.85) {
                while b == a {
                    b = rng.gen_range(0..verts);
                }
            }
            (e, format!("v{a}"), format!("v{b}"))
        })
        .collect();
    Matroid::graphic(edges).expect("distinct edges")
}

/// A matroid on exactly `ground`, drawn from a mix of kinds and constructions.
pub fn random_matroid<R: Rng>(rng: &mut R, ground: ElemSet) -> Matroid {
    let n = ground.len();
    let verts = rng.gen_range(2..=n.max(2));
    match rng.gen_range(0..8) {
        0 => Matroid::free(ground),
        1 => Matroid::uniform(ground, rng.gen_range(0..=n)),
        2 => {
            let k = rng.gen_range(1..=n.max(1));
            let parts = random_blocks(rng, ground, k)
                .into_iter()
                .filter(|b| !b.is_empty())
                .map(|b| (b, rng.gen_range(0..=b.len())))
                .collect();
            Matroid::partition(parts).expect("disjoint blocks")
        }
        3 => random_graphic(rng, ground, verts),
        4 => {
            let k = rng.gen_range(0..=n);
            random_graphic(rng, ground, verts).truncate(k)
        }
        5 => {
            // contract a random subset of a graphic matroid, then put it back as a parallel class
            let shrunk: ElemSet = ground.iter().filter(|_| rng.gen_bool(0.3)).collect();
            let g = random_graphic(rng, ground, verts);
            let c = g.contract(shrunk).expect("subset");
            Matroid::direct_sum(vec![c, Matroid::uniform(shrunk, 1)]).expect("disjoint")
        }
        6 => {
            let blocks = random_blocks(rng, ground, 2);
            let pieces = blocks
                .into_iter()
                .map(|b| Matroid::uniform(b, rng.gen_range(0..=b.len())))
                .collect();
            Matroid::direct_sum(pieces).expect("disjoint")
        }
        _ => {
            let m = random_graphic(rng, ground, verts);
            Matroid::from_independents(ground, m.independent_sets()).expect("graphic is a matroid")
        }
    }
}

/// Random strict partial order on `elems`, compatible with a hidden ranking.
pub fn random_partial_order<R: Rng>(rng: &mut R, elems: ElemSet, density: f64) -> PartialOrder {
    let mut v = elems.to_vec();
    v.shuffle(rng);
    let mut pairs = Vec::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if rng.gen_bool(density) {
                pairs.push((v[i], v[j]));
            }
        }
    }
    PartialOrder::from_pairs(elems, &pairs).expect("acyclic by construction")
}

pub fn random_weights<R: Rng>(rng: &mut R, n: usize, lo: i64, hi: i64) -> Vec<Q> {
    (0..n).map(|_| q(rng.gen_range(lo..=hi))).collect()
}

/// One-sided instance with `n` elements, random blocks, orders, `M2` and integer weights.
pub fn random_one_sided<R: Rng>(rng: &mut R, n: usize) -> OneSidedInstance {
    let ground = ground_of(n);
    let s = ground.all();
    let k = rng.gen_range(1..=n.max(1));
    let blocks: Vec<ElemSet> = random_blocks(rng, s, k)
        .into_iter()
        .filter(|b| !b.is_empty())
        .collect();
    let agents = blocks
        .into_iter()
        .map(|part| Agent {
            part,
            order: random_partial_order(rng, part, 0.6),
        })
        .collect();
    let m2 = random_matroid(rng, s);
    let w = random_weights(rng, n, -3, 3);
    OneSidedInstance::new(ground, agents, m2, Objective::Weights(w)).expect("valid by construction")
}

/// Laminar concave function plus a modular term, on the independent sets of a
/// laminar matroid (a truncated partition matroid). Always M-natural concave.
pub fn random_laminar_utility<R: Rng>(rng: &mut R, ground: ElemSet) -> (Matroid, ValuedFamily) {
    let n = ground.len();
    let k = rng.gen_range(1..=n.max(1));
    let blocks: Vec<ElemSet> = random_blocks(rng, ground, k)
        .into_iter()
        .filter(|b| !b.is_empty())
        .collect();
    let parts: Vec<(ElemSet, usize)> = blocks
        .iter()
        .map(|b| (*b, rng.gen_range(1..=b.len())))
        .collect();
    let m2 = Matroid::partition(parts)
        .expect("disjoint")
        .truncate(rng.gen_range(1..=n.max(1)));
    let modular: Vec<i64> = (0..128).map(|_| rng.gen_range(-3..=3)).collect();
    let mut concave: Vec<(ElemSet, Vec<i64>)> = Vec::new();
    let mut laminar = blocks.clone();
    laminar.push(ground);
    for b in laminar {
        // concave sequence: nonincreasing increments
        let mut inc: Vec<i64> = (0..b.len()).map(|_| rng.gen_range(-3..=3)).collect();
        inc.sort_by(|a, b| b.cmp(a));
        let mut g = vec![0i64];
        for d in inc {
            g.push(g.last().unwrap() + d);
        }
        concave.push((b, g));
    }
    let values: BTreeMap<ElemSet, Q> = m2
        .independent_sets()
        .into_iter()
        .map(|x| {
            let mut v: i64 = x.iter().map(|e| modular[e]).sum();
            for (b, g) in &concave {
                v += g[x.intersection(*b).len()];
            }
            (x, q(v))
        })
        .collect();
    let f = ValuedFamily::new(ground, values).expect("subsets of ground");
    (m2, f)
}

/// Random total order over `elems`.
pub fn random_ranking<R: Rng>(rng: &mut R, elems: ElemSet) -> Ranking {
    let mut v = elems.to_vec();
    v.shuffle(rng);
    Ranking::from_list(&v).expect("distinct")
}

/// Direct sum of small summands, each of rank at most `max_rank`.
pub fn random_summands<R: Rng>(rng: &mut R, ground: ElemSet, max_rank: usize) -> Vec<Matroid> {
    let k = rng.gen_range(1..=ground.len().max(1));
    random_blocks(rng, ground, k)
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|b| {
            let cap = max_rank.min(b.len());
            match rng.gen_range(0..3) {
                0 => Matroid::uniform(b, rng.gen_range(1..=cap.max(1)).min(b.len())),
                1 => random_graphic(rng, b, 3).truncate(cap),
                _ if b.len() <= max_rank => Matroid::free(b),
                _ => Matroid::uniform(b, cap),
            }
        })
        .collect()
}

/// Two-sided instance: both sides are direct sums of rank-limited summands.
pub fn random_two_sided<R: Rng>(rng: &mut R, n: usize, max_rank: usize, weights: bool) -> TwoSidedInstance {
    let ground = ground_of(n);
    let s = ground.all();
    let side = |rng: &mut R| {
        let summands = random_summands(rng, s, max_rank);
        let order = random_ranking(rng, s);
        OrderedMatroid::new(summands, order).expect("valid by construction")
    };
    let m1 = side(rng);
    let m2 = side(rng);
    let w = if weights {
        random_weights(rng, n, -3, 3)
    } else {
        vec![q(0); n]
    };
    TwoSidedInstance::new(ground, m1, m2, w).expect("valid by construction")
}
