//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use popmat::exhaustive::{enumerate_cis, EnumerationBudget};
use popmat::matroid::{check_base_exchange, Matroid};
use popmat::mnat::ValuedFamily;
use popmat::nearopt::{all_near_opt_popular, cycle_gadget, decide_exact_matching, Color, ColoredBipartite};
use popmat::onesided::{
    delta, reduce_mnat, reduce_weighted, Agent, Objective, OneSidedInstance,
};
use popmat::random::{
    ground_of, random_blocks, random_laminar_utility, random_matroid, random_one_sided, random_partial_order,
    random_ranking, random_two_sided, random_weights,
};
use popmat::rational::{q, qf, sum_over, Q};
use popmat::twosided::{
    feasible_pairings, is_critical, is_kernel, matroid_kernel, solve_popular_max_weight_two, transform_chains,
    vote, OrderedMatroid, TwoSidedInstance,
};
use popmat::wmi::{
    chain_of, check_cs_one, check_cs_two, coverage, is_chain, max_weight_cis, solve_dual_one, solve_dual_two,
    split_intersection, sum_family, uncross, uncross_step, weight_split,
};
use popmat::ElemSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>, what: &str) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{what}: {e:?}"))
}

fn budget() -> EnumerationBudget {
    EnumerationBudget::with_max_ground(20)
}

/// Random one-sided instances with up to eight elements.
fn one_sided_corpus(count: usize) -> Vec<OneSidedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            random_one_sided(&mut rng, n)
        })
        .collect()
}

/// Two arbitrary matroids on up to eight elements, one summand each, with weights.
fn mixed_two_sided_corpus(count: usize) -> Vec<TwoSidedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let ground = ground_of(n);
            let s = ground.all();
            let m1 = OrderedMatroid::new(vec![random_matroid(&mut rng, s)], random_ranking(&mut rng, s)).unwrap();
            let m2 = OrderedMatroid::new(vec![random_matroid(&mut rng, s)], random_ranking(&mut rng, s)).unwrap();
            let w = random_weights(&mut rng, n, -3, 3);
            TwoSidedInstance::new(ground, m1, m2, w).unwrap()
        })
        .collect()
}

/// Two-sided instances with up to six elements and summands of rank at most two.
fn summand_corpus(count: usize) -> Vec<TwoSidedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            random_two_sided(&mut rng, n, 2, true)
        })
        .collect()
}

fn weights_of(inst: &OneSidedInstance) -> &[Q] {
    match &inst.objective {
        Objective::Weights(w) => w,
        Objective::Utility(_) => unreachable!("weighted corpus"),
    }
}

/// Side-wise minimum over every feasible pairing, computed from the full lists.
fn margin_by_all_pairings(inst: &TwoSidedInstance, i: ElemSet, j: ElemSet) -> std::result::Result<i64, String> {
    let mut total = 0;
    for m in [&inst.m1, &inst.m2] {
        let pairings = ok(feasible_pairings(m, i, j), "pairings")?;
        ensure!(!pairings.is_empty(), "no feasible pairing for {i:?}, {j:?}");
        let mut best = i64::MAX;
        for p in &pairings {
            best = best.min(ok(vote(m, i, j, p), "vote")?);
        }
        total += best;
    }
    Ok(total)
}

fn slackness_matches_optimality() -> Check {
    let b = budget();
    let (mut checked, mut one, mut two) = (0usize, 0usize, 0usize);
    for (k, inst) in one_sided_corpus(200).iter().enumerate() {
        let w = weights_of(inst);
        let parts: Vec<ElemSet> = inst.agents.iter().map(|a| a.part).collect();
        let m1 = ok(inst.m1(), "m1")?;
        let dual = ok(solve_dual_one(&parts, &inst.m2, w, &b), "dual")?;
        let best: BTreeSet<ElemSet> = ok(max_weight_cis(&m1, &inst.m2, w, &b), "opt")?.maximizers.into_iter().collect();
        for i in ok(enumerate_cis(&m1, &inst.m2, &b), "cis")? {
            let holds = ok(check_cs_one(i, &dual, &parts, &inst.m2, w), "cs")?.is_none();
            ensure!(holds == best.contains(&i), "one-sided instance {k}: set {i:?} disagrees");
            checked += 1;
        }
        one += 1;
    }
    for (k, inst) in mixed_two_sided_corpus(200).iter().enumerate() {
        let (m1, m2) = (inst.m1.matroid(), inst.m2.matroid());
        let dual = ok(solve_dual_two(m1, m2, &inst.weights, &b), "dual")?;
        let best: BTreeSet<ElemSet> = ok(max_weight_cis(m1, m2, &inst.weights, &b), "opt")?.maximizers.into_iter().collect();
        for i in ok(enumerate_cis(m1, m2, &b), "cis")? {
            let holds = ok(check_cs_two(i, &dual, m1, m2, &inst.weights), "cs")?.is_none();
            ensure!(holds == best.contains(&i), "two-sided instance {k}: set {i:?} disagrees");
            checked += 1;
        }
        two += 1;
    }
    Ok(format!("{one} one-sided + {two} two-sided instances, {checked} sets, 0 mismatches"))
}

fn weighted_reduction_is_sound() -> Check {
    let b = budget();
    let (mut pairs, mut count) = (0usize, 0usize);
    for (k, inst) in one_sided_corpus(200).iter().enumerate() {
        let w = weights_of(inst);
        let m1 = ok(inst.m1(), "m1")?;
        let best = ok(max_weight_cis(&m1, &inst.m2, w, &b), "opt")?.maximizers;
        let red = ok(reduce_weighted(inst, w, &b), "reduce")?;
        let bases = ok(red.reduced.common_bases(&b), "bases")?;
        let projected: BTreeSet<ElemSet> = bases.iter().map(|&x| red.project(x)).collect();
        let want: BTreeSet<ElemSet> = best.iter().copied().collect();
        ensure!(projected == want, "instance {k}: reduced bases project to {projected:?}, optimum is {want:?}");
        for &i in &best {
            ensure!(bases.contains(&red.lift(i)), "instance {k}: lift of {i:?} is not a common base");
            for &j in &best {
                let before = delta(&inst.agents, i, j);
                let after = delta(&red.reduced.agents, red.lift(i), red.lift(j));
                ensure!(before == after, "instance {k}: Delta({i:?}, {j:?}) {before} became {after}");
                pairs += 1;
            }
        }
        count += 1;
    }
    Ok(format!("{count} instances, {pairs} pairs, 0 mismatches"))
}

/// Instance with a random concave utility and its M2.
fn utility_instance(rng: &mut ChaCha8Rng, n: usize) -> OneSidedInstance {
    let ground = ground_of(n);
    let s = ground.all();
    let (m2, f) = random_laminar_utility(rng, s);
    let k = rng.gen_range(1..=n);
    let agents = random_blocks(rng, s, k)
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|part| Agent {
            part,
            order: random_partial_order(rng, part, 0.6),
        })
        .collect();
    OneSidedInstance::new(ground, agents, m2, Objective::Utility(f)).unwrap()
}

fn utility_corpus(count: usize) -> Vec<OneSidedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=7);
            utility_instance(&mut rng, n)
        })
        .collect()
}

fn utility_reduction_is_sound() -> Check {
    let b = budget();
    let mut count = 0;
    for (k, inst) in utility_corpus(100).iter().enumerate() {
        let Objective::Utility(f) = &inst.objective else { unreachable!() };
        ensure!(f.is_mnat_concave(), "table {k} is not M-natural concave");
        let s = inst.elements();
        let indicator = ok(ValuedFamily::indicator(s, &ok(inst.m1(), "m1")?.independent_sets()), "indicator")?;
        let split = ok(weight_split(&indicator, f), "split")?;
        let joint = ok(sum_family(&indicator, f), "sum")?.maximize().map(|(_, x)| x).unwrap_or_default();
        let via_p = split_intersection(&indicator, f, &split.p);
        ensure!(via_p == joint, "table {k}: split argmax {via_p:?} differs from joint argmax {joint:?}");
        let red = ok(reduce_mnat(inst, f, &b), "reduce")?;
        let projected: BTreeSet<ElemSet> =
            ok(red.reduced.common_bases(&b), "bases")?.iter().map(|&x| red.project(x)).collect();
        let (_, best) = ok(inst.optimal_family(&b), "optimum")?;
        let want: BTreeSet<ElemSet> = best.into_iter().collect();
        ensure!(projected == want, "table {k}: reduced bases project to {projected:?}, optimum is {want:?}");
        count += 1;
    }
    Ok(format!("{count} verified M-natural concave tables, 0 mismatches"))
}

fn two_sided_solutions_are_popular() -> Check {
    let b = budget();
    let (mut rivals, mut count) = (0usize, 0usize);
    for (k, inst) in summand_corpus(200).iter().enumerate() {
        let sol = ok(solve_popular_max_weight_two(inst, &b), &format!("instance {k}"))?.solution;
        let mw = ok(max_weight_cis(inst.m1.matroid(), inst.m2.matroid(), &inst.weights, &b), "opt")?;
        ensure!(sum_over(sol, &inst.weights) == mw.opt, "instance {k}: solution is not max-weight");
        ensure!(mw.maximizers.contains(&sol), "instance {k}: solution is not a common independent set");
        for &j in &mw.maximizers {
            let m = margin_by_all_pairings(inst, sol, j)?;
            ensure!(m >= 0, "instance {k}: rival {j:?} wins by {}", -m);
            ensure!(m == ok(inst.margin(sol, j), "margin")?, "instance {k}: vote_min disagrees with the full pairing list");
            rivals += 1;
        }
        count += 1;
    }
    Ok(format!("{count} instances solved, {rivals} rivals x all pairings, 0 failures"))
}

fn kernels_are_popular() -> Check {
    let b = budget();
    let (mut rivals, mut count) = (0usize, 0usize);
    for (k, inst) in summand_corpus(200).into_iter().enumerate() {
        let zero = vec![q(0); inst.weights.len()];
        let inst = TwoSidedInstance::new(inst.ground, inst.m1, inst.m2, zero).unwrap();
        let ker = ok(matroid_kernel(&inst.m1, &inst.m2), "kernel")?;
        ensure!(is_kernel(&inst.m1, &inst.m2, ker), "instance {k}: output is not a kernel");
        let sol = ok(solve_popular_max_weight_two(&inst, &b), "solve")?.solution;
        for j in ok(enumerate_cis(inst.m1.matroid(), inst.m2.matroid(), &b), "cis")? {
            ensure!(margin_by_all_pairings(&inst, ker, j)? >= 0, "instance {k}: kernel loses to {j:?}");
            ensure!(margin_by_all_pairings(&inst, sol, j)? >= 0, "instance {k}: solver output loses to {j:?}");
            rivals += 1;
        }
        count += 1;
    }
    Ok(format!("{count} instances, {rivals} rivals, 0 failures"))
}

fn cycle_gadget_has_no_nine_popular_matching() -> Check {
    let b = budget();
    let g = ok(cycle_gadget(2, 2), "gadget")?;
    ensure!(g.vertices.len() == 20, "gadget has {} vertices", g.vertices.len());
    let family = ok(g.matchings_at_least(&q(9), &b), "enumerate")?;
    ensure!(!family.is_empty(), "no matching of size 9");
    let popular = ok(all_near_opt_popular(&g, &q(9), &b), "search")?;
    ensure!(popular.is_empty(), "found {} popular matchings", popular.len());
    Ok(format!("20 vertices, {} matchings of size >= 9, none popular", family.len()))
}

fn exact_matching_reduction_agrees() -> Check {
    let b = EnumerationBudget::default();
    let (mut graphs, mut decisions, mut yes) = (0usize, 0usize, 0usize);
    for n in 1..=3usize {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |c| (a, c))).collect();
        for code in 0..3u64.pow(slots.len() as u32) {
            let mut c = code;
            let mut edges = Vec::new();
            for &(a, r) in &slots {
                match c % 3 {
                    1 => edges.push((a, r, Color::Red)),
                    2 => edges.push((a, r, Color::Blue)),
                    _ => {}
                }
                c /= 3;
            }
            if edges.len() > 6 {
                continue;
            }
            let g = ColoredBipartite {
                left: (0..n).map(|i| format!("a{i}")).collect(),
                right: (0..n).map(|i| format!("b{i}")).collect(),
                edges,
            };
            graphs += 1;
            for k in 0..=n {
                let want = g.has_exact_matching(k);
                let got = ok(decide_exact_matching(&g, k, &b), "decide")?;
                ensure!(got == want, "graph {:?} with k = {k}: reduction says {got}", g.edges);
                decisions += 1;
                yes += want as usize;
            }
        }
    }
    Ok(format!("{graphs} graphs, {decisions} decisions ({yes} yes), 0 mismatches"))
}

/// Random positive weights on random, mostly crossing, subsets.
fn random_dual(rng: &mut ChaCha8Rng, n: usize) -> BTreeMap<ElemSet, Q> {
    let mut y = BTreeMap::new();
    for _ in 0..rng.gen_range(1..=6) {
        let s: ElemSet = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            y.insert(s, qf(rng.gen_range(1..=6), rng.gen_range(1..=3)));
        }
    }
    y
}

fn duals_are_exact_and_chains() -> Check {
    let b = budget();
    let mut count = 0;
    for (k, inst) in one_sided_corpus(200).iter().enumerate() {
        let w = weights_of(inst);
        let parts: Vec<ElemSet> = inst.agents.iter().map(|a| a.part).collect();
        let dual = ok(solve_dual_one(&parts, &inst.m2, w, &b), "dual")?;
        let opt = ok(max_weight_cis(&ok(inst.m1(), "m1")?, &inst.m2, w, &b), "opt")?.opt;
        ensure!(dual.value == opt && dual.objective(&inst.m2) == opt, "one-sided instance {k}: gap");
        ensure!(dual.is_feasible(&parts, w), "one-sided instance {k}: infeasible dual");
        ensure!(is_chain(&chain_of(&dual.y)), "one-sided instance {k}: support is not a chain");
        count += 1;
    }
    for (k, inst) in mixed_two_sided_corpus(200).iter().chain(&summand_corpus(200)).enumerate() {
        let (m1, m2) = (inst.m1.matroid(), inst.m2.matroid());
        let dual = ok(solve_dual_two(m1, m2, &inst.weights, &b), "dual")?;
        let opt = ok(max_weight_cis(m1, m2, &inst.weights, &b), "opt")?.opt;
        ensure!(dual.value == opt && dual.objective(m1, m2) == opt, "two-sided instance {k}: gap");
        ensure!(dual.is_feasible(inst.elements(), &inst.weights), "two-sided instance {k}: infeasible dual");
        ensure!(is_chain(&chain_of(&dual.y)) && is_chain(&chain_of(&dual.z)), "two-sided instance {k}: not chains");
        count += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut uncrossed = 0;
    for k in 0..300 {
        let n = rng.gen_range(1..=8);
        let y = random_dual(&mut rng, n);
        let u = uncross(&y);
        ensure!(is_chain(&chain_of(&u)), "family {k}: uncrossed support is not a chain");
        ensure!(u.values().all(|v| *v > q(0)), "family {k}: nonpositive value");
        for e in 0..n {
            ensure!(coverage(&u, e) == coverage(&y, e), "family {k}: coverage of {e} changed");
        }
        let mut step = y.clone();
        while let Some(next) = uncross_step(&step) {
            step = next;
        }
        ensure!(step == u, "family {k}: stepwise uncrossing ends elsewhere");
        uncrossed += 1;
    }
    Ok(format!("{count} duals with zero gap, {uncrossed} families uncrossed"))
}

fn random_chain(rng: &mut ChaCha8Rng, ground: ElemSet) -> Vec<ElemSet> {
    let mut order = ground.to_vec();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut chain = Vec::new();
    let mut acc = ElemSet::EMPTY;
    for e in order {
        acc.insert(e);
        if rng.gen_bool(0.35) {
            chain.push(acc);
        }
    }
    chain
}

fn structural_suites() -> Check {
    let b = budget();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut matroids = 0;
    for k in 0..150 {
        let n = rng.gen_range(0..=10);
        let s = ElemSet::full(n);
        let m = random_matroid(&mut rng, s);
        let t: ElemSet = s.iter().filter(|_| rng.gen_bool(0.5)).collect();
        let r = rng.gen_range(0..=n);
        let other = random_matroid(&mut rng, ElemSet::full(n + 2).difference(s));
        let family = [
            m.clone(),
            ok(m.restrict(t), "restrict")?,
            ok(m.contract(t), "contract")?,
            m.truncate(r),
            ok(Matroid::direct_sum(vec![m.clone(), other]), "sum")?,
        ];
        for x in &family {
            if x.ground().len() > 10 {
                continue;
            }
            ok(x.check_independence_axioms(), &format!("matroid {k}"))?;
            ok(check_base_exchange(&x.bases()), &format!("matroid {k}"))?;
            matroids += 1;
        }
    }
    let mut families = 0;
    for inst in utility_corpus(100).iter().chain(&one_sided_corpus(100)) {
        let red = match &inst.objective {
            Objective::Utility(f) => ok(reduce_mnat(inst, f, &b), "reduce")?,
            Objective::Weights(w) => ok(reduce_weighted(inst, w, &b), "reduce")?,
        };
        ok(check_base_exchange(&red.reduced.m2.bases()), "reduced base family")?;
        families += 1;
    }
    let mut sets = 0;
    for k in 0..150 {
        let n = rng.gen_range(1..=6);
        let s = ElemSet::full(n);
        let (m1, m2) = (random_matroid(&mut rng, s), random_matroid(&mut rng, s));
        let (c1, c2) = (random_chain(&mut rng, s), random_chain(&mut rng, s));
        let p1 = ok(Matroid::direct_sum(ok(transform_chains(&m1, &c1), "transform")?), "sum")?;
        let p2 = ok(Matroid::direct_sum(ok(transform_chains(&m2, &c2), "transform")?), "sum")?;
        let top = |c: &[ElemSet]| c.last().copied().unwrap_or_default();
        for i in s.subsets() {
            let first = m1.indep(i) && m2.indep(i) && is_critical(i, &m1, &m2, &c1, &c2);
            let second = p1.indep(i)
                && p2.indep(i)
                && i.intersection(top(&c1)).len() == m1.rank(top(&c1))
                && i.intersection(top(&c2)).len() == m2.rank(top(&c2));
            ensure!(first == second, "instance {k}: set {i:?} is critical {first} but transformed {second}");
            sets += 1;
        }
    }
    let mut pair_checks = 0;
    for inst in summand_corpus(60) {
        let cis = ok(enumerate_cis(inst.m1.matroid(), inst.m2.matroid(), &b), "cis")?;
        for &i in &cis {
            for &j in &cis {
                margin_by_all_pairings(&inst, i, j)?;
                pair_checks += 1;
            }
        }
    }
    Ok(format!(
        "{matroids} matroids, {families} reduced base families, {sets} sets for the chain transformation, {pair_checks} pairing lists nonempty"
    ))
}

fn criterion(n: usize, title: &str, limit: Option<u64>, f: fn() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let took = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(Ok(d)) => (true, d),
        Ok(Err(e)) => (false, e),
        Err(p) => (
            false,
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    };
    if let Some(secs) = limit {
        if took > Duration::from_secs(secs) {
            pass = false;
            detail.push_str(&format!("; over the {secs} s limit"));
        }
    }
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {n}: {title} ({detail}; {:.1} s)", took.as_secs_f64());
    pass
}

fn main() {
    let results = [
        criterion(1, "slackness holds exactly for the maximum-weight sets", Some(60), slackness_matches_optimality),
        criterion(2, "weighted reduction preserves optima and votes", None, weighted_reduction_is_sound),
        criterion(3, "utility reduction and weight splitting", None, utility_reduction_is_sound),
        criterion(4, "two-sided solutions exist and are popular", Some(120), two_sided_solutions_are_popular),
        criterion(5, "matroid kernels are popular", None, kernels_are_popular),
        criterion(6, "cycle gadget has no 9-popular matching", Some(120), cycle_gadget_has_no_nine_popular_matching),
        criterion(7, "exact-matching reduction agrees with brute force", None, exact_matching_reduction_agrees),
        criterion(8, "dual certificates are exact and chain-supported", None, duals_are_exact_and_chains),
        criterion(9, "structural suites", None, structural_suites),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
