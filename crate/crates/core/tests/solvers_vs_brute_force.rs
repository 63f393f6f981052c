use popmat::exhaustive::{enumerate_cis, EnumerationBudget};
use popmat::onesided::{brute_popular_one, solve_popular_max_weight, Agent, Objective, OneSidedInstance};
use popmat::random::{random_laminar_utility, random_one_sided, random_partial_order, random_two_sided, ground_of};
use popmat::twosided::{solve_popular_max_weight_two, verify_popular_two, feasible_pairings, vote};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn one_sided_weights_agree_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let budget = EnumerationBudget::default();
    let mut with_solution = 0;
    for round in 0..300 {
        let n = rng.gen_range(1..=7);
        let inst = random_one_sided(&mut rng, n);
        let brute = brute_popular_one(&inst, &budget).unwrap();
        let sol = solve_popular_max_weight(&inst, &budget).unwrap();
        assert_eq!(sol.solution, brute.popular.first().copied(), "round {round}");
        with_solution += sol.solution.is_some() as usize;
    }
    assert!(with_solution > 50);
}

#[test]
fn one_sided_utilities_agree_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let budget = EnumerationBudget::default();
    for round in 0..150 {
        let n = rng.gen_range(1..=6);
        let ground = ground_of(n);
        let s = ground.all();
        let (m2, f) = random_laminar_utility(&mut rng, s);
        assert!(f.is_mnat_concave(), "round {round}");
        let k = rng.gen_range(1..=n);
        let agents = popmat::random::random_blocks(&mut rng, s, k)
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|part| Agent { part, order: random_partial_order(&mut rng, part, 0.6) })
            .collect();
        let inst = OneSidedInstance::new(ground, agents, m2, Objective::Utility(f)).unwrap();
        let brute = brute_popular_one(&inst, &budget).unwrap();
        let sol = solve_popular_max_weight(&inst, &budget).unwrap();
        assert_eq!(sol.solution, brute.popular.first().copied(), "round {round}");
    }
}

#[test]
fn two_sided_solution_is_popular_within_max_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let budget = EnumerationBudget::default();
    for round in 0..200 {
        let n = rng.gen_range(1..=6);
        let inst = random_two_sided(&mut rng, n, 2, round % 4 != 0);
        let sol = solve_popular_max_weight_two(&inst, &budget).unwrap();
        let v = verify_popular_two(&inst, sol.solution, &budget).unwrap();
        assert!(v.popular(), "round {round}: {v:?}");
        // cross-check the per-summand minimum against the full product of pairings
        let cis = enumerate_cis(inst.m1.matroid(), inst.m2.matroid(), &budget).unwrap();
        for &(j, margin) in v.rivals.iter().take(4) {
            let i = sol.solution;
            let min1 = feasible_pairings(&inst.m1, i, j).unwrap().iter().map(|p| vote(&inst.m1, i, j, p).unwrap()).min().unwrap();
            let min2 = feasible_pairings(&inst.m2, i, j).unwrap().iter().map(|p| vote(&inst.m2, i, j, p).unwrap()).min().unwrap();
            assert_eq!(min1 + min2, margin);
            assert!(cis.contains(&j));
        }
    }
}
