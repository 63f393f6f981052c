use std::path::PathBuf;

use popmat::io::{parse_report, Status};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", name].iter().collect();
    p.to_str().unwrap().to_string()
}

/// Exit code, standard output and standard error of one invocation.
fn popmat(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("popmat").chain(args.iter().copied());
    let code = popmat_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn solve_one_finds_the_popular_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let (code, out, _) = popmat(&["solve-one", &fixture("small.json"), "--report", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("solution: {y, z}"), "{out}");
    let r = parse_report(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.status, Status::Solution);
    assert_eq!(r.solution.unwrap(), vec!["y", "z"]);
    let v = r.verification.unwrap();
    assert!(v.popular && v.optimal);
    assert!(v.rivals.iter().any(|e| e.rival == vec!["y"] && e.margin == 1));
}

#[test]
fn solve_one_on_utility_fixture() {
    let (code, out, _) = popmat(&["solve-one", &fixture("utility.json")]);
    assert_eq!(code, 0);
    assert!(out.contains("solution: {y, z}"), "{out}");
}

#[test]
fn condorcet_cycle_has_no_popular_solution() {
    let (code, out, _) = popmat(&["solve-one", &fixture("condorcet.json")]);
    assert_eq!(code, 2, "{out}");
    assert_eq!(popmat(&["oracle", "popular", &fixture("condorcet.json")]).0, 2);
}

#[test]
fn solve_two_succeeds_on_well_formed_instances() {
    for f in ["marriage.json", "weighted-two.json"] {
        let (code, out, err) = popmat(&["solve-two", &fixture(f)]);
        assert_eq!(code, 0, "{f}: {out}{err}");
    }
    for seed in 0..20 {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("i.json");
        let seed = seed.to_string();
        let gen = ["gen", "random-two", "--n", "5", "--seed", &seed, "--out", inst.to_str().unwrap()];
        assert_eq!(popmat(&gen).0, 0);
        let (code, out, err) = popmat(&["solve-two", inst.to_str().unwrap()]);
        assert_eq!(code, 0, "seed {seed}: {out}{err}");
    }
}

#[test]
fn marriage_kernel_is_the_first_side_optimal_matching() {
    let (code, out, _) = popmat(&["kernel", &fixture("marriage.json")]);
    assert_eq!(code, 0);
    assert!(out.contains("{m0-w0, m1-w1}"), "{out}");
}

#[test]
fn verify_accepts_solutions_and_rejects_others() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let r = report.to_str().unwrap();
    assert_eq!(popmat(&["solve-two", &fixture("weighted-two.json"), "--report", r]).0, 0);
    assert_eq!(popmat(&["verify", &fixture("weighted-two.json"), "--from-report", r]).0, 0);
    // a report for another instance is refused
    assert_eq!(popmat(&["verify", &fixture("marriage.json"), "--from-report", r]).0, 1);
    assert_eq!(popmat(&["verify", &fixture("small.json"), "--solution", "y,z"]).0, 0);
    assert_eq!(popmat(&["verify", &fixture("small.json"), "--solution", "y"]).0, 2);
    assert_eq!(popmat(&["verify", &fixture("small.json"), "--solution", "x,z"]).0, 2);
    assert_eq!(popmat(&["verify", &fixture("small.json"), "--solution", "w"]).0, 1);
}

#[test]
fn cycle_gadget_has_no_nine_popular_matching() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("cycle.json");
    let i = inst.to_str().unwrap();
    assert_eq!(popmat(&["gen", "cycle", "--K", "2", "--l", "2", "--out", i]).0, 0);
    assert_eq!(popmat(&["verify-near-opt", i, "--k", "9"]).0, 2);
    // every matching of weight at least 9 is refuted, whichever backend checks it
    let (_, listing, _) = popmat(&["oracle", "cis", i, "--budget", "100000"]);
    let v: serde_json::Value = serde_json::from_str(&listing).unwrap();
    let sets = v["sets"].as_array().unwrap();
    let mut tried = 0;
    for m in sets {
        let ids: Vec<&str> = m.as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
        if ids.len() < 9 {
            continue;
        }
        tried += 1;
        let list = ids.join(",");
        for backend in ["lp", "enumerate"] {
            let args = ["verify-near-opt", i, "--k", "9", "--matching", &list, "--backend", backend];
            assert_eq!(popmat(&args).0, 2, "{list}");
        }
    }
    assert!(tried > 0);
    // a small matching is below the threshold
    let first = sets.iter().find(|m| m.as_array().unwrap().len() == 1).unwrap()[0].as_str().unwrap().to_string();
    assert_eq!(popmat(&["verify-near-opt", i, "--k", "9", "--matching", &first]).0, 2);
}

#[test]
fn exact_matching_generator_agrees_with_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    std::fs::write(
        &graph,
        r#"{"left": ["a0", "a1"], "right": ["b0", "b1"], "edges": [
            {"left": "a0", "right": "b0", "color": "red"},
            {"left": "a1", "right": "b1", "color": "blue"},
            {"left": "a0", "right": "b1", "color": "blue"},
            {"left": "a1", "right": "b0", "color": "blue"}]}"#,
    )
    .unwrap();
    for (k, want) in [(0, 0), (1, 0), (2, 2)] {
        let inst = dir.path().join(format!("em{k}.json"));
        let gen = ["gen", "exact-matching", graph.to_str().unwrap(), "--k", &k.to_string(), "--out", inst.to_str().unwrap()];
        assert_eq!(popmat(&gen).0, 0);
        assert_eq!(popmat(&["verify-near-opt", inst.to_str().unwrap()]).0, want, "k = {k}");
    }
}

#[test]
fn errors_map_to_their_exit_codes() {
    assert_eq!(popmat(&["frobnicate"]).0, 1);
    assert_eq!(popmat(&["solve-one", "/definitely/not/here.json"]).0, 1);
    assert_eq!(popmat(&["solve-two", &fixture("small.json")]).0, 1);
    assert_eq!(popmat(&["solve-one", &fixture("small.json"), "--max-ground", "2"]).0, 4);
    assert_eq!(popmat(&["oracle", "cis", &fixture("condorcet.json"), "--budget", "3"]).0, 4);
    assert_eq!(popmat(&["--help"]).0, 0);
}

#[test]
fn schema_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture("small.json")).unwrap().replace("\"rank\": 2", "\"rank\": 2, \"colour\": 3");
    std::fs::write(&bad, text).unwrap();
    let (code, _, err) = popmat(&["solve-one", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("colour") && err.contains("m2.uniform"), "{err}");
}

#[test]
fn infeasible_instances_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    // two agents, but M2 holds only one element: no common base
    std::fs::write(
        &inst,
        r#"{"model": "one-sided", "ground": ["p", "q"],
            "m2": {"uniform": {"elements": ["p", "q"], "rank": 1}},
            "preferences": [{"part": ["p"]}, {"part": ["q"]}],
            "weights": {"p": 1, "q": 1}}"#,
    )
    .unwrap();
    // a weighted instance is always feasible
    assert_eq!(popmat(&["solve-one", inst.to_str().unwrap()]).0, 0);
    let text = std::fs::read_to_string(&inst).unwrap().replace(r#","weights": {"p": 1, "q": 1}"#, "");
    let text = text.replace(",\n            \"weights\": {\"p\": 1, \"q\": 1}", "");
    std::fs::write(&inst, text).unwrap();
    assert_eq!(popmat(&["solve-one", inst.to_str().unwrap()]).0, 3);
}

#[test]
fn canonical_form_is_a_fixed_point() {
    for f in ["small.json", "utility.json", "condorcet.json", "marriage.json", "weighted-two.json"] {
        let (code, once, _) = popmat(&["canonicalize", &fixture(f)]);
        assert_eq!(code, 0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, &once).unwrap();
        let (_, twice, _) = popmat(&["canonicalize", p.to_str().unwrap()]);
        assert_eq!(once, twice, "{f}");
    }
}
