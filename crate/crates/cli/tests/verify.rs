use std::collections::BTreeSet;
use supercocycle_cli::verify::{group_of, run_verify, Params, SUITES};
use supercocycle_core::Error;

fn run(suite: &str, seed: u64, count: u64) -> supercocycle_cli::report::Report {
    run_verify(suite, Params { seed, count }).unwrap()
}

#[test]
fn group_laws_pass() {
    let r = run("group-laws", 42, 100);
    assert!(r.passed(), "{}", r.to_text());
    assert!(r.checks.iter().all(|c| group_of(&c.id) == "group-laws"));
}

#[test]
fn modular_reports_small_defects() {
    let r = run("modular", 5, 10);
    assert!(r.passed(), "{}", r.to_text());
}

#[test]
fn unknown_suite_is_a_validation_error() {
    assert!(matches!(run_verify("nope", Params { seed: 0, count: 1 }), Err(Error::ValidationError(_))));
}

#[test]
fn same_seed_same_bytes() {
    for suite in ["invariance-11", "cocycles"] {
        let strip = |mut r: supercocycle_cli::report::Report| {
            r.checks.iter_mut().for_each(|c| c.elapsed_ms = None);
            r.to_json()
        };
        assert_eq!(strip(run(suite, 9, 20)), strip(run(suite, 9, 20)));
    }
}

#[test]
fn all_is_the_union_of_the_suites() {
    let all: Vec<String> = run("all", 1, 5).checks.into_iter().map(|c| c.id).collect();
    let mut parts = Vec::new();
    for s in SUITES.iter().filter(|s| **s != "all") {
        parts.extend(run(s, 1, 5).checks.into_iter().map(|c| c.id));
    }
    assert_eq!(all, parts);
    assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), all.len(), "check ids are unique");
}

#[test]
fn other_seeds_pass_too() {
    for seed in [0, 1, 2024] {
        let r = run("all", seed, 20);
        assert!(r.passed(), "seed {seed}:\n{}", r.to_text());
    }
}
