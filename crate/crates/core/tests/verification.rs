//! End-to-end pass of every verification suite, the same entry point the
//! command line uses.

use willislab_core::verify::{run_suites, SUITE_NAMES};

#[test]
fn every_suite_passes() {
    let report = run_suites(&[], "integration").expect("suites should run");
    println!("{}", report.render());
    assert!(report.all_pass(), "\n{}", report.render());
}

#[test]
fn suite_selection_runs_the_requested_subset_in_canonical_order() {
    let names = vec!["limits".to_string(), "invariance".to_string()];
    let report = run_suites(&names, "integration").expect("suites should run");
    let suites: Vec<&str> = report.checks.iter().map(|c| c.suite).collect();
    assert!(suites.iter().all(|s| *s == "invariance" || *s == "limits"));
    let first_limit = suites.iter().position(|s| *s == "limits").unwrap();
    assert!(suites[..first_limit].iter().all(|s| *s == "invariance"));
    assert!(SUITE_NAMES.contains(&"invariance"));
}
