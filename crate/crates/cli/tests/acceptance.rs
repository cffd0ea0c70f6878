//! The thirteen acceptance criteria at their stated tolerances, one test each.
//! Each prints its `criterion <id> <name>: PASS|FAIL (...)` line unconditionally.

use std::io::Write;

use mequi_cli::acceptance::{determinism, run_core, run_criterion, SuiteParams};
use mequi_cli::report::{to_json, Check};

fn announce(check: &Check) {
    let _ = writeln!(std::io::stderr(), "{}", check.line());
}

fn criterion(id: u32) {
    let check = run_criterion(id, &SuiteParams::default());
    announce(&check);
    assert!(check.passed, "{}\n{}", check.line(), to_json(&check.measured));
}

#[test]
fn criterion_01_toeplitz_bound() {
    criterion(1);
}

#[test]
fn criterion_02_toeplitz_coverage() {
    criterion(2);
}

#[test]
fn criterion_03_cantor_substitution_density() {
    criterion(3);
}

#[test]
fn criterion_04_sturmian_disagreement_density() {
    criterion(4);
}

#[test]
fn criterion_05_sturmian_modulus_decay() {
    criterion(5);
}

#[test]
fn criterion_06_thue_morse_non_decay() {
    criterion(6);
}

#[test]
fn criterion_07_thue_morse_fiber_constancy() {
    criterion(7);
}

#[test]
fn criterion_08_skew_product_discontinuity() {
    criterion(8);
}

#[test]
fn criterion_09_weyl_invariance() {
    criterion(9);
}

#[test]
fn criterion_10_spectrum_peaks() {
    criterion(10);
}

#[test]
fn criterion_11_full_group_witnesses() {
    criterion(11);
}

#[test]
fn criterion_12_pseudometric_axioms() {
    criterion(12);
}

#[test]
fn criterion_13_determinism() {
    let params = SuiteParams::default();
    let runs: Vec<String> = [1, 3]
        .iter()
        .map(|&n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            to_json(&pool.install(|| run_core(&params)))
        })
        .collect();
    let check = determinism(&runs);
    announce(&check);
    assert!(check.passed, "{}", check.line());
}
