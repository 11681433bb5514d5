//! Acceptance criteria 1-12 at the pinned seed, one PASS/FAIL line each.
//! Runs as a plain binary so the lines are always shown.

use std::process::ExitCode;

use rfim_harness::verify::{run_verify, VerifyOptions, ERF_INV_SQRT2};

fn main() -> ExitCode {
    // Independent check of the closed-form constant used by criterion 4.
    let erf = statrs::function::erf::erf(std::f64::consts::FRAC_1_SQRT_2);
    assert!((erf - ERF_INV_SQRT2).abs() < 1e-9, "erf(1/sqrt 2) = {erf}");

    let opts = VerifyOptions::default();
    println!("acceptance suite: seed {:#x}, {} workers", opts.seed, opts.workers);
    let report = run_verify(&opts, |c| eprintln!("  done {:>2} {}", c.id, c.name));
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failed = report.failures();
    println!("{} passed, {failed} failed", report.criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
