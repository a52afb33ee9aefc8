//! Runs the eight acceptance criteria and prints one line each.

use std::process::ExitCode;
use std::time::Instant;

use arith_mm::acceptance::{self, AcceptanceConfig};

fn main() -> ExitCode {
    let start = Instant::now();
    let outcomes = acceptance::run_jobs(acceptance::full_suite(&AcceptanceConfig::default()));
    let mut all = true;
    for out in &outcomes {
        println!("{}", out.line());
        all &= out.passed;
    }
    println!(
        "acceptance: {} in {:.1} s",
        if all { "all criteria passed" } else { "FAILED" },
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
