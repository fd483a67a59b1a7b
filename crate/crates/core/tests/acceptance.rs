//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! `cargo test -p udw-qfi --test acceptance`; set `ACCEPTANCE_SEED` to vary
//! the randomized grids.

use std::process::ExitCode;

use udw_qfi::verify::{run_all, DEFAULT_SEED};

fn main() -> ExitCode {
    let seed = std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    println!("acceptance suite (seed {seed})");
    let reports = run_all(seed);
    let mut failed = 0;
    for report in &reports {
        println!("{report}");
        for check in report.failures() {
            println!("    - {}: {}", check.label, check.detail);
        }
        failed += usize::from(!report.passed);
    }
    println!(
        "{} of {} criteria passed",
        reports.len() - failed,
        reports.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
