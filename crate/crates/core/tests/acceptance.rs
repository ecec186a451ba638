//! Runs the ten acceptance criteria and prints one line per criterion.

use std::process::ExitCode;

use private_twentyq::selftest::run_criterion;

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in 1..=10 {
        let report = run_criterion(id);
        println!("{report}");
        if !report.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
