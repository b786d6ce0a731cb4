//! Runs the full criterion battery and prints one line per criterion.
//! Pass a criterion id or tag as the first argument to restrict the run.

use std::process::ExitCode;

use infocap::verify;

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let summary = verify::run(filter.as_deref());
    for r in &summary.results {
        println!("{}", r.line());
        if !r.pass {
            for c in r.checks.iter().filter(|c| !c.pass) {
                println!(
                    "       failed {}: lhs {:.6e} rhs {:.6e} tol {:.1e}",
                    c.label, c.lhs, c.rhs, c.tolerance
                );
            }
        }
    }
    println!(
        "{} of {} criteria pass in {:.1} s",
        summary.results.iter().filter(|r| r.pass).count(),
        summary.results.len(),
        summary.elapsed_seconds
    );
    if summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
