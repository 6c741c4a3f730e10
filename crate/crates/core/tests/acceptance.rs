//! One PASS/FAIL line per acceptance criterion, at full toy scale.
//! Runs without the test harness so the lines are never captured.

use std::process::ExitCode;

use cfi_forge::pipeline::criteria::Level;
use cfi_forge::pipeline::suite::cmd_suite;

fn main() -> ExitCode {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let run = match cmd_suite(Level::Full, jobs, false) {
        Ok(run) => run,
        Err(e) => {
            println!("FAIL suite did not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &run.reports {
        println!("{}", r.line());
        for n in &r.notes {
            println!("       note: {n}");
        }
        for f in r.failures.iter().skip(1) {
            println!("       failure: {f}");
        }
    }
    let failed: Vec<u8> = run.reports.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    println!("{} of {} criteria passed", run.reports.len() - failed.len(), run.reports.len());
    if run.reports.len() == 12 && failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
