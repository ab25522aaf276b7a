//! Acceptance gate: runs every validation suite once and prints one line
//! per criterion. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rgo_sampling::validate::{run_suite, Suite};

const SEED: u64 = 20_240_601;

fn main() -> ExitCode {
    let mut failed = 0;
    for (k, suite) in Suite::ALL.into_iter().enumerate() {
        let start = Instant::now();
        let line = match run_suite(suite, SEED) {
            Ok(rep) => {
                for c in rep.failures() {
                    eprintln!("  {}/{} failed: statistic {} vs {} ({})", suite.name(), c.name, c.statistic, c.threshold, c.detail);
                }
                let retried = rep.checks.iter().filter(|c| c.retried).count();
                if !rep.pass {
                    failed += 1;
                }
                format!(
                    "criterion {} {:<13} {}  ({} checks, {} retried, {:.1}s)",
                    k + 1,
                    suite.name(),
                    if rep.pass { "PASS" } else { "FAIL" },
                    rep.checks.len(),
                    retried,
                    start.elapsed().as_secs_f64()
                )
            }
            Err(e) => {
                failed += 1;
                format!("criterion {} {:<13} FAIL  (setup error: {e})", k + 1, suite.name())
            }
        };
        println!("{line}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", Suite::ALL.len());
        ExitCode::FAILURE
    }
}
