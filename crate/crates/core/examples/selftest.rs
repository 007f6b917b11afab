//! Invariant checks of the endpoint system on random intervals.
//!
//!     cargo run --release --example selftest

use cue_janossy::selftest::{run, SelfTestConfig};

fn main() -> cue_janossy::Result<()> {
    let report = run(&SelfTestConfig::default())?;
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<22} worst {:.2e} (tol {:.0e})", c.name, c.worst, c.tolerance);
    }
    println!("{:.1} s", report.seconds);
    std::process::exit(if report.passed() { 0 } else { 1 });
}
