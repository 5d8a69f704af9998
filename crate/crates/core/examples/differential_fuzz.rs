//! Small fuzzing campaign: random programs under random bus timing, each
//! run checked against the architectural model.
//!
//! Usage: cargo run --example differential_fuzz [programs] [insns]

use cheriot_core::campaign::{jobs, run_jobs, worker_count, JobOptions, RunConfig};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("number"));
    let cfg = RunConfig {
        seed: 0xC0FFEE,
        programs: args.next().unwrap_or(50),
        insns: args.next().unwrap_or(128),
        ..RunConfig::default()
    };
    let results = run_jobs(&cfg, &jobs(&cfg), worker_count(), JobOptions::default());
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
    let max_gap = results.iter().map(|r| r.max_gap).max().unwrap_or(0);
    let cycles: u64 = results.iter().map(|r| r.cycles).sum();
    println!("{} jobs, {} failed, {cycles} cycles, max gap {max_gap}", results.len(), failed.len());
    for r in failed {
        for v in r.verdicts.iter().filter(|v| !v.passed()) {
            println!("{}: {v}", r.job);
        }
    }
}
