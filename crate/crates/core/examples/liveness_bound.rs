//! Prints the worst-case cycles between architectural steps per
//! instruction class and compares them with gaps measured on the core.

use cheriot_core::campaign::{job_spec, Job, RunConfig};
use cheriot_core::check::liveness::{worst_case_gaps, LatencyBounds};
use cheriot_core::check::{b_max, check_run};

fn main() {
    let bounds = LatencyBounds::default();
    let mut table: Vec<_> = worst_case_gaps(&bounds).into_iter().collect();
    table.sort_by_key(|(_, g)| *g);
    for (class, gap) in &table {
        println!("{:<12} {gap}", format!("{class:?}"));
    }
    println!("bound {}", b_max());

    let cfg = RunConfig { seed: 5, insns: 256, ..RunConfig::default() };
    let mut worst = 0;
    for n in 0..40 {
        let (out, _) = check_run(&job_spec(&cfg, Job::Random(n))).expect("valid schedule");
        worst = worst.max(out.max_gap());
    }
    println!("largest gap over 40 random programs: {worst}");
}
