//! Runs a generated program on the cycle-timed microcore with fixed bus
//! latencies and prints the cycle trace around the first memory access.

use cheriot_core::check::{check_run, gen_program, GenWeights, RunSpec};
use cheriot_core::micro::{BuildConfig, TimingSchedule};

fn main() {
    let body = gen_program(11, 24, &GenWeights::default());
    let mut spec = RunSpec::new(body, TimingSchedule::fixed(2, 3), BuildConfig::default());
    spec.record_trace = true;
    let (out, verdicts) = check_run(&spec).expect("fixed schedule is in range");

    for r in out.trace.iter().take(80) {
        println!("{r}");
    }
    println!("... {} trace records, {} cycles, {} steps", out.trace.len(), out.cycles, out.records.len());
    println!("gaps between steps: {:?}", &out.gaps[..out.gaps.len().min(24)]);
    for v in verdicts {
        println!("{v}");
    }
}
