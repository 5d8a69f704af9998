//! Counterexample shrinking: greedy instruction deletion, then schedule
//! simplification, keeping every change under which the run still fails.

use crate::micro::TimingSchedule;

use super::harness::RunSpec;

/// Smallest variant of `spec` found on which `fails` still holds.
pub fn minimize(spec: &RunSpec, fails: impl Fn(&RunSpec) -> bool) -> RunSpec {
    let mut best = spec.clone();
    if !fails(&best) {
        return best;
    }
    let mut k = best.body.len();
    while k > 0 {
        k -= 1;
        let mut cand = best.clone();
        cand.body.remove(k);
        if fails(&cand) {
            best = cand;
        }
    }
    let shrinks: [fn(&mut TimingSchedule); 5] = [
        |s| s.irq_cycles.clear(),
        |s| s.fetch_delay = vec![0],
        |s| s.wfi_wake = vec![1],
        |s| s.gnt_latency = vec![1],
        |s| s.rvalid_latency = vec![1],
    ];
    for f in shrinks {
        let mut cand = best.clone();
        f(&mut cand.schedule);
        if cand.schedule != best.schedule && fails(&cand) {
            best = cand;
        }
    }
    best
}
