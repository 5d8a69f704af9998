//! Worst-case spacing of spec_en events.
//!
//! The bound comes from an abstract timing automaton, separate from the
//! microcore's code. A state records, relative to the last spec_en cycle
//! `c`, the first cycle at which each resource is free:
//! - `wb`: the writeback slot (a load holds it until its last response),
//! - `lsu`: the load-store unit (busy until its last response),
//! - `fetch`: the next instruction can be at the FIFO head,
//! - `sleep`: the core is awake again after WFI (0 when not sleeping).
//!
//! An edge is one instruction class with concrete latencies. Its weight is
//! the cycle distance to the next spec_en: wait until the resources the
//! class needs are free, then its execution time. Execution of a data
//! access issues in the start cycle and is granted `1 + gnt` cycles later;
//! a second request starts the cycle after the first response. The bound
//! is the heaviest edge over all states reachable from reset.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::micro::{MAX_FETCH_DELAY, MAX_LATENCY, MAX_WFI_WAKE};

use super::harness::RunOutcome;
use super::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InsnClass {
    /// Retires without redirecting.
    Alu,
    /// Jump, taken branch or MRET.
    Redirect,
    /// Trap raised before any data access (illegal, fetch fault, ECALL).
    Trap,
    /// Data access trapping in its checks; waits for the LSU first.
    MemTrap,
    Interrupt,
    Wfi,
    Load,
    /// Misaligned load split in two.
    Load2,
    Store,
    Store2,
    Clc,
    Csc,
}

impl InsnClass {
    pub const ALL: [InsnClass; 12] = [
        InsnClass::Alu,
        InsnClass::Redirect,
        InsnClass::Trap,
        InsnClass::MemTrap,
        InsnClass::Interrupt,
        InsnClass::Wfi,
        InsnClass::Load,
        InsnClass::Load2,
        InsnClass::Store,
        InsnClass::Store2,
        InsnClass::Clc,
        InsnClass::Csc,
    ];

    /// Number of bus requests, with whether the class writes a register
    /// from memory.
    fn access(self) -> Option<(usize, bool)> {
        match self {
            InsnClass::Load => Some((1, true)),
            InsnClass::Load2 | InsnClass::Clc => Some((2, true)),
            InsnClass::Store => Some((1, false)),
            InsnClass::Store2 | InsnClass::Csc => Some((2, false)),
            _ => None,
        }
    }

    fn redirects(self) -> bool {
        matches!(self, InsnClass::Redirect | InsnClass::Trap | InsnClass::MemTrap | InsnClass::Interrupt)
    }
}

/// Latency limits of the environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatencyBounds {
    pub max_gnt: u32,
    pub max_rvalid: u32,
    pub max_fetch_delay: u32,
    pub max_wake: u32,
}

impl Default for LatencyBounds {
    fn default() -> Self {
        LatencyBounds {
            max_gnt: MAX_LATENCY,
            max_rvalid: MAX_LATENCY,
            max_fetch_delay: MAX_FETCH_DELAY,
            max_wake: MAX_WFI_WAKE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct TState {
    wb: u32,
    lsu: u32,
    fetch: u32,
    sleep: u32,
}

/// Execution choices of one edge: cycles from issue to the last grant, and
/// the latency of the final response.
fn access_timings(b: &LatencyBounds, reqs: usize) -> Vec<(u32, u32)> {
    let mut v = HashSet::new();
    for g1 in 1..=b.max_gnt {
        for r_last in 1..=b.max_rvalid {
            if reqs == 1 {
                v.insert((1 + g1, r_last));
            } else {
                for r1 in 1..=b.max_rvalid {
                    for g2 in 1..=b.max_gnt {
                        v.insert((2 + g1 + r1 + g2, r_last));
                    }
                }
            }
        }
    }
    v.into_iter().collect()
}

fn edges(s: TState, class: InsnClass, b: &LatencyBounds, timings: &HashMap<usize, Vec<(u32, u32)>>) -> Vec<(u32, TState)> {
    let mut out = Vec::new();
    let mut start = 1.max(s.wb).max(s.sleep);
    if class != InsnClass::Interrupt {
        start = start.max(s.fetch);
    }
    let needs_lsu = class.access().is_some() || class == InsnClass::MemTrap;
    if needs_lsu {
        start = start.max(s.lsu);
    }
    let execs: Vec<(u32, Option<u32>)> = match class.access() {
        Some((reqs, _)) => timings[&reqs].iter().map(|&(e, r)| (e, Some(r))).collect(),
        None => vec![(0, None)],
    };
    for (exec, r_last) in execs {
        let gap = start + exec;
        let lsu = match r_last {
            Some(r) => r + 1,
            None => 1.max(s.lsu.saturating_sub(gap)),
        };
        let wb = match (class.access(), r_last) {
            (Some((_, true)), Some(r)) => r + 1,
            _ => 1,
        };
        let fetches: Vec<u32> = if class.redirects() {
            (0..=b.max_fetch_delay).map(|d| 2 + d).collect()
        } else {
            vec![1.max((s.fetch + b.max_fetch_delay + 1).saturating_sub(gap))]
        };
        let sleeps: Vec<u32> = if class == InsnClass::Wfi { (1..=b.max_wake).map(|w| w + 1).collect() } else { vec![0] };
        for &fetch in &fetches {
            for &sleep in &sleeps {
                out.push((gap, TState { wb, lsu, fetch, sleep }));
            }
        }
    }
    out
}

/// Heaviest edge per class over the states reachable from reset.
pub fn worst_case_gaps(b: &LatencyBounds) -> HashMap<InsnClass, u32> {
    let timings: HashMap<usize, Vec<(u32, u32)>> = [1, 2].into_iter().map(|k| (k, access_timings(b, k))).collect();
    let mut worst: HashMap<InsnClass, u32> = HashMap::new();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    // Reset behaves like a spec_en one cycle before cycle 0 with an empty FIFO.
    for d in 0..=b.max_fetch_delay {
        let s = TState { wb: 1, lsu: 1, fetch: 2 + d, sleep: 0 };
        if seen.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for class in InsnClass::ALL {
            for (gap, next) in edges(s, class, b, &timings) {
                let w = worst.entry(class).or_insert(0);
                *w = (*w).max(gap);
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    worst
}

/// Worst gap before an instruction of `class` completes its spec_en.
pub fn worst_case_gap(b: &LatencyBounds, class: InsnClass) -> u32 {
    worst_case_gaps(b)[&class]
}

/// Bound on the distance between consecutive spec_en events at the
/// protocol's maximum latencies.
pub fn b_max() -> u64 {
    static B: std::sync::OnceLock<u64> = std::sync::OnceLock::new();
    *B.get_or_init(|| u64::from(worst_case_gaps(&LatencyBounds::default()).values().copied().max().unwrap_or(0)))
}

/// Every measured gap of the run is within `bound`.
pub fn check_liveness(out: &RunOutcome, bound: u64) -> Result<(), Failure> {
    if let Some((k, &g)) = out.gaps.iter().enumerate().find(|(_, g)| **g > bound) {
        return Err(Failure::new(out.records[k].cycle, "spec_en gap", format!("<= {bound}"), g));
    }
    if out.tail_gap > bound {
        return Err(Failure::new(out.cycles, "no spec_en", format!("<= {bound} cycles"), out.tail_gap));
    }
    Ok(())
}
