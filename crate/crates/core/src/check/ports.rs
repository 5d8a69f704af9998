//! Expansion of a specification memory plan into per-cycle port values.
//!
//! Protocol interpretation, field by field:
//! - `req` is held from the first cycle of a request through its grant,
//!   which comes `gnt` cycles after the first cycle (so `gnt + 1` cycles).
//! - `addr`, `we`, `be`, `wdata`, `wtag` equal the plan's request and stay
//!   constant while `req` is held.
//! - After a grant, `req` is low until the response arrives `rvalid` cycles
//!   later; the second request starts the cycle after that response.
//! - The expansion ends at the final grant; the final response falls into
//!   the next window and carries no port outputs.

use crate::isa::MemEventPlan;
use crate::micro::{PortOutputs, TimingSchedule};

/// Port values for `plan`, whose first request is the `first_index`-th
/// request of the run. Leading idle cycles are not part of the expansion.
pub fn expected_port_events(plan: &MemEventPlan, t: &TimingSchedule, first_index: usize) -> Vec<PortOutputs> {
    let mut out = Vec::new();
    let n = plan.requests.len();
    for (k, r) in plan.requests.iter().enumerate() {
        let p = PortOutputs { req: true, addr: r.addr, we: r.we, be: r.be, wdata: r.wdata, wtag: r.wtag };
        let idx = first_index + k;
        out.extend(std::iter::repeat(p).take(t.gnt(idx) as usize + 1));
        if k + 1 < n {
            out.extend(std::iter::repeat(PortOutputs::default()).take(t.rvalid(idx) as usize));
        }
    }
    out
}

/// Drops the idle cycles before the first request of a window.
pub fn trim_leading_idle(window: &[PortOutputs]) -> &[PortOutputs] {
    let start = window.iter().position(|p| p.req).unwrap_or(window.len());
    &window[start..]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{MemKind, MemRequest};

    fn req(addr: u32, we: bool, wtag: bool) -> MemRequest {
        MemRequest { addr, be: 0xf, wdata: if we { 0x1234 } else { 0 }, wtag, we }
    }

    #[test]
    fn no_requests_expand_to_nothing() {
        let plan = MemEventPlan::default();
        assert!(expected_port_events(&plan, &TimingSchedule::fixed(3, 3), 0).is_empty());
    }

    #[test]
    fn single_load_is_held_through_its_grant() {
        let plan = MemEventPlan { kind: MemKind::Read, requests: vec![req(0x100, false, false)] };
        let ev = expected_port_events(&plan, &TimingSchedule::fixed(2, 5), 0);
        assert_eq!(ev.len(), 3);
        assert!(ev.iter().all(|p| *p == ev[0] && p.req && p.addr == 0x100 && !p.we));
    }

    #[test]
    fn capability_store_emits_two_writes_in_order() {
        let plan =
            MemEventPlan { kind: MemKind::Write, requests: vec![req(0x100, true, true), req(0x104, true, true)] };
        let ev = expected_port_events(&plan, &TimingSchedule::fixed(1, 1), 0);
        let shape: Vec<(bool, u32)> = ev.iter().map(|p| (p.req, p.addr)).collect();
        assert_eq!(shape, vec![(true, 0x100), (true, 0x100), (false, 0), (true, 0x104), (true, 0x104)]);
        assert!(ev[0].wtag && ev[0].we);
    }

    #[test]
    fn per_request_latencies_follow_the_run_index() {
        let t = TimingSchedule { gnt_latency: vec![1, 4], rvalid_latency: vec![2], ..TimingSchedule::fixed(1, 1) };
        let plan = MemEventPlan { kind: MemKind::Read, requests: vec![req(0, false, false), req(4, false, false)] };
        assert_eq!(expected_port_events(&plan, &t, 0).len(), 2 + 2 + 5);
        assert_eq!(expected_port_events(&plan, &t, 1).len(), 5 + 2 + 2);
    }

    #[test]
    fn leading_idle_cycles_are_trimmed() {
        let busy = PortOutputs { req: true, ..Default::default() };
        let w = [PortOutputs::default(), PortOutputs::default(), busy, PortOutputs::default()];
        assert_eq!(trim_leading_idle(&w).len(), 2);
        assert!(trim_leading_idle(&w[..2]).is_empty());
    }
}
