//! Pipeline follower: carries the specification's result for an in-flight
//! instruction and checks each effect when the microcore applies it.
//!
//! - Memory requests are checked at their grant against the plan computed
//!   when the instruction issued to the LSU.
//! - Trap decision, CSRs and the program counter are checked at spec_en,
//!   when the instruction leaves EX.
//! - The register write is checked when WB commits it.

use crate::capability::{cap_stricter_than, set_address, Capability};
use crate::isa::{
    cspec_step, spec_step, ArchInput, ArchState, ClearRule, ExceptionCause, MemRequest, SpecConfig,
    StepEvent,
};
use crate::micro::{MicroEvents, MicroState, SpecEnKind};

use super::Failure;

#[derive(Clone, Debug)]
struct Plan {
    requests: Vec<MemRequest>,
    event: StepEvent,
    emitted: usize,
}

#[derive(Clone, Debug)]
pub struct Follower {
    cfg: SpecConfig,
    rules: Vec<ClearRule>,
    plan: Option<Plan>,
    /// Register write expected at WB completion.
    pending_rf: Option<(u8, Capability)>,
}

fn is_cap_fault(e: StepEvent) -> bool {
    matches!(
        e,
        StepEvent::Trap {
            cause: ExceptionCause::BoundsViolation
                | ExceptionCause::PermissionViolation
                | ExceptionCause::TagViolation
                | ExceptionCause::SealViolation,
            ..
        }
    )
}

fn same_event(k: SpecEnKind, e: StepEvent) -> bool {
    match (k, e) {
        (SpecEnKind::Retire, StepEvent::Retired) | (SpecEnKind::Interrupt, StepEvent::Interrupt) => true,
        (SpecEnKind::Trap { cause: c1, mtval: v1 }, StepEvent::Trap { cause: c2, mtval: v2 }) => {
            c1 == c2 && v1 == v2
        }
        _ => false,
    }
}

/// Architectural pcc as held by the microcore.
fn micro_pcc(m: &MicroState) -> Capability {
    if m.pcc.cap.address == m.pc {
        m.pcc.cap
    } else {
        set_address(&m.pcc.cap, m.pc)
    }
}

impl Follower {
    pub fn new(cfg: SpecConfig, rules: &[ClearRule]) -> Self {
        Follower { cfg, rules: rules.to_vec(), plan: None, pending_rf: None }
    }

    /// Checks one cycle ending in state `n`. `arch` is the abstract pre-state and the
    /// realised input, supplied on cycles that issue or reach spec_en.
    pub fn on_cycle(
        &mut self,
        cycle: u64,
        n: &MicroState,
        ev: &MicroEvents,
        arch: Option<&(ArchState, ArchInput)>,
    ) -> Result<(), Failure> {
        if let Some((rd, v)) = ev.rf_commit {
            match self.pending_rf.take() {
                Some((erd, exp)) if erd == rd => {
                    if !cap_stricter_than(&v.cap, &exp) {
                        return Err(Failure::new(cycle, format!("rf_commit[x{rd}]"), exp, v.cap));
                    }
                }
                other => return Err(Failure::new(cycle, "rf_commit", other, (rd, v.cap))),
            }
        }

        if ev.lsu.granted {
            let p = ev.ports;
            let got = MemRequest { addr: p.addr, be: p.be, wdata: p.wdata, wtag: p.wtag, we: p.we };
            let plan = self.plan.as_mut();
            let expected = plan.as_ref().and_then(|pl| pl.requests.get(pl.emitted).copied());
            if expected != Some(got) {
                let assertion = match plan.as_ref() {
                    Some(pl) if expected.is_none() && is_cap_fault(pl.event) => "access_check",
                    _ => "mem_request",
                };
                return Err(Failure::new(cycle, assertion, expected, got));
            }
            if let Some(pl) = plan {
                pl.emitted += 1;
            }
        }

        if ev.issued && ev.spec_en.is_none() {
            let (a, i) = arch.expect("abstract state on issue");
            let r = spec_step(a, i, &self.cfg);
            self.plan = Some(Plan { requests: r.out.requests, event: r.event, emitted: 0 });
        }

        if let Some(se) = ev.spec_en {
            let (a, i) = arch.expect("abstract state at spec_en");
            let r = cspec_step(a, i, &self.cfg, &self.rules);
            let emitted = self.plan.take().map_or(0, |p| p.emitted);
            if !same_event(se.kind, r.event) {
                let assertion = if is_cap_fault(r.event) { "access_check" } else { "trap_decision" };
                return Err(Failure::new(cycle, assertion, r.event, se.kind));
            }
            if emitted != r.out.requests.len() {
                return Err(Failure::new(cycle, "mem_request_count", r.out.requests.len(), emitted));
            }
            let s = &r.state;
            let csr_ok = cap_stricter_than(&n.mtcc.cap, &s.mtcc)
                && cap_stricter_than(&n.mepcc.cap, &s.mepcc)
                && (n.mtval, n.mcause, n.mie, n.mpie) == (s.mtval, s.mcause, s.mie, s.mpie);
            if !csr_ok {
                return Err(Failure::new(
                    cycle,
                    "csr_commit",
                    (s.mtcc, s.mepcc, s.mtval, s.mcause, s.mie, s.mpie),
                    (n.mtcc.cap, n.mepcc.cap, n.mtval, n.mcause, n.mie, n.mpie),
                ));
            }
            let pcc = micro_pcc(n);
            if n.pc != s.pc() || !cap_stricter_than(&pcc, &s.pcc) {
                return Err(Failure::new(cycle, "pc_update", s.pcc, pcc));
            }
            // At spec_en the previous WB entry has committed, so any entry is new.
            let new_wb = n.wb.map(|w| w.rd);
            for reg in 1..16u8 {
                if Some(reg) != new_wb && !cap_stricter_than(&a.reg(reg), &s.reg(reg)) {
                    return Err(Failure::new(cycle, format!("rf_commit[x{reg}] missing"), s.reg(reg), a.reg(reg)));
                }
            }
            if let Some(rd) = new_wb {
                self.pending_rf = Some((rd, s.reg(rd)));
            }
        }
        Ok(())
    }
}
