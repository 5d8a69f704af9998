//! Load-store unit: issues up to two word requests, one at a time, over the
//! request/grant/response protocol.

use crate::isa::MemRequest;

use super::{CycleInputs, PortOutputs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum LsuPhase {
    #[default]
    Idle,
    WaitGnt1,
    WaitRvalid1,
    WaitGnt2,
    WaitRvalid2,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lsu {
    pub phase: LsuPhase,
    pub reqs: Vec<MemRequest>,
    pub responses: Vec<(u32, bool)>,
    /// Transaction with no instruction waiting on it.
    pub orphan: bool,
}

/// What happened on the LSU's side of the bus this cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LsuCycle {
    pub granted: bool,
    /// The final request of the transaction was granted.
    pub last_granted: bool,
    pub response: Option<(u32, bool)>,
    /// The final response arrived; the LSU is idle again.
    pub completed: bool,
    pub orphan: bool,
    pub violation: Option<&'static str>,
}

impl Lsu {
    pub fn is_idle(&self) -> bool {
        self.phase == LsuPhase::Idle
    }

    fn current(&self) -> Option<&MemRequest> {
        match self.phase {
            LsuPhase::WaitGnt1 => self.reqs.first(),
            LsuPhase::WaitGnt2 => self.reqs.get(1),
            _ => None,
        }
    }

    pub fn ports(&self) -> PortOutputs {
        match self.current() {
            Some(r) => PortOutputs {
                req: true,
                addr: r.addr,
                we: r.we,
                be: r.be,
                wdata: r.wdata,
                wtag: r.wtag,
            },
            None => PortOutputs::default(),
        }
    }

    /// Starts a transaction; the first request is driven from the next cycle.
    pub fn issue(&mut self, reqs: Vec<MemRequest>, orphan: bool) {
        debug_assert!(self.is_idle() && (1..=2).contains(&reqs.len()));
        *self = Lsu { phase: LsuPhase::WaitGnt1, reqs, responses: Vec::new(), orphan };
    }

    pub fn step(&mut self, inp: &CycleInputs) -> LsuCycle {
        let mut ev = LsuCycle { orphan: self.orphan, ..Default::default() };
        let two = self.reqs.len() == 2;
        match self.phase {
            LsuPhase::Idle | LsuPhase::WaitGnt1 | LsuPhase::WaitGnt2 if inp.rvalid => {
                ev.violation = Some("rvalid without outstanding request");
            }
            LsuPhase::Idle | LsuPhase::WaitRvalid1 | LsuPhase::WaitRvalid2 if inp.gnt => {
                ev.violation = Some("gnt without request");
            }
            _ => {}
        }
        match self.phase {
            LsuPhase::Idle => {}
            LsuPhase::WaitGnt1 if inp.gnt => {
                ev.granted = true;
                ev.last_granted = !two;
                self.phase = LsuPhase::WaitRvalid1;
            }
            LsuPhase::WaitGnt2 if inp.gnt => {
                ev.granted = true;
                ev.last_granted = true;
                self.phase = LsuPhase::WaitRvalid2;
            }
            LsuPhase::WaitRvalid1 | LsuPhase::WaitRvalid2 if inp.rvalid => {
                ev.response = Some(inp.rdata);
                self.responses.push(inp.rdata);
                if self.phase == LsuPhase::WaitRvalid1 && two {
                    self.phase = LsuPhase::WaitGnt2;
                } else {
                    ev.completed = true;
                    self.phase = LsuPhase::Idle;
                }
            }
            _ => {}
        }
        ev
    }

    /// Index of the request currently driven or awaited.
    pub fn outstanding_index(&self) -> Option<usize> {
        match self.phase {
            LsuPhase::Idle => None,
            LsuPhase::WaitGnt1 | LsuPhase::WaitRvalid1 => Some(0),
            LsuPhase::WaitGnt2 | LsuPhase::WaitRvalid2 => Some(1),
        }
    }
}
