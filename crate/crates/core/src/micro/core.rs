//! Microcore state and the per-cycle step function.

use crate::capability::{AccessKind, Capability};
use crate::isa::{decode, ArchState, ExceptionCause, Memory, MCAUSE_EXTERNAL_INTERRUPT, RESET_PC};

use super::cached::{self, CachedCap};
use super::exec::{self, cap_requests, finish_load, Effects, ExView, LoadKind, Outcome, PcUpdate};
use super::fifo::{FetchFifo, FifoEvent};
use super::lsu::{Lsu, LsuCycle};
use super::{BuildConfig, CycleInputs, MutationId, PortOutputs};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WbState {
    /// Waiting for the LSU to deliver the data.
    Waiting(LoadKind),
    /// Value known; written to the register file at the end of the next cycle.
    Ready(CachedCap),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WbEntry {
    /// Never x0.
    pub rd: u8,
    pub state: WbState,
}

/// A memory instruction stalled in EX until its last request is granted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExMem {
    pub irq_sampled: bool,
    pub load: Option<(u8, LoadKind)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MicroState {
    pub regs: [CachedCap; 16],
    /// Its address may be stale; `pc` is authoritative.
    pub pcc: CachedCap,
    pub pc: u32,
    pub mtcc: CachedCap,
    pub mepcc: CachedCap,
    pub mtval: u32,
    pub mcause: u32,
    pub mie: bool,
    pub mpie: bool,
    pub ex_mem: Option<ExMem>,
    pub wb: Option<WbEntry>,
    pub lsu: Lsu,
    pub fifo: FetchFifo,
    pub fetch_pc: u32,
    pub sleeping: bool,
}

impl MicroState {
    /// Same architectural reset state as [`ArchState::reset`].
    pub fn reset() -> Self {
        let arch = ArchState::reset(Memory::new(0));
        MicroState {
            regs: arch.regs.map(CachedCap::new),
            pcc: CachedCap::new(arch.pcc),
            pc: RESET_PC,
            mtcc: CachedCap::new(arch.mtcc),
            mepcc: CachedCap::new(arch.mepcc),
            mtval: arch.mtval,
            mcause: arch.mcause,
            mie: arch.mie,
            mpie: arch.mpie,
            ex_mem: None,
            wb: None,
            lsu: Lsu::default(),
            fifo: FetchFifo::default(),
            fetch_pc: RESET_PC,
            sleeping: false,
        }
    }

    /// Every stored capability, by block name, for invariant checks.
    pub fn stored_caps(&self) -> Vec<(String, CachedCap)> {
        let mut v: Vec<(String, CachedCap)> =
            (1..16).map(|r| (format!("regfile.x{r}"), self.regs[r])).collect();
        v.push(("pcc".into(), self.pcc));
        v.push(("csr.mtcc".into(), self.mtcc));
        v.push(("csr.mepcc".into(), self.mepcc));
        if let Some(WbEntry { rd, state: WbState::Ready(c) }) = self.wb {
            v.push((format!("wb.x{rd}"), c));
        }
        v
    }

    fn forwarded(&self, r: u8) -> CachedCap {
        if r == 0 {
            return CachedCap::new(Capability::NULL);
        }
        match self.wb {
            Some(WbEntry { rd, state: WbState::Ready(v) }) if rd == r => v,
            _ => self.regs[usize::from(r)],
        }
    }

    fn wb_free(&self) -> bool {
        matches!(self.wb, None | Some(WbEntry { state: WbState::Ready(_), .. }))
    }
}

/// Moore outputs of the core.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct MicroOutputs {
    pub mem: PortOutputs,
    /// Address of the instruction fetch being requested, if any.
    pub fetch_req: Option<u32>,
    pub sleeping: bool,
}

pub fn outputs(m: &MicroState) -> MicroOutputs {
    MicroOutputs {
        mem: m.lsu.ports(),
        fetch_req: (!m.fifo.is_full()).then_some(m.fetch_pc),
        sleeping: m.sleeping,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecEnKind {
    Retire,
    Trap { cause: ExceptionCause, mtval: u32 },
    Interrupt,
}

/// A specification query point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpecEnInfo {
    pub kind: SpecEnKind,
    /// Interrupt line as sampled when the core committed to this step.
    pub irq: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MicroEvents {
    pub spec_en: Option<SpecEnInfo>,
    pub ports: PortOutputs,
    pub rf_commit: Option<(u8, CachedCap)>,
    pub lsu: LsuCycle,
    pub issued: bool,
    pub fifo: Vec<FifoEvent>,
    pub violation: Option<String>,
    pub stalled_on_mem: bool,
}

/// Architectural view of `m`, with a register write completing this cycle
/// forwarded and `mem` as the data memory.
pub fn abs(m: &MicroState, mem: &Memory) -> ArchState {
    let mut regs = [Capability::NULL; 16];
    for (r, slot) in regs.iter_mut().enumerate().skip(1) {
        *slot = m.forwarded(r as u8).cap;
    }
    let pcc = if m.pcc.cap.address == m.pc {
        m.pcc.cap
    } else {
        crate::capability::set_address(&m.pcc.cap, m.pc)
    };
    ArchState {
        regs,
        pcc,
        mtcc: m.mtcc.cap,
        mepcc: m.mepcc.cap,
        mtval: m.mtval,
        mcause: m.mcause,
        mie: m.mie,
        mpie: m.mpie,
        mem: mem.clone(),
    }
}

/// Trap entry: save pcc to mepcc and vector through mtcc.
fn enter_trap(m: &MicroState, n: &mut MicroState, code: u32, mtval: u32, cfg: &BuildConfig) -> u32 {
    n.mepcc = cached::trap_mepcc(&m.pcc, m.pc, cfg);
    n.mcause = code;
    n.mtval = mtval;
    n.mpie = m.mie;
    n.mie = false;
    n.pcc = m.mtcc;
    n.pc = m.mtcc.address() & !3;
    n.ex_mem = None;
    n.pc
}

fn apply(m: &MicroState, n: &mut MicroState, e: &Effects) -> Option<u32> {
    if let Some((rd, v)) = e.rd {
        n.wb = Some(WbEntry { rd, state: WbState::Ready(v) });
    }
    if let Some((mie, mpie)) = e.mstatus {
        n.mie = mie;
        n.mpie = mpie;
    }
    if let Some(v) = e.mcause {
        n.mcause = v;
    }
    if let Some(v) = e.mtval {
        n.mtval = v;
    }
    if let Some(v) = e.mtcc {
        n.mtcc = v;
    }
    if let Some(v) = e.mepcc {
        n.mepcc = v;
    }
    n.sleeping = e.sleep;
    match e.pc {
        PcUpdate::Sequential => {
            n.pc = m.pc.wrapping_add(4);
            None
        }
        PcUpdate::Jump(t) => {
            n.pc = t;
            Some(t)
        }
        PcUpdate::NewPcc(c, t) => {
            n.pcc = c;
            n.pc = t;
            Some(t)
        }
    }
}

/// Raw fields of a CLC word whose destination register is out of range.
fn illegal_clc_operands(bits: u32) -> Option<(u8, i32)> {
    let rs1 = (bits >> 15) & 0x1F;
    let is_clc = bits & 0x7F == 0x03 && (bits >> 12) & 7 == 3;
    (is_clc && (bits >> 7) & 0x1F >= 16 && rs1 < 16).then_some((rs1 as u8, (bits as i32) >> 20))
}

/// One clock cycle.
pub fn micro_step(m: &MicroState, inp: &CycleInputs, cfg: &BuildConfig) -> (MicroState, MicroEvents) {
    let mut n = m.clone();
    let mut ev = MicroEvents { ports: m.lsu.ports(), ..Default::default() };
    let fetch_req = !m.fifo.is_full();

    // Load-store unit.
    let lc = n.lsu.step(inp);
    ev.lsu = lc;
    if let Some(v) = lc.violation {
        ev.violation = Some(v.to_string());
    }

    // Writeback.
    match m.wb {
        Some(WbEntry { rd, state: WbState::Ready(mut v) }) => {
            if cfg.has(MutationId::M5) && lc.orphan {
                if let Some((data, _)) = lc.response {
                    v.cap.address |= data;
                }
            }
            n.regs[usize::from(rd)] = v;
            ev.rf_commit = Some((rd, v));
            n.wb = None;
        }
        Some(WbEntry { rd, state: WbState::Waiting(kind) }) => {
            if lc.completed && !lc.orphan {
                let v = finish_load(kind, &n.lsu.responses, cfg);
                n.wb = Some(WbEntry { rd, state: WbState::Ready(v) });
            }
        }
        None => {}
    }

    // Execute.
    let mut redirect = None;
    let mut dequeue = false;
    if let Some(exm) = m.ex_mem {
        ev.stalled_on_mem = true;
        if lc.last_granted && !lc.orphan {
            ev.spec_en = Some(SpecEnInfo { kind: SpecEnKind::Retire, irq: exm.irq_sampled });
            n.ex_mem = None;
            n.pc = m.pc.wrapping_add(4);
            dequeue = true;
            if let Some((rd, kind)) = exm.load {
                n.wb = Some(WbEntry { rd, state: WbState::Waiting(kind) });
            }
        }
    } else if m.sleeping {
        if inp.irq {
            n.sleeping = false;
        }
    } else if m.wb_free() {
        if inp.irq && m.mie {
            redirect = Some(enter_trap(m, &mut n, MCAUSE_EXTERNAL_INTERRUPT, 0, cfg));
            ev.spec_en = Some(SpecEnInfo { kind: SpecEnKind::Interrupt, irq: true });
        } else if let Some((addr, bits)) = m.fifo.head() {
            if addr != m.pc {
                ev.violation = Some(format!("fetch fifo head {addr:#x} does not match pc {:#x}", m.pc));
            }
            let spec_en = |kind| Some(SpecEnInfo { kind, irq: inp.irq });
            let trap = |n: &mut MicroState, cause: ExceptionCause, mtval: u32| {
                let t = enter_trap(m, n, cause.code(), mtval, cfg);
                (t, SpecEnKind::Trap { cause, mtval })
            };
            if cached::check_access(&m.pcc, m.pc, 4, AccessKind::Execute, cfg).is_err() {
                let (t, k) = trap(&mut n, ExceptionCause::FetchBoundsViolation, m.pc);
                redirect = Some(t);
                ev.spec_en = spec_en(k);
                dequeue = true;
            } else if let Some(insn) = decode(bits) {
                let read = |r: u8| m.forwarded(r);
                let view = ExView {
                    pc: m.pc,
                    pcc: &m.pcc,
                    mtcc: &m.mtcc,
                    mepcc: &m.mepcc,
                    mie: m.mie,
                    mpie: m.mpie,
                    mcause: m.mcause,
                    mtval: m.mtval,
                    read: &read,
                };
                if insn.is_memory() && !m.lsu.is_idle() {
                    ev.stalled_on_mem = true;
                } else {
                    match exec::execute(&view, insn, cfg) {
                        Outcome::Retire(e) => {
                            redirect = apply(m, &mut n, &e);
                            ev.spec_en = spec_en(SpecEnKind::Retire);
                            dequeue = true;
                        }
                        Outcome::Trap { cause, mtval } => {
                            let (t, k) = trap(&mut n, cause, mtval);
                            redirect = Some(t);
                            ev.spec_en = spec_en(k);
                            dequeue = true;
                        }
                        Outcome::Memory { reqs, load } => {
                            n.lsu.issue(reqs, false);
                            n.ex_mem = Some(ExMem { irq_sampled: inp.irq, load });
                            ev.issued = true;
                        }
                    }
                }
            } else {
                if cfg.has(MutationId::M5) && m.lsu.is_idle() {
                    if let Some((rs1, imm)) = illegal_clc_operands(bits) {
                        let addr = m.forwarded(rs1).address().wrapping_add(imm as u32);
                        n.lsu.issue(cap_requests(addr, None), true);
                        ev.issued = true;
                    }
                }
                let (t, k) = trap(&mut n, ExceptionCause::IllegalInstruction, bits);
                redirect = Some(t);
                ev.spec_en = spec_en(k);
                dequeue = true;
            }
        }
    }
    if dequeue {
        if let Some((addr, bits)) = n.fifo.dequeue() {
            ev.fifo.push(FifoEvent::Dequeue { addr, bits });
        }
    }

    // Fetch.
    if let Some(target) = redirect {
        n.fifo.flush();
        ev.fifo.push(FifoEvent::Flush);
        n.fetch_pc = target;
    } else if inp.fetch_valid {
        if !fetch_req {
            ev.violation = Some("fetch response without request".into());
        } else if inp.fetch_addr != m.fetch_pc {
            ev.violation = Some(format!(
                "fetch response for {:#x}, requested {:#x}",
                inp.fetch_addr, m.fetch_pc
            ));
        } else {
            n.fifo.enqueue(inp.fetch_addr, inp.fetch_bits);
            ev.fifo.push(FifoEvent::Enqueue { addr: inp.fetch_addr, bits: inp.fetch_bits });
            n.fetch_pc = m.fetch_pc.wrapping_add(4);
        }
    }
    (n, ev)
}
