//! Architectural state, step inputs and memory-event plans.

use std::fmt;

use crate::capability::{cap_stricter_than, Capability};

use super::memory::Memory;

/// Program counter at reset.
pub const RESET_PC: u32 = 0x8000_0000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchState {
    /// `regs[0]` is always [`Capability::NULL`].
    pub regs: [Capability; 16],
    /// Program counter capability; its address is the pc.
    pub pcc: Capability,
    pub mtcc: Capability,
    pub mepcc: Capability,
    pub mtval: u32,
    pub mcause: u32,
    pub mie: bool,
    pub mpie: bool,
    pub mem: Memory,
}

impl ArchState {
    /// Executable root in pcc, memory root in x1, sealing root in x2.
    pub fn reset(mem: Memory) -> Self {
        let mut regs = [Capability::NULL; 16];
        regs[1] = Capability::root_memory(0);
        regs[2] = Capability::root_sealing(0);
        ArchState {
            regs,
            pcc: Capability::root_executable(RESET_PC),
            mtcc: Capability::NULL,
            mepcc: Capability::NULL,
            mtval: 0,
            mcause: 0,
            mie: false,
            mpie: false,
            mem,
        }
    }

    pub fn pc(&self) -> u32 {
        self.pcc.address
    }

    pub fn reg(&self, r: u8) -> Capability {
        self.regs[usize::from(r)]
    }

    pub fn set_reg(&mut self, r: u8, c: Capability) {
        if r != 0 {
            self.regs[usize::from(r)] = c;
        }
    }

    pub fn mstatus(&self) -> u32 {
        mstatus_value(self.mie, self.mpie)
    }

    pub fn slot(&self, slot: Slot) -> Capability {
        match slot {
            Slot::Reg(r) => self.reg(r),
            Slot::Pcc => self.pcc,
            Slot::Mtcc => self.mtcc,
            Slot::Mepcc => self.mepcc,
            Slot::Granule(a) => self.mem.read_cap(a),
        }
    }

    /// Every tagged capability in registers, capability CSRs and memory.
    pub fn tagged_caps(&self) -> Vec<(Slot, Capability)> {
        let mut out: Vec<(Slot, Capability)> = Slot::cap_registers()
            .map(|s| (s, self.slot(s)))
            .filter(|(_, c)| c.tag)
            .collect();
        out.extend(self.mem.tagged_granules().map(|a| (Slot::Granule(a), self.mem.read_cap(a))));
        out
    }
}

/// `mstatus` as read by CSR instructions: MIE, MPIE, and MPP fixed to machine mode.
pub fn mstatus_value(mie: bool, mpie: bool) -> u32 {
    (u32::from(mie) << 3) | (u32::from(mpie) << 7) | (3 << 11)
}

/// A capability-holding location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Reg(u8),
    Pcc,
    Mtcc,
    Mepcc,
    /// The 8-byte granule at this (aligned) address.
    Granule(u32),
}

impl Slot {
    pub fn cap_registers() -> impl Iterator<Item = Slot> {
        (0..16u8).map(Slot::Reg).chain([Slot::Pcc, Slot::Mtcc, Slot::Mepcc])
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Reg(r) => write!(f, "x{r}"),
            Slot::Pcc => write!(f, "pcc"),
            Slot::Mtcc => write!(f, "mtcc"),
            Slot::Mepcc => write!(f, "mepcc"),
            Slot::Granule(a) => write!(f, "mem[{a:#010x}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ArchInput {
    pub instr_bits: u32,
    pub irq_pending: bool,
    /// Responses to the step's read requests, in request order.
    pub mem_read_data: Vec<(u32, bool)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MemRequest {
    pub addr: u32,
    pub be: u8,
    pub wdata: u32,
    pub wtag: bool,
    pub we: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum MemKind {
    #[default]
    None,
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MemEventPlan {
    pub kind: MemKind,
    pub requests: Vec<MemRequest>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExceptionCause {
    IllegalInstruction,
    FetchBoundsViolation,
    TagViolation,
    SealViolation,
    PermissionViolation,
    BoundsViolation,
    MisalignedTarget,
    LoadMisaligned,
    StoreMisaligned,
    EBreak,
    ECall,
}

/// `mcause` value of an external interrupt.
pub const MCAUSE_EXTERNAL_INTERRUPT: u32 = 0x8000_000B;

impl ExceptionCause {
    pub fn code(self) -> u32 {
        match self {
            ExceptionCause::MisalignedTarget => 0,
            ExceptionCause::FetchBoundsViolation => 1,
            ExceptionCause::IllegalInstruction => 2,
            ExceptionCause::EBreak => 3,
            ExceptionCause::LoadMisaligned => 4,
            ExceptionCause::StoreMisaligned => 6,
            ExceptionCause::ECall => 11,
            ExceptionCause::BoundsViolation => 26,
            ExceptionCause::SealViolation => 27,
            ExceptionCause::TagViolation => 28,
            ExceptionCause::PermissionViolation => 29,
        }
    }
}

/// What `mtval` receives on EBREAK.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum EbreakMtval {
    #[default]
    Zero,
    Pc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SpecConfig {
    pub ebreak_mtval: EbreakMtval,
}

/// Extra tag clearing applied on top of the plain specification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClearRule {
    /// Clear every tag in registers, CSRs and memory.
    AllTags,
    Slot(Slot),
    /// Clear the link register tag written by CJALR.
    CjalrLink,
}

/// First location where `s1` is not equal to (or, with `strict`, not
/// stricter than) `s2`.
pub fn first_divergence(s1: &ArchState, s2: &ArchState, strict: bool) -> Option<String> {
    let same = |a: &Capability, b: &Capability| {
        if strict {
            cap_stricter_than(a, b)
        } else {
            a == b
        }
    };
    for slot in Slot::cap_registers() {
        let (a, b) = (s1.slot(slot), s2.slot(slot));
        if !same(&a, &b) {
            return Some(format!("{slot}: {a:?} vs {b:?}"));
        }
    }
    if (s1.mtval, s1.mcause, s1.mie, s1.mpie) != (s2.mtval, s2.mcause, s2.mie, s2.mpie) {
        return Some(format!(
            "csrs: mtval={:#x} mcause={:#x} mie={} mpie={} vs mtval={:#x} mcause={:#x} mie={} mpie={}",
            s1.mtval, s1.mcause, s1.mie, s1.mpie, s2.mtval, s2.mcause, s2.mie, s2.mpie
        ));
    }
    if s1.mem.seed() != s2.mem.seed() || !s1.mem.written_words().eq(s2.mem.written_words()) {
        let w1: Vec<_> = s1.mem.written_words().collect();
        let w2: Vec<_> = s2.mem.written_words().collect();
        let at = w1.iter().zip(&w2).find(|(a, b)| a != b).map(|(a, _)| a.0);
        return Some(format!("memory data differs (near {at:x?})"));
    }
    let tags_ok = if strict {
        s1.mem.tagged_granules().all(|a| s2.mem.granule_tag(a))
    } else {
        s1.mem.tagged_granules().eq(s2.mem.tagged_granules())
    };
    if !tags_ok {
        return Some("memory tags differ".to_string());
    }
    None
}

/// `s1 ⊑ s2`: identical except that `s1` may have fewer tags set.
pub fn state_stricter_than(s1: &ArchState, s2: &ArchState) -> bool {
    first_divergence(s1, s2, true).is_none()
}
