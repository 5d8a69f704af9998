//! Execute-stage datapath of the microcore.

use crate::capability::{AccessKind, CapFault, Capability, PermissionSet};
use crate::isa::decode::{
    CGetOp, CapOp, CsrOp, CsrSrc, Instruction, LoadOp, CSR_MCAUSE, CSR_MSTATUS, SCR_MTCC,
};
use crate::isa::{alu, branch_taken, mstatus_value, ExceptionCause, MemRequest};

use super::cached::{self, CachedCap};
use super::BuildConfig;

/// How a retiring instruction moves the program counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcUpdate {
    Sequential,
    Jump(u32),
    /// Replace pcc and jump to the given pc.
    NewPcc(CachedCap, u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Effects {
    pub rd: Option<(u8, CachedCap)>,
    pub mstatus: Option<(bool, bool)>,
    pub mcause: Option<u32>,
    pub mtval: Option<u32>,
    pub mtcc: Option<CachedCap>,
    pub mepcc: Option<CachedCap>,
    pub pc: PcUpdate,
    pub sleep: bool,
}

impl Effects {
    fn seq() -> Self {
        Effects {
            rd: None,
            mstatus: None,
            mcause: None,
            mtval: None,
            mtcc: None,
            mepcc: None,
            pc: PcUpdate::Sequential,
            sleep: false,
        }
    }

    fn rd(rd: u8, v: CachedCap) -> Self {
        Effects { rd: (rd != 0).then_some((rd, v)), ..Self::seq() }
    }
}

/// Writeback work left once the data arrives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadKind {
    Word { op: LoadOp, addr: u32 },
    Cap { auth: CachedCap },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Retire(Effects),
    Trap { cause: ExceptionCause, mtval: u32 },
    Memory { reqs: Vec<MemRequest>, load: Option<(u8, LoadKind)> },
}

/// Architectural CSR/register view the execute stage reads.
pub struct ExView<'a> {
    pub pc: u32,
    pub pcc: &'a CachedCap,
    pub mtcc: &'a CachedCap,
    pub mepcc: &'a CachedCap,
    pub mie: bool,
    pub mpie: bool,
    pub mcause: u32,
    pub mtval: u32,
    pub read: &'a dyn Fn(u8) -> CachedCap,
}

fn fault(f: CapFault, mtval: u32) -> Outcome {
    let cause = match f {
        CapFault::Tag => ExceptionCause::TagViolation,
        CapFault::Seal => ExceptionCause::SealViolation,
        CapFault::Permission => ExceptionCause::PermissionViolation,
        CapFault::Bounds => ExceptionCause::BoundsViolation,
    };
    Outcome::Trap { cause, mtval }
}

/// Byte-lane requests for a data access: lanes are collected byte by byte.
pub fn lane_requests(addr: u32, width: u32, data: u32, we: bool) -> Vec<MemRequest> {
    let wdata = if we { data.rotate_left(8 * (addr % 4)) } else { 0 };
    let mut reqs: Vec<MemRequest> = Vec::with_capacity(2);
    for j in 0..width {
        let a = addr.wrapping_add(j);
        let word = a & !3;
        let lane = 1u8 << (a % 4);
        match reqs.iter_mut().find(|r| r.addr == word) {
            Some(r) => r.be |= lane,
            None => reqs.push(MemRequest { addr: word, be: lane, wdata, wtag: false, we }),
        }
    }
    reqs
}

/// Assembles load data from the responses, byte by byte.
pub fn finish_word_load(op: LoadOp, addr: u32, responses: &[(u32, bool)]) -> u32 {
    let mut v = 0u32;
    for j in 0..op.width() {
        let a = addr.wrapping_add(j);
        let idx = usize::from((a & !3) != (addr & !3));
        let word = responses.get(idx).map_or(0, |r| r.0);
        v |= ((word >> (8 * (a % 4))) & 0xFF) << (8 * j);
    }
    match op {
        LoadOp::Lb => v as i8 as u32,
        LoadOp::Lh => v as i16 as u32,
        _ => v,
    }
}

pub fn finish_load(kind: LoadKind, responses: &[(u32, bool)], cfg: &BuildConfig) -> CachedCap {
    match kind {
        LoadKind::Word { op, addr } => CachedCap::int(finish_word_load(op, addr, responses)),
        LoadKind::Cap { auth } => {
            let (lo, t0) = responses.first().copied().unwrap_or_default();
            let (hi, t1) = responses.get(1).copied().unwrap_or_default();
            let loaded = Capability::from_bits(u64::from(lo) | (u64::from(hi) << 32), t0 && t1);
            cached::load_filter(loaded, &auth, cfg)
        }
    }
}

fn target_ok(target: u32) -> Result<(), Outcome> {
    if target % 4 == 0 {
        Ok(())
    } else {
        Err(Outcome::Trap { cause: ExceptionCause::MisalignedTarget, mtval: target })
    }
}

pub fn execute(v: &ExView<'_>, insn: Instruction, cfg: &BuildConfig) -> Outcome {
    match execute_inner(v, insn, cfg) {
        Ok(o) | Err(o) => o,
    }
}

fn execute_inner(v: &ExView<'_>, insn: Instruction, cfg: &BuildConfig) -> Result<Outcome, Outcome> {
    use Instruction as I;
    let r = v.read;
    let pc = v.pc;
    let sr = v.pcc.cap.has_perm(PermissionSet::SYSTEM_REGISTERS);
    let no_sr = Outcome::Trap { cause: ExceptionCause::PermissionViolation, mtval: 0 };
    let eff = match insn {
        I::Lui { rd, imm } => Effects::rd(rd, CachedCap::int(imm)),
        I::Auipcc { rd, imm } => Effects::rd(rd, cached::set_address(v.pcc, pc.wrapping_add(imm), cfg)),
        I::Cjal { rd, imm } => {
            let target = pc.wrapping_add(imm as u32);
            target_ok(target)?;
            let link = cached::set_address(v.pcc, pc.wrapping_add(4), cfg);
            Effects { pc: PcUpdate::Jump(target), ..Effects::rd(rd, link) }
        }
        I::Cjalr { rd, rs1, imm } => {
            let c = r(rs1);
            let target = c.address().wrapping_add(imm as u32) & !1;
            if !c.cap.tag {
                return Err(fault(CapFault::Tag, target));
            }
            if c.cap.is_sealed() {
                return Err(fault(CapFault::Seal, target));
            }
            if !c.cap.has_perm(PermissionSet::EXECUTE) {
                return Err(fault(CapFault::Permission, target));
            }
            target_ok(target)?;
            let mut link = cached::set_address(v.pcc, pc.wrapping_add(4), cfg);
            if cfg.clear_link_tag {
                link.cap.tag = false;
            }
            Effects { pc: PcUpdate::NewPcc(c, target), ..Effects::rd(rd, link) }
        }
        I::Branch { op, rs1, rs2, imm } => {
            if branch_taken(op, r(rs1).address(), r(rs2).address()) {
                let target = pc.wrapping_add(imm as u32);
                target_ok(target)?;
                Effects { pc: PcUpdate::Jump(target), ..Effects::seq() }
            } else {
                Effects::seq()
            }
        }
        I::Load { op, rd, rs1, imm } => {
            let auth = r(rs1);
            let addr = auth.address().wrapping_add(imm as u32);
            cached::check_access(&auth, addr, op.width(), AccessKind::Load, cfg)
                .map_err(|f| fault(f, addr))?;
            return Ok(Outcome::Memory {
                reqs: lane_requests(addr, op.width(), 0, false),
                load: (rd != 0).then_some((rd, LoadKind::Word { op, addr })),
            });
        }
        I::Store { op, rs1, rs2, imm } => {
            let auth = r(rs1);
            let addr = auth.address().wrapping_add(imm as u32);
            cached::check_access(&auth, addr, op.width(), AccessKind::Store, cfg)
                .map_err(|f| fault(f, addr))?;
            return Ok(Outcome::Memory {
                reqs: lane_requests(addr, op.width(), r(rs2).address(), true),
                load: None,
            });
        }
        I::OpImm { op, rd, rs1, imm } => {
            Effects::rd(rd, CachedCap::int(alu(op, r(rs1).address(), imm as u32)))
        }
        I::Op { op, rd, rs1, rs2 } => {
            Effects::rd(rd, CachedCap::int(alu(op, r(rs1).address(), r(rs2).address())))
        }
        I::Csr { op, rd, src, csr } => {
            if !sr {
                return Err(no_sr);
            }
            let old = match csr {
                CSR_MSTATUS => mstatus_value(v.mie, v.mpie),
                CSR_MCAUSE => v.mcause,
                _ => v.mtval,
            };
            let (operand, write) = match src {
                CsrSrc::Reg(x) => (r(x).address(), x != 0),
                CsrSrc::Imm(u) => (u32::from(u), u != 0),
            };
            let new = match op {
                CsrOp::Rw => Some(operand),
                CsrOp::Rs if write => Some(old | operand),
                CsrOp::Rc if write => Some(old & !operand),
                _ => None,
            };
            let mut e = Effects::rd(rd, CachedCap::int(old));
            if let Some(n) = new {
                match csr {
                    CSR_MSTATUS => e.mstatus = Some((n & 0x8 != 0, n & 0x80 != 0)),
                    CSR_MCAUSE => e.mcause = Some(n),
                    _ => e.mtval = Some(n),
                }
            }
            e
        }
        I::Ecall => return Err(Outcome::Trap { cause: ExceptionCause::ECall, mtval: 0 }),
        I::Ebreak => {
            let mtval = match cfg.spec.ebreak_mtval {
                crate::isa::EbreakMtval::Zero => 0,
                crate::isa::EbreakMtval::Pc => pc,
            };
            return Err(Outcome::Trap { cause: ExceptionCause::EBreak, mtval });
        }
        I::Mret => {
            if !sr {
                return Err(no_sr);
            }
            Effects {
                mstatus: Some((v.mpie, true)),
                pc: PcUpdate::NewPcc(*v.mepcc, v.mepcc.address()),
                ..Effects::seq()
            }
        }
        I::Wfi => Effects { sleep: true, ..Effects::seq() },
        I::Clc { rd, rs1, imm } => {
            let auth = r(rs1);
            let addr = auth.address().wrapping_add(imm as u32);
            cached::check_access(&auth, addr, 8, AccessKind::Load, cfg).map_err(|f| fault(f, addr))?;
            if addr % 8 != 0 {
                return Err(Outcome::Trap { cause: ExceptionCause::LoadMisaligned, mtval: addr });
            }
            return Ok(Outcome::Memory {
                reqs: cap_requests(addr, None),
                load: (rd != 0).then_some((rd, LoadKind::Cap { auth })),
            });
        }
        I::Csc { rs1, rs2, imm } => {
            let auth = r(rs1);
            let data = r(rs2).cap;
            let addr = auth.address().wrapping_add(imm as u32);
            let kind = if data.tag { AccessKind::StoreCap } else { AccessKind::Store };
            cached::check_access(&auth, addr, 8, kind, cfg).map_err(|f| fault(f, addr))?;
            if addr % 8 != 0 {
                return Err(Outcome::Trap { cause: ExceptionCause::StoreMisaligned, mtval: addr });
            }
            return Ok(Outcome::Memory { reqs: cap_requests(addr, Some(data)), load: None });
        }
        I::CGet { op, rd, rs1 } => {
            let c = r(rs1);
            let b = c.bounds();
            let val = match op {
                CGetOp::Perm => u32::from(c.cap.permissions().bits()),
                CGetOp::Type => u32::from(c.cap.otype),
                CGetOp::Base => b.base,
                CGetOp::Len => b.top.saturating_sub(u64::from(b.base)).min(u64::from(u32::MAX)) as u32,
                CGetOp::Tag => u32::from(c.cap.tag),
                CGetOp::Top => b.top.min(u64::from(u32::MAX)) as u32,
            };
            Effects::rd(rd, CachedCap::int(val))
        }
        I::CMove { rd, rs1 } => Effects::rd(rd, r(rs1)),
        I::Cap { op, rd, rs1, rs2 } => {
            let (c1, c2) = (r(rs1), r(rs2));
            let out = match op {
                CapOp::SetAddr => cached::set_address(&c1, c2.address(), cfg),
                CapOp::IncAddr => {
                    cached::set_address(&c1, c1.address().wrapping_add(c2.address()), cfg)
                }
                CapOp::SetBounds => cached::set_bounds(&c1, c2.address(), cfg).0,
                CapOp::SetBoundsExact => {
                    let (mut c, exact) = cached::set_bounds(&c1, c2.address(), cfg);
                    c.cap.tag &= exact;
                    c
                }
                CapOp::Seal => cached::seal_with(&c1, &c2),
                CapOp::Unseal => cached::unseal_with(&c1, &c2),
                CapOp::AndPerm => cached::and_perm(&c1, c2.address()),
                CapOp::Seqx => CachedCap::int(u32::from(c1.cap == c2.cap)),
            };
            Effects::rd(rd, out)
        }
        I::CSpecialRw { rd, rs1, scr } => {
            if !sr {
                return Err(no_sr);
            }
            let is_mtcc = scr == SCR_MTCC;
            let old = if is_mtcc { *v.mtcc } else { *v.mepcc };
            let mut e = Effects::rd(rd, old);
            if rs1 != 0 {
                let mut n = r(rs1);
                if is_mtcc {
                    if n.cap.is_sealed() || !n.cap.has_perm(PermissionSet::EXECUTE) {
                        n.cap.tag = false;
                    }
                    e.mtcc = Some(n);
                } else {
                    e.mepcc = Some(n);
                }
            }
            e
        }
    };
    Ok(Outcome::Retire(eff))
}

/// Two full-word requests for a capability transfer; stores tag both words.
pub fn cap_requests(addr: u32, store: Option<Capability>) -> Vec<MemRequest> {
    let (words, tag, we) = match store {
        Some(c) => {
            let b = c.to_bits();
            ([b as u32, (b >> 32) as u32], c.tag, true)
        }
        None => ([0, 0], false, false),
    };
    (0..2)
        .map(|k| MemRequest {
            addr: addr.wrapping_add(4 * k as u32),
            be: 0xF,
            wdata: words[k],
            wtag: tag,
            we,
        })
        .collect()
}
