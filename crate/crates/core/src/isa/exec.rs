//! The architectural step function.

use crate::capability::{
    and_perms, bounds_of, check_access, perms_decode, perms_encode, seal, set_address, set_bounds,
    unseal, AccessKind, CapFault, Capability, PermissionSet,
};

use super::decode::{
    decode, AluOp, BranchOp, CGetOp, CapOp, CsrOp, CsrSrc, Instruction, LoadOp, CSR_MCAUSE,
    CSR_MSTATUS, CSR_MTVAL, SCR_MTCC,
};
use super::state::{
    ArchInput, ArchState, ClearRule, EbreakMtval, ExceptionCause, MemEventPlan, MemKind,
    MemRequest, Slot, SpecConfig, MCAUSE_EXTERNAL_INTERRUPT,
};

/// How a step ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    Retired,
    Trap { cause: ExceptionCause, mtval: u32 },
    Interrupt,
}

/// One capability derivation performed by a step: `dest` in the post-state
/// was computed from `parent` in the pre-state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub dest: Slot,
    pub parent: Slot,
    pub op: &'static str,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub state: ArchState,
    pub out: MemEventPlan,
    pub event: StepEvent,
    pub insn: Option<Instruction>,
    pub derivations: Vec<Derivation>,
}

pub fn alu(op: AluOp, a: u32, b: u32) -> u32 {
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::Sll => a << (b & 31),
        AluOp::Slt => u32::from((a as i32) < (b as i32)),
        AluOp::Sltu => u32::from(a < b),
        AluOp::Xor => a ^ b,
        AluOp::Srl => a >> (b & 31),
        AluOp::Sra => ((a as i32) >> (b & 31)) as u32,
        AluOp::Or => a | b,
        AluOp::And => a & b,
    }
}

pub fn branch_taken(op: BranchOp, a: u32, b: u32) -> bool {
    match op {
        BranchOp::Beq => a == b,
        BranchOp::Bne => a != b,
        BranchOp::Blt => (a as i32) < (b as i32),
        BranchOp::Bge => (a as i32) >= (b as i32),
        BranchOp::Bltu => a < b,
        BranchOp::Bgeu => a >= b,
    }
}

fn fault_cause(f: CapFault) -> ExceptionCause {
    match f {
        CapFault::Tag => ExceptionCause::TagViolation,
        CapFault::Seal => ExceptionCause::SealViolation,
        CapFault::Permission => ExceptionCause::PermissionViolation,
        CapFault::Bounds => ExceptionCause::BoundsViolation,
    }
}

/// Word requests for a `width`-byte access at `addr`: one if it fits in an
/// aligned word, otherwise two. Write data is rotated into byte lanes.
fn word_requests(addr: u32, width: u32, data: u32, we: bool) -> Vec<MemRequest> {
    let k = addr & 3;
    let lanes = ((1u32 << width) - 1) << k;
    let wdata = if we { data.rotate_left(8 * k) } else { 0 };
    let first = addr & !3;
    let mut reqs = vec![MemRequest { addr: first, be: (lanes & 0xF) as u8, wdata, wtag: false, we }];
    if lanes > 0xF {
        reqs.push(MemRequest {
            addr: first.wrapping_add(4),
            be: (lanes >> 4) as u8,
            wdata,
            wtag: false,
            we,
        });
    }
    reqs
}

fn extract_load(op: LoadOp, addr: u32, words: &[u32]) -> u32 {
    let k = addr & 3;
    let combined = u64::from(words[0]) | (u64::from(words.get(1).copied().unwrap_or(0)) << 32);
    let raw = (combined >> (8 * k)) as u32;
    match op {
        LoadOp::Lb => raw as u8 as i8 as i32 as u32,
        LoadOp::Lbu => raw & 0xFF,
        LoadOp::Lh => raw as u16 as i16 as i32 as u32,
        LoadOp::Lhu => raw & 0xFFFF,
        LoadOp::Lw => raw,
    }
}

/// Permission stripping applied to a capability loaded through `auth`.
pub fn load_filter(loaded: Capability, auth: &Capability) -> Capability {
    if !auth.has_perm(PermissionSet::CAP_ACCESS) {
        return loaded.with_tag(false);
    }
    if !loaded.tag || loaded.is_sealed() {
        return loaded;
    }
    let mut p = perms_decode(loaded.perms);
    if !auth.has_perm(PermissionSet::STORE) {
        p -= PermissionSet::STORE;
    }
    if !auth.has_perm(PermissionSet::GLOBAL) {
        p -= PermissionSet::GLOBAL;
    }
    Capability { perms: perms_encode(p), ..loaded }
}

struct Step<'a> {
    s: &'a ArchState,
    i: &'a ArchInput,
    n: ArchState,
    out: MemEventPlan,
    derivations: Vec<Derivation>,
}

type Exec = Result<(), (ExceptionCause, u32)>;

impl Step<'_> {
    fn derive(&mut self, dest: Slot, parent: Slot, op: &'static str) {
        self.derivations.push(Derivation { dest, parent, op });
    }

    fn write_cap(&mut self, rd: u8, c: Capability, parent: Slot, op: &'static str) {
        if rd != 0 {
            self.n.set_reg(rd, c);
            self.derive(Slot::Reg(rd), parent, op);
        }
    }

    fn write_int(&mut self, rd: u8, v: u32) {
        self.n.set_reg(rd, Capability::from_int(v));
    }

    fn read_data(&self, j: usize) -> (u32, bool) {
        self.i.mem_read_data.get(j).copied().unwrap_or((0, false))
    }

    fn require_sr(&self) -> Exec {
        if self.s.pcc.has_perm(PermissionSet::SYSTEM_REGISTERS) {
            Ok(())
        } else {
            Err((ExceptionCause::PermissionViolation, 0))
        }
    }

    fn execute(&mut self, insn: Instruction, cfg: &SpecConfig) -> Exec {
        use Instruction as I;
        let s = self.s;
        let pc = s.pc();
        let mut next_pc = pc.wrapping_add(4);
        let mut set_pcc = None;
        match insn {
            I::Lui { rd, imm } => self.write_int(rd, imm),
            I::Auipcc { rd, imm } => {
                let c = set_address(&s.pcc, pc.wrapping_add(imm));
                self.write_cap(rd, c, Slot::Pcc, "auipcc");
            }
            I::Cjal { rd, imm } => {
                let target = pc.wrapping_add(imm as u32);
                if target & 3 != 0 {
                    return Err((ExceptionCause::MisalignedTarget, target));
                }
                let link = set_address(&s.pcc, pc.wrapping_add(4));
                self.write_cap(rd, link, Slot::Pcc, "cjal-link");
                next_pc = target;
            }
            I::Cjalr { rd, rs1, imm } => {
                let cs1 = s.reg(rs1);
                let target = cs1.address.wrapping_add(imm as u32) & !1;
                if !cs1.tag {
                    return Err((ExceptionCause::TagViolation, target));
                }
                if cs1.is_sealed() {
                    return Err((ExceptionCause::SealViolation, target));
                }
                if !cs1.has_perm(PermissionSet::EXECUTE) {
                    return Err((ExceptionCause::PermissionViolation, target));
                }
                if target & 3 != 0 {
                    return Err((ExceptionCause::MisalignedTarget, target));
                }
                let link = set_address(&s.pcc, pc.wrapping_add(4));
                self.write_cap(rd, link, Slot::Pcc, "cjalr-link");
                set_pcc = Some((set_address(&cs1, target), Slot::Reg(rs1)));
            }
            I::Branch { op, rs1, rs2, imm } => {
                if branch_taken(op, s.reg(rs1).address, s.reg(rs2).address) {
                    let target = pc.wrapping_add(imm as u32);
                    if target & 3 != 0 {
                        return Err((ExceptionCause::MisalignedTarget, target));
                    }
                    next_pc = target;
                }
            }
            I::Load { op, rd, rs1, imm } => {
                let auth = s.reg(rs1);
                let addr = auth.address.wrapping_add(imm as u32);
                check_access(&auth, addr, op.width(), AccessKind::Load)
                    .map_err(|f| (fault_cause(f), addr))?;
                let reqs = word_requests(addr, op.width(), 0, false);
                let words: Vec<u32> = (0..reqs.len()).map(|j| self.read_data(j).0).collect();
                self.out = MemEventPlan { kind: MemKind::Read, requests: reqs };
                self.write_int(rd, extract_load(op, addr, &words));
            }
            I::Store { op, rs1, rs2, imm } => {
                let auth = s.reg(rs1);
                let addr = auth.address.wrapping_add(imm as u32);
                check_access(&auth, addr, op.width(), AccessKind::Store)
                    .map_err(|f| (fault_cause(f), addr))?;
                let reqs = word_requests(addr, op.width(), s.reg(rs2).address, true);
                for r in &reqs {
                    self.n.mem.write(r.addr, r.be, r.wdata, r.wtag);
                }
                self.out = MemEventPlan { kind: MemKind::Write, requests: reqs };
            }
            I::OpImm { op, rd, rs1, imm } => {
                self.write_int(rd, alu(op, s.reg(rs1).address, imm as u32));
            }
            I::Op { op, rd, rs1, rs2 } => {
                self.write_int(rd, alu(op, s.reg(rs1).address, s.reg(rs2).address));
            }
            I::Csr { op, rd, src, csr } => {
                self.require_sr()?;
                let old = match csr {
                    CSR_MSTATUS => s.mstatus(),
                    CSR_MCAUSE => s.mcause,
                    CSR_MTVAL => s.mtval,
                    _ => unreachable!("decoder admits only implemented CSRs"),
                };
                let (operand, nonzero) = match src {
                    CsrSrc::Reg(r) => (s.reg(r).address, r != 0),
                    CsrSrc::Imm(u) => (u32::from(u), u != 0),
                };
                let new = match op {
                    CsrOp::Rw => Some(operand),
                    CsrOp::Rs => nonzero.then_some(old | operand),
                    CsrOp::Rc => nonzero.then_some(old & !operand),
                };
                if let Some(v) = new {
                    match csr {
                        CSR_MSTATUS => {
                            self.n.mie = v & (1 << 3) != 0;
                            self.n.mpie = v & (1 << 7) != 0;
                        }
                        CSR_MCAUSE => self.n.mcause = v,
                        _ => self.n.mtval = v,
                    }
                }
                self.write_int(rd, old);
            }
            I::Ecall => return Err((ExceptionCause::ECall, 0)),
            I::Ebreak => {
                let v = match cfg.ebreak_mtval {
                    EbreakMtval::Zero => 0,
                    EbreakMtval::Pc => pc,
                };
                return Err((ExceptionCause::EBreak, v));
            }
            I::Mret => {
                self.require_sr()?;
                self.n.mie = s.mpie;
                self.n.mpie = true;
                set_pcc = Some((s.mepcc, Slot::Mepcc));
            }
            I::Wfi => {}
            I::Clc { rd, rs1, imm } => {
                let auth = s.reg(rs1);
                let addr = auth.address.wrapping_add(imm as u32);
                check_access(&auth, addr, 8, AccessKind::Load)
                    .map_err(|f| (fault_cause(f), addr))?;
                if addr & 7 != 0 {
                    return Err((ExceptionCause::LoadMisaligned, addr));
                }
                let read = |a: u32| MemRequest { addr: a, be: 0xF, wdata: 0, wtag: false, we: false };
                self.out = MemEventPlan {
                    kind: MemKind::Read,
                    requests: vec![read(addr), read(addr.wrapping_add(4))],
                };
                let (lo, t0) = self.read_data(0);
                let (hi, t1) = self.read_data(1);
                let loaded = Capability::from_bits(u64::from(lo) | (u64::from(hi) << 32), t0 && t1);
                self.write_cap(rd, load_filter(loaded, &auth), Slot::Granule(addr), "clc");
            }
            I::Csc { rs1, rs2, imm } => {
                let auth = s.reg(rs1);
                let data = s.reg(rs2);
                let addr = auth.address.wrapping_add(imm as u32);
                let kind = if data.tag { AccessKind::StoreCap } else { AccessKind::Store };
                check_access(&auth, addr, 8, kind).map_err(|f| (fault_cause(f), addr))?;
                if addr & 7 != 0 {
                    return Err((ExceptionCause::StoreMisaligned, addr));
                }
                let bits = data.to_bits();
                let write = |a: u32, w: u32| MemRequest { addr: a, be: 0xF, wdata: w, wtag: data.tag, we: true };
                let reqs = vec![write(addr, bits as u32), write(addr.wrapping_add(4), (bits >> 32) as u32)];
                for r in &reqs {
                    self.n.mem.write(r.addr, r.be, r.wdata, r.wtag);
                }
                self.out = MemEventPlan { kind: MemKind::Write, requests: reqs };
                if data.tag {
                    self.derive(Slot::Granule(addr), Slot::Reg(rs2), "csc");
                }
            }
            I::CGet { op, rd, rs1 } => {
                let c = s.reg(rs1);
                let b = bounds_of(&c);
                let v = match op {
                    CGetOp::Perm => u32::from(c.permissions().bits()),
                    CGetOp::Type => u32::from(c.otype),
                    CGetOp::Base => b.base,
                    CGetOp::Len => b.length().min(0xFFFF_FFFF) as u32,
                    CGetOp::Tag => u32::from(c.tag),
                    CGetOp::Top => b.top.min(0xFFFF_FFFF) as u32,
                };
                self.write_int(rd, v);
            }
            I::CMove { rd, rs1 } => self.write_cap(rd, s.reg(rs1), Slot::Reg(rs1), "cmove"),
            I::Cap { op, rd, rs1, rs2 } => {
                let c1 = s.reg(rs1);
                let c2 = s.reg(rs2);
                let (result, name) = match op {
                    CapOp::SetAddr => (set_address(&c1, c2.address), "csetaddr"),
                    CapOp::IncAddr => {
                        (set_address(&c1, c1.address.wrapping_add(c2.address)), "cincaddr")
                    }
                    CapOp::SetBounds => (set_bounds(&c1, c2.address).0, "csetbounds"),
                    CapOp::SetBoundsExact => {
                        let (r, exact) = set_bounds(&c1, c2.address);
                        (r.with_tag(r.tag && exact), "csetboundsexact")
                    }
                    CapOp::Seal => (seal(&c1, &c2), "cseal"),
                    CapOp::Unseal => (unseal(&c1, &c2), "cunseal"),
                    CapOp::AndPerm => (
                        and_perms(&c1, PermissionSet::from_bits_truncate(c2.address as u8)),
                        "candperm",
                    ),
                    CapOp::Seqx => {
                        let eq = c1.to_bits() == c2.to_bits() && c1.tag == c2.tag;
                        (Capability::from_int(u32::from(eq)), "cseqx")
                    }
                };
                self.write_cap(rd, result, Slot::Reg(rs1), name);
            }
            I::CSpecialRw { rd, rs1, scr } => {
                self.require_sr()?;
                let slot = if scr == SCR_MTCC { Slot::Mtcc } else { Slot::Mepcc };
                let old = s.slot(slot);
                if rs1 != 0 {
                    let mut v = s.reg(rs1);
                    if slot == Slot::Mtcc && (v.is_sealed() || !v.has_perm(PermissionSet::EXECUTE)) {
                        v.tag = false;
                    }
                    if slot == Slot::Mtcc {
                        self.n.mtcc = v;
                    } else {
                        self.n.mepcc = v;
                    }
                    if v.tag {
                        self.derive(slot, Slot::Reg(rs1), "cspecialrw");
                    }
                }
                self.write_cap(rd, old, slot, "cspecialrw");
            }
        }
        match set_pcc {
            Some((pcc, parent)) => {
                self.n.pcc = pcc;
                if pcc.tag {
                    self.derive(Slot::Pcc, parent, "pcc-redirect");
                }
            }
            None => {
                self.n.pcc = set_address(&s.pcc, next_pc);
                if self.n.pcc.tag {
                    self.derive(Slot::Pcc, Slot::Pcc, "pc-advance");
                }
            }
        }
        Ok(())
    }

    fn trap(&mut self, code: u32, mtval: u32) {
        let s = self.s;
        self.n = s.clone();
        self.out = MemEventPlan::default();
        self.derivations.clear();
        self.n.mepcc = set_address(&s.pcc, s.pc());
        self.n.mcause = code;
        self.n.mtval = mtval;
        self.n.mpie = s.mie;
        self.n.mie = false;
        self.n.pcc = set_address(&s.mtcc, s.mtcc.address & !3);
        if self.n.mepcc.tag {
            self.derive(Slot::Mepcc, Slot::Pcc, "trap-mepcc");
        }
        if self.n.pcc.tag {
            self.derive(Slot::Pcc, Slot::Mtcc, "trap-vector");
        }
    }
}

/// One architectural step: interrupt, fetch check, decode, execute.
pub fn spec_step(s: &ArchState, i: &ArchInput, cfg: &SpecConfig) -> StepResult {
    let mut st = Step { s, i, n: s.clone(), out: MemEventPlan::default(), derivations: Vec::new() };
    let pc = s.pc();
    if i.irq_pending && s.mie {
        st.trap(MCAUSE_EXTERNAL_INTERRUPT, 0);
        return finish(st, StepEvent::Interrupt, None);
    }
    if check_access(&s.pcc, pc, 4, AccessKind::Execute).is_err() {
        let cause = ExceptionCause::FetchBoundsViolation;
        st.trap(cause.code(), pc);
        return finish(st, StepEvent::Trap { cause, mtval: pc }, None);
    }
    let Some(insn) = decode(i.instr_bits) else {
        let cause = ExceptionCause::IllegalInstruction;
        st.trap(cause.code(), i.instr_bits);
        return finish(st, StepEvent::Trap { cause, mtval: i.instr_bits }, None);
    };
    match st.execute(insn, cfg) {
        Ok(()) => finish(st, StepEvent::Retired, Some(insn)),
        Err((cause, mtval)) => {
            st.trap(cause.code(), mtval);
            finish(st, StepEvent::Trap { cause, mtval }, Some(insn))
        }
    }
}

fn finish(st: Step<'_>, event: StepEvent, insn: Option<Instruction>) -> StepResult {
    StepResult { state: st.n, out: st.out, event, insn, derivations: st.derivations }
}

/// Memory-event projection of [`spec_step`].
pub fn spec_out(s: &ArchState, i: &ArchInput, cfg: &SpecConfig) -> MemEventPlan {
    spec_step(s, i, cfg).out
}

/// Completes `i` with the responses `s.mem` gives to the step's reads.
pub fn fill_inputs(s: &ArchState, i: &ArchInput, cfg: &SpecConfig) -> ArchInput {
    let probe = ArchInput { mem_read_data: Vec::new(), ..i.clone() };
    let plan = spec_out(s, &probe, cfg);
    let data = match plan.kind {
        MemKind::Read => plan.requests.iter().map(|r| s.mem.read(r.addr)).collect(),
        _ => Vec::new(),
    };
    ArchInput { mem_read_data: data, ..i.clone() }
}

fn clear_slot(state: &mut ArchState, slot: Slot) {
    match slot {
        Slot::Reg(r) => {
            let c = state.reg(r);
            state.set_reg(r, c.with_tag(false));
        }
        Slot::Pcc => state.pcc.tag = false,
        Slot::Mtcc => state.mtcc.tag = false,
        Slot::Mepcc => state.mepcc.tag = false,
        Slot::Granule(a) => {
            let a = a & !7;
            if state.mem.granule_tag(a) {
                let w = state.mem.read_word(a);
                state.mem.write(a, 0xF, w, false);
            }
        }
    }
}

/// [`spec_step`] followed by the extra tag clearing in `rules`.
pub fn cspec_step(s: &ArchState, i: &ArchInput, cfg: &SpecConfig, rules: &[ClearRule]) -> StepResult {
    let mut r = spec_step(s, i, cfg);
    for rule in rules {
        match *rule {
            ClearRule::AllTags => {
                for slot in Slot::cap_registers() {
                    clear_slot(&mut r.state, slot);
                }
                let granules: Vec<u32> = r.state.mem.tagged_granules().collect();
                for a in granules {
                    clear_slot(&mut r.state, Slot::Granule(a));
                }
            }
            ClearRule::Slot(slot) => clear_slot(&mut r.state, slot),
            ClearRule::CjalrLink => {
                if let (StepEvent::Retired, Some(Instruction::Cjalr { rd, .. })) = (r.event, r.insn) {
                    clear_slot(&mut r.state, Slot::Reg(rd));
                }
            }
        }
    }
    r.derivations.retain(|d| r.state.slot(d.dest).tag);
    r
}
