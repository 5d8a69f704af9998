//! Seeded random program bodies for the harness layout.
//!
//! Programs are built from short snippets. Control flow only moves forward
//! and never past the end of the body, so every run reaches the final
//! self-loop. Registers x13..x15, mtcc and mepcc writes are left to the
//! harness, and x1/x2 keep the reset roots.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::decode::{
    AluOp, BranchOp, CGetOp, CapOp, CsrOp, CsrSrc, LoadOp, StoreOp, CSR_MCAUSE, CSR_MSTATUS, CSR_MTVAL,
    SCR_MEPCC,
};
use crate::isa::{encode, Instruction};

/// Relative frequency of each snippet kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenWeights {
    pub alu: u32,
    pub branch: u32,
    pub jump: u32,
    pub pointer: u32,
    pub load: u32,
    pub store: u32,
    pub clc: u32,
    pub csc: u32,
    pub set_bounds: u32,
    pub cap_derive: u32,
    pub cap_query: u32,
    pub csr: u32,
    pub trap: u32,
    pub wfi: u32,
    pub irq_window: u32,
    /// Words outside the implemented subset.
    pub illegal: u32,
}

impl Default for GenWeights {
    fn default() -> Self {
        GenWeights {
            alu: 10,
            branch: 4,
            jump: 3,
            pointer: 8,
            load: 8,
            store: 6,
            clc: 5,
            csc: 5,
            set_bounds: 5,
            cap_derive: 8,
            cap_query: 4,
            csr: 3,
            trap: 2,
            wfi: 1,
            irq_window: 2,
            illegal: 0,
        }
    }
}

impl GenWeights {
    /// Mostly bounds setting and other capability derivations.
    pub fn cap_heavy() -> Self {
        GenWeights { set_bounds: 30, cap_derive: 20, pointer: 6, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Alu,
    Branch,
    Jump,
    Pointer,
    Load,
    Store,
    Clc,
    Csc,
    SetBounds,
    CapDerive,
    CapQuery,
    Csr,
    Trap,
    Wfi,
    IrqWindow,
    Illegal,
}

struct Gen {
    rng: ChaCha8Rng,
    words: Vec<u32>,
    len: usize,
}

const DATA_ADDRS: [i32; 12] = [0x100, 0x104, 0x108, 0x10C, 0x200, 0x208, 0x3F8, 0x3FE, 0x401, 0x5FF, 0x6F8, 0x7FC];

impl Gen {
    fn dest(&mut self) -> u8 {
        self.rng.gen_range(3..=12)
    }

    fn src(&mut self) -> u8 {
        self.rng.gen_range(0..=12)
    }

    fn imm12(&mut self) -> i32 {
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(-2048..=2047),
            1 => *[0, 1, -1, 2047, -2048, 4, 8].choose(&mut self.rng).unwrap(),
            _ => self.rng.gen_range(-16..=16),
        }
    }

    fn mem_offset(&mut self, align: i32) -> i32 {
        match self.rng.gen_range(0..6) {
            0 => self.rng.gen_range(-8..=8),
            1 => -align,
            _ => align * self.rng.gen_range(0..4),
        }
    }

    /// Words left before the end of the body, counted from the next slot.
    fn room(&self) -> usize {
        self.len.saturating_sub(self.words.len())
    }

    fn push(&mut self, i: Instruction) {
        self.words.push(encode(&i));
    }

    fn snippet(&mut self, kind: Kind) {
        use Instruction as I;
        match kind {
            Kind::Alu => {
                let rd = self.dest();
                let rs1 = self.src();
                let i = match self.rng.gen_range(0..3) {
                    0 => {
                        let op = *[AluOp::Add, AluOp::Slt, AluOp::Sltu, AluOp::Xor, AluOp::Or, AluOp::And]
                            .choose(&mut self.rng)
                            .unwrap();
                        let imm = self.imm12();
                        I::OpImm { op, rd, rs1, imm }
                    }
                    1 => {
                        let op = *[AluOp::Sll, AluOp::Srl, AluOp::Sra].choose(&mut self.rng).unwrap();
                        I::OpImm { op, rd, rs1, imm: self.rng.gen_range(0..32) }
                    }
                    _ => {
                        let ops = [
                            AluOp::Add,
                            AluOp::Sub,
                            AluOp::Sll,
                            AluOp::Slt,
                            AluOp::Sltu,
                            AluOp::Xor,
                            AluOp::Srl,
                            AluOp::Sra,
                            AluOp::Or,
                            AluOp::And,
                        ];
                        let op = *ops.choose(&mut self.rng).unwrap();
                        let rs2 = self.src();
                        I::Op { op, rd, rs1, rs2 }
                    }
                };
                self.push(i);
                if self.rng.gen_bool(0.2) {
                    let imm = self.rng.gen::<u32>() & 0xFFFF_F000;
                    let rd = self.dest();
                    self.push(I::Lui { rd, imm });
                }
            }
            Kind::Branch => {
                let room = self.room();
                if room < 2 {
                    return self.snippet(Kind::Alu);
                }
                let k = self.rng.gen_range(1..room.min(8)) as i32;
                let op = *[BranchOp::Beq, BranchOp::Bne, BranchOp::Blt, BranchOp::Bge, BranchOp::Bltu, BranchOp::Bgeu]
                    .choose(&mut self.rng)
                    .unwrap();
                let (rs1, rs2) = (self.src(), self.src());
                let imm = if self.rng.gen_bool(0.05) { 4 * k + 2 } else { 4 * k };
                self.push(I::Branch { op, rs1, rs2, imm });
            }
            Kind::Jump => {
                let room = self.room();
                if room < 3 {
                    return self.snippet(Kind::Alu);
                }
                let rd = if self.rng.gen_bool(0.5) { 0 } else { self.dest() };
                if self.rng.gen_bool(0.5) {
                    let k = self.rng.gen_range(1..room.min(8)) as i32;
                    self.push(I::Cjal { rd, imm: 4 * k });
                } else {
                    // Target counted from the AUIPCC.
                    let base = self.dest();
                    let k = self.rng.gen_range(2..room.min(8)) as i32;
                    let imm = match self.rng.gen_range(0..10) {
                        0 => 4 * k + 2,
                        1 => 4 * k + 1,
                        _ => 4 * k,
                    };
                    self.push(I::Auipcc { rd: base, imm: 0 });
                    self.push(I::Cjalr { rd, rs1: base, imm });
                }
            }
            Kind::Pointer => {
                let (t, p) = (self.dest(), self.dest());
                if self.rng.gen_bool(0.15) {
                    // Near the top of the address space.
                    self.push(I::Lui { rd: t, imm: 0xFFFF_F000 });
                    let imm = self.rng.gen_range(0x7F0..=0x7FF);
                    self.push(I::OpImm { op: AluOp::Add, rd: t, rs1: t, imm });
                    self.push(I::OpImm { op: AluOp::Add, rd: t, rs1: t, imm });
                } else {
                    let imm = *DATA_ADDRS.choose(&mut self.rng).unwrap();
                    self.push(I::OpImm { op: AluOp::Add, rd: t, rs1: 0, imm });
                }
                let auth = if self.rng.gen_bool(0.85) { 1 } else { self.src() };
                self.push(I::Cap { op: CapOp::SetAddr, rd: p, rs1: auth, rs2: t });
            }
            Kind::Load => {
                let op = *[LoadOp::Lb, LoadOp::Lh, LoadOp::Lw, LoadOp::Lbu, LoadOp::Lhu].choose(&mut self.rng).unwrap();
                let rd = if self.rng.gen_bool(0.1) { 0 } else { self.dest() };
                let rs1 = self.src();
                let imm = self.mem_offset(op.width() as i32);
                self.push(I::Load { op, rd, rs1, imm });
            }
            Kind::Store => {
                let op = *[StoreOp::Sb, StoreOp::Sh, StoreOp::Sw].choose(&mut self.rng).unwrap();
                let (rs1, rs2) = (self.src(), self.src());
                let imm = self.mem_offset(op.width() as i32);
                self.push(I::Store { op, rs1, rs2, imm });
            }
            Kind::Clc => {
                let rd = self.dest();
                let rs1 = self.src();
                let imm = self.mem_offset(8);
                self.push(I::Clc { rd, rs1, imm });
            }
            Kind::Csc => {
                let (rs1, rs2) = (self.src(), self.src());
                if self.rng.gen_bool(0.2) {
                    let x = self.dest();
                    self.push(I::Auipcc { rd: x, imm: 0 });
                    let imm = self.mem_offset(8);
                    self.push(I::Csc { rs1, rs2: x, imm });
                } else {
                    let imm = self.mem_offset(8);
                    self.push(I::Csc { rs1, rs2, imm });
                }
            }
            Kind::SetBounds => {
                let (rd, rs1, t) = (self.dest(), self.src(), self.dest());
                let len = match self.rng.gen_range(0..4) {
                    0 => self.rng.gen_range(0..16),
                    1 => self.rng.gen_range(0..2048),
                    2 => *[0x1FF, 0x200, 0x201, 0x3FF, 0x7FF, 0x7F8].choose(&mut self.rng).unwrap(),
                    _ => self.rng.gen_range(-2048..0),
                };
                self.push(I::OpImm { op: AluOp::Add, rd: t, rs1: 0, imm: len });
                let op = if self.rng.gen_bool(0.3) { CapOp::SetBoundsExact } else { CapOp::SetBounds };
                self.push(I::Cap { op, rd, rs1, rs2: t });
            }
            Kind::CapDerive => {
                let (rd, rs1, rs2) = (self.dest(), self.src(), self.src());
                let i = match self.rng.gen_range(0..9) {
                    0 => I::Cap { op: CapOp::SetAddr, rd, rs1, rs2 },
                    1 => I::Cap { op: CapOp::IncAddr, rd, rs1, rs2 },
                    2 => {
                        let t = self.dest();
                        let mask = self.rng.gen_range(0..256);
                        self.push(I::OpImm { op: AluOp::Add, rd: t, rs1: 0, imm: mask });
                        I::Cap { op: CapOp::AndPerm, rd, rs1, rs2: t }
                    }
                    3 => {
                        // Sealing authority with a small object type.
                        let t = self.dest();
                        let ot = self.rng.gen_range(0..9);
                        self.push(I::OpImm { op: AluOp::Add, rd: t, rs1: 0, imm: ot });
                        self.push(I::Cap { op: CapOp::SetAddr, rd: t, rs1: 2, rs2: t });
                        if self.rng.gen_bool(0.5) {
                            I::Cap { op: CapOp::Seal, rd, rs1, rs2: t }
                        } else {
                            I::Cap { op: CapOp::Unseal, rd, rs1, rs2: t }
                        }
                    }
                    4 => I::Cap { op: CapOp::Seal, rd, rs1, rs2 },
                    5 => I::Auipcc { rd, imm: (self.rng.gen_range(0..4u32)) << 12 },
                    6 => I::CMove { rd, rs1 },
                    7 => I::CSpecialRw { rd, rs1: 0, scr: SCR_MEPCC },
                    _ => I::Cap { op: CapOp::IncAddr, rd, rs1, rs2: 0 },
                };
                self.push(i);
            }
            Kind::CapQuery => {
                let (rd, rs1) = (self.dest(), self.src());
                let op = *[CGetOp::Perm, CGetOp::Type, CGetOp::Base, CGetOp::Len, CGetOp::Tag, CGetOp::Top]
                    .choose(&mut self.rng)
                    .unwrap();
                if self.rng.gen_bool(0.15) {
                    let rs2 = self.src();
                    self.push(I::Cap { op: CapOp::Seqx, rd, rs1, rs2 });
                } else {
                    self.push(I::CGet { op, rd, rs1 });
                }
            }
            Kind::Csr => {
                let csr = *[CSR_MSTATUS, CSR_MCAUSE, CSR_MTVAL].choose(&mut self.rng).unwrap();
                let op = *[CsrOp::Rw, CsrOp::Rs, CsrOp::Rc].choose(&mut self.rng).unwrap();
                let rd = if self.rng.gen_bool(0.3) { 0 } else { self.dest() };
                let src = if self.rng.gen_bool(0.5) {
                    CsrSrc::Reg(self.src())
                } else {
                    CsrSrc::Imm(self.rng.gen_range(0..32))
                };
                self.push(I::Csr { op, rd, src, csr });
            }
            Kind::Trap => {
                let i = *[I::Ecall, I::Ebreak].choose(&mut self.rng).unwrap();
                self.push(i);
            }
            Kind::Wfi => self.push(I::Wfi),
            Kind::IrqWindow => {
                self.push(I::Csr { op: CsrOp::Rs, rd: 0, src: CsrSrc::Imm(8), csr: CSR_MSTATUS });
                let k = self.rng.gen_range(0..4);
                for _ in 0..k {
                    self.snippet(Kind::Alu);
                }
                self.push(I::Csr { op: CsrOp::Rc, rd: 0, src: CsrSrc::Imm(8), csr: CSR_MSTATUS });
            }
            Kind::Illegal => {
                let w = match self.rng.gen_range(0..3) {
                    0 => 0,
                    1 => 0xFFFF_FFFF,
                    // CLC with an out-of-range destination register.
                    _ => 0x0000_3003 | (self.rng.gen_range(16..32) << 7) | (u32::from(self.src()) << 15),
                };
                self.words.push(w);
            }
        }
    }
}

/// `len` instruction words, fully determined by `seed`.
pub fn gen_program(seed: u64, len: usize, weights: &GenWeights) -> Vec<u32> {
    let w = weights;
    let table = [
        (Kind::Alu, w.alu),
        (Kind::Branch, w.branch),
        (Kind::Jump, w.jump),
        (Kind::Pointer, w.pointer),
        (Kind::Load, w.load),
        (Kind::Store, w.store),
        (Kind::Clc, w.clc),
        (Kind::Csc, w.csc),
        (Kind::SetBounds, w.set_bounds),
        (Kind::CapDerive, w.cap_derive),
        (Kind::CapQuery, w.cap_query),
        (Kind::Csr, w.csr),
        (Kind::Trap, w.trap),
        (Kind::Wfi, w.wfi),
        (Kind::IrqWindow, w.irq_window),
        (Kind::Illegal, w.illegal),
    ];
    let total: u32 = table.iter().map(|t| t.1).sum();
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), words: Vec::new(), len };
    while g.words.len() < len && total > 0 {
        let mut pick = g.rng.gen_range(0..total);
        let kind = table
            .iter()
            .find(|(_, wt)| {
                if pick < *wt {
                    true
                } else {
                    pick -= wt;
                    false
                }
            })
            .map(|t| t.0)
            .unwrap_or(Kind::Alu);
        g.snippet(kind);
    }
    let mut words = g.words;
    words.truncate(len);
    words.resize(len, encode(&Instruction::OpImm { op: AluOp::Add, rd: 0, rs1: 0, imm: 0 }));
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::decode::decode;

    #[test]
    fn same_seed_same_program() {
        let w = GenWeights::default();
        assert_eq!(gen_program(0, 1, &w), gen_program(0, 1, &w));
        assert_eq!(gen_program(7, 300, &w), gen_program(7, 300, &w));
        assert_ne!(gen_program(7, 300, &w), gen_program(8, 300, &w));
        assert_eq!(gen_program(0, 1, &w).len(), 1);
    }

    #[test]
    fn default_weights_stay_in_the_subset() {
        for seed in 0..50 {
            for w in gen_program(seed, 256, &GenWeights::default()) {
                assert!(decode(w).is_some(), "seed {seed}: {w:08x}");
            }
        }
    }

    #[test]
    fn illegal_weight_produces_illegal_words() {
        let w = GenWeights { illegal: 50, ..GenWeights::default() };
        let p = gen_program(3, 256, &w);
        assert!(p.iter().any(|&x| decode(x).is_none()));
    }

    #[test]
    fn cap_heavy_weights_favour_derivations() {
        let p = gen_program(11, 4000, &GenWeights::cap_heavy());
        let derive = p
            .iter()
            .filter(|&&x| {
                matches!(
                    decode(x),
                    Some(Instruction::Cap { .. }) | Some(Instruction::Auipcc { .. }) | Some(Instruction::CMove { .. })
                )
            })
            .count();
        assert!(derive * 10 >= p.len() * 3, "{derive} of {}", p.len());
    }
}
