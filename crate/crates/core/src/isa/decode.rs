//! Strict decoder for the implemented RV32E + CHERIoT subset.

/// Opcodes used by the subset.
pub mod opcode {
    pub const LOAD: u32 = 0x03;
    pub const OP_IMM: u32 = 0x13;
    pub const AUIPCC: u32 = 0x17;
    pub const STORE: u32 = 0x23;
    pub const OP: u32 = 0x33;
    pub const LUI: u32 = 0x37;
    pub const BRANCH: u32 = 0x63;
    pub const CJALR: u32 = 0x67;
    pub const CJAL: u32 = 0x6F;
    pub const SYSTEM: u32 = 0x73;
    pub const CHERI: u32 = 0x5B;
}

/// `funct7` values of three-register CHERI instructions.
pub mod cheri_funct7 {
    pub const CSPECIALRW: u32 = 0x01;
    pub const CSETBOUNDS: u32 = 0x08;
    pub const CSETBOUNDSEXACT: u32 = 0x09;
    pub const CSEAL: u32 = 0x0B;
    pub const CUNSEAL: u32 = 0x0C;
    pub const CANDPERM: u32 = 0x0D;
    pub const CSETADDR: u32 = 0x10;
    pub const CINCADDR: u32 = 0x11;
    pub const CSEQX: u32 = 0x21;
    pub const TWO_OP: u32 = 0x7F;
}

/// `rs2` selector values of two-operand CHERI instructions.
pub mod cheri_two_op {
    pub const CGETPERM: u32 = 0x00;
    pub const CGETTYPE: u32 = 0x01;
    pub const CGETBASE: u32 = 0x02;
    pub const CGETLEN: u32 = 0x03;
    pub const CGETTAG: u32 = 0x04;
    pub const CMOVE: u32 = 0x0A;
    pub const CGETTOP: u32 = 0x18;
}

pub const CSR_MSTATUS: u16 = 0x300;
pub const CSR_MCAUSE: u16 = 0x342;
pub const CSR_MTVAL: u16 = 0x343;

pub const SCR_MTCC: u8 = 28;
pub const SCR_MEPCC: u8 = 31;

pub type Reg = u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AluOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchOp {
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoadOp {
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
}

impl LoadOp {
    pub fn width(self) -> u32 {
        match self {
            LoadOp::Lb | LoadOp::Lbu => 1,
            LoadOp::Lh | LoadOp::Lhu => 2,
            LoadOp::Lw => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StoreOp {
    Sb,
    Sh,
    Sw,
}

impl StoreOp {
    pub fn width(self) -> u32 {
        match self {
            StoreOp::Sb => 1,
            StoreOp::Sh => 2,
            StoreOp::Sw => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CsrOp {
    Rw,
    Rs,
    Rc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CsrSrc {
    Reg(Reg),
    Imm(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CGetOp {
    Perm,
    Type,
    Base,
    Len,
    Tag,
    Top,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CapOp {
    SetAddr,
    IncAddr,
    SetBounds,
    SetBoundsExact,
    Seal,
    Unseal,
    AndPerm,
    Seqx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Lui { rd: Reg, imm: u32 },
    Auipcc { rd: Reg, imm: u32 },
    Cjal { rd: Reg, imm: i32 },
    Cjalr { rd: Reg, rs1: Reg, imm: i32 },
    Branch { op: BranchOp, rs1: Reg, rs2: Reg, imm: i32 },
    Load { op: LoadOp, rd: Reg, rs1: Reg, imm: i32 },
    Store { op: StoreOp, rs1: Reg, rs2: Reg, imm: i32 },
    OpImm { op: AluOp, rd: Reg, rs1: Reg, imm: i32 },
    Op { op: AluOp, rd: Reg, rs1: Reg, rs2: Reg },
    Csr { op: CsrOp, rd: Reg, src: CsrSrc, csr: u16 },
    Ecall,
    Ebreak,
    Mret,
    Wfi,
    Clc { rd: Reg, rs1: Reg, imm: i32 },
    Csc { rs1: Reg, rs2: Reg, imm: i32 },
    CGet { op: CGetOp, rd: Reg, rs1: Reg },
    CMove { rd: Reg, rs1: Reg },
    Cap { op: CapOp, rd: Reg, rs1: Reg, rs2: Reg },
    CSpecialRw { rd: Reg, rs1: Reg, scr: u8 },
}

impl Instruction {
    /// True for instructions that access data memory.
    pub fn is_memory(&self) -> bool {
        matches!(
            self,
            Instruction::Load { .. }
                | Instruction::Store { .. }
                | Instruction::Clc { .. }
                | Instruction::Csc { .. }
        )
    }
}

fn bits(word: u32, hi: u32, lo: u32) -> u32 {
    (word >> lo) & ((1u32 << (hi - lo + 1)) - 1)
}

fn sext(value: u32, width: u32) -> i32 {
    let shift = 32 - width;
    ((value << shift) as i32) >> shift
}

pub fn imm_i(w: u32) -> i32 {
    (w as i32) >> 20
}

pub fn imm_s(w: u32) -> i32 {
    sext((bits(w, 31, 25) << 5) | bits(w, 11, 7), 12)
}

pub fn imm_b(w: u32) -> i32 {
    sext(
        (bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) | (bits(w, 11, 8) << 1),
        13,
    )
}

pub fn imm_j(w: u32) -> i32 {
    sext(
        (bits(w, 31, 31) << 20)
            | (bits(w, 19, 12) << 12)
            | (bits(w, 20, 20) << 11)
            | (bits(w, 30, 21) << 1),
        21,
    )
}

fn reg(field: u32) -> Option<Reg> {
    (field < 16).then_some(field as Reg)
}

/// Decodes `word`, returning `None` for anything outside the subset.
pub fn decode(word: u32) -> Option<Instruction> {
    use Instruction as I;
    let op = word & 0x7F;
    let rd_f = bits(word, 11, 7);
    let f3 = bits(word, 14, 12);
    let rs1_f = bits(word, 19, 15);
    let rs2_f = bits(word, 24, 20);
    let f7 = bits(word, 31, 25);
    match op {
        opcode::LUI => Some(I::Lui { rd: reg(rd_f)?, imm: word & 0xFFFF_F000 }),
        opcode::AUIPCC => Some(I::Auipcc { rd: reg(rd_f)?, imm: word & 0xFFFF_F000 }),
        opcode::CJAL => Some(I::Cjal { rd: reg(rd_f)?, imm: imm_j(word) }),
        opcode::CJALR if f3 == 0 => {
            Some(I::Cjalr { rd: reg(rd_f)?, rs1: reg(rs1_f)?, imm: imm_i(word) })
        }
        opcode::BRANCH => {
            let op = match f3 {
                0 => BranchOp::Beq,
                1 => BranchOp::Bne,
                4 => BranchOp::Blt,
                5 => BranchOp::Bge,
                6 => BranchOp::Bltu,
                7 => BranchOp::Bgeu,
                _ => return None,
            };
            Some(I::Branch { op, rs1: reg(rs1_f)?, rs2: reg(rs2_f)?, imm: imm_b(word) })
        }
        opcode::LOAD => {
            let (rd, rs1, imm) = (reg(rd_f)?, reg(rs1_f)?, imm_i(word));
            let op = match f3 {
                0 => LoadOp::Lb,
                1 => LoadOp::Lh,
                2 => LoadOp::Lw,
                3 => return Some(I::Clc { rd, rs1, imm }),
                4 => LoadOp::Lbu,
                5 => LoadOp::Lhu,
                _ => return None,
            };
            Some(I::Load { op, rd, rs1, imm })
        }
        opcode::STORE => {
            let (rs1, rs2, imm) = (reg(rs1_f)?, reg(rs2_f)?, imm_s(word));
            let op = match f3 {
                0 => StoreOp::Sb,
                1 => StoreOp::Sh,
                2 => StoreOp::Sw,
                3 => return Some(I::Csc { rs1, rs2, imm }),
                _ => return None,
            };
            Some(I::Store { op, rs1, rs2, imm })
        }
        opcode::OP_IMM => {
            let (rd, rs1, imm) = (reg(rd_f)?, reg(rs1_f)?, imm_i(word));
            let op = match f3 {
                0 => AluOp::Add,
                2 => AluOp::Slt,
                3 => AluOp::Sltu,
                4 => AluOp::Xor,
                6 => AluOp::Or,
                7 => AluOp::And,
                1 if f7 == 0 => return Some(I::OpImm { op: AluOp::Sll, rd, rs1, imm: rs2_f as i32 }),
                5 if f7 == 0 => return Some(I::OpImm { op: AluOp::Srl, rd, rs1, imm: rs2_f as i32 }),
                5 if f7 == 0x20 => {
                    return Some(I::OpImm { op: AluOp::Sra, rd, rs1, imm: rs2_f as i32 })
                }
                _ => return None,
            };
            Some(I::OpImm { op, rd, rs1, imm })
        }
        opcode::OP => {
            let op = match (f7, f3) {
                (0, 0) => AluOp::Add,
                (0x20, 0) => AluOp::Sub,
                (0, 1) => AluOp::Sll,
                (0, 2) => AluOp::Slt,
                (0, 3) => AluOp::Sltu,
                (0, 4) => AluOp::Xor,
                (0, 5) => AluOp::Srl,
                (0x20, 5) => AluOp::Sra,
                (0, 6) => AluOp::Or,
                (0, 7) => AluOp::And,
                _ => return None,
            };
            Some(I::Op { op, rd: reg(rd_f)?, rs1: reg(rs1_f)?, rs2: reg(rs2_f)? })
        }
        opcode::SYSTEM => decode_system(word, rd_f, f3, rs1_f),
        opcode::CHERI if f3 == 0 => decode_cheri(word, rd_f, rs1_f, rs2_f, f7),
        _ => None,
    }
}

fn decode_system(word: u32, rd_f: u32, f3: u32, rs1_f: u32) -> Option<Instruction> {
    use Instruction as I;
    match word {
        0x0000_0073 => return Some(I::Ecall),
        0x0010_0073 => return Some(I::Ebreak),
        0x3020_0073 => return Some(I::Mret),
        0x1050_0073 => return Some(I::Wfi),
        _ => {}
    }
    let csr = (word >> 20) as u16;
    if !matches!(csr, CSR_MSTATUS | CSR_MCAUSE | CSR_MTVAL) {
        return None;
    }
    let (op, src) = match f3 {
        1 => (CsrOp::Rw, CsrSrc::Reg(reg(rs1_f)?)),
        2 => (CsrOp::Rs, CsrSrc::Reg(reg(rs1_f)?)),
        3 => (CsrOp::Rc, CsrSrc::Reg(reg(rs1_f)?)),
        5 => (CsrOp::Rw, CsrSrc::Imm(rs1_f as u8)),
        6 => (CsrOp::Rs, CsrSrc::Imm(rs1_f as u8)),
        7 => (CsrOp::Rc, CsrSrc::Imm(rs1_f as u8)),
        _ => return None,
    };
    Some(I::Csr { op, rd: reg(rd_f)?, src, csr })
}

fn decode_cheri(_word: u32, rd_f: u32, rs1_f: u32, rs2_f: u32, f7: u32) -> Option<Instruction> {
    use cheri_funct7 as f;
    use Instruction as I;
    let rd = reg(rd_f)?;
    let rs1 = reg(rs1_f)?;
    if f7 == f::TWO_OP {
        use cheri_two_op as t;
        let op = match rs2_f {
            t::CGETPERM => CGetOp::Perm,
            t::CGETTYPE => CGetOp::Type,
            t::CGETBASE => CGetOp::Base,
            t::CGETLEN => CGetOp::Len,
            t::CGETTAG => CGetOp::Tag,
            t::CGETTOP => CGetOp::Top,
            t::CMOVE => return Some(I::CMove { rd, rs1 }),
            _ => return None,
        };
        return Some(I::CGet { op, rd, rs1 });
    }
    if f7 == f::CSPECIALRW {
        let scr = rs2_f as u8;
        return matches!(scr, SCR_MTCC | SCR_MEPCC).then_some(I::CSpecialRw { rd, rs1, scr });
    }
    let op = match f7 {
        f::CSETBOUNDS => CapOp::SetBounds,
        f::CSETBOUNDSEXACT => CapOp::SetBoundsExact,
        f::CSEAL => CapOp::Seal,
        f::CUNSEAL => CapOp::Unseal,
        f::CANDPERM => CapOp::AndPerm,
        f::CSETADDR => CapOp::SetAddr,
        f::CINCADDR => CapOp::IncAddr,
        f::CSEQX => CapOp::Seqx,
        _ => return None,
    };
    Some(I::Cap { op, rd, rs1, rs2: reg(rs2_f)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_nop() {
        assert_eq!(
            decode(0x0000_0013),
            Some(Instruction::OpImm { op: AluOp::Add, rd: 0, rs1: 0, imm: 0 })
        );
    }

    #[test]
    fn rv32e_register_bound() {
        // ADDI x17, x0, 0
        assert_eq!(decode(0x0000_0013 | (17 << 7)), None);
    }

    #[test]
    fn zero_word_is_illegal() {
        assert_eq!(decode(0), None);
    }

    #[test]
    fn immediates() {
        // BEQ x0, x0, -4: imm[12|10:5] = 0x7F, imm[4:1|11] = 0x1D
        assert_eq!(imm_b(0xFE00_0EE3), -4);
        // CJAL x0, -8
        assert_eq!(imm_j(0xFF9F_F06F), -8);
        // SW x0, -1(x0)
        assert_eq!(imm_s(0xFE00_2FA3), -1);
    }
}
