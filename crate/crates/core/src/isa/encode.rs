//! Assembler for [`Instruction`]; the inverse of [`decode`](super::decode).

use super::decode::{
    cheri_funct7 as f7, cheri_two_op as two, opcode, AluOp, BranchOp, CGetOp, CapOp, CsrOp,
    CsrSrc, Instruction, LoadOp, StoreOp,
};

fn r_type(op: u32, rd: u8, f3: u32, rs1: u8, rs2: u32, f7: u32) -> u32 {
    (f7 << 25) | (rs2 << 20) | (u32::from(rs1) << 15) | (f3 << 12) | (u32::from(rd) << 7) | op
}

fn i_type(op: u32, rd: u8, f3: u32, rs1: u8, imm: i32) -> u32 {
    ((imm as u32 & 0xFFF) << 20) | (u32::from(rs1) << 15) | (f3 << 12) | (u32::from(rd) << 7) | op
}

fn s_type(op: u32, f3: u32, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    (((imm >> 5) & 0x7F) << 25)
        | (u32::from(rs2) << 20)
        | (u32::from(rs1) << 15)
        | (f3 << 12)
        | ((imm & 0x1F) << 7)
        | op
}

fn b_type(f3: u32, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    (((imm >> 12) & 1) << 31)
        | (((imm >> 5) & 0x3F) << 25)
        | (u32::from(rs2) << 20)
        | (u32::from(rs1) << 15)
        | (f3 << 12)
        | (((imm >> 1) & 0xF) << 8)
        | (((imm >> 11) & 1) << 7)
        | opcode::BRANCH
}

fn j_type(rd: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    (((imm >> 20) & 1) << 31)
        | (((imm >> 1) & 0x3FF) << 21)
        | (((imm >> 11) & 1) << 20)
        | (((imm >> 12) & 0xFF) << 12)
        | (u32::from(rd) << 7)
        | opcode::CJAL
}

fn alu_f3(op: AluOp) -> u32 {
    match op {
        AluOp::Add | AluOp::Sub => 0,
        AluOp::Sll => 1,
        AluOp::Slt => 2,
        AluOp::Sltu => 3,
        AluOp::Xor => 4,
        AluOp::Srl | AluOp::Sra => 5,
        AluOp::Or => 6,
        AluOp::And => 7,
    }
}

/// Encodes `insn`. Immediates are truncated to their field widths.
pub fn encode(insn: &Instruction) -> u32 {
    use Instruction as I;
    match *insn {
        I::Lui { rd, imm } => (imm & 0xFFFF_F000) | (u32::from(rd) << 7) | opcode::LUI,
        I::Auipcc { rd, imm } => (imm & 0xFFFF_F000) | (u32::from(rd) << 7) | opcode::AUIPCC,
        I::Cjal { rd, imm } => j_type(rd, imm),
        I::Cjalr { rd, rs1, imm } => i_type(opcode::CJALR, rd, 0, rs1, imm),
        I::Branch { op, rs1, rs2, imm } => {
            let f3 = match op {
                BranchOp::Beq => 0,
                BranchOp::Bne => 1,
                BranchOp::Blt => 4,
                BranchOp::Bge => 5,
                BranchOp::Bltu => 6,
                BranchOp::Bgeu => 7,
            };
            b_type(f3, rs1, rs2, imm)
        }
        I::Load { op, rd, rs1, imm } => {
            let f3 = match op {
                LoadOp::Lb => 0,
                LoadOp::Lh => 1,
                LoadOp::Lw => 2,
                LoadOp::Lbu => 4,
                LoadOp::Lhu => 5,
            };
            i_type(opcode::LOAD, rd, f3, rs1, imm)
        }
        I::Store { op, rs1, rs2, imm } => {
            let f3 = match op {
                StoreOp::Sb => 0,
                StoreOp::Sh => 1,
                StoreOp::Sw => 2,
            };
            s_type(opcode::STORE, f3, rs1, rs2, imm)
        }
        I::OpImm { op, rd, rs1, imm } => match op {
            AluOp::Sll | AluOp::Srl => i_type(opcode::OP_IMM, rd, alu_f3(op), rs1, imm & 0x1F),
            AluOp::Sra => i_type(opcode::OP_IMM, rd, 5, rs1, (imm & 0x1F) | 0x400),
            _ => i_type(opcode::OP_IMM, rd, alu_f3(op), rs1, imm),
        },
        I::Op { op, rd, rs1, rs2 } => {
            let f7 = if matches!(op, AluOp::Sub | AluOp::Sra) { 0x20 } else { 0 };
            r_type(opcode::OP, rd, alu_f3(op), rs1, u32::from(rs2), f7)
        }
        I::Csr { op, rd, src, csr } => {
            let (base, field) = match src {
                CsrSrc::Reg(r) => (0, r),
                CsrSrc::Imm(u) => (4, u & 0x1F),
            };
            let f3 = base
                + match op {
                    CsrOp::Rw => 1,
                    CsrOp::Rs => 2,
                    CsrOp::Rc => 3,
                };
            (u32::from(csr) << 20)
                | (u32::from(field) << 15)
                | (f3 << 12)
                | (u32::from(rd) << 7)
                | opcode::SYSTEM
        }
        I::Ecall => 0x0000_0073,
        I::Ebreak => 0x0010_0073,
        I::Mret => 0x3020_0073,
        I::Wfi => 0x1050_0073,
        I::Clc { rd, rs1, imm } => i_type(opcode::LOAD, rd, 3, rs1, imm),
        I::Csc { rs1, rs2, imm } => s_type(opcode::STORE, 3, rs1, rs2, imm),
        I::CGet { op, rd, rs1 } => {
            let sel = match op {
                CGetOp::Perm => two::CGETPERM,
                CGetOp::Type => two::CGETTYPE,
                CGetOp::Base => two::CGETBASE,
                CGetOp::Len => two::CGETLEN,
                CGetOp::Tag => two::CGETTAG,
                CGetOp::Top => two::CGETTOP,
            };
            r_type(opcode::CHERI, rd, 0, rs1, sel, f7::TWO_OP)
        }
        I::CMove { rd, rs1 } => r_type(opcode::CHERI, rd, 0, rs1, two::CMOVE, f7::TWO_OP),
        I::Cap { op, rd, rs1, rs2 } => {
            let f = match op {
                CapOp::SetAddr => f7::CSETADDR,
                CapOp::IncAddr => f7::CINCADDR,
                CapOp::SetBounds => f7::CSETBOUNDS,
                CapOp::SetBoundsExact => f7::CSETBOUNDSEXACT,
                CapOp::Seal => f7::CSEAL,
                CapOp::Unseal => f7::CUNSEAL,
                CapOp::AndPerm => f7::CANDPERM,
                CapOp::Seqx => f7::CSEQX,
            };
            r_type(opcode::CHERI, rd, 0, rs1, u32::from(rs2), f)
        }
        I::CSpecialRw { rd, rs1, scr } => {
            r_type(opcode::CHERI, rd, 0, rs1, u32::from(scr), f7::CSPECIALRW)
        }
    }
}
