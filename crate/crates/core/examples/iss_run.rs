//! Steps a short program through the architectural model and prints every
//! step's effect, including a trap on an out-of-bounds load.

use cheriot_core::capability::{bounds_of, Capability};
use cheriot_core::isa::decode::{AluOp, CapOp, LoadOp, StoreOp};
use cheriot_core::isa::*;

fn main() {
    let cfg = SpecConfig { ebreak_mtval: EbreakMtval::Zero };
    let mut s = ArchState::reset(Memory::new(7));
    s.mtcc = Capability::root_executable(0x8008_0000);
    s.set_reg(2, Capability::root_memory(0x1000));

    let program = [
        Instruction::OpImm { op: AluOp::Add, rd: 5, rs1: 0, imm: 16 },
        Instruction::Cap { op: CapOp::SetBounds, rd: 3, rs1: 2, rs2: 5 },
        Instruction::OpImm { op: AluOp::Add, rd: 6, rs1: 0, imm: 0x55 },
        Instruction::Store { op: StoreOp::Sw, rs1: 3, rs2: 6, imm: 4 },
        Instruction::Load { op: LoadOp::Lw, rd: 7, rs1: 3, imm: 4 },
        Instruction::Csc { rs1: 3, rs2: 3, imm: 8 },
        Instruction::Load { op: LoadOp::Lw, rd: 8, rs1: 3, imm: 16 },
    ];

    for insn in program {
        let i = fill_inputs(&s, &ArchInput { instr_bits: encode(&insn), ..ArchInput::default() }, &cfg);
        let r = spec_step(&s, &i, &cfg);
        println!("pc={:#010x} {insn:?}", s.pc());
        println!("    event={:?} requests={}", r.event, r.out.requests.len());
        for q in &r.out.requests {
            println!("    {} addr={:#010x} be={:04b}", if q.we { "write" } else { "read " }, q.addr, q.be);
        }
        s = r.state;
    }

    let c3 = s.reg(3);
    println!("x3 bounds {:?} tag={}", bounds_of(&c3), c3.tag);
    println!("x7={:#x} mcause={} mtval={:#x} pc={:#010x}", s.reg(7).address, s.mcause, s.mtval, s.pc());
}
