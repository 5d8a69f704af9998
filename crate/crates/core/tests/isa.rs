use cheriot_core::capability::*;
use cheriot_core::check::{gen_program, GenWeights};
use cheriot_core::isa::decode::{AluOp, CapOp, LoadOp, StoreOp};
use cheriot_core::isa::*;
use proptest::prelude::*;

const CFG: SpecConfig = SpecConfig { ebreak_mtval: EbreakMtval::Zero };

fn start() -> ArchState {
    let mut s = ArchState::reset(Memory::new(0x5eed));
    s.mtcc = Capability::root_executable(0x8008_0000);
    s
}

fn step(s: &ArchState, insn: Instruction) -> StepResult {
    let i = fill_inputs(s, &ArchInput { instr_bits: encode(&insn), ..ArchInput::default() }, &CFG);
    spec_step(s, &i, &CFG)
}

fn with_reg(mut s: ArchState, r: u8, c: Capability) -> ArchState {
    s.set_reg(r, c);
    s
}

#[test]
fn addi_from_reset() {
    let s = start();
    let r = step(&s, Instruction::OpImm { op: AluOp::Add, rd: 1, rs1: 0, imm: 5 });
    assert_eq!(r.state.reg(1), Capability::from_int(5));
    assert_eq!(r.state.pc(), s.pc() + 4);
    assert_eq!(r.out, MemEventPlan::default());
    assert_eq!(r.event, StepEvent::Retired);
}

#[test]
fn csc_without_store_permission_traps_before_memory() {
    let ro = and_perms(&Capability::root_memory(0x100), PermissionSet::LOAD | PermissionSet::CAP_ACCESS);
    let s = with_reg(start(), 3, ro);
    let r = step(&s, Instruction::Csc { rs1: 3, rs2: 1, imm: 0 });
    assert!(matches!(r.event, StepEvent::Trap { cause: ExceptionCause::PermissionViolation, .. }));
    assert_eq!(r.state.mepcc.address, s.pc());
    assert!(r.out.requests.is_empty());
    assert_eq!(r.state.pc(), s.mtcc.address);
}

#[test]
fn clc_reads_two_words() {
    let s = with_reg(start(), 3, Capability::root_memory(0x208));
    let r = step(&s, Instruction::Clc { rd: 4, rs1: 3, imm: 0 });
    assert_eq!(r.out.kind, MemKind::Read);
    let addrs: Vec<u32> = r.out.requests.iter().map(|q| q.addr).collect();
    assert_eq!(addrs, vec![0x208, 0x20C]);
}

#[test]
fn memory_plan_examples() {
    let s = with_reg(start(), 3, Capability::root_memory(0x8000_0002));
    let r = step(&s, Instruction::Store { op: StoreOp::Sw, rs1: 3, rs2: 0, imm: 0 });
    let reqs: Vec<(u32, u8, bool)> = r.out.requests.iter().map(|q| (q.addr, q.be, q.we)).collect();
    assert_eq!(reqs, vec![(0x8000_0000, 0b1100, true), (0x8000_0004, 0b0011, true)]);
    let s = with_reg(start(), 3, Capability::root_memory(0x100));
    let r = step(&s, Instruction::Load { op: LoadOp::Lw, rd: 4, rs1: 3, imm: 0 });
    assert_eq!(r.out.kind, MemKind::Read);
    assert_eq!(r.out.requests.len(), 1);
    assert_eq!(r.out.requests[0].be, 0xF);
    let alu = ArchInput { instr_bits: encode(&Instruction::Cap { op: CapOp::SetAddr, rd: 4, rs1: 1, rs2: 0 }), ..Default::default() };
    assert_eq!(spec_out(&start(), &alu, &CFG), MemEventPlan::default());
}

#[test]
fn decode_examples() {
    assert_eq!(decode(0x0000_0013), Some(Instruction::OpImm { op: AluOp::Add, rd: 0, rs1: 0, imm: 0 }));
    assert_eq!(decode(0x0000_0013 | (17 << 7)), None);
    assert_eq!(decode(0), None);
}

#[test]
fn clear_rules_only_remove_tags() {
    let s = start();
    let i = fill_inputs(&s, &ArchInput { instr_bits: encode(&Instruction::Cjalr { rd: 1, rs1: 1, imm: 0 }), ..Default::default() }, &CFG);
    let s = with_reg(s, 1, Capability::root_executable(0x8000_0100));
    let plain = spec_step(&s, &i, &CFG);
    assert_eq!(cspec_step(&s, &i, &CFG, &[]).state, plain.state);
    let link = cspec_step(&s, &i, &CFG, &[ClearRule::CjalrLink]);
    assert!(state_stricter_than(&link.state, &plain.state));
    assert!(plain.state.reg(1).tag && !link.state.reg(1).tag);
    assert_eq!(first_divergence(&link.state, &plain.state, false).map(|d| d.starts_with("x1")), Some(true));
    let all = cspec_step(&s, &i, &CFG, &[ClearRule::AllTags]);
    assert!(all.state.tagged_caps().is_empty());
    assert!(state_stricter_than(&all.state, &plain.state));
}

#[test]
fn stricter_than_on_states() {
    let s = with_reg(start(), 5, Capability::root_memory(4));
    assert!(state_stricter_than(&s, &s));
    let cleared = with_reg(s.clone(), 5, Capability::root_memory(4).with_tag(false));
    assert!(state_stricter_than(&cleared, &s));
    assert!(!state_stricter_than(&s, &cleared));
    let mut other = s.clone();
    other.mtval = 9;
    assert!(!state_stricter_than(&other, &s));
}

fn tagged_wellformed(s: &ArchState) -> bool {
    s.tagged_caps().iter().all(|(_, c)| is_mem_wellformed(c))
}

/// Steps a generated program, checking the per-step properties.
fn walk(seed: u64, len: usize, irq_every: usize) -> Result<(usize, usize), TestCaseError> {
    let (mut derived, mut traps) = (0, 0);
    let prog = gen_program(seed, len, &GenWeights::cap_heavy());
    let mut s = start();
    for (k, &w) in prog.iter().enumerate() {
        let i = fill_inputs(&s, &ArchInput { instr_bits: w, irq_pending: irq_every > 0 && k % irq_every == 0, ..Default::default() }, &CFG);
        let r = spec_step(&s, &i, &CFG);
        let again = spec_step(&s, &i, &CFG);
        prop_assert_eq!(&r.state, &again.state);
        prop_assert_eq!(&r.out, &again.out);
        prop_assert_eq!(r.state.reg(0), Capability::NULL);
        prop_assert!(tagged_wellformed(&r.state), "step {k} broke well-formedness");
        if let StepEvent::Trap { .. } | StepEvent::Interrupt = r.event {
            traps += 1;
            prop_assert_eq!(&r.state.regs, &s.regs);
            prop_assert_eq!(&r.state.mem, &s.mem);
            prop_assert!(r.out.requests.iter().all(|q| !q.we));
        }
        // Tagged results come from the pre-state, the loaded words, or a
        // recorded derivation whose parent covers them.
        let inputs: Vec<Capability> = s.tagged_caps().into_iter().map(|(_, c)| c).chain(
            i.mem_read_data.chunks(2).filter(|p| p.len() == 2 && p[0].1).map(|p| {
                Capability::from_bits(u64::from(p[0].0) | (u64::from(p[1].0) << 32), true)
            }),
        ).collect();
        for (slot, c) in r.state.tagged_caps() {
            if inputs.iter().any(|x| x.to_bits() == c.to_bits()) {
                continue;
            }
            let d = r.derivations.iter().find(|d| d.dest == slot);
            prop_assert!(d.is_some(), "step {k}: {slot} has no derivation");
            derived += 1;
            let parent = s.slot(d.unwrap().parent);
            prop_assert!(parent.tag);
            prop_assert!(bounds_of(&c).is_subset_of(&bounds_of(&parent)));
            prop_assert!(perms_decode(c.perms).is_subset_of(perms_decode(parent.perms)));
        }
        s = r.state;
    }
    Ok((derived, traps))
}

#[test]
fn walks_exercise_derivations_and_traps() {
    let (mut d, mut t) = (0, 0);
    for seed in 0..8 {
        let (a, b) = walk(seed, 200, 17).unwrap();
        d += a;
        t += b;
    }
    assert!(d > 50 && t > 5, "derived {d}, traps {t}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spec_step_invariants(seed in any::<u64>(), irq_every in 0usize..40) {
        walk(seed, 200, irq_every)?;
    }
}
