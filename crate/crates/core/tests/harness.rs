use cheriot_core::check::liveness::LatencyBounds;
use cheriot_core::check::{
    b_max, check_run, directed_test, gen_program, worst_case_gap, Checker, GenWeights, InsnClass, RunSpec,
};
use cheriot_core::isa::decode::{AluOp, CapOp};
use cheriot_core::isa::{encode, Instruction};
use cheriot_core::micro::{BuildConfig, MutationId, TimingSchedule};

fn failures(spec: &RunSpec) -> Vec<String> {
    let (_, v) = check_run(spec).unwrap();
    v.iter().filter(|x| !x.passed()).map(|x| x.to_string()).collect()
}

#[test]
fn nop_program_passes_with_no_memory_events() {
    let nop = encode(&Instruction::OpImm { op: AluOp::Add, rd: 0, rs1: 0, imm: 0 });
    let spec = RunSpec::new(vec![nop; 16], TimingSchedule::fixed(3, 2), BuildConfig::default());
    let (out, v) = check_run(&spec).unwrap();
    assert!(v.iter().all(|x| x.passed()), "{v:#?}");
    // Prelude and body all retire, none touch memory.
    assert_eq!(out.records.len(), 5 + 16);
    assert!(out.records.iter().all(|r| r.window.iter().all(|p| !p.req)));
}

#[test]
fn random_programs_pass_unmutated() {
    for seed in 0..40u64 {
        let body = gen_program(seed, 128, &GenWeights::default());
        let mut sched = TimingSchedule::fixed(1 + (seed % 10) as u32, 1 + (seed * 7 % 10) as u32);
        sched.fetch_delay = vec![0, 3, 1];
        sched.wfi_wake = vec![1 + (seed % 16) as u32];
        sched.irq_cycles = vec![50, 300, 700];
        let mut spec = RunSpec::new(body, sched, BuildConfig::default());
        spec.seed = seed;
        let f = failures(&spec);
        assert!(f.is_empty(), "seed {seed}: {f:#?}");
    }
}

#[test]
fn directed_tests_pass_unmutated_and_detect_their_mutation() {
    for m in MutationId::ALL {
        let t = directed_test(m);
        let clean = t.detected_by(BuildConfig::default());
        assert!(clean.is_empty(), "{m} program fails unmutated: {clean:?}");
        let hit = t.detected_by(BuildConfig::with_mutation(m));
        assert!(hit.contains(&t.detector), "{m}: expected {} in {hit:?}", t.detector);
    }
}

#[test]
fn m2_and_m6_are_dti_failures() {
    for m in [MutationId::M2, MutationId::M6] {
        let v = directed_test(m).verdicts(BuildConfig::with_mutation(m));
        let dti = v.iter().find(|x| x.checker == Checker::Dti).unwrap();
        assert!(!dti.passed(), "{m}");
    }
}

fn addi(rd: u8, rs1: u8, imm: i32) -> u32 {
    encode(&Instruction::OpImm { op: AluOp::Add, rd, rs1, imm })
}

#[test]
fn alu_stream_retires_every_cycle() {
    let body: Vec<u32> = (0..32).map(|k| addi(3 + (k % 8) as u8, 0, k)).collect();
    let (out, v) = check_run(&RunSpec::new(body, TimingSchedule::fixed(1, 1), BuildConfig::default())).unwrap();
    assert!(v.iter().all(|x| x.passed()));
    let body_gaps = &out.gaps[6..out.gaps.len() - 1];
    assert!(body_gaps.iter().all(|&g| g == 1), "{body_gaps:?}");
}

#[test]
fn csc_after_wfi_meets_the_worst_case_bound() {
    let body = vec![
        addi(3, 0, 0x100),
        encode(&Instruction::Cap { op: CapOp::SetAddr, rd: 4, rs1: 1, rs2: 3 }),
        encode(&Instruction::Wfi),
        encode(&Instruction::Csc { rs1: 4, rs2: 1, imm: 0 }),
    ];
    let mut sched = TimingSchedule::fixed(10, 10);
    sched.wfi_wake = vec![16];
    let (out, v) = check_run(&RunSpec::new(body, sched, BuildConfig::default())).unwrap();
    assert!(v.iter().all(|x| x.passed()), "{v:#?}");
    let bound = worst_case_gap(&LatencyBounds::default(), InsnClass::Csc);
    assert_eq!(out.max_gap(), u64::from(bound));
    assert_eq!(out.max_gap(), b_max());
}
