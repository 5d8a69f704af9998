//! Mutation registry and one directed program per mutation.

use crate::capability::PermissionSet;
use crate::isa::decode::{AluOp, CapOp, LoadOp};
use crate::isa::{encode, Instruction};
use crate::micro::{BuildConfig, MutationId, TimingSchedule};

use super::harness::{check_run, RunSpec};
use super::{Checker, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("build already carries mutation {0}; apply one at a time")]
    AlreadyMutated(MutationId),
}

/// Returns `cfg` with mutation `id` applied.
pub fn apply_mutation(id: MutationId, cfg: BuildConfig) -> Result<BuildConfig, MutationError> {
    match cfg.mutation {
        Some(m) => Err(MutationError::AlreadyMutated(m)),
        None => Ok(BuildConfig { mutation: Some(id), ..cfg }),
    }
}

/// A checked-in program that exposes one mutation.
#[derive(Clone, Debug)]
pub struct DirectedTest {
    pub name: &'static str,
    pub target: MutationId,
    /// Unmutated run configuration.
    pub spec: RunSpec,
    /// Checker expected to flag the mutation.
    pub detector: Checker,
}

impl DirectedTest {
    /// Verdicts of this program on `build`.
    pub fn verdicts(&self, build: BuildConfig) -> Vec<Verdict> {
        let spec = RunSpec { build, ..self.spec.clone() };
        check_run(&spec).expect("directed schedules are valid").1
    }

    /// Checkers that fail on `build`.
    pub fn detected_by(&self, build: BuildConfig) -> Vec<Checker> {
        self.verdicts(build).into_iter().filter(|v| !v.passed()).map(|v| v.checker).collect()
    }
}

fn words(insns: &[Instruction]) -> Vec<u32> {
    insns.iter().map(encode).collect()
}

fn addi(rd: u8, rs1: u8, imm: i32) -> Instruction {
    Instruction::OpImm { op: AluOp::Add, rd, rs1, imm }
}

fn cap(op: CapOp, rd: u8, rs1: u8, rs2: u8) -> Instruction {
    Instruction::Cap { op, rd, rs1, rs2 }
}

fn lui(rd: u8, imm: u32) -> Instruction {
    Instruction::Lui { rd, imm }
}

fn spec(body: Vec<u32>, schedule: TimingSchedule, max_steps: usize) -> RunSpec {
    let mut s = RunSpec::new(body, schedule, BuildConfig::default());
    s.max_steps = max_steps;
    s.mem_seed = 0x5eed;
    s
}

/// Start of the executable region used by the M2 program.
pub const M2_REGION: u32 = 0xFFF6_0000;

pub fn directed_test(id: MutationId) -> DirectedTest {
    use Instruction as I;
    match id {
        // Word load two bytes below the top of the full address space.
        MutationId::M1 => DirectedTest {
            name: "lw_top_of_full_space",
            target: id,
            spec: spec(
                words(&[
                    addi(3, 0, -2),
                    cap(CapOp::SetAddr, 4, 1, 3),
                    I::Load { op: LoadOp::Lw, rd: 5, rs1: 4, imm: 0 },
                ]),
                TimingSchedule::fixed(1, 1),
                40,
            ),
            detector: Checker::Follower,
        },
        // Jump out of a small executable region to an unrepresentable
        // address; the fetch fault saves pcc into mepcc.
        MutationId::M2 => {
            let mut s = spec(
                words(&[
                    I::Auipcc { rd: 3, imm: 0 },
                    lui(4, M2_REGION),
                    cap(CapOp::SetAddr, 5, 3, 4),
                    lui(6, 0x0004_0000),
                    cap(CapOp::SetBounds, 7, 5, 6),
                    I::Cjalr { rd: 0, rs1: 7, imm: 0 },
                ]),
                TimingSchedule::fixed(1, 1),
                30,
            );
            s.extra_code = vec![(M2_REGION, words(&[I::Cjal { rd: 0, imm: 0x8_0000 }]))];
            DirectedTest { name: "fetch_fault_unrepresentable_pc", target: id, spec: s, detector: Checker::Dti }
        }
        // Store an executable capability and load it back through a
        // read-only authority without global.
        MutationId::M3 => DirectedTest {
            name: "clc_permission_strip",
            target: id,
            spec: spec(
                words(&[
                    I::Auipcc { rd: 3, imm: 0 },
                    addi(4, 0, 0x100),
                    cap(CapOp::SetAddr, 5, 1, 4),
                    I::Csc { rs1: 5, rs2: 3, imm: 0 },
                    addi(6, 0, i32::from((PermissionSet::LOAD | PermissionSet::CAP_ACCESS).bits())),
                    cap(CapOp::AndPerm, 7, 5, 6),
                    I::Clc { rd: 8, rs1: 7, imm: 0 },
                ]),
                TimingSchedule::fixed(2, 3),
                40,
            ),
            detector: Checker::Monotonicity,
        },
        // Full-space exponent capability moved below its base, then
        // narrowed there.
        MutationId::M4 => DirectedTest {
            name: "set_bounds_below_base",
            target: id,
            spec: spec(
                words(&[
                    lui(3, 0x1000_0000),
                    cap(CapOp::SetAddr, 4, 1, 3),
                    lui(5, 0xF000_0000),
                    cap(CapOp::SetBounds, 6, 4, 5),
                    lui(7, 0x0500_0000),
                    cap(CapOp::SetAddr, 8, 6, 7),
                    addi(9, 0, 16),
                    cap(CapOp::SetBounds, 10, 8, 9),
                ]),
                TimingSchedule::fixed(1, 1),
                40,
            ),
            detector: Checker::Monotonicity,
        },
        // Illegal CLC encoding whose orphan response meets the handler's
        // first register write.
        MutationId::M5 => {
            let illegal_clc = 0x0000_3003 | (16 << 7) | (4 << 15);
            let mut body = words(&[addi(3, 0, 0x100), cap(CapOp::SetAddr, 4, 1, 3)]);
            body.push(illegal_clc);
            body.extend(words(&[addi(5, 0, 1), addi(6, 0, 2)]));
            DirectedTest {
                name: "illegal_clc_orphan_response",
                target: id,
                spec: spec(body, TimingSchedule::fixed(1, 1), 40),
                detector: Checker::Continuity,
            }
        }
        // Address move inside the representable range that changes the
        // base correction.
        MutationId::M6 => DirectedTest {
            name: "set_address_stale_corrections",
            target: id,
            spec: spec(
                words(&[
                    lui(3, 0x1000),
                    addi(3, 3, 0x80),
                    cap(CapOp::SetAddr, 4, 1, 3),
                    addi(5, 0, 0x100),
                    cap(CapOp::SetBounds, 6, 4, 5),
                    addi(7, 3, 0x180),
                    cap(CapOp::SetAddr, 8, 6, 7),
                ]),
                TimingSchedule::fixed(1, 1),
                40,
            ),
            detector: Checker::Dti,
        },
    }
}

/// `matrix[i][j]`: the program for mutation `j` fails some checker on the
/// build with mutation `i`.
pub fn detection_matrix() -> [[bool; 6]; 6] {
    let tests: Vec<DirectedTest> = MutationId::ALL.iter().map(|&m| directed_test(m)).collect();
    let mut out = [[false; 6]; 6];
    for (i, &m) in MutationId::ALL.iter().enumerate() {
        for (j, t) in tests.iter().enumerate() {
            out[i][j] = !t.detected_by(BuildConfig::with_mutation(m)).is_empty();
        }
    }
    out
}
