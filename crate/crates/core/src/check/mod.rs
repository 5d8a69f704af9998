//! Verification harness: runs the microcore against its environment and
//! checks it against the architectural specification.

pub mod dti;
pub mod follower;
pub mod gen;
pub mod harness;
pub mod liveness;
pub mod minimize;
pub mod mutation;
pub mod ports;
pub mod trace_checks;

use std::fmt;
use std::str::FromStr;

pub use dti::check_dti;
pub use follower::Follower;
pub use gen::{gen_program, GenWeights};
pub use harness::{build_image, check_run, run, verdicts, RunOutcome, RunSpec, SpecEnRecord};
pub use liveness::{b_max, check_liveness, worst_case_gap, InsnClass};
pub use minimize::minimize;
pub use mutation::{apply_mutation, detection_matrix, directed_test, DirectedTest, MutationError};
pub use ports::expected_port_events;
pub use trace_checks::{check_continuity, check_monotonicity, check_observational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Checker {
    Dti,
    Follower,
    Continuity,
    Observational,
    Monotonicity,
    Liveness,
    /// Request/grant/response handshake rules.
    Protocol,
    /// Dequeued fetch entries match their enqueued addresses.
    FetchFifo,
    /// Tagged capabilities written to memory are well formed.
    MemWellformed,
    /// Architectural registers do not move while EX stalls on memory.
    StallPurity,
    /// Load writeback equals the value predicted from the scheduled response.
    LsuAlternative,
}

impl Checker {
    pub const ALL: [Checker; 11] = [
        Checker::Dti,
        Checker::Follower,
        Checker::Continuity,
        Checker::Observational,
        Checker::Monotonicity,
        Checker::Liveness,
        Checker::Protocol,
        Checker::FetchFifo,
        Checker::MemWellformed,
        Checker::StallPurity,
        Checker::LsuAlternative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Checker::Dti => "check_dti",
            Checker::Follower => "run_follower",
            Checker::Continuity => "check_continuity",
            Checker::Observational => "check_observational",
            Checker::Monotonicity => "check_monotonicity",
            Checker::Liveness => "check_liveness",
            Checker::Protocol => "bus_protocol",
            Checker::FetchFifo => "fetch_fifo",
            Checker::MemWellformed => "mem_wellformed",
            Checker::StallPurity => "stall_purity",
            Checker::LsuAlternative => "lsu_alternative",
        }
    }
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown checker `{0}`")]
pub struct UnknownChecker(pub String);

impl FromStr for Checker {
    type Err = UnknownChecker;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Checker::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| UnknownChecker(s.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub cycle: u64,
    /// Which assertion of the checker fired.
    pub assertion: String,
    pub expected: String,
    pub actual: String,
}

impl Failure {
    pub fn new(cycle: u64, assertion: impl Into<String>, expected: impl fmt::Debug, actual: impl fmt::Debug) -> Self {
        Failure {
            cycle,
            assertion: assertion.into(),
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub checker: Checker,
    pub failure: Option<Failure>,
    /// Seed that reproduces the run.
    pub seed: u64,
    /// Minimized failing program body, when one was computed.
    pub program: Option<Vec<u32>>,
}

impl Verdict {
    pub fn pass(checker: Checker, seed: u64) -> Self {
        Verdict { checker, failure: None, seed, program: None }
    }

    pub fn from_result(checker: Checker, seed: u64, r: Result<(), Failure>) -> Self {
        Verdict { checker, failure: r.err(), seed, program: None }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "PASS {} seed={:#x}", self.checker, self.seed),
            Some(x) => {
                write!(
                    f,
                    "FAIL {} cycle={} assertion={} seed={:#x}\n  expected: {}\n  actual:   {}",
                    self.checker, x.cycle, x.assertion, self.seed, x.expected, x.actual
                )?;
                if let Some(p) = &self.program {
                    write!(f, "\n  program:")?;
                    for w in p {
                        write!(f, " {w:08x}")?;
                    }
                }
                Ok(())
            }
        }
    }
}
