//! Cycle-timed microcore: fetch FIFO, a two-stage (EX, WB) pipeline, a
//! register file of capabilities with cached bounds corrections, and a
//! load-store unit on a request/grant/response bus.

pub mod cached;
mod core;
mod driver;
pub mod exec;
mod fifo;
mod lsu;

use std::fmt;
use std::str::FromStr;

use crate::isa::SpecConfig;

pub use self::core::{
    abs, micro_step, outputs, MicroEvents, MicroOutputs, MicroState, SpecEnInfo, SpecEnKind,
    WbEntry, WbState,
};
pub use cached::CachedCap;
pub use driver::{
    Driver, ProgramImage, ScheduleError, TimingSchedule, ACK_ADDR, MAX_FETCH_DELAY, MAX_LATENCY,
    MAX_WFI_WAKE,
};
pub use fifo::{fifo_trace, FetchFifo, FifoEvent, FIFO_DEPTH};
pub use lsu::{Lsu, LsuCycle, LsuPhase};

/// Injectable bugs, one code site each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationId {
    /// Access check end address computed modulo 2^32.
    M1,
    /// Trap write of mepcc skips the representability check.
    M2,
    /// Load permission stripping clears raw code bits.
    M3,
    /// Bounds setting keeps the tag when the result starts below the old base.
    M4,
    /// Illegal CLC still dispatches; its late response is ORed into writeback.
    M5,
    /// Address update keeps stale cached corrections.
    M6,
}

impl MutationId {
    pub const ALL: [MutationId; 6] = [
        MutationId::M1,
        MutationId::M2,
        MutationId::M3,
        MutationId::M4,
        MutationId::M5,
        MutationId::M6,
    ];
}

impl fmt::Display for MutationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown mutation id `{0}` (expected M1..M6)")]
pub struct UnknownMutation(pub String);

impl FromStr for MutationId {
    type Err = UnknownMutation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationId::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMutation(s.to_string()))
    }
}

/// Build-time options of the microcore.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BuildConfig {
    pub mutation: Option<MutationId>,
    /// Implementation variant: CJALR writes an untagged link register.
    pub clear_link_tag: bool,
    pub spec: SpecConfig,
}

impl BuildConfig {
    pub fn with_mutation(m: MutationId) -> Self {
        BuildConfig { mutation: Some(m), ..Default::default() }
    }

    pub fn has(&self, m: MutationId) -> bool {
        self.mutation == Some(m)
    }
}

/// Values on the input ports in one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CycleInputs {
    pub gnt: bool,
    pub rvalid: bool,
    pub rdata: (u32, bool),
    pub fetch_valid: bool,
    pub fetch_bits: u32,
    pub fetch_addr: u32,
    pub irq: bool,
}

/// Data memory port outputs in one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PortOutputs {
    pub req: bool,
    pub addr: u32,
    pub we: bool,
    pub be: u8,
    pub wdata: u32,
    pub wtag: bool,
}
