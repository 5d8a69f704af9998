//! Architectural specification: decoding, state, and the single-step
//! function `spec_step : ArchState × ArchInput → ArchState × MemEventPlan`.

pub mod decode;
pub mod encode;
mod exec;
mod memory;
mod state;

pub use decode::{decode, Instruction};
pub use encode::encode;
pub use exec::{
    alu, branch_taken, cspec_step, fill_inputs, load_filter, spec_out, spec_step, Derivation,
    StepEvent, StepResult,
};
pub use memory::{byte_mask, Memory};
pub use state::{
    first_divergence, mstatus_value, state_stricter_than, ArchInput, ArchState, ClearRule,
    EbreakMtval, ExceptionCause, MemEventPlan, MemKind, MemRequest, Slot, SpecConfig,
    MCAUSE_EXTERNAL_INTERRUPT, RESET_PC,
};
