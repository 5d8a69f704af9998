pub mod campaign;
pub mod capability;
pub mod check;
pub mod isa;
pub mod micro;
pub mod trace;
