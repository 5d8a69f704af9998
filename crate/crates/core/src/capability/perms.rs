//! Compressed permission encoding.
//!
//! A permission code is six bits: the low two bits select a *kind* and the
//! upper four bits are kind-specific flags.
//!
//! | kind | meaning    | flag 0            | flag 1 | flag 2     | flag 3 |
//! |------|------------|-------------------|--------|------------|--------|
//! | 0    | memory     | store             | load   | cap_access | global |
//! | 1    | executable | system_registers  | load   | cap_access | global |
//! | 2    | sealing    | reserved (0)      | seal   | unseal     | global |
//! | 3    | null       | -                 | -      | -          | -      |
//!
//! Executable codes always carry `execute`; no code can express both
//! `store` and `execute`.

use std::fmt;

bitflags::bitflags! {
    /// Expanded permission set. The bit positions are also the layout of
    /// the mask operand of `CAndPerm` and the result of `CGetPerm`.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
    pub struct PermissionSet: u8 {
        const EXECUTE = 1 << 0;
        const LOAD = 1 << 1;
        const STORE = 1 << 2;
        const CAP_ACCESS = 1 << 3;
        const SEAL = 1 << 4;
        const UNSEAL = 1 << 5;
        const GLOBAL = 1 << 6;
        const SYSTEM_REGISTERS = 1 << 7;
    }
}

impl PermissionSet {
    pub fn is_subset_of(self, other: PermissionSet) -> bool {
        other.contains(self)
    }
}

/// Permission kind, the low two bits of a [`PermCode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PermKind {
    Memory = 0,
    Executable = 1,
    Sealing = 2,
    Null = 3,
}

impl PermKind {
    pub fn from_bits(bits: u8) -> Self {
        match bits & 3 {
            0 => PermKind::Memory,
            1 => PermKind::Executable,
            2 => PermKind::Sealing,
            _ => PermKind::Null,
        }
    }
}

/// A six-bit compressed permission code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PermCode(u8);

impl fmt::Debug for PermCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PermCode({:?}, flags={:#06b})", self.kind(), self.flags())
    }
}

/// The canonical code for the empty permission set.
pub const NULL_PERMS: PermCode = PermCode(PermKind::Null as u8);

const MEMORY_FLAGS: [PermissionSet; 4] = [
    PermissionSet::STORE,
    PermissionSet::LOAD,
    PermissionSet::CAP_ACCESS,
    PermissionSet::GLOBAL,
];
const EXEC_FLAGS: [PermissionSet; 4] = [
    PermissionSet::SYSTEM_REGISTERS,
    PermissionSet::LOAD,
    PermissionSet::CAP_ACCESS,
    PermissionSet::GLOBAL,
];
const SEALING_FLAGS: [PermissionSet; 4] = [
    PermissionSet::empty(),
    PermissionSet::SEAL,
    PermissionSet::UNSEAL,
    PermissionSet::GLOBAL,
];

impl PermCode {
    /// Builds a code from its raw six bits; higher bits are discarded.
    pub const fn from_raw(raw: u8) -> Self {
        PermCode(raw & 0x3F)
    }

    pub const fn new(kind: PermKind, flags: u8) -> Self {
        PermCode(((flags & 0xF) << 2) | kind as u8)
    }

    pub const fn raw(self) -> u8 {
        self.0
    }

    pub fn kind(self) -> PermKind {
        PermKind::from_bits(self.0)
    }

    pub const fn flags(self) -> u8 {
        self.0 >> 2
    }

    pub fn decode(self) -> PermissionSet {
        perms_decode(self)
    }

    /// True when the code is the unique encoding of its decoded set.
    pub fn is_canonical(self) -> bool {
        perms_encode(perms_decode(self)) == self
    }
}

fn expand(flags: u8, table: &[PermissionSet; 4]) -> PermissionSet {
    table
        .iter()
        .enumerate()
        .filter(|(i, _)| flags & (1 << i) != 0)
        .fold(PermissionSet::empty(), |acc, (_, p)| acc | *p)
}

pub fn perms_decode(code: PermCode) -> PermissionSet {
    let flags = code.flags();
    match code.kind() {
        PermKind::Memory => expand(flags, &MEMORY_FLAGS),
        PermKind::Executable => PermissionSet::EXECUTE | expand(flags, &EXEC_FLAGS),
        PermKind::Sealing => expand(flags, &SEALING_FLAGS),
        PermKind::Null => PermissionSet::empty(),
    }
}

/// Largest representable subset of `p`: maximal cardinality, ties broken by
/// preferring the executable kind, then lowest kind, then lowest flag value.
/// Only codes with a non-empty decoding compete against the null code.
pub fn perms_encode(p: PermissionSet) -> PermCode {
    let mut best = NULL_PERMS;
    let mut best_card = 0;
    // Kind-major iteration order gives the tie-break for free.
    for kind in [1u8, 0, 2] {
        for flags in 0..16u8 {
            let code = PermCode::new(PermKind::from_bits(kind), flags);
            if kind == PermKind::Sealing as u8 && flags & 1 != 0 {
                continue;
            }
            let set = perms_decode(code);
            if set.is_empty() || !set.is_subset_of(p) {
                continue;
            }
            let card = set.bits().count_ones();
            if card > best_card {
                best = code;
                best_card = card;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_and_execute_never_coexist() {
        let p = PermissionSet::EXECUTE | PermissionSet::STORE | PermissionSet::LOAD;
        let code = perms_encode(p);
        assert_eq!(code.kind(), PermKind::Executable);
        assert_eq!(
            perms_decode(code),
            PermissionSet::EXECUTE | PermissionSet::LOAD
        );
    }

    #[test]
    fn empty_set_is_null_kind() {
        assert_eq!(perms_encode(PermissionSet::empty()), NULL_PERMS);
        assert_eq!(NULL_PERMS.kind(), PermKind::Null);
        assert_eq!(NULL_PERMS.flags(), 0);
    }

    #[test]
    fn full_memory_set_is_exact() {
        let p = PermissionSet::LOAD
            | PermissionSet::STORE
            | PermissionSet::CAP_ACCESS
            | PermissionSet::GLOBAL;
        let code = perms_encode(p);
        assert_eq!(code.kind(), PermKind::Memory);
        assert_eq!(code.flags(), 0xF);
        assert_eq!(perms_decode(code), p);
    }

    #[test]
    fn zero_code_decodes_empty_but_is_not_canonical() {
        let zero = PermCode::from_raw(0);
        assert!(perms_decode(zero).is_empty());
        assert!(!zero.is_canonical());
        assert!(NULL_PERMS.is_canonical());
    }

    #[test]
    fn reserved_sealing_bit_is_not_canonical() {
        let code = PermCode::new(PermKind::Sealing, 0b0011);
        assert!(!code.is_canonical());
    }

    #[test]
    fn global_alone_picks_memory_kind() {
        assert_eq!(perms_encode(PermissionSet::GLOBAL).kind(), PermKind::Memory);
    }
}
