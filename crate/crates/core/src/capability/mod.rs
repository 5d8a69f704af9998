//! Compressed 32-bit capabilities.
//!
//! A [`Capability`] is the in-register form: the out-of-band tag plus the
//! fields of the 64-bit memory word. Bounds are never stored; they are
//! decoded from the address and the `B`/`T`/`E` fields by [`bounds_of`].

mod bounds;
mod ops;
mod perms;

pub use bounds::{
    bounds_of, bounds_with_corrections, corrections_of, encode_region, is_representable,
    Bounds, Corrections, EncodedRegion, ADDRESS_SPACE_TOP,
};
pub use ops::{
    and_perms, cap_stricter_than, check_access, is_mem_wellformed, seal, set_address,
    set_bounds, unseal, AccessKind, CapFault,
};
pub use perms::{perms_decode, perms_encode, PermCode, PermKind, PermissionSet, NULL_PERMS};

/// Exponent used to cover the whole address space.
pub const FULL_SPACE_EXPONENT: u8 = 24;
/// Largest exponent below the full-space one.
pub const MAX_SMALL_EXPONENT: u8 = 14;
/// All legal exponents in increasing order.
pub const LEGAL_EXPONENTS: [u8; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 24];

const EXP_CODE_FULL: u64 = 31;

pub fn is_legal_exponent(e: u8) -> bool {
    e <= MAX_SMALL_EXPONENT || e == FULL_SPACE_EXPONENT
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Capability {
    pub tag: bool,
    pub address: u32,
    /// 9-bit top field.
    pub t_field: u16,
    /// 9-bit base field.
    pub b_field: u16,
    pub exponent: u8,
    pub perms: PermCode,
    /// 3-bit object type; 0 means unsealed.
    pub otype: u8,
}

impl Capability {
    /// The untagged all-zero capability.
    pub const NULL: Capability = Capability {
        tag: false,
        address: 0,
        t_field: 0,
        b_field: 0,
        exponent: 0,
        perms: PermCode::from_raw(0),
        otype: 0,
    };

    /// Integer value: the null capability carrying `value` as its address.
    pub fn from_int(value: u32) -> Self {
        Capability { address: value, ..Capability::NULL }
    }

    fn full_space(address: u32, perms: PermissionSet) -> Self {
        Capability {
            tag: true,
            address,
            t_field: 0x100,
            b_field: 0,
            exponent: FULL_SPACE_EXPONENT,
            perms: perms_encode(perms),
            otype: 0,
        }
    }

    /// Executable root: execute, load, capability access, system registers, global.
    pub fn root_executable(address: u32) -> Self {
        Self::full_space(
            address,
            PermissionSet::EXECUTE
                | PermissionSet::LOAD
                | PermissionSet::CAP_ACCESS
                | PermissionSet::SYSTEM_REGISTERS
                | PermissionSet::GLOBAL,
        )
    }

    /// Memory read/write root.
    pub fn root_memory(address: u32) -> Self {
        Self::full_space(
            address,
            PermissionSet::LOAD
                | PermissionSet::STORE
                | PermissionSet::CAP_ACCESS
                | PermissionSet::GLOBAL,
        )
    }

    /// Sealing/unsealing root.
    pub fn root_sealing(address: u32) -> Self {
        Self::full_space(
            address,
            PermissionSet::SEAL | PermissionSet::UNSEAL | PermissionSet::GLOBAL,
        )
    }

    pub fn is_sealed(&self) -> bool {
        self.otype != 0
    }

    pub fn permissions(&self) -> PermissionSet {
        perms_decode(self.perms)
    }

    pub fn has_perm(&self, p: PermissionSet) -> bool {
        self.permissions().contains(p)
    }

    pub fn bounds(&self) -> Bounds {
        bounds_of(self)
    }

    pub fn with_address(self, address: u32) -> Self {
        Capability { address, ..self }
    }

    pub fn with_tag(self, tag: bool) -> Self {
        Capability { tag, ..self }
    }

    /// 64-bit memory layout, most significant first:
    /// `perms(6) | otype(3) | exp_code(5) | T(9) | B(9) | address(32)`.
    pub fn to_bits(&self) -> u64 {
        let exp_code = if self.exponent == FULL_SPACE_EXPONENT {
            EXP_CODE_FULL
        } else {
            u64::from(self.exponent & 0x1F)
        };
        (u64::from(self.perms.raw()) << 58)
            | (u64::from(self.otype & 7) << 55)
            | (exp_code << 50)
            | (u64::from(self.t_field & 0x1FF) << 41)
            | (u64::from(self.b_field & 0x1FF) << 32)
            | u64::from(self.address)
    }

    /// Inverse of [`Capability::to_bits`]. Exponent codes other than 0..=14
    /// and 31 produce an untagged capability with exponent 0.
    pub fn from_bits(word: u64, tag: bool) -> Self {
        let exp_code = (word >> 50) & 0x1F;
        let (exponent, tag) = match exp_code {
            0..=14 => (exp_code as u8, tag),
            EXP_CODE_FULL => (FULL_SPACE_EXPONENT, tag),
            _ => (0, false),
        };
        Capability {
            tag,
            address: word as u32,
            t_field: ((word >> 41) & 0x1FF) as u16,
            b_field: ((word >> 32) & 0x1FF) as u16,
            exponent,
            perms: PermCode::from_raw((word >> 58) as u8),
            otype: ((word >> 55) & 7) as u8,
        }
    }
}
