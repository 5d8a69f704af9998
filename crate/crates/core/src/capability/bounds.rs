use super::{Capability, LEGAL_EXPONENTS};

/// One past the highest byte address.
pub const ADDRESS_SPACE_TOP: u64 = 1 << 32;

/// Decoded bounds: `[base, top)`. `top` is 33 bits wide so the full address
/// space is expressible. Bounds decoded from an ill-formed capability may
/// have `base > top` or `top > 2^32`; see [`super::is_mem_wellformed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bounds {
    pub base: u32,
    pub top: u64,
}

impl Bounds {
    pub fn length(&self) -> u64 {
        self.top.saturating_sub(u64::from(self.base))
    }

    /// `[addr, addr + width)` lies inside the bounds, evaluated without
    /// 32-bit wraparound.
    pub fn contains_range(&self, addr: u32, width: u64) -> bool {
        u64::from(self.base) <= u64::from(addr) && u64::from(addr) + width <= self.top
    }

    pub fn is_subset_of(&self, other: &Bounds) -> bool {
        other.base <= self.base && self.top <= other.top
    }
}

/// Cached decode corrections: `base_cor` in {-1, 0}, `top_cor` in {-1, 0, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Corrections {
    pub base_cor: i8,
    pub top_cor: i8,
}

pub fn corrections_of(cap: &Capability) -> Corrections {
    let e = u32::from(cap.exponent);
    let b = u64::from(cap.b_field & 0x1FF);
    let t = u64::from(cap.t_field & 0x1FF);
    let a_mid = (u64::from(cap.address) >> e) & 0x1FF;
    let a_hi = i8::from(a_mid < b);
    let t_hi = i8::from(t < b);
    Corrections { base_cor: -a_hi, top_cor: t_hi - a_hi }
}

/// Decodes bounds using supplied corrections instead of recomputing them.
/// With `corrections_of(cap)` this is exactly [`bounds_of`].
pub fn bounds_with_corrections(cap: &Capability, cor: Corrections) -> Bounds {
    let e = u32::from(cap.exponent);
    let a_top = (u64::from(cap.address) >> (e + 9)) as i64;
    let b = i64::from(cap.b_field & 0x1FF);
    let t = i64::from(cap.t_field & 0x1FF);
    let base = ((((a_top + i64::from(cor.base_cor)) << 9) | b) << e) as u64 & 0xFFFF_FFFF;
    let top = ((((a_top + i64::from(cor.top_cor)) << 9) | t) << e) as u64 & 0x1_FFFF_FFFF;
    Bounds { base: base as u32, top }
}

pub fn bounds_of(cap: &Capability) -> Bounds {
    bounds_with_corrections(cap, corrections_of(cap))
}

pub fn is_representable(cap: &Capability, new_address: u32) -> bool {
    bounds_of(&cap.with_address(new_address)) == bounds_of(cap)
}

/// Field values chosen for a requested region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodedRegion {
    pub exponent: u8,
    pub b_field: u16,
    pub t_field: u16,
    /// Decoded bounds of the encoding, viewed from the supplied address.
    pub bounds: Bounds,
}

/// Smallest encodable region containing `[base, top)` as seen from
/// `address` (normally `address == base`). Picks the least legal exponent
/// whose aligned region round-trips through the decoder. Falls back to the
/// full-space exponent when nothing fits, which only happens for requests
/// ending beyond `2^32`.
pub fn encode_region(address: u32, base: u64, top: u64) -> EncodedRegion {
    for &e in LEGAL_EXPONENTS.iter() {
        if let Some(enc) = try_exponent(address, base, top, e) {
            return enc;
        }
    }
    let e = super::FULL_SPACE_EXPONENT;
    let (b_field, t_field) = fields_for(base, top, e);
    let probe = Capability {
        address,
        exponent: e,
        b_field,
        t_field,
        ..Capability::NULL
    };
    EncodedRegion { exponent: e, b_field, t_field, bounds: bounds_of(&probe) }
}

fn aligned(base: u64, top: u64, e: u8) -> (u64, u64) {
    let mask = (1u64 << e) - 1;
    (base & !mask, (top + mask) & !mask)
}

fn fields_for(base: u64, top: u64, e: u8) -> (u16, u16) {
    let (b, t) = aligned(base, top, e);
    (((b >> e) & 0x1FF) as u16, ((t >> e) & 0x1FF) as u16)
}

fn try_exponent(address: u32, base: u64, top: u64, e: u8) -> Option<EncodedRegion> {
    let (base_al, top_al) = aligned(base, top, e);
    if top_al - base_al >= 512u64 << e {
        return None;
    }
    let (b_field, t_field) = fields_for(base, top, e);
    let probe = Capability {
        address,
        exponent: e,
        b_field,
        t_field,
        ..Capability::NULL
    };
    let bounds = bounds_of(&probe);
    (u64::from(bounds.base) == base_al && bounds.top == top_al)
        .then_some(EncodedRegion { exponent: e, b_field, t_field, bounds })
}
