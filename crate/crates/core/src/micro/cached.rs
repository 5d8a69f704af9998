//! Capabilities with cached bounds corrections, and the microcore's own
//! capability ALU built on them. Bounds are always decoded from the cached
//! corrections, never recomputed, so a stale cache shows up as wrong bounds.

use crate::capability::{
    and_perms, bounds_with_corrections, corrections_of, encode_region, perms_decode,
    perms_encode, seal, unseal, AccessKind, Bounds, CapFault, Capability, Corrections,
    PermissionSet, ADDRESS_SPACE_TOP,
};

use super::{BuildConfig, MutationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct CachedCap {
    pub cap: Capability,
    pub cor: Corrections,
}

impl CachedCap {
    pub fn new(cap: Capability) -> Self {
        CachedCap { cap, cor: corrections_of(&cap) }
    }

    pub fn int(v: u32) -> Self {
        Self::new(Capability::from_int(v))
    }

    pub fn bounds(&self) -> Bounds {
        bounds_with_corrections(&self.cap, self.cor)
    }

    pub fn address(&self) -> u32 {
        self.cap.address
    }

    /// Data-type invariant: tagged values carry the corrections their
    /// fields imply.
    pub fn corrections_ok(&self) -> bool {
        !self.cap.tag || self.cor == corrections_of(&self.cap)
    }

    /// Operations that keep address and bounds fields reuse the cache.
    fn map(self, f: impl FnOnce(Capability) -> Capability) -> Self {
        CachedCap { cap: f(self.cap), cor: self.cor }
    }
}

fn required(kind: AccessKind) -> PermissionSet {
    match kind {
        AccessKind::Load => PermissionSet::LOAD,
        AccessKind::Store => PermissionSet::STORE,
        AccessKind::LoadCap => PermissionSet::LOAD | PermissionSet::CAP_ACCESS,
        AccessKind::StoreCap => PermissionSet::STORE | PermissionSet::CAP_ACCESS,
        AccessKind::Execute => PermissionSet::EXECUTE,
    }
}

/// Access check against cached bounds. M1 computes the end address modulo 2^32.
pub fn check_access(
    c: &CachedCap,
    addr: u32,
    width: u32,
    kind: AccessKind,
    cfg: &BuildConfig,
) -> Result<(), CapFault> {
    if !c.cap.tag {
        return Err(CapFault::Tag);
    }
    if c.cap.is_sealed() {
        return Err(CapFault::Seal);
    }
    if !c.cap.has_perm(required(kind)) {
        return Err(CapFault::Permission);
    }
    let b = c.bounds();
    let end = if cfg.has(MutationId::M1) {
        u64::from(addr.wrapping_add(width))
    } else {
        u64::from(addr) + u64::from(width)
    };
    if u64::from(addr) < u64::from(b.base) || end > b.top {
        return Err(CapFault::Bounds);
    }
    Ok(())
}

/// Address update. The new corrections are computed from the new address
/// and compared with the old cached bounds; M6 keeps the stale corrections.
pub fn set_address(c: &CachedCap, addr: u32, cfg: &BuildConfig) -> CachedCap {
    let moved = c.cap.with_address(addr);
    let fresh = corrections_of(&moved);
    let same = bounds_with_corrections(&moved, fresh) == c.bounds();
    let tag = c.cap.tag && !c.cap.is_sealed() && same;
    let cor = if cfg.has(MutationId::M6) { c.cor } else { fresh };
    CachedCap { cap: moved.with_tag(tag), cor }
}

/// Bounds narrowing. M4 drops the below-old-base tag clear.
pub fn set_bounds(c: &CachedCap, len: u32, cfg: &BuildConfig) -> (CachedCap, bool) {
    let old = c.bounds();
    let base = u64::from(c.cap.address);
    let top = base + u64::from(len);
    let enc = encode_region(c.cap.address, base, top);
    let exact = u64::from(enc.bounds.base) == base && enc.bounds.top == top;
    let below_base = c.cap.address < old.base || enc.bounds.base < old.base;
    let mut tag = c.cap.tag && !c.cap.is_sealed() && top <= ADDRESS_SPACE_TOP && enc.bounds.top <= old.top;
    if !cfg.has(MutationId::M4) {
        tag &= !below_base;
    }
    let cap = Capability {
        tag,
        exponent: enc.exponent,
        b_field: enc.b_field,
        t_field: enc.t_field,
        ..c.cap
    };
    (CachedCap::new(cap), exact)
}

pub fn and_perm(c: &CachedCap, mask: u32) -> CachedCap {
    c.map(|cap| and_perms(&cap, PermissionSet::from_bits_truncate(mask as u8)))
}

pub fn seal_with(c: &CachedCap, auth: &CachedCap) -> CachedCap {
    c.map(|cap| seal(&cap, &auth.cap))
}

pub fn unseal_with(c: &CachedCap, auth: &CachedCap) -> CachedCap {
    c.map(|cap| unseal(&cap, &auth.cap))
}

/// Permission stripping on capability loads. M3 clears raw code bits
/// instead of re-encoding the reduced set.
pub fn load_filter(loaded: Capability, auth: &CachedCap, cfg: &BuildConfig) -> CachedCap {
    let a = &auth.cap;
    if !a.has_perm(PermissionSet::CAP_ACCESS) {
        return CachedCap::new(loaded.with_tag(false));
    }
    if !loaded.tag || loaded.is_sealed() {
        return CachedCap::new(loaded);
    }
    let strip_store = !a.has_perm(PermissionSet::STORE);
    let strip_global = !a.has_perm(PermissionSet::GLOBAL);
    let perms = if cfg.has(MutationId::M3) {
        let mut raw = loaded.perms.raw();
        if strip_store {
            raw &= !0b00_0001;
        }
        if strip_global {
            raw &= !0b10_0000;
        }
        crate::capability::PermCode::from_raw(raw)
    } else {
        let mut p = perms_decode(loaded.perms);
        if strip_store {
            p -= PermissionSet::STORE;
        }
        if strip_global {
            p -= PermissionSet::GLOBAL;
        }
        perms_encode(p)
    };
    CachedCap::new(Capability { perms, ..loaded })
}

/// Value written to mepcc on a trap. M2 skips the representability check.
pub fn trap_mepcc(pcc: &CachedCap, pc: u32, cfg: &BuildConfig) -> CachedCap {
    if cfg.has(MutationId::M2) {
        CachedCap::new(pcc.cap.with_address(pc))
    } else {
        set_address(pcc, pc, &BuildConfig::default())
    }
}
