//! Capability derivations and checks. Every deriving operation is
//! monotone: a tagged result never has wider bounds or more permissions
//! than its tagged source.

use super::{
    bounds_of, encode_region, is_legal_exponent, is_representable, perms_decode, perms_encode,
    Capability, PermissionSet, ADDRESS_SPACE_TOP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Load,
    Store,
    LoadCap,
    StoreCap,
    Execute,
}

impl AccessKind {
    fn required(self) -> PermissionSet {
        match self {
            AccessKind::Load => PermissionSet::LOAD,
            AccessKind::Store => PermissionSet::STORE,
            AccessKind::LoadCap => PermissionSet::LOAD | PermissionSet::CAP_ACCESS,
            AccessKind::StoreCap => PermissionSet::STORE | PermissionSet::CAP_ACCESS,
            AccessKind::Execute => PermissionSet::EXECUTE,
        }
    }
}

/// Capability check failures, in decreasing priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CapFault {
    Tag,
    Seal,
    Permission,
    Bounds,
}

pub fn check_access(
    cap: &Capability,
    addr: u32,
    width: u32,
    kind: AccessKind,
) -> Result<(), CapFault> {
    if !cap.tag {
        return Err(CapFault::Tag);
    }
    if cap.is_sealed() {
        return Err(CapFault::Seal);
    }
    if !cap.has_perm(kind.required()) {
        return Err(CapFault::Permission);
    }
    if !bounds_of(cap).contains_range(addr, u64::from(width)) {
        return Err(CapFault::Bounds);
    }
    Ok(())
}

pub fn set_address(cap: &Capability, new_address: u32) -> Capability {
    let keep = cap.tag && !cap.is_sealed() && is_representable(cap, new_address);
    Capability { tag: keep, address: new_address, ..*cap }
}

/// Narrows `cap` to `[cap.address, cap.address + req_len)`, rounded out to
/// the smallest encodable region. Returns the result and whether the
/// encoding is exact.
pub fn set_bounds(cap: &Capability, req_len: u32) -> (Capability, bool) {
    let old = bounds_of(cap);
    let base = u64::from(cap.address);
    let top = base + u64::from(req_len);
    let enc = encode_region(cap.address, base, top);
    let exact = u64::from(enc.bounds.base) == base && enc.bounds.top == top;
    let tag = cap.tag
        && !cap.is_sealed()
        && top <= ADDRESS_SPACE_TOP
        && enc.bounds.top <= old.top
        && cap.address >= old.base
        && enc.bounds.base >= old.base;
    let result = Capability {
        tag,
        exponent: enc.exponent,
        b_field: enc.b_field,
        t_field: enc.t_field,
        ..*cap
    };
    (result, exact)
}

pub fn and_perms(cap: &Capability, mask: PermissionSet) -> Capability {
    Capability {
        tag: cap.tag && !cap.is_sealed(),
        perms: perms_encode(perms_decode(cap.perms) & mask),
        ..*cap
    }
}

fn authority_usable(auth: &Capability, perm: PermissionSet) -> bool {
    let b = bounds_of(auth);
    auth.tag
        && !auth.is_sealed()
        && auth.has_perm(perm)
        && u64::from(b.base) <= u64::from(auth.address)
        && u64::from(auth.address) < b.top
}

pub fn seal(cap: &Capability, auth: &Capability) -> Capability {
    let otype = (auth.address & 7) as u8;
    let ok = cap.tag && !cap.is_sealed() && authority_usable(auth, PermissionSet::SEAL) && otype != 0;
    Capability { tag: ok, otype, ..*cap }
}

pub fn unseal(cap: &Capability, auth: &Capability) -> Capability {
    let ok = cap.tag
        && cap.is_sealed()
        && authority_usable(auth, PermissionSet::UNSEAL)
        && auth.address == u32::from(cap.otype);
    let mut perms = cap.perms;
    if !auth.has_perm(PermissionSet::GLOBAL) {
        perms = perms_encode(perms_decode(perms) - PermissionSet::GLOBAL);
    }
    Capability { tag: ok, otype: 0, perms, ..*cap }
}

/// Constraint on tagged capabilities stored anywhere in the machine,
/// including memory.
pub fn is_mem_wellformed(cap: &Capability) -> bool {
    if !cap.tag {
        return true;
    }
    let b = bounds_of(cap);
    is_legal_exponent(cap.exponent)
        && cap.perms.is_canonical()
        && b.top <= ADDRESS_SPACE_TOP
        && u64::from(b.base) <= b.top
}

/// `c1` equals `c2` except that `c1` may have its tag cleared.
pub fn cap_stricter_than(c1: &Capability, c2: &Capability) -> bool {
    c1.with_tag(false) == c2.with_tag(false) && (!c1.tag || c2.tag)
}
