//! Encodes, narrows and derives capabilities, printing the decoded bounds.

use cheriot_core::capability::*;

fn show(label: &str, c: &Capability) {
    let b = bounds_of(c);
    println!(
        "{label:<18} tag={} addr={:#010x} E={:<2} B={:#05x} T={:#05x} base={:#010x} top={:#011x} perms={:?}",
        c.tag as u8, c.address, c.exponent, c.b_field, c.t_field, b.base, b.top, perms_decode(c.perms)
    );
}

fn main() {
    let root = Capability::root_memory(0x2000_0123);
    show("root", &root);

    for len in [16, 100, 511, 512, 1000, 4095, 70_000] {
        let (c, exact) = set_bounds(&root, len);
        show(&format!("set_bounds {len}"), &c);
        println!("{:<18} exact={exact} length={}", "", bounds_of(&c).length());
    }

    let (buf, _) = set_bounds(&root, 64);
    show("in bounds", &set_address(&buf, 0x2000_0150));
    show("far away", &set_address(&buf, 0x3000_0000));

    let ro = and_perms(&buf, PermissionSet::LOAD | PermissionSet::CAP_ACCESS);
    show("read-only", &ro);
    println!("store allowed: {:?}", check_access(&ro, 0x2000_0123, 4, AccessKind::Store));

    let bits = buf.to_bits();
    println!("memory word {bits:#018x}, round trip equal: {}", Capability::from_bits(bits, true) == buf);

    println!("\npermission codes:");
    for raw in (0..64u8).step_by(5) {
        let code = PermCode::from_raw(raw);
        println!("  {raw:#04x} -> {:?}", perms_decode(code));
    }
}
