//! Data-type invariant over every capability the microcore stores.

use crate::capability::is_mem_wellformed;
use crate::micro::MicroState;

use super::Failure;

/// Every tagged stored capability has correct cached corrections and is
/// well formed. The failure names the first offending block.
pub fn check_dti(m: &MicroState, cycle: u64) -> Result<(), Failure> {
    for (block, c) in m.stored_caps() {
        if !c.cap.tag {
            continue;
        }
        if !c.corrections_ok() {
            return Err(Failure::new(
                cycle,
                format!("corrections[{block}]"),
                crate::capability::corrections_of(&c.cap),
                c.cor,
            ));
        }
        if !is_mem_wellformed(&c.cap) {
            return Err(Failure::new(
                cycle,
                format!("wellformed[{block}]"),
                "top <= 2^32, base <= top, legal exponent",
                c.cap.bounds(),
            ));
        }
    }
    Ok(())
}
