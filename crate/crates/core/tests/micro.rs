use std::collections::VecDeque;

use cheriot_core::capability::{self as arch, AccessKind, Capability, Corrections};
use cheriot_core::check::check_dti;
use cheriot_core::micro::cached::{self, CachedCap};
use cheriot_core::micro::{fifo_trace, BuildConfig, FetchFifo, FifoEvent, MicroState, MutationId, FIFO_DEPTH};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Op {
    Enq(u32, u32),
    Deq,
    Flush,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        5 => (any::<u32>(), any::<u32>()).prop_map(|(a, b)| Op::Enq(a & !3, b)),
        4 => Just(Op::Deq),
        1 => Just(Op::Flush),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn fifo_matches_queue_model(ops in prop::collection::vec(op(), 0..64)) {
        let mut fifo = FetchFifo::default();
        let mut model = VecDeque::new();
        let mut events = Vec::new();
        for o in ops {
            match o {
                Op::Enq(addr, bits) => {
                    let room = model.len() < FIFO_DEPTH;
                    prop_assert_eq!(fifo.enqueue(addr, bits), room);
                    if room {
                        model.push_back((addr, bits));
                        events.push(FifoEvent::Enqueue { addr, bits });
                    }
                }
                Op::Deq => {
                    let got = fifo.dequeue();
                    prop_assert_eq!(got, model.pop_front());
                    if let Some((addr, bits)) = got {
                        events.push(FifoEvent::Dequeue { addr, bits });
                    }
                }
                Op::Flush => {
                    fifo.flush();
                    model.clear();
                    events.push(FifoEvent::Flush);
                }
            }
            prop_assert_eq!(fifo.len(), model.len());
            prop_assert_eq!(fifo.head(), model.front().copied());
        }
        let pairs = fifo_trace(&events).expect("well-formed event stream");
        prop_assert!(pairs.iter().all(|(e, d)| e == d));
    }
}

#[test]
fn fifo_trace_rejects_mismatched_dequeue() {
    let ev = [FifoEvent::Enqueue { addr: 0x100, bits: 1 }, FifoEvent::Dequeue { addr: 0x104, bits: 1 }];
    assert!(fifo_trace(&ev).map_or(true, |p| p.iter().any(|(e, d)| e != d)));
}

#[test]
fn dti_holds_at_reset() {
    assert!(check_dti(&MicroState::reset(), 0).is_ok());
}

#[test]
fn dti_flags_top_beyond_address_space() {
    // E = 24 with T = 0x1FF puts the top at 0x1FF << 24.
    let c = Capability { tag: true, address: 0xFF00_0000, exponent: 24, b_field: 0x0FF, t_field: 0x1FF, ..Capability::NULL };
    assert!(arch::bounds_of(&c).top > 1 << 32);
    let mut m = MicroState::reset();
    m.regs[5] = CachedCap::new(c);
    let f = check_dti(&m, 7).unwrap_err();
    assert_eq!(f.cycle, 7);
    assert_eq!(f.assertion, "wellformed[regfile.x5]");
    m.regs[5].cap.tag = false;
    assert!(check_dti(&m, 7).is_ok());
}

#[test]
fn dti_flags_stale_corrections() {
    let mut m = MicroState::reset();
    let c = CachedCap::new(Capability::root_memory(0x1000));
    m.mepcc = CachedCap { cor: Corrections { base_cor: 1, ..c.cor }, ..c };
    assert!(!m.mepcc.corrections_ok());
    assert_eq!(check_dti(&m, 3).unwrap_err().assertion, "corrections[csr.mepcc]");
}

fn derived() -> impl Strategy<Value = Capability> {
    (any::<u32>(), any::<u32>(), any::<u32>()).prop_map(|(a, len, a2)| {
        let (c, _) = arch::set_bounds(&Capability::root_memory(a), len >> (a2 % 32));
        arch::set_address(&c, a2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn cached_alu_agrees_with_architecture(c in derived(), addr in any::<u32>(), len in any::<u32>(), w in 1u32..9) {
        let cfg = BuildConfig::default();
        let cc = CachedCap::new(c);
        prop_assert_eq!(cc.bounds(), arch::bounds_of(&c));

        let moved = cached::set_address(&cc, addr, &cfg);
        prop_assert_eq!(moved.cap, arch::set_address(&c, addr));
        prop_assert!(moved.corrections_ok());

        let (nb, exact) = cached::set_bounds(&cc, len, &cfg);
        prop_assert_eq!((nb.cap, exact), arch::set_bounds(&c, len));
        prop_assert!(nb.corrections_ok());

        for kind in [AccessKind::Load, AccessKind::Store, AccessKind::LoadCap] {
            prop_assert_eq!(cached::check_access(&cc, addr, w, kind, &cfg), arch::check_access(&c, addr, w, kind));
        }
    }

    #[test]
    fn m6_leaves_stale_corrections(c in derived(), addr in any::<u32>()) {
        let cc = CachedCap::new(c);
        let m6 = cached::set_address(&cc, addr, &BuildConfig::with_mutation(MutationId::M6));
        let clean = cached::set_address(&cc, addr, &BuildConfig::default());
        prop_assert_eq!(m6.cap, clean.cap);
        if m6.cap.tag && m6.cor != clean.cor {
            prop_assert!(!m6.corrections_ok());
        }
    }
}

#[test]
fn m1_wraps_the_access_end() {
    let cc = CachedCap::new(Capability::root_memory(0));
    let small = cached::set_bounds(&CachedCap::new(Capability::root_memory(0xFFFF_FF00)), 0x100, &BuildConfig::default()).0;
    assert!(small.cap.tag);
    let clean = cached::check_access(&small, 0xFFFF_FFFC, 8, AccessKind::Load, &BuildConfig::default());
    let m1 = cached::check_access(&small, 0xFFFF_FFFC, 8, AccessKind::Load, &BuildConfig::with_mutation(MutationId::M1));
    assert!(clean.is_err());
    assert!(m1.is_ok());
    assert!(cached::check_access(&cc, 0, 4, AccessKind::Load, &BuildConfig::default()).is_ok());
}
