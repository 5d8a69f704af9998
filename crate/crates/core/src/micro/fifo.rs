//! Fetch FIFO between the fetch interface and the execute stage.

use std::collections::VecDeque;

pub const FIFO_DEPTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FifoEvent {
    Enqueue { addr: u32, bits: u32 },
    Dequeue { addr: u32, bits: u32 },
    /// Discards every queued entry.
    Flush,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FetchFifo {
    entries: VecDeque<(u32, u32)>,
}

impl FetchFifo {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= FIFO_DEPTH
    }

    pub fn head(&self) -> Option<(u32, u32)> {
        self.entries.front().copied()
    }

    /// Returns `false` (and drops the entry) when full.
    pub fn enqueue(&mut self, addr: u32, bits: u32) -> bool {
        if self.is_full() {
            return false;
        }
        self.entries.push_back((addr, bits));
        true
    }

    pub fn dequeue(&mut self) -> Option<(u32, u32)> {
        self.entries.pop_front()
    }

    pub fn flush(&mut self) {
        self.entries.clear();
    }
}

/// Pairs each dequeue with its enqueue in FIFO order: `(enq addr, deq addr)`.
/// Entries discarded by a flush produce no pair. Returns `None` when a
/// dequeue has no matching enqueue or the bits differ.
pub fn fifo_trace(events: &[FifoEvent]) -> Option<Vec<(u32, u32)>> {
    let mut queue: VecDeque<(u32, u32)> = VecDeque::new();
    let mut pairs = Vec::new();
    for e in events {
        match *e {
            FifoEvent::Enqueue { addr, bits } => queue.push_back((addr, bits)),
            FifoEvent::Dequeue { addr, bits } => {
                let (ea, eb) = queue.pop_front()?;
                if eb != bits {
                    return None;
                }
                pairs.push((ea, addr));
            }
            FifoEvent::Flush => queue.clear(),
        }
    }
    Some(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_in_order_and_flush_drops() {
        let mut f = FetchFifo::default();
        let mut ev = Vec::new();
        for a in [0x8000_0000u32, 0x8000_0004, 0x8000_0008] {
            assert!(f.enqueue(a, a ^ 1));
            ev.push(FifoEvent::Enqueue { addr: a, bits: a ^ 1 });
        }
        assert!(!f.enqueue(0, 0));
        let (a, b) = f.dequeue().unwrap();
        ev.push(FifoEvent::Dequeue { addr: a, bits: b });
        f.flush();
        ev.push(FifoEvent::Flush);
        assert!(f.is_empty());
        assert_eq!(fifo_trace(&ev), Some(vec![(0x8000_0000, 0x8000_0000)]));
    }
}
