//! Drives the fetch FIFO with random operations and checks that every
//! dequeued entry is the one enqueued for that slot.

use cheriot_core::micro::{fifo_trace, FetchFifo, FifoEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut fifo = FetchFifo::default();
    let mut events = Vec::new();
    let mut rejected = 0;
    for _ in 0..10_000 {
        match rng.gen_range(0..10) {
            0..=4 => {
                let (addr, bits) = (rng.gen::<u32>() & !3, rng.gen());
                if fifo.enqueue(addr, bits) {
                    events.push(FifoEvent::Enqueue { addr, bits });
                } else {
                    rejected += 1;
                }
            }
            5..=8 => {
                if let Some((addr, bits)) = fifo.dequeue() {
                    events.push(FifoEvent::Dequeue { addr, bits });
                }
            }
            _ => {
                fifo.flush();
                events.push(FifoEvent::Flush);
            }
        }
    }
    let pairs = fifo_trace(&events).expect("consistent event stream");
    let ok = pairs.iter().all(|(e, d)| e == d);
    println!("{} events, {} dequeues, {rejected} enqueues refused when full, addresses match: {ok}", events.len(), pairs.len());
}
