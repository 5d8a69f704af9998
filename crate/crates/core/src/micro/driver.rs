//! The environment of the microcore: instruction memory, data memory with
//! request/grant/response timing, and the interrupt line.

use std::collections::BTreeMap;

use crate::isa::{byte_mask, MemRequest, Memory};

use super::{CycleInputs, MicroOutputs};

pub const MAX_LATENCY: u32 = 10;
pub const MAX_WFI_WAKE: u32 = 16;
pub const MAX_FETCH_DELAY: u32 = 3;
/// A store to this word acknowledges (and lowers) the interrupt line.
pub const ACK_ADDR: u32 = 0x0000_0700;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramImage {
    words: BTreeMap<u32, u32>,
}

impl ProgramImage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, addr: u32, words: &[u32]) {
        for (k, w) in words.iter().enumerate() {
            self.words.insert(addr.wrapping_add(4 * k as u32), *w);
        }
    }

    /// Unmapped addresses read as zero, which is an illegal instruction.
    pub fn fetch(&self, addr: u32) -> u32 {
        self.words.get(&(addr & !3)).copied().unwrap_or(0)
    }

    pub fn words(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.words.iter().map(|(a, w)| (*a, *w))
    }
}

/// Per-request latencies and environment events. Lists are consumed in
/// order and wrap around when exhausted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimingSchedule {
    /// Cycles from the first cycle a request is driven to its grant.
    pub gnt_latency: Vec<u32>,
    /// Cycles from grant to response.
    pub rvalid_latency: Vec<u32>,
    /// Cycles a fetch request waits before being served.
    pub fetch_delay: Vec<u32>,
    /// Cycles of sleep after WFI before the line is raised.
    pub wfi_wake: Vec<u32>,
    /// Cycles at which the interrupt line is raised; it then stays high
    /// until acknowledged.
    pub irq_cycles: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("{field}[{index}] = {value} outside 1..={max}")]
    OutOfRange { field: &'static str, index: usize, value: u32, max: u32 },
}

impl Default for TimingSchedule {
    fn default() -> Self {
        TimingSchedule::fixed(1, 1)
    }
}

fn pick(v: &[u32], k: usize, dflt: u32) -> u32 {
    if v.is_empty() {
        dflt
    } else {
        v[k % v.len()]
    }
}

impl TimingSchedule {
    pub fn fixed(gnt: u32, rvalid: u32) -> Self {
        TimingSchedule {
            gnt_latency: vec![gnt],
            rvalid_latency: vec![rvalid],
            fetch_delay: vec![0],
            wfi_wake: vec![1],
            irq_cycles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let lists: [(&'static str, &[u32], u32, u32); 4] = [
            ("gnt_latency", &self.gnt_latency, 1, MAX_LATENCY),
            ("rvalid_latency", &self.rvalid_latency, 1, MAX_LATENCY),
            ("fetch_delay", &self.fetch_delay, 0, MAX_FETCH_DELAY),
            ("wfi_wake", &self.wfi_wake, 1, MAX_WFI_WAKE),
        ];
        for (field, v, lo, max) in lists {
            if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(lo..=max).contains(*x)) {
                return Err(ScheduleError::OutOfRange { field, index, value, max });
            }
        }
        Ok(())
    }

    pub fn gnt(&self, k: usize) -> u32 {
        pick(&self.gnt_latency, k, 1)
    }

    pub fn rvalid(&self, k: usize) -> u32 {
        pick(&self.rvalid_latency, k, 1)
    }
}

/// Lazy realisation of the environment, one cycle at a time.
#[derive(Clone, Debug)]
pub struct Driver {
    image: ProgramImage,
    committed: Memory,
    /// Writes granted since the last [`Driver::commit`].
    pending: Vec<MemRequest>,
    sched: TimingSchedule,
    cycle: u64,
    granted: usize,
    req_age: u32,
    response: Option<(u32, (u32, bool))>,
    irq: bool,
    irq_next: usize,
    fetch_wait: u32,
    fetches: usize,
    sleep_age: u32,
    wakes: usize,
}

impl Driver {
    pub fn new(image: ProgramImage, mem: Memory, sched: TimingSchedule) -> Result<Self, ScheduleError> {
        sched.validate()?;
        Ok(Driver {
            image,
            committed: mem,
            pending: Vec::new(),
            sched,
            cycle: 0,
            granted: 0,
            req_age: 0,
            response: None,
            irq: false,
            irq_next: 0,
            fetch_wait: 0,
            fetches: 0,
            sleep_age: 0,
            wakes: 0,
        })
    }

    pub fn image(&self) -> &ProgramImage {
        &self.image
    }

    pub fn schedule(&self) -> &TimingSchedule {
        &self.sched
    }

    /// Memory as of the last commit.
    pub fn committed(&self) -> &Memory {
        &self.committed
    }

    /// Applies writes granted so far.
    pub fn commit(&mut self) {
        for w in self.pending.drain(..) {
            self.committed.write(w.addr, w.be, w.wdata, w.wtag);
        }
    }

    /// Number of data requests granted so far.
    pub fn requests_granted(&self) -> usize {
        self.granted
    }

    pub fn irq(&self) -> bool {
        self.irq
    }

    /// Data the outstanding response will carry, once granted.
    pub fn scheduled_response(&self) -> Option<(u32, bool)> {
        self.response.map(|(_, d)| d)
    }

    fn read_view(&self, addr: u32) -> (u32, bool) {
        let (mut w, mut t) = self.committed.read(addr);
        for p in &self.pending {
            if p.addr & !3 == addr & !3 {
                let mask = byte_mask(p.be);
                w = (w & !mask) | (p.wdata & mask);
            }
            if p.addr >> 3 == addr >> 3 {
                t = p.wtag;
            }
        }
        (w, t)
    }

    pub fn inputs(&mut self, out: &MicroOutputs) -> CycleInputs {
        let mut inp = CycleInputs::default();

        while self.irq_next < self.sched.irq_cycles.len() && self.sched.irq_cycles[self.irq_next] <= self.cycle {
            self.irq = true;
            self.irq_next += 1;
        }
        if out.sleeping {
            self.sleep_age += 1;
            if !self.irq && self.sleep_age >= pick(&self.sched.wfi_wake, self.wakes, 1) {
                self.irq = true;
                self.wakes += 1;
            }
        } else {
            self.sleep_age = 0;
        }
        inp.irq = self.irq;

        if let Some((0, data)) = self.response {
            inp.rvalid = true;
            inp.rdata = data;
            self.response = None;
        }
        if let Some((n, _)) = self.response.as_mut() {
            *n -= 1;
        }

        if out.mem.req && !inp.rvalid && self.response.is_none() {
            if self.req_age >= self.sched.gnt(self.granted) {
                let k = self.granted;
                let r = &out.mem;
                inp.gnt = true;
                let data = if r.we {
                    let w = MemRequest { addr: r.addr, be: r.be, wdata: r.wdata, wtag: r.wtag, we: true };
                    self.pending.push(w);
                    if r.addr & !3 == ACK_ADDR {
                        self.irq = false;
                    }
                    (0, false)
                } else {
                    self.read_view(r.addr)
                };
                self.response = Some((self.sched.rvalid(k) - 1, data));
                self.granted += 1;
                self.req_age = 0;
            } else {
                self.req_age += 1;
            }
        }

        if let Some(addr) = out.fetch_req {
            if self.fetch_wait >= pick(&self.sched.fetch_delay, self.fetches, 0) {
                inp.fetch_valid = true;
                inp.fetch_addr = addr;
                inp.fetch_bits = self.image.fetch(addr);
                self.fetch_wait = 0;
                self.fetches += 1;
            } else {
                self.fetch_wait += 1;
            }
        }

        self.cycle += 1;
        inp
    }
}
