//! Closed-loop runs of the microcore with its environment driver, with the
//! online checkers attached and a record of every spec_en for the offline
//! checkers.
//!
//! Program layout: a prelude at the reset pc installs the trap vector and
//! an acknowledge capability, the body follows, then self-loops. The trap
//! handler skips the faulting instruction, or acknowledges an interrupt.
//! Registers x13 (acknowledge capability), x14 and x15 (handler scratch)
//! belong to the harness.

use crate::capability::{is_mem_wellformed, Capability};
use crate::isa::decode::{AluOp, BranchOp, CapOp, CsrOp, CsrSrc, StoreOp, CSR_MCAUSE, SCR_MEPCC, SCR_MTCC};
use crate::isa::{
    encode, fill_inputs, load_filter, mstatus_value, ArchInput, ArchState, ClearRule, Instruction,
    Memory, RESET_PC,
};
use crate::micro::exec::{finish_word_load, LoadKind};
use crate::micro::{
    abs, fifo_trace, micro_step, outputs, BuildConfig, Driver, FifoEvent, LsuPhase, MicroState,
    PortOutputs, ProgramImage, SpecEnKind, TimingSchedule, WbEntry, WbState, ACK_ADDR,
};
use crate::trace::{TraceKind, TraceRecord};

use super::follower::Follower;
use super::liveness::{b_max, check_liveness};
use super::trace_checks::{check_continuity, check_monotonicity, check_observational};
use super::{check_dti, Checker, Failure, Verdict};

pub const HANDLER_PC: u32 = RESET_PC + 0x8_0000;
pub const ACK_REG: u8 = 13;
/// Registers the generated body must not write.
pub const RESERVED_REGS: [u8; 3] = [13, 14, 15];

pub fn prelude() -> Vec<Instruction> {
    use Instruction as I;
    vec![
        I::Auipcc { rd: 15, imm: HANDLER_PC - RESET_PC },
        I::CSpecialRw { rd: 0, rs1: 15, scr: SCR_MTCC },
        I::OpImm { op: AluOp::Add, rd: 14, rs1: 0, imm: ACK_ADDR as i32 },
        I::Cap { op: CapOp::SetAddr, rd: ACK_REG, rs1: 1, rs2: 14 },
        I::OpImm { op: AluOp::Add, rd: 14, rs1: 0, imm: 0 },
    ]
}

pub fn handler() -> Vec<Instruction> {
    use Instruction as I;
    vec![
        I::Csr { op: CsrOp::Rs, rd: 14, src: CsrSrc::Reg(0), csr: CSR_MCAUSE },
        I::Branch { op: BranchOp::Blt, rs1: 14, rs2: 0, imm: 24 },
        I::CSpecialRw { rd: 15, rs1: 0, scr: SCR_MEPCC },
        I::OpImm { op: AluOp::Add, rd: 14, rs1: 0, imm: 4 },
        I::Cap { op: CapOp::IncAddr, rd: 15, rs1: 15, rs2: 14 },
        I::CSpecialRw { rd: 0, rs1: 15, scr: SCR_MEPCC },
        I::Mret,
        I::Store { op: StoreOp::Sw, rs1: ACK_REG, rs2: 0, imm: 0 },
        I::Mret,
    ]
}

pub fn body_pc() -> u32 {
    RESET_PC + 4 * prelude().len() as u32
}

/// Address of the self-loop after a body of `len` words.
pub fn end_pc(len: usize) -> u32 {
    body_pc() + 4 * len as u32
}

/// Harness layout around `body`, plus code placed at fixed addresses.
pub fn build_image(body: &[u32], extra: &[(u32, Vec<u32>)]) -> ProgramImage {
    let mut img = ProgramImage::new();
    for (addr, words) in extra {
        img.place(*addr, words);
    }
    let pre: Vec<u32> = prelude().iter().map(encode).collect();
    img.place(RESET_PC, &pre);
    img.place(body_pc(), body);
    let spin = encode(&Instruction::Cjal { rd: 0, imm: 0 });
    img.place(end_pc(body.len()), &[spin]);
    let h: Vec<u32> = handler().iter().map(encode).collect();
    img.place(HANDLER_PC, &h);
    img
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub body: Vec<u32>,
    /// Code outside the body, by start address.
    pub extra_code: Vec<(u32, Vec<u32>)>,
    pub mem_seed: u64,
    pub schedule: TimingSchedule,
    pub build: BuildConfig,
    pub clear_rules: Vec<ClearRule>,
    /// Stop after this many spec_en events.
    pub max_steps: usize,
    pub max_cycles: u64,
    /// Reproducer attached to verdicts.
    pub seed: u64,
    pub record_trace: bool,
}

impl RunSpec {
    pub fn new(body: Vec<u32>, schedule: TimingSchedule, build: BuildConfig) -> Self {
        let max_steps = 4 * body.len() + 64;
        RunSpec {
            body,
            extra_code: Vec::new(),
            mem_seed: 0,
            schedule,
            build,
            clear_rules: Vec::new(),
            max_steps,
            max_cycles: 64 * max_steps as u64,
            seed: 0,
            record_trace: false,
        }
    }
}

/// One specification query point.
#[derive(Clone, Debug)]
pub struct SpecEnRecord {
    pub cycle: u64,
    /// Abstract state before the step.
    pub abs: ArchState,
    pub input: ArchInput,
    pub kind: SpecEnKind,
    /// Port outputs since the previous spec_en, this cycle included.
    pub window: Vec<PortOutputs>,
    /// Run-wide index of the first request in `window`.
    pub first_request: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub image: ProgramImage,
    pub initial: ArchState,
    pub records: Vec<SpecEnRecord>,
    /// Abstract state after the last recorded step, once the pipeline drained.
    pub final_abs: Option<ArchState>,
    /// First failure of each online checker.
    pub online: Vec<(Checker, Failure)>,
    /// Cycles between consecutive spec_en events, the first counted from reset.
    pub gaps: Vec<u64>,
    pub cycles: u64,
    /// Cycles since the last spec_en when the run stopped between steps.
    pub tail_gap: u64,
    pub trace: Vec<TraceRecord>,
}

impl RunOutcome {
    pub fn max_gap(&self) -> u64 {
        self.gaps.iter().copied().max().unwrap_or(0)
    }

    fn fail(&mut self, c: Checker, f: Failure) {
        if !self.online.iter().any(|(x, _)| *x == c) {
            self.online.push((c, f));
        }
    }
}

fn arch_input(a: &ArchState, img: &ProgramImage, irq: bool, cfg: &BuildConfig) -> ArchInput {
    let probe = ArchInput { instr_bits: img.fetch(a.pc()), irq_pending: irq, mem_read_data: Vec::new() };
    fill_inputs(a, &probe, &cfg.spec)
}

fn arch_fields(m: &MicroState) -> impl PartialEq + std::fmt::Debug {
    (m.pc, m.pcc, m.mtcc, m.mepcc, m.mtval, m.mcause, m.mie, m.mpie)
}

/// Load value predicted from the response the environment has scheduled.
fn predicted_load(kind: LoadKind, responses: &[(u32, bool)]) -> Capability {
    match kind {
        LoadKind::Word { op, addr } => Capability::from_int(finish_word_load(op, addr, responses)),
        LoadKind::Cap { auth } => {
            let (lo, t0) = responses[0];
            let (hi, t1) = responses[1];
            let c = Capability::from_bits(u64::from(lo) | (u64::from(hi) << 32), t0 && t1);
            load_filter(c, &auth.cap)
        }
    }
}

/// Executes `spec` with the online checkers attached.
pub fn run(spec: &RunSpec) -> Result<RunOutcome, crate::micro::ScheduleError> {
    let cfg = spec.build;
    let image = build_image(&spec.body, &spec.extra_code);
    let mem = Memory::new(spec.mem_seed);
    let initial = ArchState::reset(mem.clone());
    let mut driver = Driver::new(image.clone(), mem, spec.schedule.clone())?;
    let mut out = RunOutcome {
        spec: spec.clone(),
        image: image.clone(),
        initial,
        records: Vec::new(),
        final_abs: None,
        online: Vec::new(),
        gaps: Vec::new(),
        cycles: 0,
        tail_gap: 0,
        trace: Vec::new(),
    };
    let mut follower = Follower::new(cfg.spec, &spec.clear_rules);
    let mut m = MicroState::reset();
    if let Err(f) = check_dti(&m, 0) {
        out.fail(Checker::Dti, f);
    }
    let end = end_pc(spec.body.len());
    let mut fifo_events: Vec<FifoEvent> = Vec::new();
    let mut window: Vec<PortOutputs> = Vec::new();
    let mut window_start = 0usize;
    let mut window_writes: Vec<u32> = Vec::new();
    let mut last_spec_en: Option<u64> = None;
    let mut prev_ports = PortOutputs::default();
    let mut prev_gnt = false;
    let mut prev_irq = false;
    let mut prediction: Option<(u8, Capability)> = None;
    let mut cycle = 0u64;

    let stuck = 2 * b_max() + 16;
    let mut finished = false;
    while cycle < spec.max_cycles && out.records.len() < spec.max_steps {
        let since = last_spec_en.map_or(cycle + 1, |p| cycle - p);
        if since > stuck {
            break;
        }
        // Alternative reality: the value a pending load will produce.
        if let Some(WbEntry { rd, state: WbState::Waiting(kind) }) = m.wb {
            let last = matches!(kind, LoadKind::Word { .. }) && m.lsu.reqs.len() == 1
                || m.lsu.phase == LsuPhase::WaitRvalid2;
            if last && matches!(m.lsu.phase, LsuPhase::WaitRvalid1 | LsuPhase::WaitRvalid2) {
                if let Some(d) = driver.scheduled_response() {
                    let mut rs = m.lsu.responses.clone();
                    rs.push(d);
                    prediction = Some((rd, predicted_load(kind, &rs)));
                }
            }
        }

        let outs = outputs(&m);
        let inp = driver.inputs(&outs);
        let (n, ev) = micro_step(&m, &inp, &cfg);

        let arch = (ev.issued || ev.spec_en.is_some()).then(|| {
            let a = abs(&m, driver.committed());
            let irq = ev.spec_en.map_or(inp.irq, |s| s.irq);
            let i = arch_input(&a, &image, irq, &cfg);
            (a, i)
        });

        if let Err(f) = check_dti(&n, cycle) {
            out.fail(Checker::Dti, f);
        }
        if let Err(f) = follower.on_cycle(cycle, &n, &ev, arch.as_ref()) {
            out.fail(Checker::Follower, f);
        }
        if let Some(v) = &ev.violation {
            let c = if v.starts_with("fetch") { Checker::FetchFifo } else { Checker::Protocol };
            out.fail(c, Failure::new(cycle, "handshake", "no violation", v));
        }
        if prev_ports.req && !prev_gnt && ev.ports != prev_ports {
            out.fail(Checker::Protocol, Failure::new(cycle, "req_stable_until_gnt", prev_ports, ev.ports));
        }
        if ev.stalled_on_mem && ev.spec_en.is_none() && arch_fields(&m) != arch_fields(&n) {
            out.fail(Checker::StallPurity, Failure::new(cycle, "stall_purity", arch_fields(&m), arch_fields(&n)));
        }
        if let Some(WbEntry { rd, state: WbState::Ready(v) }) = n.wb {
            if matches!(m.wb, Some(WbEntry { state: WbState::Waiting(_), .. })) {
                if let Some((prd, pv)) = prediction.take() {
                    if prd != rd || pv != v.cap {
                        out.fail(Checker::LsuAlternative, Failure::new(cycle, "load_value", (prd, pv), (rd, v.cap)));
                    }
                }
            }
        }
        fifo_events.extend(ev.fifo.iter().copied());
        window.push(ev.ports);
        if ev.lsu.granted && ev.ports.we && ev.ports.wtag {
            window_writes.push(ev.ports.addr & !7);
        }

        if spec.record_trace {
            if inp.irq != prev_irq {
                out.trace.push(TraceRecord::new(cycle, TraceKind::Irq, &[u64::from(inp.irq)]));
            }
            if ev.lsu.granted {
                let p = ev.ports;
                let v = [p.addr.into(), p.be.into(), p.we.into(), p.wdata.into(), p.wtag.into()];
                out.trace.push(TraceRecord::new(cycle, TraceKind::PortOut, &v));
            }
            if let Some((rd, v)) = ev.rf_commit {
                let vals = [rd.into(), v.cap.to_bits(), v.cap.tag.into()];
                out.trace.push(TraceRecord::new(cycle, TraceKind::CommitRf, &vals));
            }
        }
        prev_irq = inp.irq;
        prev_ports = ev.ports;
        prev_gnt = inp.gnt;

        if let Some(se) = ev.spec_en {
            let (a, i) = arch.expect("computed at spec_en");
            if spec.record_trace {
                let (k, trap) = match se.kind {
                    SpecEnKind::Retire => (0, None),
                    SpecEnKind::Trap { cause, mtval } => (1, Some((cause.code(), mtval))),
                    SpecEnKind::Interrupt => (2, Some((n.mcause, 0))),
                };
                out.trace.push(TraceRecord::new(cycle, TraceKind::SpecEn, &[a.pc().into(), k, se.irq.into()]));
                if let Some((c, v)) = trap {
                    out.trace.push(TraceRecord::new(cycle, TraceKind::Trap, &[c.into(), v.into()]));
                }
                if (n.mcause, n.mtval, n.mie, n.mpie) != (m.mcause, m.mtval, m.mie, m.mpie) {
                    let st = mstatus_value(n.mie, n.mpie);
                    out.trace.push(TraceRecord::new(
                        cycle,
                        TraceKind::CommitCsr,
                        &[n.mcause.into(), n.mtval.into(), st.into()],
                    ));
                }
            }
            out.gaps.push(last_spec_en.map_or(cycle + 1, |p| cycle - p));
            last_spec_en = Some(cycle);
            out.records.push(SpecEnRecord {
                cycle,
                abs: a,
                input: i,
                kind: se.kind,
                window: std::mem::take(&mut window),
                first_request: window_start,
            });
            driver.commit();
            window_start = driver.requests_granted();
            for g in window_writes.drain(..) {
                let c = driver.committed().read_cap(g);
                if !is_mem_wellformed(&c) {
                    out.fail(Checker::MemWellformed, Failure::new(cycle, format!("granule {g:#x}"), "well-formed", c));
                }
            }
            if n.pc == end && n.ex_mem.is_none() {
                m = n;
                cycle += 1;
                finished = true;
                break;
            }
        }
        m = n;
        cycle += 1;
    }

    if !finished && out.records.len() < spec.max_steps {
        out.tail_gap = last_spec_en.map_or(cycle, |p| cycle - 1 - p);
    }

    // Drain the pipeline without starting another step.
    for _ in 0..64 {
        let idle = m.lsu.is_idle() && m.ex_mem.is_none();
        let wb_done = !matches!(m.wb, Some(WbEntry { state: WbState::Waiting(_), .. }));
        if idle && wb_done {
            out.final_abs = Some(abs(&m, driver.committed()));
            break;
        }
        let mut d = driver.clone();
        let inp = d.inputs(&outputs(&m));
        let (n, ev) = micro_step(&m, &inp, &cfg);
        if ev.spec_en.is_some() {
            break;
        }
        driver = d;
        m = n;
        cycle += 1;
    }
    out.cycles = cycle;

    match fifo_trace(&fifo_events) {
        Some(pairs) => {
            if let Some((e, d)) = pairs.into_iter().find(|(e, d)| e != d) {
                out.fail(Checker::FetchFifo, Failure::new(cycle, "dequeue_address", e, d));
            }
        }
        None => out.fail(Checker::FetchFifo, Failure::new(cycle, "fifo_order", "matching enqueue", "none")),
    }
    Ok(out)
}

/// Runs `spec` and evaluates every checker on it.
pub fn check_run(spec: &RunSpec) -> Result<(RunOutcome, Vec<Verdict>), crate::micro::ScheduleError> {
    let out = run(spec)?;
    let v = verdicts(&out);
    Ok((out, v))
}

/// Online failures plus the offline checkers, one verdict per checker.
pub fn verdicts(out: &RunOutcome) -> Vec<Verdict> {
    let seed = out.spec.seed;
    let cfg = out.spec.build.spec;
    let rules = &out.spec.clear_rules;
    let bound = b_max();
    let offline = [
        (Checker::Continuity, check_continuity(out, &cfg, rules)),
        (Checker::Observational, check_observational(out, &cfg, rules)),
        (Checker::Monotonicity, check_monotonicity(out, &cfg)),
        (Checker::Liveness, check_liveness(out, bound)),
    ];
    let mut v: Vec<Verdict> = Checker::ALL
        .into_iter()
        .filter(|c| !offline.iter().any(|(o, _)| o == c))
        .map(|c| {
            let f = out.online.iter().find(|(x, _)| *x == c).map(|(_, f)| f.clone());
            Verdict { checker: c, failure: f, seed, program: None }
        })
        .collect();
    v.extend(offline.into_iter().map(|(c, r)| Verdict::from_result(c, seed, r)));
    v.sort_by_key(|x| x.checker);
    v
}
