//! Checkers over the spec_en records of a finished run.

use std::collections::HashSet;

use crate::capability::Capability;
use crate::isa::{
    cspec_step, fill_inputs, first_divergence, spec_step, ArchInput, ArchState, ClearRule, SpecConfig,
};

use super::harness::RunOutcome;
use super::ports::{expected_port_events, trim_leading_idle};
use super::Failure;

/// Abstract state after step `n`: the next record's pre-state, or the
/// drained final state after the last one.
fn post_state(out: &RunOutcome, n: usize) -> Option<&ArchState> {
    out.records.get(n + 1).map(|r| &r.abs).or(if n + 1 == out.records.len() { out.final_abs.as_ref() } else { None })
}

/// Inductive step of state matching: each query's abstract pre-state is
/// stricter than or equal to the previous query's result.
pub fn check_continuity(out: &RunOutcome, cfg: &SpecConfig, rules: &[ClearRule]) -> Result<(), Failure> {
    for (n, rec) in out.records.iter().enumerate() {
        let Some(next) = post_state(out, n) else { break };
        let r = cspec_step(&rec.abs, &rec.input, cfg, rules);
        if let Some(d) = first_divergence(next, &r.state, true) {
            let cycle = out.records.get(n + 1).map_or(out.cycles, |x| x.cycle);
            return Err(Failure::new(cycle, format!("continuity after step {n}"), "abs ⊑ CSpec result", d));
        }
    }
    Ok(())
}

/// Iterates the specification from reset on its own and compares every
/// abstract state and every window of port outputs with it.
pub fn check_observational(out: &RunOutcome, cfg: &SpecConfig, rules: &[ClearRule]) -> Result<(), Failure> {
    let strict = !rules.is_empty();
    let mut a = out.initial.clone();
    for (n, rec) in out.records.iter().enumerate() {
        if let Some(d) = first_divergence(&rec.abs, &a, strict) {
            return Err(Failure::new(rec.cycle, format!("state_matching at step {n}"), "abs = a_n", d));
        }
        let probe = ArchInput {
            instr_bits: out.image.fetch(a.pc()),
            irq_pending: rec.input.irq_pending,
            mem_read_data: Vec::new(),
        };
        let i = fill_inputs(&a, &probe, cfg);
        let r = cspec_step(&a, &i, cfg, rules);
        let expected = expected_port_events(&r.out, &out.spec.schedule, rec.first_request);
        let actual = trim_leading_idle(&rec.window);
        if expected != actual {
            return Err(Failure::new(rec.cycle, format!("port_events at step {n}"), expected, actual));
        }
        a = r.state;
    }
    if let Some(f) = &out.final_abs {
        if let Some(d) = first_divergence(f, &a, strict) {
            return Err(Failure::new(out.cycles, "state_matching at end", "abs = a_n", d));
        }
    }
    Ok(())
}

/// Capabilities delivered by the step's read responses, pairwise.
fn input_caps(i: &ArchInput) -> impl Iterator<Item = Capability> + '_ {
    i.mem_read_data.chunks(2).filter(|c| c.len() == 2).map(|c| {
        let (lo, t0) = c[0];
        let (hi, t1) = c[1];
        Capability::from_bits(u64::from(lo) | (u64::from(hi) << 32), t0 && t1)
    })
}

/// Every tagged capability that appears in a step's post-state without
/// being copied from the pre-state must be a monotone derivation of the
/// parent the specification records for it.
pub fn check_monotonicity(out: &RunOutcome, cfg: &SpecConfig) -> Result<(), Failure> {
    for (n, rec) in out.records.iter().enumerate() {
        let Some(next) = post_state(out, n) else { break };
        let before: HashSet<Capability> = rec
            .abs
            .tagged_caps()
            .into_iter()
            .map(|(_, c)| c)
            .chain(input_caps(&rec.input))
            .collect();
        let r = spec_step(&rec.abs, &rec.input, cfg);
        for (slot, c) in next.tagged_caps() {
            if before.contains(&c) {
                continue;
            }
            let Some(d) = r.derivations.iter().rev().find(|d| d.dest == slot) else {
                return Err(Failure::new(rec.cycle, format!("unexplained capability in {slot}"), "a recorded derivation", c));
            };
            let p = rec.abs.slot(d.parent);
            let what = format!("{} {} <- {}", d.op, slot, d.parent);
            if !p.tag {
                return Err(Failure::new(rec.cycle, format!("{what}: untagged parent"), p, c));
            }
            if !c.bounds().is_subset_of(&p.bounds()) {
                return Err(Failure::new(rec.cycle, format!("{what}: bounds escape"), p.bounds(), c.bounds()));
            }
            if !c.permissions().is_subset_of(p.permissions()) {
                return Err(Failure::new(
                    rec.cycle,
                    format!("{what}: gained permission"),
                    p.permissions(),
                    c.permissions(),
                ));
            }
        }
    }
    Ok(())
}
