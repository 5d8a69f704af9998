//! Acceptance criteria 1-9. Prints one line per criterion and exits
//! non-zero when any criterion fails.

mod support;

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use cheriot_core::campaign::{job_spec, map_jobs, worker_count, Job, RunConfig};
use cheriot_core::capability::*;
use cheriot_core::check::{b_max, check_run, detection_matrix, directed_test, Checker};
use cheriot_core::micro::{fifo_trace, BuildConfig, FetchFifo, FifoEvent, MutationId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Verdict counts and measurements over one campaign.
struct Corpus {
    programs: usize,
    failures: Vec<(Checker, String)>,
    max_gap: u64,
    tagged_writes_checked: usize,
    elapsed: Duration,
}

impl Corpus {
    fn fails(&self, c: Checker) -> usize {
        self.failures.iter().filter(|f| f.0 == c).count()
    }

    fn first(&self, c: Checker) -> &str {
        self.failures.iter().find(|f| f.0 == c).map_or("", |f| f.1.as_str())
    }
}

fn campaign(seed: u64, programs: usize, insns: usize) -> Corpus {
    let t0 = Instant::now();
    let cfg = RunConfig { seed, programs, insns, ..RunConfig::default() };
    let jobs: Vec<Job> = (0..programs as u64).map(Job::Random).collect();
    let per = map_jobs(&jobs, worker_count(), |j| {
        let (out, v) = check_run(&job_spec(&cfg, j)).expect("valid schedule");
        let fails: Vec<(Checker, String)> = v.iter().filter(|x| !x.passed()).map(|x| (x.checker, format!("{j}: {x}"))).collect();
        // Tagged granules of every pre-state and the final state.
        let mut tagged = 0;
        let mut extra = Vec::new();
        for s in out.records.iter().map(|r| &r.abs).chain(out.final_abs.as_ref()) {
            for (slot, c) in s.tagged_caps() {
                if matches!(slot, cheriot_core::isa::Slot::Granule(_)) {
                    tagged += 1;
                    if !is_mem_wellformed(&c) {
                        extra.push((Checker::MemWellformed, format!("{j}: {slot} {c:?}")));
                    }
                }
            }
        }
        (fails.into_iter().chain(extra).collect::<Vec<_>>(), out.max_gap().max(out.tail_gap), tagged)
    });
    let mut c = Corpus { programs, failures: Vec::new(), max_gap: 0, tagged_writes_checked: 0, elapsed: Duration::ZERO };
    for (f, g, t) in per {
        c.failures.extend(f);
        c.max_gap = c.max_gap.max(g);
        c.tagged_writes_checked += t;
    }
    c.elapsed = t0.elapsed();
    c
}

fn criterion_1() -> Outcome {
    let p = alg1();
    let mut checked = 0u64;
    let mut mismatches = Vec::new();
    let mut check = |a: u32, e: u8, b: u16, t: u16| {
        checked += 1;
        let o = alg1_eval(&p, a, e, b, t);
        let c = cap(a, e, b, t);
        let d = bounds_of(&c);
        let k = corrections_of(&c);
        if (u64::from(d.base), d.top, i64::from(k.base_cor), i64::from(k.top_cor)) != (o.base, o.top, o.c_b, o.c_t) {
            mismatches.push((a, e, b, t));
        }
    };
    let (fields, addrs) = (field_grid(), address_grid());
    for e in exponents() {
        for &b in &fields {
            for &t in &fields {
                for &a in &addrs {
                    check(a, e, b, t);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1_000_000 {
        let e = LEGAL_EXPONENTS[rng.gen_range(0..16)];
        check(rng.gen(), e, rng.gen_range(0..512), rng.gen_range(0..512));
    }
    outcome(mismatches.is_empty(), format!("{checked} inputs, {} mismatches {:x?}", mismatches.len(), mismatches.first()))
}

fn criterion_2() -> Outcome {
    let p = alg1();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = Vec::new();
    for _ in 0..100_000 {
        let a: u32 = rng.gen();
        let len: u32 = rng.gen_range(0..4096);
        let (r, exact) = set_bounds(&Capability::root_memory(a), len);
        let d = bounds_of(&r);
        let (lo, hi) = (u64::from(a), u64::from(a) + u64::from(len));
        let contains = u64::from(d.base) <= lo && hi <= d.top;
        let exact_ok = exact == (u64::from(d.base) == lo && d.top == hi);
        let tag_ok = r.tag == (hi <= 1 << 32);
        let smaller = smaller_superset(&p, a, len, d.length());
        if !contains || !exact_ok || !tag_ok || smaller.is_some() {
            violations.push((a, len, smaller));
        }
    }
    outcome(violations.is_empty(), format!("100000 requests, {} violations {:x?}", violations.len(), violations.first()))
}

fn criterion_3() -> Outcome {
    let representable = representable_sets();
    let mut violations = Vec::new();
    for bits in 0..=255u8 {
        let p = PermissionSet::from_bits_retain(bits);
        let code = perms_encode(p);
        let d = perms_decode(code);
        let sound = d.is_subset_of(p) && d.bits() == perm_table(code.raw()).bits();
        let canonical = perms_encode(d) == code && code.is_canonical();
        if !sound || !canonical {
            violations.push(bits);
        }
    }
    let both = representable
        .iter()
        .filter(|&&s| PermissionSet::from_bits_retain(s).contains(PermissionSet::STORE | PermissionSet::EXECUTE))
        .count();
    let reachable_both = (0..64u8)
        .map(|c| perms_decode(PermCode::from_raw(c)))
        .filter(|s| s.contains(PermissionSet::STORE | PermissionSet::EXECUTE))
        .count();
    outcome(
        violations.is_empty() && both == 0 && reachable_both == 0,
        format!("256 sets, {} encode violations, {} store+execute sets", violations.len(), both + reachable_both),
    )
}

fn criterion_4(c: &Corpus) -> Outcome {
    let n = c.fails(Checker::Dti);
    outcome(n == 0, format!("{} programs x 1000 insns, {n} DTI failures {}", c.programs, c.first(Checker::Dti)))
}

fn criterion_5(c: &Corpus) -> Outcome {
    let checkers = [Checker::Observational, Checker::Follower, Checker::Continuity];
    let n: usize = checkers.iter().map(|&k| c.fails(k)).sum();
    let first = checkers.iter().map(|&k| c.first(k)).find(|s| !s.is_empty()).unwrap_or("");
    outcome(n == 0, format!("{} programs x 256 insns, {n} mismatches {first}", c.programs))
}

fn criterion_6() -> Outcome {
    let mut problems = Vec::new();
    for m in MutationId::ALL {
        let t = directed_test(m);
        let clean = t.detected_by(BuildConfig::default());
        if !clean.is_empty() {
            problems.push(format!("{m} directed test fails unmutated: {clean:?}"));
        }
        let hits = t.detected_by(BuildConfig::with_mutation(m));
        if !hits.contains(&t.detector) {
            problems.push(format!("{m} not detected by {}", t.detector));
        }
    }
    for m in [MutationId::M2, MutationId::M6] {
        if directed_test(m).detector != Checker::Dti
            || !directed_test(m).detected_by(BuildConfig::with_mutation(m)).contains(&Checker::Dti)
        {
            problems.push(format!("{m} not detected by check_dti"));
        }
    }
    let matrix = detection_matrix();
    let diagonal = (0..6).all(|i| matrix[i][i]);
    if !diagonal {
        problems.push(format!("matrix diagonal incomplete: {matrix:?}"));
    }
    let rows: Vec<String> = matrix.iter().map(|r| r.iter().map(|&x| if x { 'X' } else { '.' }).collect()).collect();
    outcome(problems.is_empty(), format!("matrix {} {}", rows.join("/"), problems.join("; ")))
}

fn criterion_7(corpora: &[&Corpus]) -> Outcome {
    let measured = corpora.iter().map(|c| c.max_gap).max().unwrap_or(0);
    let fails: usize = corpora.iter().map(|c| c.fails(Checker::Liveness)).sum();
    outcome(measured <= b_max() && fails == 0, format!("max gap {measured}, bound {}", b_max()))
}

fn criterion_8(c: &Corpus) -> Outcome {
    let n = c.fails(Checker::MemWellformed);
    outcome(n == 0, format!("{} tagged granule observations, {n} ill-formed {}", c.tagged_writes_checked, c.first(Checker::MemWellformed)))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0usize;
    let mut dequeues = 0usize;
    for _ in 0..100_000 {
        let mut fifo = FetchFifo::default();
        let mut model: VecDeque<(u32, u32)> = VecDeque::new();
        let mut events = Vec::new();
        for _ in 0..rng.gen_range(1..40) {
            match rng.gen_range(0..10) {
                0..=4 => {
                    let (addr, bits) = (rng.gen::<u32>() & !3, rng.gen());
                    if fifo.enqueue(addr, bits) {
                        model.push_back((addr, bits));
                        events.push(FifoEvent::Enqueue { addr, bits });
                    }
                }
                5..=8 => {
                    let got = fifo.dequeue();
                    if got != model.pop_front() {
                        violations += 1;
                    }
                    if let Some((addr, bits)) = got {
                        dequeues += 1;
                        events.push(FifoEvent::Dequeue { addr, bits });
                    }
                }
                _ => {
                    fifo.flush();
                    model.clear();
                    events.push(FifoEvent::Flush);
                }
            }
        }
        match fifo_trace(&events) {
            Some(pairs) if pairs.iter().all(|(e, d)| e == d) => {}
            _ => violations += 1,
        }
    }
    outcome(violations == 0, format!("100000 sequences, {dequeues} dequeues, {violations} violations"))
}

fn main() {
    let mut all_pass = true;
    let mut report = |n: u32, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> (Outcome, Duration)| {
        let (o, took) = f();
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = o.pass && in_time;
        all_pass &= pass;
        let limit_s = limit.map_or("none".to_string(), |l| format!("{}s", l.as_secs()));
        println!(
            "criterion {n} {name}: {} ({}; {:.2}s, limit {limit_s})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    };
    let timed = |f: fn() -> Outcome| {
        move || {
            let t0 = Instant::now();
            let o = f();
            (o, t0.elapsed())
        }
    };
    let secs = Duration::from_secs;

    report(1, "bounds oracle equivalence", Some(secs(60)), &mut timed(criterion_1));
    report(2, "set_bounds minimality", Some(secs(300)), &mut timed(criterion_2));
    report(3, "permission lattice", Some(secs(1)), &mut timed(criterion_3));
    let dti = campaign(0xD71, 100, 1000);
    report(4, "DTI campaign", Some(secs(600)), &mut || (criterion_4(&dti), dti.elapsed));
    let obs = campaign(0x0B5, 1000, 256);
    report(5, "observational correctness", Some(secs(1800)), &mut || (criterion_5(&obs), obs.elapsed));
    report(6, "mutation sensitivity", Some(secs(300)), &mut timed(criterion_6));
    report(7, "liveness bound", Some(secs(600)), &mut || {
        let t0 = Instant::now();
        let o = criterion_7(&[&dti, &obs]);
        (o, t0.elapsed() + dti.elapsed + obs.elapsed)
    });
    report(8, "memory well-formedness", None, &mut || (criterion_8(&dti), dti.elapsed));
    report(9, "fetch FIFO", Some(secs(10)), &mut timed(criterion_9));

    if !all_pass {
        std::process::exit(1);
    }
}
