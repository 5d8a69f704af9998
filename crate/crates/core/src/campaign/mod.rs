//! Fuzz campaigns: job enumeration, seeded schedules, parallel execution,
//! per-run trace files and verdict files.

pub mod cli;
mod report;
mod trace_file;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::check::{check_run, directed_test, gen_program, minimize, Checker, GenWeights, RunOutcome, RunSpec, Verdict};
use crate::isa::{EbreakMtval, SpecConfig};
use crate::micro::{BuildConfig, MutationId, TimingSchedule, MAX_FETCH_DELAY, MAX_LATENCY, MAX_WFI_WAKE};
use crate::trace::{TraceKind, TraceRecord};

pub use report::{parse_run_file, render_run_file, Report, RunSummary};
pub use trace_file::{parse_trace_file, render_trace_file, TraceFile};

/// Environment variable holding the campaign worker count.
pub const WORKERS_ENV: &str = "CHERIOT_WORKERS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub programs: usize,
    pub insns: usize,
    pub max_gnt_latency: u32,
    pub max_rvalid_latency: u32,
    pub wfi_wake_bound: u32,
    pub mutation: Option<MutationId>,
    pub mtval_on_ebreak: EbreakMtval,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            programs: 10,
            insns: 64,
            max_gnt_latency: MAX_LATENCY,
            max_rvalid_latency: MAX_LATENCY,
            wfi_wake_bound: MAX_WFI_WAKE,
            mutation: None,
            mtval_on_ebreak: EbreakMtval::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{name} = {value} outside 1..={max}")]
    OutOfRange { name: &'static str, value: u32, max: u32 },
    #[error("bad value for {name}: `{value}`")]
    BadValue { name: String, value: String },
    #[error("missing field {0}")]
    Missing(&'static str),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value, max) in [
            ("max-gnt-latency", self.max_gnt_latency, MAX_LATENCY),
            ("max-rvalid-latency", self.max_rvalid_latency, MAX_LATENCY),
            ("wfi-wake-bound", self.wfi_wake_bound, MAX_WFI_WAKE),
        ] {
            if !(1..=max).contains(&value) {
                return Err(ConfigError::OutOfRange { name, value, max });
            }
        }
        Ok(())
    }

    pub fn build(&self) -> BuildConfig {
        BuildConfig {
            mutation: self.mutation,
            spec: SpecConfig { ebreak_mtval: self.mtval_on_ebreak },
            ..BuildConfig::default()
        }
    }

    /// `key=value` fields that, with a [`Job`], determine a run.
    pub fn fields(&self) -> String {
        format!(
            "seed={:#x} insns={} max-gnt-latency={} max-rvalid-latency={} wfi-wake-bound={} mutation={} mtval-on-ebreak={}",
            self.seed,
            self.insns,
            self.max_gnt_latency,
            self.max_rvalid_latency,
            self.wfi_wake_bound,
            self.mutation.map_or("none".to_string(), |m| m.to_string()),
            match self.mtval_on_ebreak {
                EbreakMtval::Zero => "zero",
                EbreakMtval::Pc => "pc",
            }
        )
    }

    /// Inverse of [`RunConfig::fields`]; unknown keys are rejected.
    pub fn from_fields<'a>(kv: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, ConfigError> {
        fn num<T: FromStr>(name: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::BadValue { name: name.into(), value: v.into() })
        }
        let mut c = RunConfig::default();
        let mut seen_seed = false;
        for (k, v) in kv {
            match k {
                "seed" => {
                    c.seed = u64::from_str_radix(v.trim_start_matches("0x"), 16)
                        .map_err(|_| ConfigError::BadValue { name: k.into(), value: v.into() })?;
                    seen_seed = true;
                }
                "insns" => c.insns = num(k, v)?,
                "max-gnt-latency" => c.max_gnt_latency = num(k, v)?,
                "max-rvalid-latency" => c.max_rvalid_latency = num(k, v)?,
                "wfi-wake-bound" => c.wfi_wake_bound = num(k, v)?,
                "mutation" => {
                    c.mutation = match v {
                        "none" => None,
                        _ => Some(num(k, v)?),
                    }
                }
                "mtval-on-ebreak" => c.mtval_on_ebreak = parse_ebreak(v)?,
                _ => return Err(ConfigError::BadValue { name: k.into(), value: v.into() }),
            }
        }
        if !seen_seed {
            return Err(ConfigError::Missing("seed"));
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn parse_ebreak(v: &str) -> Result<EbreakMtval, ConfigError> {
    match v {
        "zero" => Ok(EbreakMtval::Zero),
        "pc" => Ok(EbreakMtval::Pc),
        _ => Err(ConfigError::BadValue { name: "mtval-on-ebreak".into(), value: v.into() }),
    }
}

/// One run of a campaign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Job {
    /// Checked-in program targeting a mutation.
    Directed(MutationId),
    /// Generated program number `n` of the campaign.
    Random(u64),
}

impl fmt::Display for Job {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Job::Directed(m) => write!(f, "directed-{m}"),
            Job::Random(n) => write!(f, "random-{n:06}"),
        }
    }
}

impl FromStr for Job {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadValue { name: "job".into(), value: s.into() };
        if let Some(m) = s.strip_prefix("directed-") {
            return m.parse().map(Job::Directed).map_err(|_| bad());
        }
        if let Some(n) = s.strip_prefix("random-") {
            return n.parse().map(Job::Random).map_err(|_| bad());
        }
        Err(bad())
    }
}

/// Jobs of a campaign: the directed corpus, then the generated programs.
pub fn jobs(cfg: &RunConfig) -> Vec<Job> {
    MutationId::ALL
        .into_iter()
        .map(Job::Directed)
        .chain((0..cfg.programs as u64).map(Job::Random))
        .collect()
}

/// Random schedule within the configured bounds.
pub fn random_schedule(rng: &mut impl Rng, cfg: &RunConfig, insns: usize) -> TimingSchedule {
    let mut list = |n: usize, lo: u32, hi: u32| -> Vec<u32> { (0..n).map(|_| rng.gen_range(lo..=hi)).collect() };
    let gnt_latency = list(32, 1, cfg.max_gnt_latency);
    let rvalid_latency = list(32, 1, cfg.max_rvalid_latency);
    let fetch_delay = list(16, 0, MAX_FETCH_DELAY);
    let wfi_wake = list(8, 1, cfg.wfi_wake_bound);
    let horizon = 8 * insns as u64 + 64;
    let mut irq_cycles: Vec<u64> = (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(0..horizon)).collect();
    irq_cycles.sort_unstable();
    TimingSchedule { gnt_latency, rvalid_latency, fetch_delay, wfi_wake, irq_cycles }
}

/// The fully determined run of `job` under `cfg`.
pub fn job_spec(cfg: &RunConfig, job: Job) -> RunSpec {
    match job {
        Job::Directed(m) => {
            let mut s = directed_test(m).spec;
            s.build = cfg.build();
            s
        }
        Job::Random(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(n);
            let body_seed: u64 = rng.gen();
            let schedule = random_schedule(&mut rng, cfg, cfg.insns);
            let mut s = RunSpec::new(gen_program(body_seed, cfg.insns, &GenWeights::default()), schedule, cfg.build());
            s.mem_seed = rng.gen();
            s.seed = body_seed;
            s
        }
    }
}

/// Verdicts and measurements of one job.
#[derive(Clone, Debug)]
pub struct JobResult {
    pub job: Job,
    pub verdicts: Vec<Verdict>,
    pub max_gap: u64,
    pub cycles: u64,
    pub trace: Vec<TraceRecord>,
}

impl JobResult {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }
}

fn failing_checkers(spec: &RunSpec) -> Vec<Checker> {
    match check_run(spec) {
        Ok((_, v)) => v.into_iter().filter(|x| !x.passed()).map(|x| x.checker).collect(),
        Err(_) => Vec::new(),
    }
}

/// Trace records of `out` followed by one verdict record per checker.
pub fn full_trace(out: &RunOutcome, verdicts: &[Verdict]) -> Vec<TraceRecord> {
    let mut t = out.trace.clone();
    let end = t.last().map_or(out.cycles, |r| r.cycle.max(out.cycles));
    for v in verdicts {
        let idx = Checker::ALL.iter().position(|c| *c == v.checker).unwrap_or(0) as u64;
        t.push(TraceRecord::new(end, TraceKind::Verdict, &[idx, u64::from(v.passed())]));
    }
    t
}

/// What [`run_job`] produces beyond verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct JobOptions {
    /// Attach a minimized program body to failing verdicts of generated programs.
    pub minimize: bool,
    pub trace: bool,
}

/// Runs one job.
pub fn run_job(cfg: &RunConfig, job: Job, opts: JobOptions) -> JobResult {
    let mut spec = job_spec(cfg, job);
    spec.record_trace = opts.trace;
    let (out, mut verdicts) = check_run(&spec).expect("schedules are generated within bounds");
    if opts.minimize && matches!(job, Job::Random(_)) {
        for v in verdicts.iter_mut().filter(|v| !v.passed()) {
            let c = v.checker;
            let mut quiet = spec.clone();
            quiet.record_trace = false;
            let small = minimize(&quiet, |s| failing_checkers(s).contains(&c));
            v.program = Some(small.body);
        }
    }
    let trace = if opts.trace { full_trace(&out, &verdicts) } else { Vec::new() };
    JobResult { job, max_gap: out.max_gap().max(out.tail_gap), cycles: out.cycles, verdicts, trace }
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `jobs` on `workers` threads; results come back in job order.
pub fn run_jobs(cfg: &RunConfig, jobs: &[Job], workers: usize, opts: JobOptions) -> Vec<JobResult> {
    map_jobs(jobs, workers, |j| run_job(cfg, j, opts))
}

/// Applies `f` to every job on `workers` threads, keeping job order.
pub fn map_jobs<T: Send>(jobs: &[Job], workers: usize, f: impl Fn(Job) -> T + Sync) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| jobs.par_iter().map(|&j| f(j)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latency_bounds_are_validated() {
        let c = RunConfig { max_gnt_latency: 11, ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(ConfigError::OutOfRange { name: "max-gnt-latency", .. })));
        let c = RunConfig { wfi_wake_bound: 17, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { max_rvalid_latency: 0, ..RunConfig::default() };
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn config_fields_round_trip() {
        let c = RunConfig {
            seed: 0xabc,
            insns: 99,
            max_gnt_latency: 3,
            mutation: Some(MutationId::M5),
            mtval_on_ebreak: EbreakMtval::Pc,
            ..RunConfig::default()
        };
        let f = c.fields();
        let kv = f.split(' ').map(|x| x.split_once('=').unwrap());
        let back = RunConfig::from_fields(kv).unwrap();
        assert_eq!(back, RunConfig { programs: RunConfig::default().programs, ..c });
    }

    #[test]
    fn job_names_round_trip() {
        for j in [Job::Directed(MutationId::M2), Job::Random(0), Job::Random(123456)] {
            assert_eq!(j.to_string().parse::<Job>().unwrap(), j);
        }
        assert!("random-x".parse::<Job>().is_err());
    }

    #[test]
    fn schedules_respect_configured_bounds() {
        let cfg = RunConfig { max_gnt_latency: 2, max_rvalid_latency: 3, wfi_wake_bound: 4, ..RunConfig::default() };
        for n in 0..20 {
            let s = job_spec(&cfg, Job::Random(n)).schedule;
            assert!(s.validate().is_ok());
            assert!(s.gnt_latency.iter().all(|&g| g <= 2));
            assert!(s.rvalid_latency.iter().all(|&r| r <= 3));
            assert!(s.wfi_wake.iter().all(|&w| w <= 4));
        }
    }

    #[test]
    fn jobs_are_reproducible() {
        let cfg = RunConfig { seed: 5, insns: 48, ..RunConfig::default() };
        let opts = JobOptions { minimize: false, trace: true };
        let a = run_job(&cfg, Job::Random(2), opts);
        let b = run_job(&cfg, Job::Random(2), opts);
        assert!(!a.trace.is_empty());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.verdicts, b.verdicts);
        assert!(a.passed());
    }
}
