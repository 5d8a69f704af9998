//! `cheriot-verify` command line: `fuzz`, `replay` and `report`.
//!
//! Exit codes: 0 all checks pass, 1 a checker failed, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::micro::{MutationId, MAX_LATENCY, MAX_WFI_WAKE};

use super::{
    jobs, map_jobs, parse_ebreak, parse_run_file, parse_trace_file, render_run_file, render_trace_file, run_job,
    worker_count, ConfigError, Job, JobOptions, Report, RunConfig, RunSummary, TraceFile,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cheriot-verify", about = "Differential checking of the CHERIoT core model against its specification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the directed corpus and a seeded random campaign.
    Fuzz(FuzzArgs),
    /// Re-run one job from a trace file or a seed tuple and dump its trace.
    Replay(ReplayArgs),
    /// Summarize a directory of verdict files.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    #[arg(long, default_value_t = 0, value_parser = parse_u64)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    insns: usize,
    #[arg(long, default_value_t = MAX_LATENCY)]
    max_gnt_latency: u32,
    #[arg(long, default_value_t = MAX_LATENCY)]
    max_rvalid_latency: u32,
    #[arg(long, default_value_t = MAX_WFI_WAKE)]
    wfi_wake_bound: u32,
    #[arg(long)]
    mutation: Option<MutationId>,
    #[arg(long, default_value = "zero", value_parser = parse_ebreak)]
    mtval_on_ebreak: crate::isa::EbreakMtval,
}

impl ConfigArgs {
    fn config(&self, programs: usize) -> Result<RunConfig, ConfigError> {
        let c = RunConfig {
            seed: self.seed,
            programs,
            insns: self.insns,
            max_gnt_latency: self.max_gnt_latency,
            max_rvalid_latency: self.max_rvalid_latency,
            wfi_wake_bound: self.wfi_wake_bound,
            mutation: self.mutation,
            mtval_on_ebreak: self.mtval_on_ebreak,
        };
        c.validate()?;
        Ok(c)
    }
}

fn parse_u64(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Number of generated programs.
    #[arg(long, default_value_t = 10)]
    programs: usize,
    /// Directory receiving one verdict file per job.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving one trace file per job.
    #[arg(long)]
    trace_path: Option<PathBuf>,
    /// Skip counterexample minimization.
    #[arg(long)]
    no_minimize: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Trace file to re-execute and compare against.
    #[arg(long, conflicts_with = "job")]
    trace: Option<PathBuf>,
    /// Job name, e.g. `random-000003` or `directed-M1`, run under the config flags.
    #[arg(long, required_unless_present = "trace")]
    job: Option<Job>,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Write the trace here instead of standard output.
    #[arg(long)]
    trace_path: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory of `.verdict` files.
    dir: PathBuf,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let r = match cli.cmd {
        Cmd::Fuzz(a) => cmd_fuzz(&a),
        Cmd::Replay(a) => cmd_replay(&a),
        Cmd::Report(a) => cmd_report(&a.dir),
    };
    r.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    fs::write(dir.join(name), text).map_err(|e| format!("{}: {e}", dir.join(name).display()))
}

fn replay_hint(job: Job, cfg: &RunConfig) -> String {
    let fields = cfg.fields().replace('=', " ").replace(" mutation none", "");
    let flags: Vec<String> = fields
        .split(' ')
        .collect::<Vec<_>>()
        .chunks(2)
        .map(|kv| format!("--{} {}", kv[0], kv[1]))
        .collect();
    format!("cheriot-verify replay --job {job} {}", flags.join(" "))
}

fn cmd_fuzz(a: &FuzzArgs) -> Result<i32, String> {
    let cfg = a.cfg.config(a.programs).map_err(|e| e.to_string())?;
    for d in [&a.out, &a.trace_path].into_iter().flatten() {
        fs::create_dir_all(d).map_err(|e| format!("{}: {e}", d.display()))?;
    }
    let opts = JobOptions { minimize: !a.no_minimize, trace: a.trace_path.is_some() };
    let list = jobs(&cfg);
    let tag = cfg.mutation.map_or("base".to_string(), |m| m.to_string());
    let results = map_jobs(&list, worker_count(), |job| -> Result<RunSummary, String> {
        let r = run_job(&cfg, job, opts);
        let s = RunSummary::from_result(&cfg, &r);
        if let Some(d) = &a.out {
            write_file(d, &format!("{tag}-{job}.verdict"), &render_run_file(&s))?;
        }
        if let Some(d) = &a.trace_path {
            let t = TraceFile { job, cfg: cfg.clone(), records: r.trace };
            write_file(d, &format!("{tag}-{job}.trace"), &render_trace_file(&t))?;
        }
        Ok(s)
    });
    let summaries: Vec<RunSummary> = results.into_iter().collect::<Result<_, _>>()?;
    let mut failed = false;
    for s in &summaries {
        let bad: Vec<_> = s.verdicts.iter().filter(|v| !v.passed()).collect();
        if bad.is_empty() {
            continue;
        }
        failed = true;
        println!("{} FAILED", s.job);
        for v in bad {
            println!("{v}");
        }
        println!("  reproduce: {}", replay_hint(s.job, &cfg));
    }
    print!("{}", Report::new(&summaries).render_text());
    Ok(if failed { EXIT_FAIL } else { EXIT_PASS })
}

fn cmd_replay(a: &ReplayArgs) -> Result<i32, String> {
    let (job, cfg, original) = match &a.trace {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let t = parse_trace_file(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            (t.job, t.cfg, Some(text))
        }
        None => {
            let job = a.job.ok_or("either --trace or --job is required")?;
            (job, a.cfg.config(0).map_err(|e| e.to_string())?, None)
        }
    };
    let r = run_job(&cfg, job, JobOptions { minimize: false, trace: true });
    let text = render_trace_file(&TraceFile { job, cfg: cfg.clone(), records: r.trace.clone() });
    match &a.trace_path {
        Some(p) => fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{text}"),
    }
    for v in &r.verdicts {
        eprintln!("{v}");
    }
    if let Some(orig) = original {
        if orig != text {
            let line = orig.lines().zip(text.lines()).position(|(x, y)| x != y).map_or(0, |k| k + 1);
            eprintln!("replay diverges from the original trace at line {line}");
            return Ok(EXIT_FAIL);
        }
    }
    Ok(if r.passed() { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_report(dir: &Path) -> Result<i32, String> {
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for e in entries {
        let p = e.map_err(|e| format!("{}: {e}", dir.display()))?.path();
        if p.extension().is_some_and(|x| x == "verdict") {
            paths.push(p);
        }
    }
    paths.sort();
    let mut runs = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        runs.push(parse_run_file(&text).map_err(|e| format!("{}: {e}", p.display()))?);
    }
    let r = Report::new(&runs);
    print!("{}", r.render_text());
    println!();
    print!("{}", r.render_machine());
    Ok(EXIT_PASS)
}
