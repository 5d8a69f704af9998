//! Per-run verdict files and the campaign summary built from them.

use std::fmt::Write as _;

use crate::check::{b_max, Checker, Failure, Verdict};
use crate::micro::MutationId;

use super::{ConfigError, Job, JobResult, RunConfig};

/// Contents of one verdict file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub job: Job,
    pub cfg: RunConfig,
    pub max_gap: u64,
    pub cycles: u64,
    pub verdicts: Vec<Verdict>,
}

impl RunSummary {
    pub fn from_result(cfg: &RunConfig, r: &JobResult) -> Self {
        RunSummary { job: r.job, cfg: cfg.clone(), max_gap: r.max_gap, cycles: r.cycles, verdicts: r.verdicts.clone() }
    }
}

/// Renders a verdict file. Free-text parts sit on their own lines after
/// the verdict they belong to.
pub fn render_run_file(s: &RunSummary) -> String {
    let mut o = format!("run job={} {} max-gap={} cycles={}\n", s.job, s.cfg.fields(), s.max_gap, s.cycles);
    for v in &s.verdicts {
        let _ = write!(o, "verdict checker={} pass={} seed={:#x}", v.checker, u8::from(v.passed()), v.seed);
        match &v.failure {
            None => o.push('\n'),
            Some(f) => {
                let _ = writeln!(o, " cycle={}", f.cycle);
                let _ = writeln!(o, "assertion {}", f.assertion);
                let _ = writeln!(o, "expected {}", f.expected);
                let _ = writeln!(o, "actual {}", f.actual);
            }
        }
        if let Some(p) = &v.program {
            let words: Vec<String> = p.iter().map(|w| format!("{w:08x}")).collect();
            let _ = writeln!(o, "program {}", words.join(" "));
        }
    }
    o
}

fn bad(line: usize, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError::BadValue { name: format!("line {line}"), value: msg.to_string() }
}

pub fn parse_run_file(text: &str) -> Result<RunSummary, ConfigError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, head) = lines.next().ok_or(ConfigError::Missing("run header"))?;
    let head = head.strip_prefix("run ").ok_or_else(|| bad(1, "missing run header"))?;
    let (mut job, mut max_gap, mut cycles, mut kv) = (None, None, None, Vec::new());
    for f in head.split_ascii_whitespace() {
        let (k, v) = f.split_once('=').ok_or_else(|| bad(1, f))?;
        match k {
            "job" => job = Some(v.parse::<Job>()?),
            "max-gap" => max_gap = Some(v.parse().map_err(|_| bad(1, f))?),
            "cycles" => cycles = Some(v.parse().map_err(|_| bad(1, f))?),
            _ => kv.push((k, v)),
        }
    }
    let cfg = RunConfig::from_fields(kv)?;
    let mut verdicts: Vec<Verdict> = Vec::new();
    for (n, line) in lines {
        let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
        if tag == "verdict" {
            let mut v = Verdict::pass(Checker::Dti, 0);
            let mut failed = false;
            for f in rest.split_ascii_whitespace() {
                let (k, val) = f.split_once('=').ok_or_else(|| bad(n, f))?;
                match k {
                    "checker" => v.checker = val.parse().map_err(|e| bad(n, e))?,
                    "pass" => failed = val == "0",
                    "seed" => {
                        v.seed = u64::from_str_radix(val.trim_start_matches("0x"), 16).map_err(|_| bad(n, f))?
                    }
                    "cycle" => {
                        let cycle = val.parse().map_err(|_| bad(n, f))?;
                        v.failure = Some(Failure { cycle, assertion: String::new(), expected: String::new(), actual: String::new() });
                    }
                    _ => return Err(bad(n, f)),
                }
            }
            if failed != v.failure.is_some() {
                return Err(bad(n, "pass flag and cycle disagree"));
            }
            verdicts.push(v);
            continue;
        }
        let v = verdicts.last_mut().ok_or_else(|| bad(n, "detail before any verdict"))?;
        match (tag, v.failure.as_mut()) {
            ("assertion", Some(f)) => f.assertion = rest.to_string(),
            ("expected", Some(f)) => f.expected = rest.to_string(),
            ("actual", Some(f)) => f.actual = rest.to_string(),
            ("program", _) => {
                let words: Result<Vec<u32>, _> = rest.split_ascii_whitespace().map(|w| u32::from_str_radix(w, 16)).collect();
                v.program = Some(words.map_err(|_| bad(n, "bad program word"))?);
            }
            _ => return Err(bad(n, line)),
        }
    }
    Ok(RunSummary {
        job: job.ok_or(ConfigError::Missing("job"))?,
        cfg,
        max_gap: max_gap.ok_or(ConfigError::Missing("max-gap"))?,
        cycles: cycles.ok_or(ConfigError::Missing("cycles"))?,
        verdicts,
    })
}

/// Campaign summary over any number of verdict files.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub runs: usize,
    /// Per checker: (passes, failures).
    pub counts: Vec<(Checker, usize, usize)>,
    pub max_gap: u64,
    /// `matrix[i][j]`: with mutation `i` built in, the directed test for
    /// mutation `j` failed some checker. `None` when that pair was not run.
    pub matrix: [[Option<bool>; 6]; 6],
}

impl Report {
    pub fn new(runs: &[RunSummary]) -> Self {
        let mut r = Report { runs: runs.len(), ..Report::default() };
        if runs.is_empty() {
            return r;
        }
        r.counts = Checker::ALL.iter().map(|&c| (c, 0, 0)).collect();
        for s in runs {
            r.max_gap = r.max_gap.max(s.max_gap);
            for v in &s.verdicts {
                let e = r.counts.iter_mut().find(|e| e.0 == v.checker).expect("all checkers listed");
                if v.passed() {
                    e.1 += 1;
                } else {
                    e.2 += 1;
                }
            }
            if let (Job::Directed(j), Some(i)) = (s.job, s.cfg.mutation) {
                let (i, j) = (i as usize, j as usize);
                let hit = s.verdicts.iter().any(|v| !v.passed());
                r.matrix[i][j] = Some(r.matrix[i][j].unwrap_or(false) || hit);
            }
        }
        r
    }

    pub fn failures(&self) -> usize {
        self.counts.iter().map(|c| c.2).sum()
    }

    /// Every mutation was run against its own directed test and detected.
    pub fn full_diagonal(&self) -> bool {
        (0..6).all(|i| self.matrix[i][i] == Some(true))
    }

    /// Human-readable table.
    pub fn render_text(&self) -> String {
        let mut o = format!("runs: {}\n", self.runs);
        if !self.counts.is_empty() {
            let _ = writeln!(o, "{:<22} {:>8} {:>8}", "checker", "pass", "fail");
            for (c, p, f) in &self.counts {
                let _ = writeln!(o, "{:<22} {:>8} {:>8}", c.name(), p, f);
            }
            let _ = writeln!(o, "max spec_en gap: {} (bound {})", self.max_gap, b_max());
        }
        if self.matrix.iter().flatten().any(Option::is_some) {
            let _ = writeln!(o, "detection matrix (rows: mutation built in, columns: directed test)");
            let _ = writeln!(o, "     M1 M2 M3 M4 M5 M6");
            for (i, row) in self.matrix.iter().enumerate() {
                let cells: Vec<&str> = row
                    .iter()
                    .map(|c| match c {
                        Some(true) => " X",
                        Some(false) => " .",
                        None => " -",
                    })
                    .collect();
                let _ = writeln!(o, "  {} {}", MutationId::ALL[i], cells.join(" "));
            }
        }
        o
    }

    /// One `key=value` line per fact.
    pub fn render_machine(&self) -> String {
        let mut o = format!("runs value={}\n", self.runs);
        for (c, p, f) in &self.counts {
            let _ = writeln!(o, "checker name={} pass={} fail={}", c.name(), p, f);
        }
        if !self.counts.is_empty() {
            let _ = writeln!(o, "max_gap value={} bound={}", self.max_gap, b_max());
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.iter().all(Option::is_none) {
                continue;
            }
            let cells: Vec<&str> = row
                .iter()
                .map(|c| match c {
                    Some(true) => "1",
                    Some(false) => "0",
                    None => "-",
                })
                .collect();
            let _ = writeln!(o, "matrix mutation={} detected={}", MutationId::ALL[i], cells.join(","));
        }
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(job: Job, mutation: Option<MutationId>, fail: bool) -> RunSummary {
        let mut verdicts: Vec<Verdict> = Checker::ALL.iter().map(|&c| Verdict::pass(c, 7)).collect();
        if fail {
            verdicts[1].failure = Some(Failure::new(10, "access_check", "None", "Some(x)"));
            verdicts[1].program = Some(vec![0x13, 0xdead_beef]);
        }
        RunSummary {
            job,
            cfg: RunConfig { seed: 3, mutation, ..RunConfig::default() },
            max_gap: 12,
            cycles: 400,
            verdicts,
        }
    }

    #[test]
    fn run_file_round_trip() {
        for s in [summary(Job::Random(1), None, false), summary(Job::Directed(MutationId::M1), Some(MutationId::M1), true)] {
            let text = render_run_file(&s);
            let mut back = parse_run_file(&text).unwrap();
            back.cfg.programs = s.cfg.programs;
            assert_eq!(back, s);
        }
    }

    #[test]
    fn empty_report() {
        let r = Report::new(&[]);
        assert_eq!(r.runs, 0);
        assert_eq!(r.failures(), 0);
        assert!(!r.render_text().contains("checker"));
    }

    #[test]
    fn mixed_runs_count_failures_and_fill_the_matrix() {
        let runs = [
            summary(Job::Random(0), None, false),
            summary(Job::Directed(MutationId::M1), Some(MutationId::M1), true),
            summary(Job::Directed(MutationId::M2), Some(MutationId::M1), false),
        ];
        let r = Report::new(&runs);
        assert_eq!(r.failures(), 1);
        assert_eq!(r.counts[1], (Checker::Follower, 2, 1));
        assert_eq!(r.matrix[0][0], Some(true));
        assert_eq!(r.matrix[0][1], Some(false));
        assert_eq!(r.matrix[1][1], None);
        assert!(!r.full_diagonal());
        assert!(r.render_machine().contains("matrix mutation=M1 detected=1,0,-,-,-,-"));
    }
}
