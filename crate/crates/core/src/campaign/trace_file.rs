//! Trace files: a header naming the run, the records, and a trailer with
//! the record count so truncated files are rejected.

use crate::trace::{parse_records, TraceError, TraceRecord};

use super::{Job, RunConfig};

const MAGIC: &str = "# cheriot-verify trace";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFile {
    pub job: Job,
    pub cfg: RunConfig,
    pub records: Vec<TraceRecord>,
}

pub fn render_trace_file(t: &TraceFile) -> String {
    let mut s = format!("{MAGIC} job={} {}\n", t.job, t.cfg.fields());
    for r in &t.records {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s.push_str(&format!("# end records={}\n", t.records.len()));
    s
}

fn malformed(line: usize, msg: impl Into<String>) -> TraceError {
    TraceError::Malformed { line, msg: msg.into() }
}

pub fn parse_trace_file(text: &str) -> Result<TraceFile, TraceError> {
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.first().ok_or_else(|| malformed(1, "empty file"))?;
    let rest = header.strip_prefix(MAGIC).ok_or_else(|| malformed(1, "missing header"))?;
    let mut job = None;
    let mut kv = Vec::new();
    for field in rest.split_ascii_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| malformed(1, format!("bad field `{field}`")))?;
        if k == "job" {
            job = Some(v.parse::<Job>().map_err(|e| malformed(1, e.to_string()))?);
        } else {
            kv.push((k, v));
        }
    }
    let job = job.ok_or_else(|| malformed(1, "missing job"))?;
    let cfg = RunConfig::from_fields(kv).map_err(|e| malformed(1, e.to_string()))?;
    let last = lines.len();
    let trailer = lines[last - 1]
        .strip_prefix("# end records=")
        .filter(|_| last >= 2)
        .ok_or_else(|| malformed(last, "missing trailer; file truncated"))?;
    let count: usize = trailer.parse().map_err(|_| malformed(last, "bad record count"))?;
    let body = &lines[1..last - 1];
    if body.len() != count {
        return Err(malformed(last, format!("trailer says {count} records, found {}", body.len())));
    }
    let records = parse_records(body.iter().enumerate().map(|(i, l)| (i + 2, *l)))?;
    Ok(TraceFile { job, cfg, records })
}
