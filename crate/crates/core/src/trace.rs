//! Line-delimited run traces: `<cycle> <kind> key=hex ...`.
//!
//! Field lists per kind:
//! - `spec_en`: `pc`, `kind` (0 retire, 1 trap, 2 interrupt), `irq`
//! - `port_out`: `addr`, `be`, `we`, `wdata`, `wtag` (one per granted request)
//! - `commit_rf`: `rd`, `cap` (64-bit memory word), `tag`
//! - `commit_csr`: `mcause`, `mtval`, `mstatus`
//! - `trap`: `cause`, `mtval`
//! - `irq`: `level` (one per change of the interrupt line)
//! - `verdict`: `checker` (index into [`crate::check::Checker::ALL`]), `pass`

use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceKind {
    SpecEn,
    PortOut,
    CommitRf,
    CommitCsr,
    Trap,
    Irq,
    Verdict,
}

impl TraceKind {
    pub const ALL: [TraceKind; 7] = [
        TraceKind::SpecEn,
        TraceKind::PortOut,
        TraceKind::CommitRf,
        TraceKind::CommitCsr,
        TraceKind::Trap,
        TraceKind::Irq,
        TraceKind::Verdict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TraceKind::SpecEn => "spec_en",
            TraceKind::PortOut => "port_out",
            TraceKind::CommitRf => "commit_rf",
            TraceKind::CommitCsr => "commit_csr",
            TraceKind::Trap => "trap",
            TraceKind::Irq => "irq",
            TraceKind::Verdict => "verdict",
        }
    }

    pub fn fields(self) -> &'static [&'static str] {
        match self {
            TraceKind::SpecEn => &["pc", "kind", "irq"],
            TraceKind::PortOut => &["addr", "be", "we", "wdata", "wtag"],
            TraceKind::CommitRf => &["rd", "cap", "tag"],
            TraceKind::CommitCsr => &["mcause", "mtval", "mstatus"],
            TraceKind::Trap => &["cause", "mtval"],
            TraceKind::Irq => &["level"],
            TraceKind::Verdict => &["checker", "pass"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub kind: TraceKind,
    /// Values in the order of [`TraceKind::fields`].
    pub values: Vec<u64>,
}

impl TraceRecord {
    pub fn new(cycle: u64, kind: TraceKind, values: &[u64]) -> Self {
        debug_assert_eq!(values.len(), kind.fields().len());
        TraceRecord { cycle, kind, values: values.to_vec() }
    }

    pub fn get(&self, field: &str) -> Option<u64> {
        let i = self.kind.fields().iter().position(|f| *f == field)?;
        self.values.get(i).copied()
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.cycle, self.kind.name())?;
        for (k, v) in self.kind.fields().iter().zip(&self.values) {
            write!(f, " {k}={v:x}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

impl FromStr for TraceRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_ascii_whitespace();
        let cycle = parts
            .next()
            .ok_or("empty record")?
            .parse::<u64>()
            .map_err(|e| format!("bad cycle: {e}"))?;
        let kind_s = parts.next().ok_or("missing kind")?;
        let kind = TraceKind::ALL
            .into_iter()
            .find(|k| k.name() == kind_s)
            .ok_or_else(|| format!("unknown kind `{kind_s}`"))?;
        let mut values = Vec::new();
        for name in kind.fields() {
            let kv = parts.next().ok_or_else(|| format!("missing field `{name}`"))?;
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("bad field `{kv}`"))?;
            if k != *name {
                return Err(format!("expected field `{name}`, found `{k}`"));
            }
            values.push(u64::from_str_radix(v, 16).map_err(|e| format!("bad value for `{k}`: {e}"))?);
        }
        if let Some(extra) = parts.next() {
            return Err(format!("unexpected `{extra}`"));
        }
        Ok(TraceRecord { cycle, kind, values })
    }
}

/// Parses record lines, checking that cycles never decrease.
pub fn parse_records<'a>(lines: impl IntoIterator<Item = (usize, &'a str)>) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out: Vec<TraceRecord> = Vec::new();
    for (line, text) in lines {
        let r: TraceRecord = text.parse().map_err(|msg| TraceError::Malformed { line, msg })?;
        if out.last().is_some_and(|p| p.cycle > r.cycle) {
            return Err(TraceError::Malformed { line, msg: "cycle goes backwards".into() });
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejects_unknown_kind() {
        let r = TraceRecord::new(12, TraceKind::PortOut, &[0x700, 0xF, 1, 0xdead, 0]);
        let s = r.to_string();
        assert_eq!(s, "12 port_out addr=700 be=f we=1 wdata=dead wtag=0");
        assert_eq!(s.parse::<TraceRecord>().unwrap(), r);
        assert!("3 bogus x=1".parse::<TraceRecord>().is_err());
        assert!("3 irq".parse::<TraceRecord>().is_err());
    }
}
