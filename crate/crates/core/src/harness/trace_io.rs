//! Trace files: `#`-prefixed metadata lines, then CSV with header
//! `t,F_ag,Psi_ag,grad_norm,elapsed_s`. Floats use shortest round-trip
//! formatting so a parsed file reproduces the in-memory trace exactly.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::solvers::{RunTrace, TracePoint};

pub const TRACE_HEADER: &str = "t,F_ag,Psi_ag,grad_norm,elapsed_s";

/// What a trace file carries.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub seed: u64,
    pub config_echo: String,
    /// Extra `# ` lines (an experiment config, for instance), without the prefix.
    pub notes: Vec<String>,
    pub points: Vec<TracePoint>,
}

impl TraceFile {
    pub fn from_run(run: &RunTrace, notes: Vec<String>) -> Self {
        TraceFile {
            seed: run.seed,
            config_echo: run.config_echo.clone(),
            notes,
            points: run.iterations.clone(),
        }
    }
}

pub fn trace_to_csv(file: &TraceFile) -> String {
    let mut out = String::new();
    for note in &file.notes {
        let _ = writeln!(out, "# {note}");
    }
    let _ = writeln!(out, "#! seed={}", file.seed);
    let _ = writeln!(out, "#! run={}", file.config_echo);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for p in &file.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.t, p.f_ag, p.psi_ag, p.grad_norm, p.elapsed_seconds
        );
    }
    out
}

pub fn parse_trace_csv<R: BufRead>(r: R) -> Result<TraceFile> {
    let parse_err = |line: usize, reason: String| Error::Parse { line, reason };
    let mut seed = None;
    let mut echo = None;
    let mut notes = Vec::new();
    let mut header_seen = false;
    let mut points: Vec<TracePoint> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let n = n + 1;
        if let Some(meta) = line.strip_prefix("#! ") {
            match meta.split_once('=') {
                Some(("seed", v)) => {
                    seed = Some(v.parse().map_err(|_| parse_err(n, format!("bad seed `{v}`")))?)
                }
                Some(("run", v)) => echo = Some(v.to_string()),
                _ => return Err(parse_err(n, format!("unknown metadata `{meta}`"))),
            }
            continue;
        }
        if let Some(note) = line.strip_prefix('#') {
            notes.push(note.strip_prefix(' ').unwrap_or(note).to_string());
            continue;
        }
        if !header_seen {
            if line.trim() != TRACE_HEADER {
                return Err(parse_err(n, format!("expected header `{TRACE_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(parse_err(n, format!("expected 5 columns, got {}", cols.len())));
        }
        let real = |i: usize| -> Result<f64> {
            cols[i]
                .trim()
                .parse()
                .map_err(|_| parse_err(n, format!("bad number `{}`", cols[i])))
        };
        let t: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("bad iteration `{}`", cols[0])))?;
        if points.last().is_some_and(|p| p.t >= t) {
            return Err(parse_err(n, "iteration numbers must increase".into()));
        }
        points.push(TracePoint {
            t,
            f_ag: real(1)?,
            psi_ag: real(2)?,
            grad_norm: real(3)?,
            elapsed_seconds: real(4)?,
        });
    }
    if !header_seen {
        return Err(parse_err(0, "missing header".into()));
    }
    Ok(TraceFile {
        seed: seed.ok_or_else(|| parse_err(0, "missing `#! seed=` line".into()))?,
        config_echo: echo.ok_or_else(|| parse_err(0, "missing `#! run=` line".into()))?,
        notes,
        points,
    })
}
