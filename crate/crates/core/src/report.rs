//! Output files: CSV tables and JSON documents.
//!
//! Every file starts with a `#` line holding the schema version and the full
//! configuration as compact JSON. Floats use the shortest round-trip form
//! (`{:?}`), switching to exponent notation for very small or large values.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::JumpEvent;
use crate::stats::{RegularityFrequencies, SweepCell};

pub const SCHEMA_VERSION: &str = "dustsim/1";

pub const SWEEP_HEADER: &str =
    "N,alpha,m,trials,violation_freq,wilson_lo,wilson_hi,theta_p50,theta_p95,mean_skips,censored_frac";
pub const ENV_HEADER: &str = "N,trials,f0,f1,f2,f3,f4";
pub const RHO_HEADER: &str = "t,rho";
pub const ORACLE_HEADER: &str = "x,P";
pub const EVENTS_HEADER: &str = "time,worker,from_line,from_pos,to_line,to_pos,kind";

/// The leading comment line (without newline).
pub fn comment_line(config: &Value) -> String {
    format!("# {SCHEMA_VERSION} {config}")
}

/// Comment body as accepted by [`crate::oracle::EscapeTable::write_csv`].
pub fn comment_body(config: &Value) -> String {
    format!("{SCHEMA_VERSION} {config}")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(mut out: W, config: &Value, cells: &[SweepCell]) -> io::Result<()> {
    writeln!(out, "{}", comment_line(config))?;
    writeln!(out, "{SWEEP_HEADER}")?;
    for c in cells {
        for r in &c.rows {
            writeln!(
                out,
                "{},{:?},{},{},{:?},{:?},{:?},{},{},{:?},{:?}",
                c.n,
                c.alpha,
                r.m,
                c.trials,
                r.violation_freq,
                r.wilson_lo,
                r.wilson_hi,
                opt(c.theta_p50),
                opt(c.theta_p95),
                c.mean_skips,
                c.censored_frac
            )?;
        }
    }
    Ok(())
}

pub fn write_env_csv<W: Write>(
    mut out: W,
    config: &Value,
    rows: &[RegularityFrequencies],
) -> io::Result<()> {
    writeln!(out, "{}", comment_line(config))?;
    writeln!(out, "{ENV_HEADER}")?;
    for r in rows {
        let f = r.freqs;
        writeln!(out, "{},{},{:?},{:?},{:?},{:?},{:?}", r.n, r.trials, f[0], f[1], f[2], f[3], f[4])?;
    }
    Ok(())
}

pub fn write_rho_csv<W: Write>(mut out: W, config: &Value, samples: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "{}", comment_line(config))?;
    writeln!(out, "{RHO_HEADER}")?;
    for (t, r) in samples {
        writeln!(out, "{t:?},{r:?}")?;
    }
    Ok(())
}

/// Streams jump events as CSV.
pub struct EventWriter<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> EventWriter<W> {
    pub fn new(mut out: W, config: &Value) -> io::Result<Self> {
        writeln!(out, "{}", comment_line(config))?;
        writeln!(out, "{EVENTS_HEADER}")?;
        Ok(Self { out, error: None })
    }

    /// Records one event. The first write error is kept and reported by
    /// [`EventWriter::finish`].
    pub fn record(&mut self, e: &JumpEvent) {
        if self.error.is_some() {
            return;
        }
        if let Err(err) = writeln!(
            self.out,
            "{:?},{},{},{:?},{},{:?},{}",
            e.time,
            e.worker_id,
            e.from.line,
            e.from.pos,
            e.to.line,
            e.to.pos,
            e.kind.as_str()
        ) {
            self.error = Some(err);
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// A JSON document `{schema, kind, config, result}`.
pub fn json_document<T: Serialize>(kind: &str, config: &Value, result: &T) -> serde_json::Result<Value> {
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "result": serde_json::to_value(result)?,
    }))
}

/// Writes a JSON document preceded by the comment line.
pub fn write_json<W: Write, T: Serialize>(
    mut out: W,
    kind: &str,
    config: &Value,
    result: &T,
) -> io::Result<()> {
    writeln!(out, "{}", comment_line(config))?;
    let doc = json_document(kind, config, result).map_err(io::Error::other)?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(io::Error::other)?;
    writeln!(out)
}

/// Strips leading `#` lines, for reading documents written by [`write_json`].
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .skip_while(|l| l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
