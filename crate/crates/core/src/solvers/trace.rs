use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::format_real;
use crate::Scalar;

pub const TRACE_HEADER: &str = "t,loss,dist_to_opt,support_recall,step_norm";

/// Per-iteration metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub t: usize,
    pub loss: T,
    pub dist_to_opt: Option<T>,
    pub support_recall: Option<T>,
    pub step_norm: T,
}

fn opt<T: Scalar>(x: Option<T>) -> String {
    x.map(format_real).unwrap_or_default()
}

pub fn format_trace_row<T: Scalar>(r: &TraceRecord<T>) -> String {
    format!(
        "{},{},{},{},{}",
        r.t,
        format_real(r.loss),
        opt(r.dist_to_opt),
        opt(r.support_recall),
        format_real(r.step_norm)
    )
}

pub fn write_trace_csv<T: Scalar, W: Write>(mut w: W, records: &[TraceRecord<T>]) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(w, "{}", format_trace_row(r))?;
    }
    Ok(())
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord<f64>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected trace header {other:?}"))),
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|e| Error::Parse(format!("{s:?}: {e}"))) };
    let opt_num = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("trace row needs 5 fields: {line:?}")));
            }
            Ok(TraceRecord {
                t: f[0].parse().map_err(|e| Error::Parse(format!("t {:?}: {e}", f[0])))?,
                loss: num(f[1])?,
                dist_to_opt: opt_num(f[2])?,
                support_recall: opt_num(f[3])?,
                step_norm: num(f[4])?,
            })
        })
        .collect()
}
