//! Convergence trace records and their CSV form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: &str = "iter,primal,dual,gap,elapsed_ns";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub elapsed_ns: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl TraceRecord {
    /// One CSV row; absent dual/gap values are empty fields.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{},{},{}",
            self.iter,
            self.primal,
            opt(self.dual),
            opt(self.gap),
            self.elapsed_ns
        )
    }
}

/// Full CSV document with header and trailing newline.
pub fn to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Parses a document produced by [`to_csv`].
pub fn from_csv(text: &str) -> Result<Vec<TraceRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(format!("unexpected trace header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(format!("row {}: expected 5 fields", i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
            let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            Ok(TraceRecord {
                iter: f[0].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                primal: num(f[1])?,
                dual: opt_num(f[2])?,
                gap: opt_num(f[3])?,
                elapsed_ns: f[4].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
            })
        })
        .collect()
}
