//! Report CSV rendering and parsing.

use crate::clustering::Algorithm;

use super::{CsvError, SweepReport, SweepRow};

pub const REPORT_HEADER: &str = "algorithm,k,silhouette,runtime_ms,converged";

/// Silhouette at 4 decimals; blank cells for failed runs and untimed sweeps.
pub fn render_report_csv(r: &SweepReport) -> Vec<u8> {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in &r.rows {
        let s = row.silhouette.map(|v| format!("{v:.4}")).unwrap_or_default();
        let t = row.runtime_ms.map(|v| format!("{v:.3}")).unwrap_or_default();
        out.push_str(&format!("{},{},{s},{t},{}\n", row.algorithm.display_name(), row.k, row.converged));
    }
    out.into_bytes()
}

/// Reads a rendered report back. Values keep the printed precision.
pub fn parse_report_csv(bytes: &[u8]) -> Result<SweepReport, CsvError> {
    let err = |line, message: String| CsvError { line, message };
    let text = std::str::from_utf8(bytes).map_err(|e| err(1, format!("invalid UTF-8: {e}")))?;
    let mut lines = text.split('\n');
    if lines.next() != Some(REPORT_HEADER) {
        return Err(err(1, format!("header must be `{REPORT_HEADER}`")));
    }
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let line = i + 2;
        if l.is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 5 {
            return Err(err(line, format!("expected 5 fields, found {}", f.len())));
        }
        let algorithm: Algorithm = f[0].parse().map_err(|e: crate::clustering::UnknownAlgorithm| err(line, e.to_string()))?;
        let k = f[1].parse().map_err(|_| err(line, format!("bad k {:?}", f[1])))?;
        let opt = |s: &str| -> Result<Option<f64>, CsvError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(line, format!("bad number {s:?}")))
            }
        };
        let converged = match f[4] {
            "true" => true,
            "false" => false,
            other => return Err(err(line, format!("bad converged flag {other:?}"))),
        };
        rows.push(SweepRow {
            algorithm,
            k,
            silhouette: opt(f[2])?,
            runtime_ms: opt(f[3])?,
            converged,
        });
    }
    Ok(SweepReport { rows })
}
