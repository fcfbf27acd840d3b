//! Feature CSV (`id,f0,...,f{d-1}`) and labels CSV (`id,cluster`).

use crate::clustering::FeatureMatrix;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> CsvError {
    CsvError {
        line,
        message: message.into(),
    }
}

/// Ids are restricted to `[A-Za-z0-9._-]`.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

/// Data lines with their 1-based line numbers; the header is line 1.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
}

pub fn read_features(bytes: &[u8]) -> Result<FeatureMatrix, CsvError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err(1, format!("invalid UTF-8: {e}")))?;
    let header = text.split('\n').next().unwrap_or("").trim_end_matches('\r');
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "id" {
        return Err(err(1, "header must be `id,f0,...`"));
    }
    for (j, c) in cols[1..].iter().enumerate() {
        if *c != format!("f{j}") {
            return Err(err(1, format!("column {} is {c:?}, expected \"f{j}\"", j + 1)));
        }
    }
    let d = cols.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != d + 1 {
            return Err(err(line, format!("expected {} fields, found {}", d + 1, fields.len())));
        }
        let id = fields[0];
        if !valid_id(id) {
            return Err(err(line, format!("invalid id {id:?}")));
        }
        if !seen.insert(id.to_string()) {
            return Err(err(line, format!("duplicate id {id:?}")));
        }
        for (j, f) in fields[1..].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| err(line, format!("f{j}: not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(err(line, format!("f{j}: non-finite value {f:?}")));
            }
            values.push(v);
        }
        ids.push(id.to_string());
    }
    if ids.is_empty() {
        return Err(err(2, "no data rows"));
    }
    let n = ids.len();
    FeatureMatrix::new(ids, Matrix::from_vec(n, d, values)).map_err(|e| err(1, e.to_string()))
}

/// Writes shortest round-trip decimal representations.
pub fn write_features(fm: &FeatureMatrix) -> Vec<u8> {
    let mut out = String::from("id");
    for j in 0..fm.d() {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for (i, id) in fm.ids().iter().enumerate() {
        out.push_str(id);
        for v in fm.row(i) {
            out.push(',');
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_labels(ids: &[String], labels: &[usize]) -> Vec<u8> {
    let mut out = String::from("id,cluster\n");
    for (id, l) in ids.iter().zip(labels) {
        out.push_str(&format!("{id},{l}\n"));
    }
    out.into_bytes()
}

/// Reads `id,cluster` rows as `(id, label)` pairs in file order.
pub fn read_labels(bytes: &[u8]) -> Result<Vec<(String, usize)>, CsvError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err(1, format!("invalid UTF-8: {e}")))?;
    if text.split('\n').next().map(|h| h.trim_end_matches('\r')) != Some("id,cluster") {
        return Err(err(1, "header must be `id,cluster`"));
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, row) in data_lines(text) {
        let (id, label) = row.split_once(',').ok_or_else(|| err(line, "expected 2 fields"))?;
        if !valid_id(id) {
            return Err(err(line, format!("invalid id {id:?}")));
        }
        if !seen.insert(id.to_string()) {
            return Err(err(line, format!("duplicate id {id:?}")));
        }
        let label = label
            .parse::<usize>()
            .map_err(|_| err(line, format!("cluster is not a non-negative integer: {label:?}")))?;
        out.push((id.to_string(), label));
    }
    Ok(out)
}

/// Orders `labels` to match the rows of `fm`.
pub fn align_labels(fm: &FeatureMatrix, labels: &[(String, usize)]) -> Result<Vec<usize>, String> {
    let map: std::collections::HashMap<&str, usize> = labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    if map.len() != fm.n() {
        return Err(format!("{} labels for {} feature rows", map.len(), fm.n()));
    }
    fm.ids()
        .iter()
        .map(|id| map.get(id.as_str()).copied().ok_or_else(|| format!("no label for id {id:?}")))
        .collect()
}
