//! Image manifest CSV: `path,crop_x,crop_y,crop_w,crop_h,age,sex`.

use crate::imaging::CropRect;

pub const MANIFEST_HEADER: &str = "path,crop_x,crop_y,crop_w,crop_h,age,sex";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sex {
    M,
    F,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub crop: Option<CropRect>,
    pub age: Option<u32>,
    pub sex: Sex,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("manifest line {line}, field {field}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub field: &'static str,
    pub message: String,
}

fn err(line: usize, field: &'static str, message: impl Into<String>) -> ManifestError {
    ManifestError {
        line,
        field,
        message: message.into(),
    }
}

pub fn read_manifest(bytes: &[u8]) -> Result<Vec<ManifestEntry>, ManifestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err(1, "encoding", format!("invalid UTF-8: {e}")))?;
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == MANIFEST_HEADER => {}
        _ => return Err(err(1, "header", format!("expected `{MANIFEST_HEADER}`"))),
    }
    let mut entries = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 7 {
            return Err(err(line, "row", format!("expected 7 fields, found {}", fields.len())));
        }
        let path = fields[0].trim();
        if path.is_empty() {
            return Err(err(line, "path", "empty path"));
        }
        let names = ["crop_x", "crop_y", "crop_w", "crop_h"];
        let mut crop_vals = [None; 4];
        for (slot, (&f, name)) in crop_vals.iter_mut().zip(fields[1..5].iter().zip(names)) {
            let f = f.trim();
            if !f.is_empty() {
                *slot = Some(f.parse::<usize>().map_err(|_| err(line, name, format!("not a non-negative integer: {f:?}")))?);
            }
        }
        let crop = match crop_vals {
            [Some(x), Some(y), Some(w), Some(h)] => {
                if w == 0 || h == 0 {
                    return Err(err(line, "crop_w", "crop extent must be positive"));
                }
                Some(CropRect::new(x, y, w, h))
            }
            [None, None, None, None] => None,
            _ => return Err(err(line, "crop_x", "crop fields must be all present or all empty")),
        };
        let age_field = fields[5].trim();
        let age = if age_field.is_empty() {
            None
        } else {
            let a: u32 = age_field
                .parse()
                .map_err(|_| err(line, "age", format!("not a number: {age_field:?}")))?;
            if a > 130 {
                return Err(err(line, "age", format!("{a} is outside [0, 130]")));
            }
            Some(a)
        };
        let sex = match fields[6].trim() {
            "" | "U" | "unknown" => Sex::Unknown,
            "M" => Sex::M,
            "F" => Sex::F,
            other => return Err(err(line, "sex", format!("unknown token {other:?}"))),
        };
        entries.push(ManifestEntry {
            path: path.to_string(),
            crop,
            age,
            sex,
        });
    }
    Ok(entries)
}

pub fn write_manifest(entries: &[ManifestEntry]) -> Vec<u8> {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in entries {
        let crop = match e.crop {
            Some(c) => format!("{},{},{},{}", c.x, c.y, c.w, c.h),
            None => ",,,".to_string(),
        };
        let age = e.age.map(|a| a.to_string()).unwrap_or_default();
        let sex = match e.sex {
            Sex::M => "M",
            Sex::F => "F",
            Sex::Unknown => "",
        };
        out.push_str(&format!("{},{crop},{age},{sex}\n", e.path));
    }
    out.into_bytes()
}
