//! Binary PGM (`P5`, 8-bit) reading and writing.

use super::ImageGray;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PgmErrorKind {
    #[error("unsupported magic")]
    UnsupportedMagic,
    #[error("malformed header: expected {0}")]
    MalformedHeader(&'static str),
    #[error("maxval {0} exceeds 255")]
    MaxvalTooLarge(u32),
    #[error("maxval must be at least 1")]
    ZeroMaxval,
    #[error("image dimensions must be non-zero")]
    ZeroDimension,
    #[error("image dimensions {0}x{1} are too large")]
    DimensionsTooLarge(u32, u32),
    #[error("truncated payload: expected {expected} bytes, found {available}")]
    Truncated { expected: usize, available: usize },
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PGM parse error at byte {offset}: {kind}")]
pub struct PgmError {
    pub kind: PgmErrorKind,
    pub offset: usize,
}

impl PgmError {
    fn at(offset: usize, kind: PgmErrorKind) -> Self {
        Self { kind, offset }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Returns the value and the offset of its first digit.
    fn read_unsigned(&mut self, what: &'static str) -> Result<(u32, usize), PgmError> {
        let start_ws = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == start_ws {
            return Err(PgmError::at(self.pos, PgmErrorKind::MalformedHeader("whitespace")));
        }
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or(PgmError::at(start, PgmErrorKind::MalformedHeader(what)))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PgmError::at(start, PgmErrorKind::MalformedHeader(what)));
        }
        Ok((value, start))
    }
}

/// Parses a binary PGM byte stream.
pub fn load_pgm(bytes: &[u8]) -> Result<ImageGray, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::at(0, PgmErrorKind::UnsupportedMagic));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let (width, width_offset) = cur.read_unsigned("width")?;
    let (height, height_offset) = cur.read_unsigned("height")?;
    let (maxval, maxval_offset) = cur.read_unsigned("maxval")?;
    if maxval > 255 {
        return Err(PgmError::at(maxval_offset, PgmErrorKind::MaxvalTooLarge(maxval)));
    }
    if maxval == 0 {
        return Err(PgmError::at(maxval_offset, PgmErrorKind::ZeroMaxval));
    }
    if width == 0 || height == 0 {
        let offset = if width == 0 { width_offset } else { height_offset };
        return Err(PgmError::at(offset, PgmErrorKind::ZeroDimension));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(PgmError::at(
                cur.pos,
                PgmErrorKind::MalformedHeader("whitespace after maxval"),
            ))
        }
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .filter(|&len| len <= isize::MAX as usize)
        .ok_or(PgmError::at(width_offset, PgmErrorKind::DimensionsTooLarge(width, height)))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PgmError::at(
            cur.pos + expected - 1,
            PgmErrorKind::Truncated {
                expected,
                available: payload.len(),
            },
        ));
    }
    Ok(ImageGray::new(
        width as usize,
        height as usize,
        payload[..expected].to_vec(),
    )
    .expect("dimensions validated above"))
}

/// Encodes an image as binary PGM with maxval 255.
pub fn save_pgm(img: &ImageGray) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}
