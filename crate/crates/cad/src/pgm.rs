//! 8-bit PGM images: plain (`P2`) and raw (`P5`) reading, canonical raw writing.
//!
//! Samples are returned as raw gray levels; no rescaling by maxval happens.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesion_core::imaging::{ImageGrid, SegMask};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{}: no such file", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed PGM header: {0}")]
    Header(&'static str),
    #[error("maxval {0} exceeds 255")]
    Maxval(u64),
    #[error("image dimensions {width}x{height} must both be positive")]
    Dimensions { width: usize, height: usize },
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    Sample { value: u64, maxval: u64 },
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Plain,
    Raw,
}

struct Header {
    kind: Kind,
    width: usize,
    height: usize,
    maxval: u64,
    /// Offset of the first byte after the maxval token.
    end: usize,
}

/// Reads one whitespace-delimited token, skipping whitespace and `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<(usize, usize)> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    Some((start, *pos))
}

fn header_number(bytes: &[u8], pos: &mut usize, missing: &'static str) -> Result<u64, PgmError> {
    let (a, b) = next_token(bytes, pos).ok_or(PgmError::Header(missing))?;
    std::str::from_utf8(&bytes[a..b])
        .ok()
        .filter(|s| s.bytes().all(|c| c.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
        .ok_or(PgmError::Header("header field is not a decimal number"))
}

fn parse_header(bytes: &[u8]) -> Result<Header, PgmError> {
    let kind = match bytes.get(..2) {
        Some(b"P2") => Kind::Plain,
        Some(b"P5") => Kind::Raw,
        _ => return Err(PgmError::Header("magic number must be P2 or P5")),
    };
    if bytes.get(2).is_some_and(|c| !c.is_ascii_whitespace() && *c != b'#') {
        return Err(PgmError::Header("magic number must be P2 or P5"));
    }
    let mut pos = 2;
    let width = header_number(bytes, &mut pos, "missing width")?;
    let height = header_number(bytes, &mut pos, "missing height")?;
    let maxval = header_number(bytes, &mut pos, "missing maxval")?;
    let (width, height) = (usize::try_from(width), usize::try_from(height));
    let (Ok(width), Ok(height)) = (width, height) else {
        return Err(PgmError::Header("dimensions too large"));
    };
    if width == 0 || height == 0 {
        return Err(PgmError::Dimensions { width, height });
    }
    if width.checked_mul(height).is_none() {
        return Err(PgmError::Header("dimensions too large"));
    }
    if maxval == 0 {
        return Err(PgmError::Header("maxval must be positive"));
    }
    if maxval > 255 {
        return Err(PgmError::Maxval(maxval));
    }
    Ok(Header { kind, width, height, maxval, end: pos })
}

/// Decodes a PGM byte stream into raw gray levels.
pub fn decode(bytes: &[u8]) -> Result<ImageGrid, PgmError> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let mut values = Vec::with_capacity(n);
    match h.kind {
        Kind::Raw => {
            // exactly one whitespace byte separates maxval from the raster
            if !bytes.get(h.end).is_some_and(u8::is_ascii_whitespace) {
                return Err(PgmError::Truncated { expected: n, found: 0 });
            }
            let data = &bytes[h.end + 1..];
            if data.len() < n {
                return Err(PgmError::Truncated { expected: n, found: data.len() });
            }
            for &b in &data[..n] {
                if u64::from(b) > h.maxval {
                    return Err(PgmError::Sample { value: b.into(), maxval: h.maxval });
                }
                values.push(f64::from(b));
            }
        }
        Kind::Plain => {
            let mut pos = h.end;
            while values.len() < n {
                let Some((a, b)) = next_token(bytes, &mut pos) else {
                    return Err(PgmError::Truncated { expected: n, found: values.len() });
                };
                let value: u64 = std::str::from_utf8(&bytes[a..b])
                    .ok()
                    .filter(|s| s.bytes().all(|c| c.is_ascii_digit()))
                    .and_then(|s| s.parse().ok())
                    .ok_or(PgmError::Header("pixel value is not a decimal number"))?;
                if value > h.maxval {
                    return Err(PgmError::Sample { value, maxval: h.maxval });
                }
                values.push(value as f64);
            }
        }
    }
    Ok(ImageGrid::new(h.width, h.height, values).expect("length checked above"))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PgmError> {
    fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => PgmError::Missing(path.to_path_buf()),
        _ => PgmError::Io { path: path.to_path_buf(), source: e },
    })
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid, PgmError> {
    decode(&read_bytes(path.as_ref())?)
}

/// Reads a mask image; any nonzero sample is inside.
pub fn load_mask(path: impl AsRef<Path>) -> Result<SegMask, PgmError> {
    let img = load_image(path)?;
    let bits = img.values().iter().map(|&v| v != 0.0).collect();
    Ok(SegMask::new(img.width(), img.height(), bits).expect("same shape"))
}

fn encode_bytes(width: usize, height: usize, pixels: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

/// Canonical raw PGM. Values are rounded and clamped to `[0, 255]`.
pub fn encode(grid: &ImageGrid) -> Vec<u8> {
    let px = grid.values().iter().map(|&v| if v.is_nan() { 0 } else { v.round().clamp(0.0, 255.0) as u8 });
    encode_bytes(grid.width(), grid.height(), px)
}

/// Canonical raw PGM with inside pixels 255 and outside pixels 0.
pub fn encode_mask(mask: &SegMask) -> Vec<u8> {
    encode_bytes(mask.width(), mask.height(), mask.bits().iter().map(|&b| if b { 255 } else { 0 }))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PgmError> {
    fs::write(path, bytes).map_err(|e| PgmError::Io { path: path.to_path_buf(), source: e })
}

pub fn save_image(grid: &ImageGrid, path: impl AsRef<Path>) -> Result<(), PgmError> {
    write_bytes(path.as_ref(), &encode(grid))
}

pub fn save_mask(mask: &SegMask, path: impl AsRef<Path>) -> Result<(), PgmError> {
    write_bytes(path.as_ref(), &encode_mask(mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_two_by_two_in_row_order() {
        let g = decode(b"P2\n2 2\n255\n0 255\n128 64\n").unwrap();
        assert_eq!(g.values(), &[0.0, 255.0, 128.0, 64.0]);
        assert_eq!(g.get(1, 0), 255.0);
        assert_eq!(g.get(0, 1), 128.0);
    }

    #[test]
    fn comments_are_skipped() {
        let g = decode(b"P2 # made by hand\n# another\n3 1 # width height\n9\n1 2 3").unwrap();
        assert_eq!(g.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn all_zero_grid_encodes_to_nine_zero_bytes() {
        let bytes = encode(&ImageGrid::filled(3, 3, 0.0));
        assert_eq!(&bytes[..11], b"P5\n3 3\n255\n");
        assert_eq!(&bytes[11..], &[0u8; 9]);
    }

    #[test]
    fn mask_uses_full_scale() {
        let m = SegMask::new(2, 1, vec![true, false]).unwrap();
        assert_eq!(encode_mask(&m), b"P5\n2 1\n255\n\xff\x00");
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(decode(b"P5\n0 4\n255\n"), Err(PgmError::Dimensions { width: 0, height: 4 })));
        assert!(matches!(decode(b"P5\n2 2\n65535\n"), Err(PgmError::Maxval(65535))));
        assert!(matches!(decode(b"P5\n2 2\n255\n\x01\x02"), Err(PgmError::Truncated { expected: 4, found: 2 })));
        assert!(matches!(decode(b"P2\n2 2\n255\n1 2 3"), Err(PgmError::Truncated { expected: 4, found: 3 })));
        assert!(matches!(decode(b"P6\n2 2\n255\n"), Err(PgmError::Header(_))));
        assert!(matches!(decode(b"P5\n2 x\n255\n"), Err(PgmError::Header(_))));
        assert!(matches!(decode(b"P5\n2 2\n"), Err(PgmError::Header(_))));
        assert!(matches!(decode(b"P2\n1 1\n10\n11"), Err(PgmError::Sample { value: 11, maxval: 10 })));
        assert!(matches!(load_image("/nonexistent/x.pgm"), Err(PgmError::Missing(_))));
    }

    #[test]
    fn canonical_raw_file_round_trips_bytes() {
        let golden: &[u8] = b"P5\n3 2\n255\n\x00\x10\x20\x80\xfe\xff";
        assert_eq!(encode(&decode(golden).unwrap()), golden);
    }

    #[test]
    fn raw_payload_may_contain_whitespace_bytes() {
        let g = decode(b"P5 2 1 255\n\x0a\x20").unwrap();
        assert_eq!(g.values(), &[10.0, 32.0]);
    }
}
