//! Reading and writing 2-D `.npy` arrays.
//!
//! Only the subset the toolkit exchanges is supported: little-endian `f4`/`f8`,
//! C order, two dimensions. Files are written as NPY v1.0 with the header padded
//! so the data starts on a 64-byte boundary, which is what NumPy itself emits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::features::FeatureMatrix;

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// On-disk element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    fn descr(self) -> &'static str {
        match self {
            Precision::F32 => "<f4",
            Precision::F64 => "<f8",
        }
    }

    fn width(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

/// Parsed header fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub precision: Precision,
    pub rows: usize,
    pub cols: usize,
}

pub fn read_array(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::IoAt {
        path: path.to_owned(),
        source,
    })?;
    let mut r = BufReader::new(file);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Decodes an in-memory `.npy` image.
pub fn decode(bytes: &[u8]) -> Result<FeatureMatrix> {
    let (header, offset) = parse_header(bytes)?;
    let count = header
        .rows
        .checked_mul(header.cols)
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    let body = &bytes[offset..];
    let need = count * header.precision.width();
    if body.len() < need {
        return Err(Error::Format(format!(
            "data section holds {} bytes, shape needs {need}",
            body.len()
        )));
    }
    let data: Vec<f64> = match header.precision {
        Precision::F32 => body[..need]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        Precision::F64 => body[..need]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    };
    if header.rows == 0 || header.cols == 0 {
        return Err(invalid(format!(
            "array shape ({}, {}) is empty",
            header.rows, header.cols
        )));
    }
    FeatureMatrix::new(header.rows, header.cols, data)
}

/// Parses the preamble and header, returning the offset of the data section.
pub fn parse_header(bytes: &[u8]) -> Result<(Header, usize)> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Format("missing \\x93NUMPY magic".into()));
    }
    let (len, start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(Error::Format("truncated preamble".into()));
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        v => return Err(Error::Format(format!("unknown format version {v}"))),
    };
    let end = start + len;
    if bytes.len() < end {
        return Err(Error::Format("truncated header".into()));
    }
    let text = std::str::from_utf8(&bytes[start..end])
        .map_err(|_| Error::Format("header is not text".into()))?;
    Ok((parse_dict(text)?, end))
}

fn parse_dict(text: &str) -> Result<Header> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Format(format!("header is not a dict: {t:?}")))?;

    let descr = dict_value(inner, "descr")?;
    let fortran = dict_value(inner, "fortran_order")?;
    let shape = dict_value(inner, "shape")?;

    let descr = descr.trim_matches(|c| c == '\'' || c == '"');
    let precision = match descr {
        "<f4" => Precision::F32,
        "<f8" => Precision::F64,
        other => {
            return Err(Error::UnsupportedLayout(format!(
                "dtype {other}; expected '<f4' or '<f8'"
            )))
        }
    };
    match fortran {
        "False" => {}
        "True" => return Err(Error::UnsupportedLayout("fortran_order arrays".into())),
        other => return Err(Error::Format(format!("bad fortran_order {other:?}"))),
    }
    let dims = shape
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Format(format!("bad shape {shape:?}")))?
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim_end_matches('L')
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape entry {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.len() != 2 {
        return Err(Error::UnsupportedLayout(format!(
            "{}-D array; expected 2-D",
            dims.len()
        )));
    }
    Ok(Header {
        precision,
        rows: dims[0],
        cols: dims[1],
    })
}

/// Extracts the raw value text for `key` from a Python dict literal body.
fn dict_value<'a>(inner: &'a str, key: &str) -> Result<&'a str> {
    let missing = || Error::Format(format!("header lacks '{key}'"));
    let pos = inner
        .find(&format!("'{key}'"))
        .or_else(|| inner.find(&format!("\"{key}\"")))
        .ok_or_else(missing)?;
    let rest = &inner[pos + key.len() + 2..];
    let rest = rest.trim_start().strip_prefix(':').ok_or_else(missing)?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find(',').or(Some(rest.len()))
    }
    .ok_or_else(|| Error::Format(format!("unterminated value for '{key}'")))?;
    Ok(rest[..end].trim())
}

fn header_bytes(precision: Precision, rows: usize, cols: usize) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({rows}, {cols}), }}",
        precision.descr()
    );
    // magic(6) + version(2) + u16 length(2) + dict + padding + '\n'
    let unpadded = 10 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    let len = dict.len() + pad + 1;
    let mut out = Vec::with_capacity(10 + len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    out
}

/// Encodes a matrix as an NPY v1.0 image.
pub fn encode(m: &FeatureMatrix, precision: Precision) -> Vec<u8> {
    let mut out = header_bytes(precision, m.rows(), m.cols());
    out.reserve(m.as_slice().len() * precision.width());
    match precision {
        Precision::F32 => {
            for &v in m.as_slice() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Precision::F64 => {
            for &v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn write_array(m: &FeatureMatrix, path: impl AsRef<Path>, precision: Precision) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::IoAt {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(m, precision)).map_err(io)?;
    w.flush().map_err(io)
}

/// Writes a 1-D little-endian `i64` vector, used for label files.
pub fn write_labels(labels: &[i64], path: impl AsRef<Path>) -> Result<()> {
    let dict = format!(
        "{{'descr': '<i8', 'fortran_order': False, 'shape': ({},), }}",
        labels.len()
    );
    let unpadded = 10 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&((dict.len() + pad + 1) as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a 1-D integer label vector (`<i8` or `<i4`).
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Format("missing \\x93NUMPY magic".into()));
    }
    let len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let text = std::str::from_utf8(&bytes.get(10..10 + len).ok_or_else(|| {
        Error::Format("truncated header".into())
    })?)
    .map_err(|_| Error::Format("header is not text".into()))?;
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let descr = dict_value(inner, "descr")?.trim_matches('\'');
    let shape = dict_value(inner, "shape")?;
    let n: usize = shape
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .next()
        .unwrap_or("")
        .trim()
        .parse()
        .map_err(|_| Error::UnsupportedLayout(format!("label shape {shape}")))?;
    let body = &bytes[10 + len..];
    let out: Vec<i64> = match descr {
        "<i8" => body
            .chunks_exact(8)
            .take(n)
            .map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
        "<i4" => body
            .chunks_exact(4)
            .take(n)
            .map(|c| i32::from_le_bytes(c.try_into().expect("4 bytes")) as i64)
            .collect(),
        other => return Err(Error::UnsupportedLayout(format!("label dtype {other}"))),
    };
    if out.len() != n {
        return Err(Error::Format("truncated label data".into()));
    }
    Ok(out)
}
