//! Text format for sparse vectors.
//!
//! ```text
//! # optional comments
//! N 8
//! 0 2
//! 3 1
//! ```
//!
//! Fields are ASCII decimal integers separated by exactly one space. Entries
//! may come in any order; zero values are dropped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::Path;

use sparse_conv_core::sparse::{Index, Value};
use sparse_conv_core::SparseVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: &'static str },
    #[error("missing \"N <length>\" header")]
    MissingHeader,
    #[error("line {line}: index {index} is not below the length {length}")]
    IndexOutOfRange { line: usize, index: Index, length: u64 },
    #[error("line {line}: index {index} has value {second}, earlier line {first_line} gave {first}")]
    Conflict {
        line: usize,
        first_line: usize,
        index: Index,
        first: Value,
        second: Value,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn unsigned(field: &str) -> Option<u64> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    field.parse().ok()
}

fn signed(field: &str) -> Option<i64> {
    let digits = field.strip_prefix('-').unwrap_or(field);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    field.parse().ok()
}

fn split_pair(text: &str) -> Option<(&str, &str)> {
    let (a, b) = text.split_once(' ')?;
    (!b.contains(' ')).then_some((a, b))
}

pub fn parse_sparse_vector(text: &str) -> Result<SparseVector, FormatError> {
    let mut length = None;
    let mut seen: HashMap<Index, (Value, usize)> = HashMap::new();
    let mut entries = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines = if text.is_empty() { None } else { Some(body.split('\n')) };
    for (n, raw) in lines.into_iter().flatten().enumerate() {
        let line = n + 1;
        if raw.starts_with('#') {
            continue;
        }
        let malformed = |reason| FormatError::Malformed { line, reason };
        let Some(len) = length else {
            let len = raw
                .strip_prefix("N ")
                .ok_or(malformed("expected \"N <length>\""))?;
            length = Some(unsigned(len).ok_or(malformed("length is not a non-negative integer"))?);
            continue;
        };
        let (i, v) = split_pair(raw).ok_or(malformed("expected \"<index> <value>\""))?;
        let index = unsigned(i).ok_or(malformed("index is not a non-negative 64-bit integer"))?;
        let value = signed(v).ok_or(malformed("value is not a 64-bit integer"))?;
        if index >= len {
            return Err(FormatError::IndexOutOfRange { line, index, length: len });
        }
        match seen.get(&index) {
            Some(&(first, first_line)) if first != value => {
                return Err(FormatError::Conflict {
                    line,
                    first_line,
                    index,
                    first,
                    second: value,
                })
            }
            Some(_) => {}
            None => {
                seen.insert(index, (value, line));
                entries.push((index, value));
            }
        }
    }
    let length = length.ok_or(FormatError::MissingHeader)?;
    Ok(SparseVector::new(length, entries).expect("entries validated line by line"))
}

pub fn read_sparse_vector(mut reader: impl Read) -> Result<SparseVector, FormatError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| match e.kind() {
            io::ErrorKind::InvalidData => FormatError::Malformed {
                line: 0,
                reason: "input is not UTF-8 text",
            },
            _ => FormatError::Io(e),
        })?;
    parse_sparse_vector(&text)
}

pub fn serialize_sparse_vector(v: &SparseVector) -> String {
    let mut out = String::with_capacity(16 + 24 * v.nnz());
    writeln!(out, "N {}", v.length()).unwrap();
    for &(i, x) in v.entries() {
        writeln!(out, "{i} {x}").unwrap();
    }
    out
}

/// Writes `contents` next to `path` and renames it into place, so a failed
/// run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
