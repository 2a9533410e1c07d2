//! Plain-text matrix input and atomic report output.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::num::Scalar;

/// Options for reading delimiter-separated numeric tables.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Skip the first non-empty line.
    pub header: bool,
    /// Transpose after reading (columns become observations).
    pub transpose: bool,
}

/// Parses a matrix from text. Fields are separated by commas or whitespace;
/// blank lines are skipped. Every row must have the same number of fields.
pub fn parse_matrix<T: Scalar>(text: &str, opts: ReadOptions) -> Result<DenseMatrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width = 0usize;
    let mut skipped_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if opts.header && !skipped_header {
            skipped_header = true;
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        let mut row = Vec::with_capacity(fields.len());
        for f in &fields {
            if f.is_empty() {
                return Err(Error::Parse { line: line_no, msg: "empty field".into() });
            }
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("not a number: {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite value: {f:?}"),
                });
            }
            row.push(T::of(v));
        }
        if rows.is_empty() {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {width} fields, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let (r, c) = (rows.len(), width);
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    let m = DenseMatrix::new(r, c, flat)?;
    Ok(if opts.transpose { m.transpose() } else { m })
}

pub fn read_matrix<T: Scalar>(path: &Path, opts: ReadOptions) -> Result<DenseMatrix<T>> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, opts)
}

/// Writes `content` to `path` atomically: a temporary file in the same
/// directory is written, flushed, and renamed over the target.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem.is_empty() {
        return Err(Error::InvalidInput(format!("not a file path: {}", path.display())));
    }
    let tmp = dir.join(format!(".{stem}.tmp.{}", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(content.as_bytes())?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}
