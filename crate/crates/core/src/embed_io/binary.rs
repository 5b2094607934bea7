//! `SEMB` / `SMAT` containers.
//!
//! Layout (all integers `u32` little-endian, all reals `f32` little-endian):
//!
//! ```text
//! SEMB: "SEMB" | version=1 | dim | count | count x record
//!       record: id_len | id (UTF-8) | token_count | token_count*dim reals, row-major
//! SMAT: "SMAT" | version=1 | rows | cols | rows*cols reals, row-major
//! ```

use std::path::Path;

use super::types::{DenseMatrix, EmbeddingTable, TokenMatrix};
use crate::error::{Error, Result};

pub const SEMB_MAGIC: &[u8; 4] = b"SEMB";
pub const SMAT_MAGIC: &[u8; 4] = b"SMAT";
pub const FORMAT_VERSION: u32 = 1;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: u64, field: &'static str) -> Result<&'a [u8]> {
        let available = self.remaining() as u64;
        if n > available {
            return Err(Error::TruncatedFile {
                offset: self.offset(),
                needed: n - available,
                field,
            });
        }
        let n = n as usize;
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        let b = self.take(4, field)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn reals(&mut self, count: u64, field: &'static str) -> Result<Vec<f32>> {
        let start = self.offset();
        let bytes = self.take(count.saturating_mul(4), field)?;
        bytes
            .chunks_exact(4)
            .enumerate()
            .map(|(i, c)| {
                let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteValue {
                        offset: start + 4 * i as u64,
                    })
                }
            })
            .collect()
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found = self.take(4, "magic").map_err(|_| Error::MagicMismatch {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(self.bytes).into_owned(),
        })?;
        if found != magic {
            return Err(Error::MagicMismatch {
                expected: String::from_utf8_lossy(magic).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        let at = self.offset();
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                offset: at,
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.remaining() > 0 {
            return Err(Error::TrailingData {
                offset: self.offset(),
                count: self.remaining() as u64,
            });
        }
        Ok(())
    }
}

fn positive(value: u32, offset: u64, what: &str) -> Result<usize> {
    if value == 0 {
        return Err(Error::InvalidShape {
            offset,
            detail: format!("{what} must be positive"),
        });
    }
    Ok(value as usize)
}

fn checked_u32(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::InvalidShape {
        offset: 0,
        detail: format!("{what} {value} exceeds u32 range"),
    })
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingTable> {
    let mut cur = Cursor::new(bytes);
    cur.header(SEMB_MAGIC)?;
    let dim_at = cur.offset();
    let dim = positive(cur.u32("dim")?, dim_at, "dim")?;
    let count = cur.u32("count")?;
    let mut table = EmbeddingTable::new(dim)?;
    for _ in 0..count {
        let record_at = cur.offset();
        let id_len = cur.u32("id_len")?;
        let id_at = cur.offset();
        let id = std::str::from_utf8(cur.take(id_len as u64, "id")?)
            .map_err(|_| Error::InvalidUtf8 { offset: id_at })?
            .to_owned();
        let tokens_at = cur.offset();
        let tokens = positive(cur.u32("token_count")?, tokens_at, "token_count")?;
        let values = cur.reals(tokens as u64 * dim as u64, "token values")?;
        if table.contains(&id) {
            return Err(Error::DuplicateId {
                id,
                location: format!("record at byte {record_at}"),
            });
        }
        table.insert(id, TokenMatrix::new(tokens, dim, values)?)?;
    }
    cur.finish()?;
    Ok(table)
}

pub fn encode_embeddings(table: &EmbeddingTable) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(SEMB_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&checked_u32(table.dim(), "dim")?.to_le_bytes());
    out.extend_from_slice(&checked_u32(table.len(), "record count")?.to_le_bytes());
    for (id, tokens) in table.iter() {
        out.extend_from_slice(&checked_u32(id.len(), "id length")?.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.extend_from_slice(&checked_u32(tokens.rows(), "token count")?.to_le_bytes());
        for v in tokens.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DenseMatrix> {
    let mut cur = Cursor::new(bytes);
    cur.header(SMAT_MAGIC)?;
    let rows_at = cur.offset();
    let rows = positive(cur.u32("rows")?, rows_at, "rows")?;
    let cols_at = cur.offset();
    let cols = positive(cur.u32("cols")?, cols_at, "cols")?;
    let values = cur.reals(rows as u64 * cols as u64, "matrix values")?;
    cur.finish()?;
    DenseMatrix::new(rows, cols, values.into_iter().map(f64::from).collect())
}

/// Narrows entries to `f32`. Entries outside `f32` range are rejected with
/// the byte offset they would have occupied.
pub fn encode_matrix(m: &DenseMatrix) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * m.values().len());
    out.extend_from_slice(SMAT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&checked_u32(m.rows(), "rows")?.to_le_bytes());
    out.extend_from_slice(&checked_u32(m.cols(), "cols")?.to_le_bytes());
    for &v in m.values() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::NonFiniteValue {
                offset: out.len() as u64,
            });
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    decode_embeddings(&read_file(path.as_ref())?)
}

pub fn write_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_embeddings(table)?)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    decode_matrix(&read_file(path.as_ref())?)
}

pub fn write_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_matrix(m)?)
}
