use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token-level embeddings of one string: `rows` tokens by `cols` dimensions,
/// stored row-major in the same `f32` precision as the `SEMB` container.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl TokenMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape {
                offset: 0,
                detail: format!("token matrix must be at least 1x1, got {rows}x{cols}"),
            });
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidShape {
                offset: 0,
                detail: format!(
                    "{rows}x{cols} token matrix needs {} values, got {}",
                    rows * cols,
                    values.len()
                ),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                offset: (pos * 4) as u64,
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from token rows, all of which must have equal length.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != cols) {
            return Err(Error::DimensionMismatch {
                left: cols,
                right: bad.as_ref().len(),
            });
        }
        let values = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.cols)
    }
}

/// Embedding records keyed by id, all sharing one dimension.
///
/// Records are kept in ascending id order, which is also the order the
/// `SEMB` writer emits them in.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    records: BTreeMap<String, TokenMatrix>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidShape {
                offset: 0,
                detail: "embedding dimension must be positive".into(),
            });
        }
        Ok(Self {
            dim,
            records: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Adds a record. Duplicate ids are rejected, never overwritten.
    pub fn insert(&mut self, id: impl Into<String>, tokens: TokenMatrix) -> Result<()> {
        let id = id.into();
        if tokens.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: tokens.cols(),
            });
        }
        if self.records.contains_key(&id) {
            return Err(Error::DuplicateId {
                location: "already present in table".into(),
                id,
            });
        }
        self.records.insert(id, tokens);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&TokenMatrix> {
        self.records.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.records.contains_key(id)
    }

    /// Looks up a record, failing with `MissingEmbedding` when absent.
    pub fn require(&self, id: &str) -> Result<&TokenMatrix> {
        self.get(id)
            .ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TokenMatrix)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Which answer of a knowledge item an embedding record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnswerRole {
    Target,
    Old,
    New,
}

impl AnswerRole {
    pub fn suffix(self) -> &'static str {
        match self {
            AnswerRole::Target => "target",
            AnswerRole::Old => "old",
            AnswerRole::New => "new",
        }
    }
}

/// The table key for an item's answer: `<item_id>#target`, `#old` or `#new`.
pub fn embedding_key(item_id: &str, role: AnswerRole) -> String {
    format!("{item_id}#{}", role.suffix())
}

/// Dense row-major matrix of `f64` entries.
///
/// `SMAT` files store `f32`, so values read from disk are exactly
/// representable in single precision; values computed in memory are not
/// narrowed until written.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                offset: (pos * 8) as u64,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let values = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// Plain triple-loop product, accumulated in `f64`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.values[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.values[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.values[r * self.cols + c]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rephrase {
    pub prompt: String,
    /// The fine-tuned model's answer to the rephrased prompt.
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityProbe {
    pub prompt: String,
    pub old_answer: String,
    pub new_answer: String,
}

/// One knowledge tuple: a prompt, the answer to teach, what the model said
/// before tuning and, optionally, what it says afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub id: String,
    pub prompt: String,
    pub target: String,
    pub old: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rephrases: Vec<Rephrase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub locality_probes: Vec<LocalityProbe>,
}

impl KnowledgeItem {
    pub fn new(
        id: impl Into<String>,
        prompt: impl Into<String>,
        target: impl Into<String>,
        old: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            prompt: prompt.into(),
            target: target.into(),
            old: old.into(),
            new: None,
            rephrases: Vec::new(),
            locality_probes: Vec::new(),
        }
    }

    pub fn with_new(mut self, new: impl Into<String>) -> Self {
        self.new = Some(new.into());
        self
    }

    pub fn key(&self, role: AnswerRole) -> String {
        embedding_key(&self.id, role)
    }
}
