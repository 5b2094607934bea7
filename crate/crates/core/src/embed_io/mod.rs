//! Interchange formats and the validated containers they decode into.
//!
//! Two little-endian binary containers carry numeric data:
//!
//! - `SEMB`: a table of per-token embedding matrices keyed by string id.
//! - `SMAT`: a single dense row-major matrix.
//!
//! Datasets of knowledge items travel as UTF-8 JSON Lines. Every decoder
//! validates the whole input and returns a typed [`Error`](crate::Error)
//! rather than a partially filled structure.

mod binary;
mod dataset;
mod types;

pub use binary::{
    decode_embeddings, decode_matrix, encode_embeddings, encode_matrix, read_embeddings,
    read_matrix, write_embeddings, write_matrix, FORMAT_VERSION, SEMB_MAGIC, SMAT_MAGIC,
};
pub use dataset::{decode_dataset, encode_dataset, read_dataset, write_dataset};
pub use types::{
    embedding_key, AnswerRole, DenseMatrix, EmbeddingTable, KnowledgeItem, LocalityProbe, Rephrase,
    TokenMatrix,
};
