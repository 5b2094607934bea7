//! Target semantic distance: mean-pooled token embeddings compared by
//! cosine, plus the re-weighting coefficient derived from that distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::embed_io::{AnswerRole, EmbeddingTable, KnowledgeItem, TokenMatrix};
use crate::error::{Error, Operand, Result};

/// Which answer is compared against the item's target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistancePair {
    OldVsTarget,
    NewVsTarget,
}

/// Coordinate-wise mean of the token rows, accumulated in `f64`.
pub fn mean_pool(tokens: &TokenMatrix) -> Result<Vec<f64>> {
    if tokens.rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut acc = vec![0.0f64; tokens.cols()];
    for row in tokens.iter_rows() {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += f64::from(v);
        }
    }
    let n = tokens.rows() as f64;
    for a in &mut acc {
        *a /= n;
    }
    Ok(acc)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1 - cos(a, b)`, clamped into `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if !(na > 0.0) {
        return Err(Error::ZeroNormVector(Operand::Left));
    }
    if !(nb > 0.0) {
        return Err(Error::ZeroNormVector(Operand::Right));
    }
    let sim = dot(a, b) / (na * nb);
    Ok((1.0 - sim).clamp(0.0, 2.0))
}

/// Distance between the target answer and the selected other answer of
/// `item`, using the records `<id>#target` and `<id>#old` / `<id>#new`.
pub fn target_distance(
    item: &KnowledgeItem,
    table: &EmbeddingTable,
    which: DistancePair,
) -> Result<f64> {
    let other = match which {
        DistancePair::OldVsTarget => AnswerRole::Old,
        DistancePair::NewVsTarget => AnswerRole::New,
    };
    let other = mean_pool(table.require(&item.key(other))?)?;
    let target = mean_pool(table.require(&item.key(AnswerRole::Target))?)?;
    cosine_distance(&other, &target)
}

/// Re-weighting coefficient `1 - cos(d*pi - pi/2)` for `d` in `[0, 1]`.
///
/// Equals 1 at both ends of the range and 0 at `d = 0.5`.
pub fn reweight_lambda(d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::DistanceOutOfRange(vec![(String::new(), d)]));
    }
    // cos(x - pi/2) == sin(x); sin is evaluated directly so the symmetric
    // points d and 1 - d agree to the last few ulps.
    Ok((1.0 - (PI * d).sin()).clamp(0.0, 1.0))
}
