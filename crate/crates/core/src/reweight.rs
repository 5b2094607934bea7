//! Per-example loss multipliers.
//!
//! The re-weighted objective is `L' = L + gamma * sum_i lambda_i * L_i`, so
//! each example's loss is scaled by `1 + gamma * lambda_i`, where
//! `lambda_i` comes from [`reweight_lambda`] applied to the distance between
//! the pre-tune answer and the target. Training loops multiply each
//! example's loss by [`WeightRecord::weight`].

use serde::{Deserialize, Serialize};

use crate::embed_io::{EmbeddingTable, KnowledgeItem};
use crate::error::{Error, Result};
use crate::filtering::score_items;
use crate::semantics::reweight_lambda;

pub const DEFAULT_GAMMA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub item_id: String,
    pub distance: f64,
    pub lambda_value: f64,
    pub weight: f64,
    pub gamma: f64,
}

impl WeightRecord {
    pub fn new(item_id: impl Into<String>, distance: f64, gamma: f64) -> Result<Self> {
        let item_id = item_id.into();
        let lambda_value = match reweight_lambda(distance) {
            Ok(l) => l,
            Err(_) => return Err(Error::DistanceOutOfRange(vec![(item_id, distance)])),
        };
        Ok(Self {
            item_id,
            distance,
            lambda_value,
            weight: 1.0 + gamma * lambda_value,
            gamma,
        })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )))
    }
}

/// One record per item, in input order. Fails if any distance exceeds 1,
/// listing every offending item.
pub fn emit_weights(
    items: &[KnowledgeItem],
    table: &EmbeddingTable,
    gamma: f64,
) -> Result<Vec<WeightRecord>> {
    check_gamma(gamma)?;
    let scored = score_items(items, table)?;
    let offenders: Vec<(String, f64)> = scored
        .iter()
        .filter(|s| !(0.0..=1.0).contains(&s.distance))
        .map(|s| (s.id.clone(), s.distance))
        .collect();
    if !offenders.is_empty() {
        return Err(Error::DistanceOutOfRange(offenders));
    }
    scored
        .into_iter()
        .map(|s| WeightRecord::new(s.id, s.distance, gamma))
        .collect()
}

/// `sum_i weight_i * loss_i`, summed left to right.
pub fn compose_loss(per_example_losses: &[f64], weights: &[WeightRecord]) -> Result<f64> {
    if per_example_losses.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: per_example_losses.len(),
            right: weights.len(),
        });
    }
    Ok(per_example_losses
        .iter()
        .zip(weights)
        .fold(0.0, |acc, (l, w)| acc + w.weight * l))
}
