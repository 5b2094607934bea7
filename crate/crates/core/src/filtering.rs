//! Greedy curation of a fine-tuning working set.
//!
//! The working set's target distances are scored by
//! `mean - lambda * dispersion`, lower is better, subject to the mean lying
//! strictly inside `(mean_min, mean_max)`. Each step swaps one working item
//! for one pool item, choosing the pair that gives the lowest objective for
//! the resulting full-size set. Pair evaluation is O(1) from running sums,
//! so a step costs O(|working| * |pool|).

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed_io::{EmbeddingTable, KnowledgeItem};
use crate::error::{Error, Result};
use crate::semantics::{target_distance, DistancePair};
use crate::stats::{mean, population_variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// Population variance.
    #[default]
    Variance,
    /// Population standard deviation.
    StdDev,
}

impl Dispersion {
    fn of_variance(self, var: f64) -> f64 {
        match self {
            Dispersion::Variance => var,
            Dispersion::StdDev => var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub lambda_weight: f64,
    pub mean_min: f64,
    pub mean_max: f64,
    pub replace_fraction: f64,
    pub dispersion: Dispersion,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            lambda_weight: 1.0,
            mean_min: 0.2,
            mean_max: 0.8,
            replace_fraction: 0.6,
            dispersion: Dispersion::Variance,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda_weight >= 0.0 && self.lambda_weight.is_finite()) {
            return bad(format!(
                "lambda_weight must be finite and >= 0, got {}",
                self.lambda_weight
            ));
        }
        if !(0.0 <= self.mean_min && self.mean_min < self.mean_max && self.mean_max <= 2.0) {
            return bad(format!(
                "need 0 <= mean_min < mean_max <= 2, got ({}, {})",
                self.mean_min, self.mean_max
            ));
        }
        if !(0.0..=1.0).contains(&self.replace_fraction) {
            return bad(format!(
                "replace_fraction must lie in [0, 1], got {}",
                self.replace_fraction
            ));
        }
        Ok(())
    }

    fn admits(&self, mean: f64) -> bool {
        self.mean_min < mean && mean < self.mean_max
    }
}

/// `mean(distances) - lambda * dispersion(distances)`.
pub fn objective(distances: &[f64], cfg: &FilterConfig) -> Result<f64> {
    let m = mean(distances).ok_or(Error::EmptySet)?;
    let var = population_variance(distances).ok_or(Error::EmptySet)?;
    Ok(m - cfg.lambda_weight * cfg.dispersion.of_variance(var))
}

/// Number of swap steps for a working set of `n`: `ceil(fraction * n)`,
/// treating products within 1e-9 of an integer as that integer.
pub fn swap_count(n: usize, fraction: f64) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    let steps = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (steps.max(0.0) as usize).min(n)
}

/// An item id with its old-vs-target distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub id: String,
    pub distance: f64,
}

impl ScoredItem {
    pub fn new(id: impl Into<String>, distance: f64) -> Self {
        Self {
            id: id.into(),
            distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swap {
    pub removed_id: String,
    pub added_id: String,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// No pair strictly lowers the objective (includes an empty pool).
    NoImprovingSwap,
    /// Every candidate pair would move the mean outside the window.
    ConstraintInfeasible,
    /// Random baseline ran out of pool items.
    PoolExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub final_set: Vec<String>,
    pub swaps: Vec<Swap>,
    /// Objective of the initial set, then after each accepted swap.
    pub objective_trace: Vec<f64>,
    pub stopped_early: bool,
    pub stop_reason: Option<StopReason>,
}

pub fn score_items(items: &[KnowledgeItem], table: &EmbeddingTable) -> Result<Vec<ScoredItem>> {
    items
        .par_iter()
        .map(|item| {
            target_distance(item, table, DistancePair::OldVsTarget)
                .map(|d| ScoredItem::new(item.id.clone(), d))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn check_inputs(working: &[ScoredItem], pool: &[ScoredItem], cfg: &FilterConfig) -> Result<()> {
    cfg.validate()?;
    if working.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut seen = HashSet::new();
    for (set, name) in [(working, "working set"), (pool, "pool")] {
        for s in set {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: s.id.clone(),
                    location: format!("repeated in {name} or shared by working set and pool"),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct PairScore {
    objective: f64,
    mean: f64,
    removed: usize,
    added: usize,
}

/// Strict preference: lower objective, then smaller removed id, then
/// smaller added id.
fn better(a: &PairScore, b: &PairScore, working: &[ScoredItem], pool: &[ScoredItem]) -> bool {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| working[a.removed].id.cmp(&working[b.removed].id))
        .then_with(|| pool[a.added].id.cmp(&pool[b.added].id))
        == Ordering::Less
}

enum Search {
    Best(PairScore),
    Infeasible,
    EmptyPool,
}

fn best_pair(working: &[ScoredItem], pool: &[ScoredItem], cfg: &FilterConfig) -> Search {
    if pool.is_empty() {
        return Search::EmptyPool;
    }
    let n = working.len() as f64;
    let center = mean(&working.iter().map(|w| w.distance).collect::<Vec<_>>())
        .expect("working set is non-empty");
    let (s1, s2) = working.iter().fold((0.0, 0.0), |(s1, s2), w| {
        let c = w.distance - center;
        (s1 + c, s2 + c * c)
    });

    let pick = |acc: Option<PairScore>, cand: PairScore| match acc {
        Some(cur) if !better(&cand, &cur, working, pool) => Some(cur),
        _ => Some(cand),
    };

    let best = (0..working.len())
        .into_par_iter()
        .map(|r| {
            let a = working[r].distance - center;
            let mut local: Option<PairScore> = None;
            for (p, cand) in pool.iter().enumerate() {
                let b = cand.distance - center;
                let t1 = s1 - a + b;
                let t2 = s2 - a * a + b * b;
                let shift = t1 / n;
                let m = center + shift;
                if !cfg.admits(m) {
                    continue;
                }
                let var = (t2 / n - shift * shift).max(0.0);
                let score = PairScore {
                    objective: m - cfg.lambda_weight * cfg.dispersion.of_variance(var),
                    mean: m,
                    removed: r,
                    added: p,
                };
                local = pick(local, score);
            }
            local
        })
        .reduce(
            || None,
            |x, y| match (x, y) {
                (Some(x), Some(y)) => pick(Some(x), y),
                (x, None) => x,
                (None, y) => y,
            },
        );

    match best {
        Some(b) => Search::Best(b),
        None => Search::Infeasible,
    }
}

fn distances(set: &[ScoredItem]) -> Vec<f64> {
    set.iter().map(|s| s.distance).collect()
}

/// Greedy remove-and-replace over pre-scored items.
pub fn greedy_filter_scored(
    working: &[ScoredItem],
    pool: &[ScoredItem],
    cfg: &FilterConfig,
) -> Result<FilterResult> {
    check_inputs(working, pool, cfg)?;
    let steps = swap_count(working.len(), cfg.replace_fraction);

    let mut current = working.to_vec();
    let mut pool = pool.to_vec();
    let mut current_obj = objective(&distances(&current), cfg)?;
    let mut trace = vec![current_obj];
    let mut swaps = Vec::with_capacity(steps);
    let mut stop_reason = None;

    for _ in 0..steps {
        let pair = match best_pair(&current, &pool, cfg) {
            Search::Best(p) => p,
            Search::Infeasible => {
                stop_reason = Some(StopReason::ConstraintInfeasible);
                break;
            }
            Search::EmptyPool => {
                stop_reason = Some(StopReason::NoImprovingSwap);
                break;
            }
        };
        let mut next = current.clone();
        next[pair.removed] = pool[pair.added].clone();
        let next_d = distances(&next);
        let next_obj = objective(&next_d, cfg)?;
        let next_mean = mean(&next_d).expect("non-empty");
        if !(next_obj < current_obj) {
            stop_reason = Some(StopReason::NoImprovingSwap);
            break;
        }
        if !cfg.admits(next_mean) {
            // Running-sum mean admitted the pair but the exact mean sits on
            // the window edge.
            debug_assert!((next_mean - pair.mean).abs() < 1e-12);
            stop_reason = Some(StopReason::ConstraintInfeasible);
            break;
        }
        let added = pool.remove(pair.added);
        swaps.push(Swap {
            removed_id: current[pair.removed].id.clone(),
            added_id: added.id,
            objective_before: current_obj,
            objective_after: next_obj,
        });
        current = next;
        current_obj = next_obj;
        trace.push(current_obj);
    }

    Ok(FilterResult {
        final_set: current.into_iter().map(|s| s.id).collect(),
        swaps,
        objective_trace: trace,
        stopped_early: stop_reason.is_some(),
        stop_reason,
    })
}

pub fn greedy_filter(
    working: &[KnowledgeItem],
    pool: &[KnowledgeItem],
    table: &EmbeddingTable,
    cfg: &FilterConfig,
) -> Result<FilterResult> {
    cfg.validate()?;
    if working.is_empty() {
        return Err(Error::EmptySet);
    }
    greedy_filter_scored(
        &score_items(working, table)?,
        &score_items(pool, table)?,
        cfg,
    )
}

/// Comparison baseline: the same number of swaps, each replacing a
/// uniformly chosen working item with a uniformly chosen pool item.
/// Ignores the objective and the mean window.
pub fn random_baseline_scored(
    working: &[ScoredItem],
    pool: &[ScoredItem],
    cfg: &FilterConfig,
) -> Result<FilterResult> {
    check_inputs(working, pool, cfg)?;
    let steps = swap_count(working.len(), cfg.replace_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut current = working.to_vec();
    let mut pool = pool.to_vec();
    let mut current_obj = objective(&distances(&current), cfg)?;
    let mut trace = vec![current_obj];
    let mut swaps = Vec::with_capacity(steps);
    let mut stop_reason = None;

    for _ in 0..steps {
        if pool.is_empty() {
            stop_reason = Some(StopReason::PoolExhausted);
            break;
        }
        let r = rng.random_range(0..current.len());
        let p = rng.random_range(0..pool.len());
        let added = pool.remove(p);
        let removed = std::mem::replace(&mut current[r], added);
        let next_obj = objective(&distances(&current), cfg)?;
        swaps.push(Swap {
            removed_id: removed.id,
            added_id: current[r].id.clone(),
            objective_before: current_obj,
            objective_after: next_obj,
        });
        current_obj = next_obj;
        trace.push(current_obj);
    }

    Ok(FilterResult {
        final_set: current.into_iter().map(|s| s.id).collect(),
        swaps,
        objective_trace: trace,
        stopped_early: stop_reason.is_some(),
        stop_reason,
    })
}

pub fn random_baseline(
    working: &[KnowledgeItem],
    pool: &[KnowledgeItem],
    table: &EmbeddingTable,
    cfg: &FilterConfig,
) -> Result<FilterResult> {
    cfg.validate()?;
    if working.is_empty() {
        return Err(Error::EmptySet);
    }
    random_baseline_scored(
        &score_items(working, table)?,
        &score_items(pool, table)?,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, fraction: f64) -> FilterConfig {
        FilterConfig {
            lambda_weight: lambda,
            mean_min: 0.0,
            mean_max: 2.0,
            replace_fraction: fraction,
            ..FilterConfig::default()
        }
    }

    fn scored(prefix: &str, ds: &[f64]) -> Vec<ScoredItem> {
        ds.iter()
            .enumerate()
            .map(|(i, &d)| ScoredItem::new(format!("{prefix}{i}"), d))
            .collect()
    }

    #[test]
    fn objective_examples() {
        assert!((objective(&[0.2, 0.4], &cfg(0.0, 0.0)).unwrap() - 0.3).abs() < 1e-15);
        assert!((objective(&[0.3, 0.3, 0.3], &cfg(5.0, 0.0)).unwrap() - 0.3).abs() < 1e-15);
        let expected = 0.5 - 0.32 / 3.0;
        assert!((objective(&[0.1, 0.5, 0.9], &cfg(1.0, 0.0)).unwrap() - expected).abs() < 1e-15);
        let sd = FilterConfig {
            dispersion: Dispersion::StdDev,
            ..cfg(1.0, 0.0)
        };
        assert!(
            (objective(&[0.1, 0.5, 0.9], &sd).unwrap() - (0.5 - (0.32f64 / 3.0).sqrt())).abs()
                < 1e-15
        );
        assert!(matches!(
            objective(&[], &cfg(0.0, 0.0)),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn counts() {
        assert_eq!(swap_count(6, 1.0 / 3.0), 2);
        assert_eq!(swap_count(2, 0.5), 1);
        assert_eq!(swap_count(100, 0.6), 60);
        assert_eq!(swap_count(7, 0.5), 4);
        assert_eq!(swap_count(5, 0.0), 0);
        assert_eq!(swap_count(5, 1.0), 5);
    }

    #[test]
    fn forced_single_move() {
        let working = scored("w", &[0.9, 0.9]);
        let pool = scored("p", &[0.1]);
        let res = greedy_filter_scored(&working, &pool, &cfg(0.0, 0.5)).unwrap();
        assert_eq!(res.swaps.len(), 1);
        assert_eq!(res.swaps[0].removed_id, "w0");
        assert_eq!(res.final_set, vec!["p0", "w1"]);
        assert!((res.objective_trace[0] - 0.9).abs() < 1e-15);
        assert!((res.objective_trace[1] - 0.5).abs() < 1e-15);
        assert!(!res.stopped_early);
    }

    #[test]
    fn empty_pool_stops() {
        let res = greedy_filter_scored(&scored("w", &[0.5, 0.6]), &[], &cfg(1.0, 0.5)).unwrap();
        assert!(res.swaps.is_empty());
        assert!(res.stopped_early);
        assert_eq!(res.stop_reason, Some(StopReason::NoImprovingSwap));
        assert_eq!(res.final_set, vec!["w0", "w1"]);
    }

    #[test]
    fn no_improvement_stops() {
        let res = greedy_filter_scored(
            &scored("w", &[0.1, 0.1]),
            &scored("p", &[0.9]),
            &cfg(0.0, 1.0),
        )
        .unwrap();
        assert_eq!(res.stop_reason, Some(StopReason::NoImprovingSwap));
        assert!(res.swaps.is_empty());
    }

    #[test]
    fn window_blocks_swaps() {
        let c = FilterConfig {
            mean_min: 0.45,
            mean_max: 0.8,
            ..cfg(0.0, 0.5)
        };
        let res =
            greedy_filter_scored(&scored("w", &[0.5, 0.5]), &scored("p", &[0.1]), &c).unwrap();
        assert_eq!(res.stop_reason, Some(StopReason::ConstraintInfeasible));
    }

    #[test]
    fn ties_prefer_smallest_ids() {
        let working = vec![ScoredItem::new("b", 0.9), ScoredItem::new("a", 0.9)];
        let pool = vec![ScoredItem::new("z", 0.1), ScoredItem::new("y", 0.1)];
        let res = greedy_filter_scored(&working, &pool, &cfg(0.0, 0.5)).unwrap();
        assert_eq!(res.swaps[0].removed_id, "a");
        assert_eq!(res.swaps[0].added_id, "y");
    }

    #[test]
    fn lambda_zero_swaps_max_for_min() {
        let working = scored("w", &[0.3, 0.8, 0.5, 0.7]);
        let pool = scored("p", &[0.6, 0.2, 0.4, 0.25]);
        let res = greedy_filter_scored(&working, &pool, &cfg(0.0, 0.5)).unwrap();
        let pairs: Vec<_> = res
            .swaps
            .iter()
            .map(|s| (s.removed_id.as_str(), s.added_id.as_str()))
            .collect();
        assert_eq!(pairs, vec![("w1", "p1"), ("w3", "p3")]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let w = scored("w", &[0.5]);
        assert!(matches!(
            greedy_filter_scored(&[], &w, &cfg(0.0, 0.5)),
            Err(Error::EmptySet)
        ));
        assert!(matches!(
            greedy_filter_scored(&w, &w, &cfg(0.0, 0.5)),
            Err(Error::DuplicateId { .. })
        ));
        let bad = FilterConfig {
            mean_min: 0.9,
            mean_max: 0.1,
            ..FilterConfig::default()
        };
        assert!(matches!(
            greedy_filter_scored(&w, &[], &bad),
            Err(Error::InvalidConfig(_))
        ));
        let bad = FilterConfig {
            lambda_weight: -1.0,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterConfig {
            replace_fraction: 1.5,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn baseline_is_seeded() {
        let working = scored("w", &[0.1, 0.2, 0.3, 0.4, 0.5]);
        let pool = scored("p", &[0.6, 0.7, 0.8, 0.9, 1.0, 1.1]);
        let c = FilterConfig {
            seed: 7,
            ..cfg(1.0, 0.6)
        };
        let a = random_baseline_scored(&working, &pool, &c).unwrap();
        let b = random_baseline_scored(&working, &pool, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.swaps.len(), 3);
        let ident = random_baseline_scored(&working, &pool, &cfg(1.0, 0.0)).unwrap();
        assert!(ident.swaps.is_empty());
        assert_eq!(ident.final_set, vec!["w0", "w1", "w2", "w3", "w4"]);
        let short = random_baseline_scored(&working, &pool[..1], &c).unwrap();
        assert_eq!(short.stop_reason, Some(StopReason::PoolExhausted));
        assert_eq!(short.swaps.len(), 1);
    }
}
