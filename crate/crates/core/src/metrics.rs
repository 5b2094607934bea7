//! Knowledge-learning scores and deviation diagnostics.
//!
//! - accuracy: post-tune answer matches the target
//! - generality: answers to rephrased prompts match the target
//! - locality: unrelated probes keep their pre-tune answer
//! - deviation: the post-tune answer is farther from the target than the
//!   pre-tune answer was, measured by target semantic distance

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::embed_io::{EmbeddingTable, KnowledgeItem};
use crate::error::{Error, Result};
use crate::semantics::{target_distance, DistancePair};
use crate::stats::{ratio, stable_sum};

/// Upper end of the cosine distance range.
pub const MAX_DISTANCE: f64 = 2.0;

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

fn normalize(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-sensitive equality after NFC normalization, trimming, and collapsing
/// internal whitespace runs to a single space.
pub fn exact_match(predicted: &str, target: &str) -> bool {
    predicted == target || normalize(predicted) == normalize(target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub accuracy: f64,
    pub generality: Option<f64>,
    pub locality: Option<f64>,
    pub n_items: usize,
    pub n_rephrases: usize,
    pub n_probes: usize,
}

fn require_new(items: &[KnowledgeItem]) -> Result<()> {
    let missing: Vec<String> = items
        .iter()
        .filter(|i| i.new.is_none())
        .map(|i| i.id.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingNewAnswer(missing))
    }
}

fn item_is_correct(item: &KnowledgeItem) -> bool {
    item.new
        .as_deref()
        .is_some_and(|new| exact_match(new, &item.target))
}

/// Accuracy, generality and locality over a dataset.
///
/// Rephrase answers are scored against the item's own target.
pub fn score_dataset(items: &[KnowledgeItem]) -> Result<ScoreReport> {
    if items.is_empty() {
        return Err(Error::EmptySet);
    }
    require_new(items)?;

    let correct = items.iter().filter(|i| item_is_correct(i)).count();

    let mut n_rephrases = 0;
    let mut general = 0;
    let mut n_probes = 0;
    let mut local = 0;
    for item in items {
        for r in &item.rephrases {
            n_rephrases += 1;
            general += usize::from(exact_match(&r.answer, &item.target));
        }
        for p in &item.locality_probes {
            n_probes += 1;
            local += usize::from(exact_match(&p.new_answer, &p.old_answer));
        }
    }

    Ok(ScoreReport {
        accuracy: correct as f64 / items.len() as f64,
        generality: ratio(general, n_rephrases),
        locality: ratio(local, n_probes),
        n_items: items.len(),
        n_rephrases,
        n_probes,
    })
}

/// `(new - old) / old`, undefined when `old` is zero.
pub fn relative_deviation(dist_old: f64, dist_new: f64) -> Option<f64> {
    (dist_old != 0.0).then(|| (dist_new - dist_old) / dist_old)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub item_id: String,
    pub dist_old_target: f64,
    pub dist_new_target: f64,
    pub deviated: bool,
    pub rd: Option<f64>,
    pub is_bad_case: bool,
}

impl DeviationRecord {
    pub fn from_distances(
        item_id: impl Into<String>,
        dist_old: f64,
        dist_new: f64,
        correct: bool,
    ) -> Self {
        Self {
            item_id: item_id.into(),
            dist_old_target: dist_old,
            dist_new_target: dist_new,
            deviated: dist_new > dist_old,
            rd: relative_deviation(dist_old, dist_new),
            is_bad_case: !correct || dist_new > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub n_items: usize,
    pub n_deviated: usize,
    pub n_bad_cases: usize,
    pub n_deviated_bad_cases: usize,
    pub proportion_all: f64,
    /// Absent when there are no bad cases.
    pub proportion_bad_cases: Option<f64>,
    /// Mean over records whose `rd` is defined.
    pub mean_rd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub records: Vec<DeviationRecord>,
    pub summary: DeviationSummary,
}

/// Runs `f` over items in parallel, returning results in input order and
/// the first error by position, independent of scheduling.
fn per_item<T: Send>(
    items: &[KnowledgeItem],
    f: impl Fn(&KnowledgeItem) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    items
        .par_iter()
        .map(f)
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn deviation_record(item: &KnowledgeItem, table: &EmbeddingTable) -> Result<DeviationRecord> {
    let old = target_distance(item, table, DistancePair::OldVsTarget)?;
    let new = target_distance(item, table, DistancePair::NewVsTarget)?;
    Ok(DeviationRecord::from_distances(
        item.id.clone(),
        old,
        new,
        item_is_correct(item),
    ))
}

pub fn summarize_deviation(records: &[DeviationRecord]) -> Result<DeviationSummary> {
    if records.is_empty() {
        return Err(Error::EmptySet);
    }
    let n_deviated = records.iter().filter(|r| r.deviated).count();
    let n_bad_cases = records.iter().filter(|r| r.is_bad_case).count();
    let n_deviated_bad_cases = records
        .iter()
        .filter(|r| r.is_bad_case && r.deviated)
        .count();
    let rds: Vec<f64> = records.iter().filter_map(|r| r.rd).collect();
    Ok(DeviationSummary {
        n_items: records.len(),
        n_deviated,
        n_bad_cases,
        n_deviated_bad_cases,
        proportion_all: n_deviated as f64 / records.len() as f64,
        proportion_bad_cases: ratio(n_deviated_bad_cases, n_bad_cases),
        mean_rd: (!rds.is_empty()).then(|| stable_sum(rds.iter().copied()) / rds.len() as f64),
    })
}

pub fn deviation_analysis(
    items: &[KnowledgeItem],
    table: &EmbeddingTable,
) -> Result<DeviationReport> {
    if items.is_empty() {
        return Err(Error::EmptySet);
    }
    require_new(items)?;
    let records = per_item(items, |item| deviation_record(item, table))?;
    let summary = summarize_deviation(&records)?;
    Ok(DeviationReport { records, summary })
}

/// Which per-bin statistics to compute. Both need post-tune answers;
/// `deviation` also needs `#new` embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatSet {
    pub accuracy: bool,
    pub deviation: bool,
}

impl Default for StatSet {
    fn default() -> Self {
        Self {
            accuracy: true,
            deviation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub n_items: usize,
    pub accuracy: Option<f64>,
    pub deviation_proportion: Option<f64>,
    pub mean_rd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedReport {
    pub bin_width: f64,
    pub bins: Vec<Bin>,
}

/// Edges `i * width` covering `[0, 2]`; the last bin is closed on the right.
#[derive(Debug, Clone, Copy)]
pub struct BinEdges {
    width: f64,
    count: usize,
}

impl BinEdges {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::InvalidBinWidth(width));
        }
        let mut count = (MAX_DISTANCE / width).ceil() as usize;
        while count > 1 && (count - 1) as f64 * width >= MAX_DISTANCE {
            count -= 1;
        }
        while (count as f64) * width < MAX_DISTANCE {
            count += 1;
        }
        Ok(Self { width, count })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn lo(&self, i: usize) -> f64 {
        i as f64 * self.width
    }

    pub fn hi(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            MAX_DISTANCE
        } else {
            (i + 1) as f64 * self.width
        }
    }

    /// Largest `i` whose lower edge is `<= d`, so ties go to the right bin.
    pub fn index(&self, d: f64) -> usize {
        let last = self.count - 1;
        let mut i = ((d / self.width).floor().max(0.0) as usize).min(last);
        while i < last && self.lo(i + 1) <= d {
            i += 1;
        }
        while i > 0 && self.lo(i) > d {
            i -= 1;
        }
        i
    }
}

struct BinnedItem {
    dist_old: f64,
    correct: Option<bool>,
    deviation: Option<DeviationRecord>,
}

/// Partitions items by their old-vs-target distance and reports statistics
/// per bin. Empty bins carry `n_items = 0` and no statistics.
pub fn binned_report(
    items: &[KnowledgeItem],
    table: &EmbeddingTable,
    bin_width: f64,
    stats: StatSet,
) -> Result<BinnedReport> {
    let edges = BinEdges::new(bin_width)?;
    if stats.accuracy || stats.deviation {
        require_new(items)?;
    }
    let binned = per_item(items, |item| {
        let deviation = if stats.deviation {
            Some(deviation_record(item, table)?)
        } else {
            None
        };
        let dist_old = match &deviation {
            Some(r) => r.dist_old_target,
            None => target_distance(item, table, DistancePair::OldVsTarget)?,
        };
        Ok(BinnedItem {
            dist_old,
            correct: stats.accuracy.then(|| item_is_correct(item)),
            deviation,
        })
    })?;

    let mut groups: Vec<Vec<&BinnedItem>> = (0..edges.len()).map(|_| Vec::new()).collect();
    for b in &binned {
        groups[edges.index(b.dist_old)].push(b);
    }

    let bins = groups
        .iter()
        .enumerate()
        .map(|(i, group)| {
            let n = group.len();
            let accuracy = if stats.accuracy {
                ratio(group.iter().filter(|b| b.correct == Some(true)).count(), n)
            } else {
                None
            };
            let (deviation_proportion, mean_rd) = if stats.deviation {
                let recs: Vec<&DeviationRecord> =
                    group.iter().filter_map(|b| b.deviation.as_ref()).collect();
                let rds: Vec<f64> = recs.iter().filter_map(|r| r.rd).collect();
                (
                    ratio(recs.iter().filter(|r| r.deviated).count(), n),
                    (!rds.is_empty()).then(|| stable_sum(rds.iter().copied()) / rds.len() as f64),
                )
            } else {
                (None, None)
            };
            Bin {
                lo: edges.lo(i),
                hi: edges.hi(i),
                n_items: n,
                accuracy,
                deviation_proportion,
                mean_rd,
            }
        })
        .collect();

    Ok(BinnedReport { bin_width, bins })
}
