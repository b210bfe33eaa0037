//! Classifier evaluation (ROC AUC, average precision, thresholded
//! confusion metrics per bucket) and the baseline allocation strategies the
//! model-based allocator is compared against.

use serde::{Deserialize, Serialize};

use crate::domain::{AllocationConfig, AllocationPlan, CostModel, ItemRecord, PlanEntry, Region};
use crate::error::{Error, Result};
use crate::sim::LatentItem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub score: f64,
    pub label: bool,
    pub bucket: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn tabulate<'a>(scored: impl IntoIterator<Item = &'a ScoredLabel>, threshold: f64) -> Self {
        let mut c = Confusion::default();
        for s in scored {
            match (s.score >= threshold, s.label) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Accuracy, precision, recall and F1. Precision is 1 when nothing is
    /// predicted positive; recall needs at least one positive label.
    pub fn metrics(&self) -> Result<ClassMetrics> {
        if self.total() == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.tp + self.fn_ == 0 {
            return Err(Error::Data("recall undefined without positive labels".into()));
        }
        let accuracy = (self.tp + self.tn) as f64 / self.total() as f64;
        let precision = if self.tp + self.fp == 0 { 1.0 } else { self.tp as f64 / (self.tp + self.fp) as f64 };
        let recall = self.tp as f64 / (self.tp + self.fn_) as f64;
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Ok(ClassMetrics { accuracy, precision, recall, f1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketMetrics {
    pub bucket: usize,
    pub confusion: Confusion,
    /// `None` when the bucket holds no positive labels.
    pub metrics: Option<ClassMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub pr_auc: f64,
    pub threshold: f64,
    pub overall: ClassMetrics,
    pub confusion: Confusion,
    pub per_bucket: Vec<BucketMetrics>,
    pub pr_curve: Vec<PrPoint>,
}

fn class_counts(scored: &[ScoredLabel]) -> (usize, usize) {
    let pos = scored.iter().filter(|s| s.label).count();
    (pos, scored.len() - pos)
}

/// ROC AUC as the Mann-Whitney statistic, ties counted one half.
pub fn auc(scored: &[ScoredLabel]) -> Result<f64> {
    let (pos, neg) = class_counts(scored);
    if pos == 0 || neg == 0 {
        return Err(Error::Data("auc needs both positive and negative labels".into()));
    }
    let mut sorted: Vec<&ScoredLabel> = scored.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    // sum of (1-based, tie-averaged) ranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let group_pos = sorted[i..j].iter().filter(|s| s.label).count();
        rank_sum += avg_rank * group_pos as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn pr_metrics(scored: &[ScoredLabel], threshold: f64) -> Result<ClassMetrics> {
    Confusion::tabulate(scored, threshold).metrics()
}

/// Precision/recall at every distinct score (descending) and the step-wise
/// average precision.
pub fn pr_curve_and_auc(scored: &[ScoredLabel]) -> Result<(Vec<PrPoint>, f64)> {
    let (pos, _) = class_counts(scored);
    if pos == 0 {
        return Err(Error::Data("precision-recall needs at least one positive label".into()));
    }
    let mut sorted: Vec<&ScoredLabel> = scored.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].score;
        while i < sorted.len() && sorted[i].score == score {
            if sorted[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint { threshold: score, recall, precision });
    }
    Ok((points, ap))
}

/// Full report: ranking metrics, thresholded metrics overall and per bucket.
pub fn evaluate(scored: &[ScoredLabel], threshold: f64) -> Result<MetricsReport> {
    let auc = auc(scored)?;
    let (pr_curve, pr_auc) = pr_curve_and_auc(scored)?;
    let confusion = Confusion::tabulate(scored, threshold);
    let overall = confusion.metrics()?;
    let buckets = scored.iter().map(|s| s.bucket + 1).max().unwrap_or(0);
    let per_bucket = (0..buckets)
        .filter_map(|b| {
            let c = Confusion::tabulate(scored.iter().filter(|s| s.bucket == b), threshold);
            (c.total() > 0).then(|| BucketMetrics { bucket: b, confusion: c, metrics: c.metrics().ok() })
        })
        .collect();
    Ok(MetricsReport { auc, pr_auc, threshold, overall, confusion, per_bucket, pr_curve })
}

fn baseline_entry(id: crate::domain::ItemId, granted: u64, requested: u64) -> PlanEntry {
    PlanEntry {
        id,
        region: if granted > 0 { Region::Baseline } else { Region::Unfunded },
        granted,
        requested,
        p_at_maxcap: None,
        classified: None,
    }
}

/// Full-information upper bound: funds discoverable items by ascending true
/// threshold (clamped to the caps) until the traffic or cost budget binds.
/// Items whose threshold exceeds `max_cap` are never funded.
pub fn oracle_allocate(latents: &[LatentItem], config: &AllocationConfig, cost: &dyn CostModel) -> AllocationPlan {
    let need: Vec<Option<u64>> =
        latents.iter().map(|l| l.threshold.filter(|&t| t <= config.max_cap).map(|t| config.clamp_traffic(t))).collect();
    let mut order: Vec<usize> = (0..latents.len()).filter(|&i| need[i].is_some()).collect();
    order.sort_by_key(|&i| (need[i], latents[i].id));
    let mut grants = vec![0u64; latents.len()];
    let (mut spent, mut spent_cost) = (0u64, 0.0);
    for i in order {
        let x = need[i].unwrap_or(0);
        let c = spent_cost + cost.cost(x);
        if spent + x > config.total_budget || c > config.max_cost {
            break;
        }
        spent += x;
        spent_cost = c;
        grants[i] = x;
    }
    let entries =
        latents.iter().zip(&need).zip(grants).map(|((l, n), g)| baseline_entry(l.id, g, n.unwrap_or(0))).collect();
    AllocationPlan::from_entries(entries, cost)
}

/// Equal traffic `clamp(⌊T/N⌋, min_cap, max_cap)` to items in id order until
/// the budget runs out.
pub fn uniform_allocate(corpus: &[ItemRecord], config: &AllocationConfig, cost: &dyn CostModel) -> AllocationPlan {
    if corpus.is_empty() {
        return AllocationPlan::from_entries(Vec::new(), cost);
    }
    let share = config.clamp_traffic(config.total_budget / corpus.len() as u64);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by_key(|&i| corpus[i].id);
    let mut grants = vec![0u64; corpus.len()];
    let (mut spent, mut spent_cost) = (0u64, 0.0);
    for i in order {
        let c = spent_cost + cost.cost(share);
        if spent + share > config.total_budget || c > config.max_cost {
            break;
        }
        spent += share;
        spent_cost = c;
        grants[i] = share;
    }
    let entries = corpus.iter().zip(grants).map(|(r, g)| baseline_entry(r.id, g, share)).collect();
    AllocationPlan::from_entries(entries, cost)
}
