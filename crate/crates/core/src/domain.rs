//! Shared domain types: items, engagement, the traffic bucket schema,
//! allocation configuration and the resulting plan.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Running engagement counts for one item.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementStats {
    pub impressions: u64,
    pub positive_events: u64,
}

impl EngagementStats {
    pub fn new(impressions: u64, positive_events: u64) -> Result<Self> {
        if positive_events > impressions {
            return Err(Error::Data(format!("positive_events {positive_events} exceeds impressions {impressions}")));
        }
        Ok(Self { impressions, positive_events })
    }

    /// `positive_events / impressions`, or 0 for an unseen item.
    pub fn positive_rate(&self) -> f64 {
        if self.impressions == 0 {
            0.0
        } else {
            self.positive_events as f64 / self.impressions as f64
        }
    }

    pub fn add(&self, impressions: u64, positive_events: u64) -> Result<Self> {
        Self::new(self.impressions + impressions, self.positive_events + positive_events)
    }
}

/// An item as seen by the allocator. Latent ground truth never lives here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: ItemId,
    pub features: Vec<f64>,
    #[serde(flatten)]
    pub engagement: EngagementStats,
    #[serde(default)]
    pub impressions_received: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discovered: Option<bool>,
}

impl ItemRecord {
    pub fn new(id: ItemId, features: Vec<f64>, engagement: EngagementStats) -> Self {
        Self { id, features, engagement, impressions_received: 0, discovered: None }
    }

    /// Copy of this record after serving `served` exploration impressions.
    /// An already resolved `discovered` flag is kept as is.
    pub fn with_observation(&self, served: u64, positive_events: u64, discovered: bool) -> Result<Self> {
        Ok(Self {
            id: self.id,
            features: self.features.clone(),
            engagement: self.engagement.add(served, positive_events)?,
            impressions_received: self.impressions_received + served,
            discovered: self.discovered.or(Some(discovered)),
        })
    }

    /// Engagement features appended to the static features at inference time:
    /// positive rate and `ln(1 + impressions)`.
    pub fn engagement_features(&self) -> [f64; 2] {
        [self.engagement.positive_rate(), (self.engagement.impressions as f64).ln_1p()]
    }

    /// Static features followed by the current engagement features.
    pub fn model_features(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.features.len() + ENGAGEMENT_FEATURES);
        x.extend_from_slice(&self.features);
        x.extend_from_slice(&self.engagement_features());
        x
    }
}

/// Number of engagement features appended by [`ItemRecord::model_features`].
pub const ENGAGEMENT_FEATURES: usize = 2;

/// Discretization of traffic levels into ordered buckets.
///
/// Bucket `k` covers `[edges[k], edges[k + 1])`; the last bucket is open
/// ended. `representative[k]` is the traffic granted when an allocation
/// decision lands on bucket `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketSchema {
    pub edges: Vec<u64>,
    pub representative: Vec<u64>,
}

impl BucketSchema {
    pub fn new(edges: Vec<u64>, representative: Vec<u64>) -> Result<Self> {
        let schema = Self { edges, representative };
        schema.check()?;
        Ok(schema)
    }

    /// Doubling edges `0, base, 2·base, 4·base, ...` with `buckets` buckets.
    /// Interior buckets are represented by their lower edge (bucket 0 by
    /// `base / 2`), the top bucket by its own edge.
    pub fn geometric(base: u64, buckets: usize) -> Result<Self> {
        if base < 2 || buckets < 3 {
            return Err(Error::Config("geometric schema needs base >= 2 and >= 3 buckets".into()));
        }
        let mut edges = vec![0];
        let mut e = base;
        for _ in 1..buckets {
            edges.push(e);
            e *= 2;
        }
        let mut representative = vec![base / 2];
        representative.extend_from_slice(&edges[1..]);
        Self::new(edges, representative)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn top(&self) -> usize {
        self.edges.len() - 1
    }

    fn check(&self) -> Result<()> {
        if self.edges.len() < 3 {
            return Err(Error::Config("bucket schema needs at least 3 buckets".into()));
        }
        if self.edges[0] != 0 {
            return Err(Error::Config("first bucket edge must be 0".into()));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("bucket edges must be strictly increasing".into()));
        }
        if self.representative.len() != self.edges.len() {
            return Err(Error::Config("one representative per bucket required".into()));
        }
        for k in 0..self.top() {
            let r = self.representative[k];
            if r < self.edges[k] || r >= self.edges[k + 1] {
                return Err(Error::Config(format!("representative of bucket {k} outside its bucket")));
            }
        }
        if self.representative[self.top()] < self.edges[self.top()] {
            return Err(Error::Config("top representative below top edge".into()));
        }
        Ok(())
    }
}

impl Default for BucketSchema {
    fn default() -> Self {
        Self { edges: vec![0, 100, 200, 400, 800, 1600], representative: vec![50, 100, 200, 400, 800, 1600] }
    }
}

/// Bucket index containing `traffic`; traffic past the last edge maps to the top bucket.
pub fn bucket_of(traffic: u64, schema: &BucketSchema) -> usize {
    schema.edges.partition_point(|&e| e <= traffic).saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationConfig {
    /// Impression budget `T` for one allocation round.
    pub total_budget: u64,
    pub max_cost: f64,
    pub unit_cost: f64,
    pub min_cap: u64,
    pub max_cap: u64,
    pub cf_high: f64,
    pub cf_low: f64,
    /// Share of `total_budget` reserved for the low region.
    pub low_region_fraction: f64,
    /// Clamp bounds applied when the low fraction adapts to growth.
    pub low_fraction_min: f64,
    pub low_fraction_max: f64,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            total_budget: 500_000,
            max_cost: 5_000.0,
            unit_cost: 0.01,
            min_cap: 100,
            max_cap: 1600,
            cf_high: 0.8,
            cf_low: 0.5,
            low_region_fraction: 0.05,
            low_fraction_min: 0.0,
            low_fraction_max: 0.5,
        }
    }
}

impl AllocationConfig {
    pub fn linear_cost(&self) -> LinearCost {
        LinearCost { unit_cost: self.unit_cost }
    }

    /// Clamps `traffic` into `[min_cap, max_cap]`.
    pub fn clamp_traffic(&self, traffic: u64) -> u64 {
        traffic.clamp(self.min_cap, self.max_cap)
    }
}

/// Returns the config unchanged when every config and schema invariant holds,
/// otherwise the first violated invariant.
pub fn validate_config(config: AllocationConfig, schema: &BucketSchema) -> Result<AllocationConfig> {
    let c = &config;
    let bad = |msg: &str| Err(Error::Config(msg.to_string()));
    if !(c.cf_low > 0.0 && c.cf_low < c.cf_high && c.cf_high < 1.0) {
        return bad("cf ordering: need 0 < cf_low < cf_high < 1");
    }
    if c.min_cap == 0 {
        return bad("MinCap must be positive");
    }
    if c.min_cap > c.max_cap {
        return bad("MinCap must not exceed MaxCap");
    }
    if c.total_budget == 0 {
        return bad("total budget T must be positive");
    }
    if c.max_cost.is_nan() || c.max_cost <= 0.0 {
        return bad("max cost C_max must be positive");
    }
    if !c.unit_cost.is_finite() || c.unit_cost < 0.0 {
        return bad("unit cost must be finite and non-negative");
    }
    if !(0.0..=1.0).contains(&c.low_region_fraction) {
        return bad("low_region_fraction must lie in [0, 1]");
    }
    if !(0.0 <= c.low_fraction_min && c.low_fraction_min <= c.low_fraction_max && c.low_fraction_max <= 1.0) {
        return bad("low fraction bounds must satisfy 0 <= min <= max <= 1");
    }
    schema.check()?;
    if schema.representative[schema.top()] != c.max_cap {
        return bad("MaxCap mismatch with top bucket representative");
    }
    Ok(config)
}

/// Exploration cost of granting an item some traffic. Implementations must be
/// non-decreasing with `cost(0) == 0`.
pub trait CostModel {
    fn cost(&self, traffic: u64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCost {
    pub unit_cost: f64,
}

impl CostModel for LinearCost {
    fn cost(&self, traffic: u64) -> f64 {
        self.unit_cost * traffic as f64
    }
}

impl<F: Fn(u64) -> f64> CostModel for F {
    fn cost(&self, traffic: u64) -> f64 {
        self(traffic)
    }
}

/// Cost under the config's default linear model.
pub fn cost_of(traffic: u64, config: &AllocationConfig) -> f64 {
    config.linear_cost().cost(traffic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    High,
    Moderate,
    Low,
    Unfunded,
    /// Funded by a baseline strategy (uniform or oracle) that does not partition.
    Baseline,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::High => "high",
            Region::Moderate => "moderate",
            Region::Low => "low",
            Region::Unfunded => "unfunded",
            Region::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub id: ItemId,
    pub region: Region,
    pub granted: u64,
    /// Traffic the item's region rule asked for, before budget arbitration.
    pub requested: u64,
    pub p_at_maxcap: Option<f64>,
    /// Region the item was classified into, kept when it ends up unfunded.
    pub classified: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub entries: Vec<PlanEntry>,
    pub total_allocated: u64,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanViolation {
    #[error("total allocated {allocated} exceeds budget {budget}")]
    Budget { allocated: u64, budget: u64 },
    #[error("total cost {cost} exceeds max cost {max_cost}")]
    Cost { cost: f64, max_cost: f64 },
    #[error("item {id} granted {granted} outside [{min_cap}, {max_cap}]")]
    Cap { id: ItemId, granted: u64, min_cap: u64, max_cap: u64 },
    #[error("item {id} marked unfunded but granted {granted}")]
    Unfunded { id: ItemId, granted: u64 },
    #[error("stored totals disagree with entries")]
    Totals,
}

impl AllocationPlan {
    /// Builds a plan, computing totals from the entries in order.
    pub fn from_entries(entries: Vec<PlanEntry>, cost: &dyn CostModel) -> Self {
        let total_allocated = entries.iter().map(|e| e.granted).sum();
        let total_cost = sum_cost(entries.iter().map(|e| e.granted), cost);
        Self { entries, total_allocated, total_cost }
    }

    pub fn empty(ids: impl IntoIterator<Item = ItemId>) -> Self {
        let entries = ids
            .into_iter()
            .map(|id| PlanEntry {
                id,
                region: Region::Unfunded,
                granted: 0,
                requested: 0,
                p_at_maxcap: None,
                classified: None,
            })
            .collect();
        Self { entries, total_allocated: 0, total_cost: 0.0 }
    }

    pub fn funded(&self) -> impl Iterator<Item = &PlanEntry> {
        self.entries.iter().filter(|e| e.granted > 0)
    }

    pub fn funded_count(&self) -> usize {
        self.funded().count()
    }

    /// Counts of final regions, in `Region` order.
    pub fn region_counts(&self) -> std::collections::BTreeMap<Region, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.region).or_insert(0) += 1;
        }
        counts
    }

    /// Verifies budget, cost and cap invariants from the plan alone.
    pub fn check(&self, config: &AllocationConfig, cost: &dyn CostModel) -> Result<(), PlanViolation> {
        for e in &self.entries {
            if e.region == Region::Unfunded && e.granted != 0 {
                return Err(PlanViolation::Unfunded { id: e.id, granted: e.granted });
            }
            if e.granted != 0 && (e.granted < config.min_cap || e.granted > config.max_cap) {
                return Err(PlanViolation::Cap {
                    id: e.id,
                    granted: e.granted,
                    min_cap: config.min_cap,
                    max_cap: config.max_cap,
                });
            }
        }
        let allocated: u64 = self.entries.iter().map(|e| e.granted).sum();
        let total_cost = sum_cost(self.entries.iter().map(|e| e.granted), cost);
        if allocated != self.total_allocated || total_cost != self.total_cost {
            return Err(PlanViolation::Totals);
        }
        if allocated > config.total_budget {
            return Err(PlanViolation::Budget { allocated, budget: config.total_budget });
        }
        if total_cost > config.max_cost {
            return Err(PlanViolation::Cost { cost: total_cost, max_cost: config.max_cost });
        }
        Ok(())
    }
}

pub(crate) fn sum_cost(grants: impl Iterator<Item = u64>, cost: &dyn CostModel) -> f64 {
    grants.filter(|&g| g > 0).fold(0.0, |acc, g| acc + cost.cost(g))
}
