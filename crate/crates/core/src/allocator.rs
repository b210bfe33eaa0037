//! Three-region traffic allocation.
//!
//! Items are classified by their predicted discoverability at `max_cap`:
//! high items get the smallest traffic that reaches `cf_high`, moderate items
//! get `max_cap`, and low items share a reserved slice of the budget in
//! proportion to their engagement. High and moderate items are funded in
//! full or not at all, cheapest first.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{
    sum_cost, AllocationConfig, AllocationPlan, BucketSchema, CostModel, EngagementStats, ItemId, ItemRecord,
    PlanEntry, Region,
};
use crate::error::{Error, Result};
use crate::model::{invert_cap, predict_curve, supported_curve, BucketCurve, Cap, DiscoverabilityModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub id: ItemId,
    pub region: Region,
    pub p_at_maxcap: f64,
    /// `None` for low items, whose traffic is decided by [`allocate_low`].
    pub requested: Option<u64>,
}

/// Period-over-period growth ratios of new items and exploration traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthStats {
    pub item_growth: f64,
    pub traffic_growth: f64,
}

impl GrowthStats {
    pub fn new(item_growth: f64, traffic_growth: f64) -> Result<Self> {
        if !(item_growth > 0.0 && traffic_growth > 0.0) || !item_growth.is_finite() || !traffic_growth.is_finite() {
            return Err(Error::Config("growth ratios must be positive and finite".into()));
        }
        Ok(Self { item_growth, traffic_growth })
    }
}

/// Region from the curve's value at the top bucket. `p == cf_high` is moderate.
pub fn classify_region(curve: &BucketCurve, config: &AllocationConfig) -> (Region, f64) {
    let p = curve.at_top();
    let region = if p > config.cf_high {
        Region::High
    } else if p >= config.cf_low {
        Region::Moderate
    } else {
        Region::Low
    };
    (region, p)
}

pub fn requested_traffic(
    assignment: &RegionAssignment,
    curve: &BucketCurve,
    config: &AllocationConfig,
    schema: &BucketSchema,
) -> Result<u64> {
    match assignment.region {
        Region::High => match invert_cap(curve, config.cf_high, config, schema)? {
            Cap::Traffic(t) => Ok(t),
            // unreachable for a curve classified high, kept total for hand-built inputs
            Cap::NotAchievable => Ok(config.max_cap),
        },
        Region::Moderate => Ok(config.max_cap),
        other => Err(Error::WrongRegion(other)),
    }
}

/// `clamp(current · traffic_growth / item_growth, lo, hi)`.
pub fn adapt_low_fraction(current: f64, growth: GrowthStats, bounds: (f64, f64)) -> Result<f64> {
    let growth = GrowthStats::new(growth.item_growth, growth.traffic_growth)?;
    let (lo, hi) = bounds;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Config("low fraction bounds must satisfy 0 <= lo <= hi <= 1".into()));
    }
    Ok((current * (growth.traffic_growth / growth.item_growth)).clamp(lo, hi))
}

/// Proportional split of `budget` with every share capped at `cap`; overflow
/// from capped shares is redistributed among the rest until none binds.
fn water_fill(weights: &[f64], budget: f64, cap: f64) -> Vec<f64> {
    let mut shares = vec![0.0; weights.len()];
    let mut active: Vec<usize> = (0..weights.len()).collect();
    let mut remaining = budget;
    while !active.is_empty() {
        let total: f64 = active.iter().map(|&i| weights[i]).sum();
        let (capped, free): (Vec<usize>, Vec<usize>) =
            active.iter().partition(|&&i| remaining * weights[i] / total >= cap);
        if capped.is_empty() {
            for &i in &free {
                shares[i] = remaining * weights[i] / total;
            }
            break;
        }
        for &i in &capped {
            shares[i] = cap;
        }
        remaining -= cap * capped.len() as f64;
        active = free;
    }
    shares
}

/// Floors each share and hands the leftover units to the largest fractional
/// parts (lower id first on ties), never past `cap`.
fn integerize(shares: &[f64], ids: &[ItemId], total: u64, cap: u64) -> Vec<u64> {
    // float round-off must not push an exact integer share below its floor
    let shares: Vec<f64> = shares.iter().map(|&s| if (s - s.round()).abs() < 1e-9 { s.round() } else { s }).collect();
    let mut grants: Vec<u64> = shares.iter().map(|s| (s.floor() as u64).min(cap)).collect();
    let mut leftover = total.saturating_sub(grants.iter().sum());
    let mut order: Vec<usize> = (0..shares.len()).filter(|&i| grants[i] < cap).collect();
    // fractional parts equal up to round-off count as ties
    let frac = |i: usize| ((shares[i] - shares[i].floor()) * 1e9).round() as i64;
    order.sort_by(|&a, &b| frac(b).cmp(&frac(a)).then(ids[a].cmp(&ids[b])));
    for i in order {
        if leftover == 0 {
            break;
        }
        grants[i] += 1;
        leftover -= 1;
    }
    grants
}

/// Feedback weight: positive rate, or `epsilon` for items without positive feedback.
fn feedback_weight(stats: &EngagementStats, epsilon: f64) -> f64 {
    let rate = stats.positive_rate();
    if rate > 0.0 {
        rate
    } else {
        epsilon
    }
}

/// Splits `low_budget` across low-region items in proportion to their
/// positive rate, capped at `max_cap`. Items whose share would fall below
/// `min_cap` are deferred (granted 0), lowest feedback first, and their share
/// goes back to the others. Output follows input order.
pub fn allocate_low(
    items: &[(ItemId, EngagementStats)],
    low_budget: u64,
    config: &AllocationConfig,
) -> Vec<(ItemId, u64)> {
    if items.is_empty() {
        return Vec::new();
    }
    let epsilon = 1.0 / items.len() as f64;
    let weights: Vec<f64> = items.iter().map(|(_, s)| feedback_weight(s, epsilon)).collect();

    // deferral order: lowest weight first, higher id first among equals
    let mut by_priority: Vec<usize> = (0..items.len()).collect();
    by_priority.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(items[a].0.cmp(&items[b].0)));
    let fundable = (low_budget / config.min_cap.max(1)) as usize;
    by_priority.truncate(fundable);

    let mut grants = vec![0u64; items.len()];
    while !by_priority.is_empty() {
        let w: Vec<f64> = by_priority.iter().map(|&i| weights[i]).collect();
        let ids: Vec<ItemId> = by_priority.iter().map(|&i| items[i].0).collect();
        let cap = config.max_cap;
        let shares = water_fill(&w, low_budget as f64, cap as f64);
        let spendable = low_budget.min(cap * by_priority.len() as u64);
        let g = integerize(&shares, &ids, spendable, cap);
        if g.iter().all(|&x| x >= config.min_cap) {
            for (&i, x) in by_priority.iter().zip(g) {
                grants[i] = x;
            }
            break;
        }
        by_priority.pop();
    }
    items.iter().zip(grants).map(|((id, _), g)| (*id, g)).collect()
}

/// Funds requests cheapest first (ties by id), each in full or not at all,
/// stopping at the first request that breaks the traffic or cost budget.
/// Returns the funded flags in input order.
pub fn fund_full_or_nothing(
    requests: &[(ItemId, u64)],
    traffic_budget: u64,
    max_cost: f64,
    cost: &dyn CostModel,
) -> Vec<bool> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by_key(|&i| (requests[i].1, requests[i].0));
    let mut funded = vec![false; requests.len()];
    let (mut spent, mut spent_cost) = (0u64, 0.0f64);
    for i in order {
        let x = requests[i].1;
        let c = spent_cost + cost.cost(x);
        if spent + x > traffic_budget || c > max_cost {
            break;
        }
        spent += x;
        spent_cost = c;
        funded[i] = true;
    }
    funded
}

struct Scored {
    assignment: RegionAssignment,
    engagement: EngagementStats,
}

/// Allocation with the config's linear cost model.
pub fn allocate(
    corpus: &[ItemRecord],
    model: &DiscoverabilityModel,
    config: &AllocationConfig,
    schema: &BucketSchema,
    growth: Option<GrowthStats>,
) -> Result<AllocationPlan> {
    allocate_with_cost(corpus, model, config, schema, growth, &config.linear_cost())
}

pub fn allocate_with_cost(
    corpus: &[ItemRecord],
    model: &DiscoverabilityModel,
    config: &AllocationConfig,
    schema: &BucketSchema,
    growth: Option<GrowthStats>,
    cost: &dyn CostModel,
) -> Result<AllocationPlan> {
    if &model.schema != schema {
        return Err(Error::SchemaMismatch);
    }
    let support = model.bucket_support();
    let mut scored = Vec::with_capacity(corpus.len());
    for item in corpus {
        let curve = supported_curve(&predict_curve(model, &item.model_features())?, &support);
        let (region, p_at_maxcap) = classify_region(&curve, config);
        let mut assignment = RegionAssignment { id: item.id, region, p_at_maxcap, requested: None };
        if region != Region::Low {
            assignment.requested = Some(requested_traffic(&assignment, &curve, config, schema)?);
        }
        scored.push(Scored { assignment, engagement: item.engagement });
    }

    let low_fraction = match growth {
        Some(g) => {
            adapt_low_fraction(config.low_region_fraction, g, (config.low_fraction_min, config.low_fraction_max))?
        }
        None => config.low_region_fraction,
    };
    let total = config.total_budget;
    let main_budget = ((1.0 - low_fraction) * total as f64).floor().clamp(0.0, total as f64) as u64;

    let main: Vec<usize> = (0..scored.len()).filter(|&i| scored[i].assignment.region != Region::Low).collect();
    let requests: Vec<(ItemId, u64)> =
        main.iter().map(|&i| (scored[i].assignment.id, scored[i].assignment.requested.unwrap_or(0))).collect();
    let funded = fund_full_or_nothing(&requests, main_budget, config.max_cost, cost);

    let mut grants = vec![0u64; scored.len()];
    let mut main_spent = 0;
    for ((&i, &(_, x)), ok) in main.iter().zip(&requests).zip(funded) {
        if ok {
            grants[i] = x;
            main_spent += x;
        }
    }

    // unspent high/moderate budget spills into the low pool
    let low_pool = total - main_spent;
    let low: Vec<usize> = (0..scored.len()).filter(|&i| scored[i].assignment.region == Region::Low).collect();
    let low_items: Vec<(ItemId, EngagementStats)> =
        low.iter().map(|&i| (scored[i].assignment.id, scored[i].engagement)).collect();
    let low_requested: HashMap<ItemId, u64> = allocate_low(&low_items, low_pool, config).into_iter().collect();
    for &i in &low {
        grants[i] = low_requested[&scored[i].assignment.id];
    }

    enforce_cost_cap(&scored, &mut grants, config.max_cost, cost);

    let entries = scored
        .iter()
        .zip(&grants)
        .map(|(s, &granted)| {
            let a = &s.assignment;
            PlanEntry {
                id: a.id,
                region: if granted > 0 { a.region } else { Region::Unfunded },
                granted,
                requested: a.requested.unwrap_or(low_requested.get(&a.id).copied().unwrap_or(0)),
                p_at_maxcap: Some(a.p_at_maxcap),
                classified: Some(a.region),
            }
        })
        .collect();
    Ok(AllocationPlan::from_entries(entries, cost))
}

/// Drops grants until total cost fits: low items by ascending feedback,
/// then moderate and finally high items by descending grant.
fn enforce_cost_cap(scored: &[Scored], grants: &mut [u64], max_cost: f64, cost: &dyn CostModel) {
    let over = |g: &[u64]| sum_cost(g.iter().copied(), cost) > max_cost;
    if !over(grants) {
        return;
    }
    let mut drop_order: Vec<usize> = (0..scored.len()).filter(|&i| grants[i] > 0).collect();
    let rank = |r: Region| match r {
        Region::Low => 0,
        Region::Moderate => 1,
        _ => 2,
    };
    drop_order.sort_by(|&a, &b| {
        let (sa, sb) = (&scored[a], &scored[b]);
        rank(sa.assignment.region).cmp(&rank(sb.assignment.region)).then_with(|| {
            if sa.assignment.region == Region::Low {
                sa.engagement.positive_rate().total_cmp(&sb.engagement.positive_rate())
            } else {
                grants[b].cmp(&grants[a])
            }
            .then(sb.assignment.id.cmp(&sa.assignment.id))
        })
    });
    for i in drop_order {
        if !over(grants) {
            break;
        }
        grants[i] = 0;
    }
}
