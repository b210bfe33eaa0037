//! Reference implementations and random instance generators shared by the
//! integration tests. Oracles here are deliberately naive.
#![allow(dead_code)]

use explore_alloc::domain::{
    validate_config, AllocationConfig, BucketSchema, CostModel, EngagementStats, ItemId, ItemRecord,
};
use explore_alloc::metrics::ScoredLabel;
use explore_alloc::model::{BucketCurve, DiscoverabilityModel, TrainingExample};
use num_rational::Ratio;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i128>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest number of requests that fit both budgets, and the least total
/// traffic among subsets achieving it. Exhaustive over all subsets.
pub fn brute_force_funding(requests: &[u64], budget: u64, max_cost: f64, cost: &dyn CostModel) -> (usize, u64) {
    assert!(requests.len() <= 20);
    let mut best = (0usize, 0u64);
    for mask in 0u32..(1 << requests.len()) {
        let chosen: Vec<u64> = (0..requests.len()).filter(|i| mask >> i & 1 == 1).map(|i| requests[i]).collect();
        let traffic: u64 = chosen.iter().sum();
        let spend = chosen.iter().fold(0.0, |acc, &x| acc + cost.cost(x));
        if traffic > budget || spend > max_cost {
            continue;
        }
        let n = chosen.len();
        if n > best.0 || (n == best.0 && traffic < best.1) {
            best = (n, traffic);
        }
    }
    best
}

fn floor_q(q: Q) -> i128 {
    q.floor().to_integer()
}

/// Exact-arithmetic low-region split. Shares are filled one cap at a time:
/// the heaviest item whose share would exceed the cap is pinned there and the
/// rest re-split, until nothing exceeds it.
pub fn water_fill_reference(
    items: &[(ItemId, EngagementStats)],
    budget: u64,
    min_cap: u64,
    max_cap: u64,
) -> Vec<(ItemId, u64)> {
    let n = items.len();
    if n == 0 {
        return Vec::new();
    }
    let weight = |s: &EngagementStats| {
        if s.positive_events > 0 {
            Q::new(s.positive_events as i128, s.impressions as i128)
        } else {
            Q::new(1, n as i128)
        }
    };
    let w: Vec<Q> = items.iter().map(|(_, s)| weight(s)).collect();
    let mut priority: Vec<usize> = (0..n).collect();
    priority.sort_by(|&a, &b| w[b].cmp(&w[a]).then(items[a].0.cmp(&items[b].0)));
    priority.truncate((budget / min_cap) as usize);

    let cap = Q::from_integer(max_cap as i128);
    let mut out = vec![0u64; n];
    while !priority.is_empty() {
        let mut pinned: Vec<usize> = Vec::new();
        let shares = loop {
            let free: Vec<usize> = priority.iter().copied().filter(|i| !pinned.contains(i)).collect();
            let remaining = Q::from_integer(budget as i128) - cap * Q::from_integer(pinned.len() as i128);
            let total: Q = free.iter().map(|&i| w[i]).sum();
            let over = free
                .iter()
                .copied()
                .filter(|&i| remaining * w[i] / total > cap)
                .max_by(|&a, &b| w[a].cmp(&w[b]).then(items[b].0.cmp(&items[a].0)));
            match over {
                Some(i) => pinned.push(i),
                None => {
                    let mut s = vec![Q::from_integer(0); n];
                    for &i in &pinned {
                        s[i] = cap;
                    }
                    for &i in &free {
                        s[i] = remaining * w[i] / total;
                    }
                    break s;
                }
            }
        };
        let spendable = budget.min(max_cap * priority.len() as u64) as i128;
        let mut g: Vec<i128> = vec![0; n];
        for &i in &priority {
            g[i] = floor_q(shares[i]);
        }
        let mut leftover = spendable - priority.iter().map(|&i| g[i]).sum::<i128>();
        let mut order: Vec<usize> = priority.iter().copied().filter(|&i| g[i] < max_cap as i128).collect();
        order.sort_by(|&a, &b| {
            let fa = shares[a] - shares[a].floor();
            let fb = shares[b] - shares[b].floor();
            fb.cmp(&fa).then(items[a].0.cmp(&items[b].0))
        });
        for i in order {
            if leftover == 0 {
                break;
            }
            g[i] += 1;
            leftover -= 1;
        }
        if priority.iter().all(|&i| g[i] >= min_cap as i128) {
            for &i in &priority {
                out[i] = g[i] as u64;
            }
            break;
        }
        priority.pop();
    }
    items.iter().zip(out).map(|((id, _), g)| (*id, g)).collect()
}

/// Central differences of the per-example loss over every weight, then the bias.
pub fn finite_difference_gradient(model: &DiscoverabilityModel, example: &TrainingExample, h: f64) -> Vec<f64> {
    let n = model.weights.len();
    let loss_at = |k: usize, delta: f64| {
        let mut m = model.clone();
        if k < n {
            m.weights[k] += delta;
        } else {
            m.bias += delta;
        }
        m.loss(example).unwrap()
    };
    (0..=n).map(|k| (loss_at(k, h) - loss_at(k, -h)) / (2.0 * h)).collect()
}

/// Fraction of (positive, negative) pairs ranked correctly, ties half.
pub fn pairwise_auc(scored: &[ScoredLabel]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for p in scored.iter().filter(|s| s.label) {
        for q in scored.iter().filter(|s| !s.label) {
            pairs += 1.0;
            if p.score > q.score {
                wins += 1.0;
            } else if p.score == q.score {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Mean over positives of the precision among everything scored at least
/// as high as that positive.
pub fn average_precision(scored: &[ScoredLabel]) -> f64 {
    let positives: Vec<&ScoredLabel> = scored.iter().filter(|s| s.label).collect();
    let mut total = 0.0;
    for p in &positives {
        let at_or_above: Vec<&ScoredLabel> = scored.iter().filter(|s| s.score >= p.score).collect();
        let hits = at_or_above.iter().filter(|s| s.label).count();
        total += hits as f64 / at_or_above.len() as f64;
    }
    total / positives.len() as f64
}

/// First bucket whose probability reaches `cf`, by linear scan.
pub fn scan_invert(curve: &BucketCurve, cf: f64, config: &AllocationConfig, schema: &BucketSchema) -> Option<u64> {
    for (k, &p) in curve.probabilities.iter().enumerate() {
        if p >= cf {
            return Some(config.clamp_traffic(schema.representative[k]));
        }
    }
    None
}

pub fn random_schema(rng: &mut ChaCha8Rng) -> BucketSchema {
    let base = rng.random_range(20..=200u64);
    let buckets = rng.random_range(3..=7usize);
    BucketSchema::geometric(base, buckets).unwrap()
}

/// A valid config whose caps match `schema`; budgets range from starved to ample.
pub fn random_config(rng: &mut ChaCha8Rng, schema: &BucketSchema, items: usize) -> AllocationConfig {
    let max_cap = schema.representative[schema.top()];
    let min_cap = rng.random_range(1..=max_cap);
    let cf_low = rng.random_range(0.05..0.6);
    let cf_high = rng.random_range(cf_low + 0.01..0.99);
    let total_budget = rng.random_range(1..=(items as u64 * max_cap).max(1) + max_cap);
    let unit_cost = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.001..0.1) };
    let max_cost = rng.random_range(0.01..(total_budget as f64 * unit_cost).max(0.02) * 1.5);
    let lo = rng.random_range(0.0..0.3);
    let hi = rng.random_range(lo..=1.0);
    let config = AllocationConfig {
        total_budget,
        max_cost,
        unit_cost,
        min_cap,
        max_cap,
        cf_high,
        cf_low,
        low_region_fraction: rng.random_range(0.0..=1.0),
        low_fraction_min: lo,
        low_fraction_max: hi,
    };
    validate_config(config, schema).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, feature_dim: usize, schema: &BucketSchema) -> DiscoverabilityModel {
    let mut weights: Vec<f64> = (0..feature_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    // bucket weights rising with traffic, with occasional dips
    let mut level = rng.random_range(-4.0..0.0);
    for _ in 0..schema.len() {
        weights.push(level);
        level += rng.random_range(-0.5..2.0);
    }
    DiscoverabilityModel::from_parts(weights, rng.random_range(-1.0..1.0), schema.clone()).unwrap()
}

pub fn random_corpus(rng: &mut ChaCha8Rng, items: usize, static_dim: usize) -> Vec<ItemRecord> {
    (0..items)
        .map(|i| {
            let features = (0..static_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let impressions = rng.random_range(0..=40u64);
            let positives = if impressions == 0 { 0 } else { rng.random_range(0..=impressions) };
            ItemRecord::new(ItemId(i as u64 * 3 + 1), features, EngagementStats::new(impressions, positives).unwrap())
        })
        .collect()
}

pub fn random_scored(rng: &mut ChaCha8Rng, n: usize) -> Vec<ScoredLabel> {
    let mut scored: Vec<ScoredLabel> = (0..n)
        .map(|_| ScoredLabel {
            // coarse grid so ties are common
            score: (rng.random_range(0..=20u32) as f64) / 20.0,
            label: rng.random::<bool>(),
            bucket: rng.random_range(0..3usize),
        })
        .collect();
    scored[0].label = true;
    scored[n - 1].label = false;
    scored
}
