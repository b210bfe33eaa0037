//! Synthetic cold-start environment.
//!
//! Every item has a hidden quality `q` and a hidden discoverability threshold
//! `θ`: it becomes discoverable once it has been served at least `θ`
//! exploration impressions. Three archetypes exist: inherently discoverable
//! items (`θ = 0`), items with a finite log-normal threshold that shrinks with
//! quality, and items that never become discoverable. Observable features are
//! noisy linear views of `q`; organic engagement before exploration is drawn
//! from `sigmoid(a·q + b)`.
//!
//! All randomness derives from one root seed. Round `r` draws its corpus from
//! stream `2r` and its serving outcomes from stream `2r + 1`.

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::allocator::allocate;
use crate::domain::{
    bucket_of, AllocationConfig, AllocationPlan, BucketSchema, EngagementStats, ItemId, ItemRecord, Region,
};
use crate::error::{Error, Result};
use crate::metrics::{auc, oracle_allocate, uniform_allocate, ScoredLabel};
use crate::model::{predict, train, DiscoverabilityModel, TrainParams, TrainingExample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentItem {
    pub id: ItemId,
    pub quality: f64,
    /// Minimum served impressions for discoverability; `None` means never.
    pub threshold: Option<u64>,
    pub engagement_prob: f64,
}

impl LatentItem {
    pub fn discovered_at(&self, served: u64) -> bool {
        self.threshold.is_some_and(|t| served >= t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub items_per_round: usize,
    pub rounds: usize,
    pub feature_dim: usize,
    pub feature_noise: f64,
    /// Log-threshold at `q = 0`.
    pub threshold_mu: f64,
    /// Slope of log-threshold in quality; positive means better items need less traffic.
    pub threshold_kappa: f64,
    pub threshold_sigma: f64,
    pub threshold_max: u64,
    /// Fractions of (inherently discoverable, finite threshold, never discoverable).
    pub archetype_mix: [f64; 3],
    /// Noise mixed into quality before archetype assignment.
    pub archetype_noise: f64,
    pub engagement_a: f64,
    pub engagement_b: f64,
    /// Fraction of items with no organic impressions before exploration.
    pub cold_fraction: f64,
    pub organic_impressions_max: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            items_per_round: 1000,
            rounds: 3,
            feature_dim: 4,
            feature_noise: 0.2,
            threshold_mu: 6.0,
            threshold_kappa: 1.5,
            threshold_sigma: 0.15,
            threshold_max: 16_000,
            archetype_mix: [0.2, 0.6, 0.2],
            archetype_noise: 0.2,
            engagement_a: 1.0,
            engagement_b: -2.5,
            cold_fraction: 0.3,
            organic_impressions_max: 50,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.items_per_round == 0 {
            return bad("items_per_round must be positive");
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        if self.archetype_mix.iter().any(|&f| !(0.0..=1.0).contains(&f))
            || (self.archetype_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("archetype_mix fractions must lie in [0, 1] and sum to 1");
        }
        if !(0.0..=1.0).contains(&self.cold_fraction) {
            return bad("cold_fraction must lie in [0, 1]");
        }
        if self.feature_noise < 0.0 || self.threshold_sigma < 0.0 || self.archetype_noise < 0.0 {
            return bad("noise scales must be non-negative");
        }
        if self.threshold_max == 0 {
            return bad("threshold_max must be positive");
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Loading of feature `j` on quality.
    fn loading(j: usize) -> f64 {
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign / (1.0 + 0.5 * j as f64)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Draws round `round`'s items: latent truth and the allocator-visible records.
pub fn generate_corpus(config: &SimConfig, round: usize) -> Result<(Vec<LatentItem>, Vec<ItemRecord>)> {
    config.validate()?;
    let mut rng = config.rng(2 * round as u64);
    let n = config.items_per_round;
    let [inherent, _, never] = config.archetype_mix;
    let mut latents = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let id = ItemId((round * n + i) as u64);
        let q: f64 = rng.sample(StandardNormal);

        // mixing keeps the marginal standard normal, so archetype odds match the mix exactly
        let eta: f64 = rng.sample(StandardNormal);
        let s = config.archetype_noise;
        let u = normal_cdf((q + s * eta) / (1.0 + s * s).sqrt());
        let noise: f64 = rng.sample(StandardNormal);
        let threshold = if u >= 1.0 - inherent {
            Some(0)
        } else if u < never {
            None
        } else {
            let raw = (config.threshold_mu - config.threshold_kappa * q + config.threshold_sigma * noise).exp();
            Some((raw.round() as u64).clamp(1, config.threshold_max))
        };

        let features = (0..config.feature_dim)
            .map(|j| {
                let e: f64 = rng.sample(StandardNormal);
                SimConfig::loading(j) * q + config.feature_noise * e
            })
            .collect();

        let engagement_prob = sigmoid(config.engagement_a * q + config.engagement_b);
        let organic = if rng.random::<f64>() < config.cold_fraction || config.organic_impressions_max == 0 {
            0
        } else {
            rng.random_range(1..=config.organic_impressions_max)
        };
        let positives = binomial(&mut rng, organic, engagement_prob)?;

        latents.push(LatentItem { id, quality: q, threshold, engagement_prob });
        records.push(ItemRecord::new(id, features, EngagementStats::new(organic, positives)?));
    }
    Ok((latents, records))
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> Result<u64> {
    if n == 0 {
        return Ok(0);
    }
    let dist = Binomial::new(n, p).map_err(|e| Error::Data(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: ItemId,
    pub served: u64,
    pub positive_events: u64,
    pub discovered: Option<bool>,
}

/// Serves every funded plan entry and reports engagement and discoverability.
pub fn serve_round(
    latents: &[LatentItem],
    plan: &AllocationPlan,
    config: &SimConfig,
    round: usize,
) -> Result<Vec<Observation>> {
    let by_id: HashMap<ItemId, &LatentItem> = latents.iter().map(|l| (l.id, l)).collect();
    let mut rng = config.rng(2 * round as u64 + 1);
    let mut out = Vec::new();
    for entry in plan.funded() {
        let latent = by_id.get(&entry.id).ok_or(Error::UnknownItem(entry.id))?;
        let positive_events = binomial(&mut rng, entry.granted, latent.engagement_prob)?;
        out.push(Observation {
            id: entry.id,
            served: entry.granted,
            positive_events,
            discovered: Some(latent.discovered_at(entry.granted)),
        });
    }
    Ok(out)
}

/// One example per observation: features as they were at serving time,
/// bucket of the served traffic, observed discoverability as label.
pub fn build_training_set(
    observations: &[Observation],
    records: &[ItemRecord],
    schema: &BucketSchema,
) -> Result<Vec<TrainingExample>> {
    let by_id: HashMap<ItemId, &ItemRecord> = records.iter().map(|r| (r.id, r)).collect();
    observations
        .iter()
        .map(|o| {
            let record = by_id.get(&o.id).ok_or(Error::UnknownItem(o.id))?;
            let label = o.discovered.ok_or_else(|| Error::Data(format!("observation for item {} unresolved", o.id)))?;
            Ok(TrainingExample {
                features: record.model_features(),
                bucket: bucket_of(o.served, schema),
                label: u8::from(label),
            })
        })
        .collect()
}

/// Applies a round's observations to the records (copy-and-update).
pub fn apply_observations(records: &[ItemRecord], observations: &[Observation]) -> Result<Vec<ItemRecord>> {
    let by_id: HashMap<ItemId, &Observation> = observations.iter().map(|o| (o.id, o)).collect();
    records
        .iter()
        .map(|r| match by_id.get(&r.id) {
            Some(o) => r.with_observation(o.served, o.positive_events, o.discovered.unwrap_or(false)),
            None => Ok(r.clone()),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    Model,
    Oracle,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Model => "model",
            Strategy::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "model" | "model-based" => Ok(Strategy::Model),
            "oracle" => Ok(Strategy::Oracle),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    /// Strategy actually used this round (the model strategy bootstraps uniformly).
    pub allocation: Strategy,
    pub items: usize,
    pub funded: usize,
    pub discovered: usize,
    pub total_allocated: u64,
    pub total_cost: f64,
    pub budget_utilization: f64,
    pub region_counts: Vec<(Region, usize)>,
    /// Examples the round's model was trained on; 0 when no model was used.
    pub training_examples: usize,
    pub model_final_loss: Option<f64>,
    /// AUC of the round's model on the outcomes it then observed.
    pub online_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRoundRow {
    pub round: usize,
    pub item_id: ItemId,
    pub region: Region,
    pub granted: u64,
    pub positive_events: u64,
    pub discovered: bool,
    pub threshold: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub strategy: Strategy,
    pub rounds: Vec<RoundReport>,
    pub total_discovered: usize,
    pub retrain_count: usize,
    #[serde(skip)]
    pub rows: Vec<ItemRoundRow>,
}

/// Runs the multi-round loop for one strategy. Round 0 of the model strategy
/// allocates uniformly to collect bootstrap labels; each later round retrains
/// on every example gathered so far and re-predicts with current features.
pub fn run_experiment(
    sim: &SimConfig,
    config: &AllocationConfig,
    schema: &BucketSchema,
    params: &TrainParams,
    strategy: Strategy,
) -> Result<ExperimentReport> {
    sim.validate()?;
    let cost = config.linear_cost();
    let mut examples: Vec<TrainingExample> = Vec::new();
    let mut rounds = Vec::with_capacity(sim.rounds);
    let mut rows = Vec::new();
    let mut retrain_count = 0;

    for round in 0..sim.rounds {
        let (latents, records) = generate_corpus(sim, round)?;
        let mut model: Option<DiscoverabilityModel> = None;
        let (plan, used) = match strategy {
            Strategy::Uniform => (uniform_allocate(&records, config, &cost), Strategy::Uniform),
            Strategy::Oracle => (oracle_allocate(&latents, config, &cost), Strategy::Oracle),
            Strategy::Model if round == 0 => (uniform_allocate(&records, config, &cost), Strategy::Uniform),
            Strategy::Model => {
                let params = TrainParams { seed: sim.seed, ..params.clone() };
                let m = train(&examples, schema, &params)?;
                retrain_count += 1;
                let plan = allocate(&records, &m, config, schema, None)?;
                model = Some(m);
                (plan, Strategy::Model)
            }
        };

        let observations = serve_round(&latents, &plan, sim, round)?;
        let new_examples = build_training_set(&observations, &records, schema)?;
        let online_auc = match &model {
            Some(m) => {
                let scored = new_examples
                    .iter()
                    .map(|e| {
                        Ok(ScoredLabel {
                            score: predict(m, &e.features, e.bucket)?,
                            label: e.label == 1,
                            bucket: e.bucket,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                auc(&scored).ok()
            }
            None => None,
        };

        let served: HashMap<ItemId, &Observation> = observations.iter().map(|o| (o.id, o)).collect();
        let thresholds: HashMap<ItemId, Option<u64>> = latents.iter().map(|l| (l.id, l.threshold)).collect();
        for e in &plan.entries {
            let o = served.get(&e.id);
            rows.push(ItemRoundRow {
                round,
                item_id: e.id,
                region: e.region,
                granted: e.granted,
                positive_events: o.map_or(0, |o| o.positive_events),
                discovered: o.and_then(|o| o.discovered).unwrap_or(false),
                threshold: thresholds[&e.id],
            });
        }

        let discovered = observations.iter().filter(|o| o.discovered == Some(true)).count();
        rounds.push(RoundReport {
            round,
            allocation: used,
            items: records.len(),
            funded: plan.funded_count(),
            discovered,
            total_allocated: plan.total_allocated,
            total_cost: plan.total_cost,
            budget_utilization: plan.total_allocated as f64 / config.total_budget as f64,
            region_counts: plan.region_counts().into_iter().collect(),
            training_examples: if model.is_some() { examples.len() } else { 0 },
            model_final_loss: model.as_ref().and_then(|m| m.training_meta.as_ref()).map(|t| t.final_loss),
            online_auc,
        });
        examples.extend(new_examples);
    }

    let total_discovered = rounds.iter().map(|r| r.discovered).sum();
    Ok(ExperimentReport { seed: sim.seed, strategy, rounds, total_discovered, retrain_count, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    /// Total discovered items per seed, in seed order.
    pub discovered: Vec<usize>,
    pub mean_discovered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub strategies: Vec<StrategySummary>,
    /// Seeds with uniform <= model <= oracle; needs all three strategies.
    pub ordered_seeds: Option<usize>,
    /// Relative gain of the model strategy's mean over uniform's.
    pub model_over_uniform: Option<f64>,
}

impl Comparison {
    pub fn new(seeds: &[u64], reports: &[ExperimentReport]) -> Self {
        let mut strategies: Vec<Strategy> = reports.iter().map(|r| r.strategy).collect();
        strategies.sort();
        strategies.dedup();
        let summaries: Vec<StrategySummary> = strategies
            .iter()
            .map(|&strategy| {
                let discovered: Vec<usize> = seeds
                    .iter()
                    .filter_map(|&s| reports.iter().find(|r| r.seed == s && r.strategy == strategy))
                    .map(|r| r.total_discovered)
                    .collect();
                let mean = discovered.iter().sum::<usize>() as f64 / discovered.len().max(1) as f64;
                StrategySummary { strategy, discovered, mean_discovered: mean }
            })
            .collect();
        let get = |s: Strategy| summaries.iter().find(|x| x.strategy == s);
        let ordered_seeds = match (get(Strategy::Uniform), get(Strategy::Model), get(Strategy::Oracle)) {
            (Some(u), Some(m), Some(o)) => Some(
                (0..u.discovered.len())
                    .filter(|&i| u.discovered[i] <= m.discovered[i] && m.discovered[i] <= o.discovered[i])
                    .count(),
            ),
            _ => None,
        };
        let model_over_uniform = match (get(Strategy::Uniform), get(Strategy::Model)) {
            (Some(u), Some(m)) if u.mean_discovered > 0.0 => Some(m.mean_discovered / u.mean_discovered - 1.0),
            _ => None,
        };
        Self { seeds: seeds.to_vec(), strategies: summaries, ordered_seeds, model_over_uniform }
    }
}

/// Runs every strategy on every seed, one thread per seed. Reports come back
/// ordered by seed, then by the order of `strategies`.
pub fn run_matrix(
    sim: &SimConfig,
    config: &AllocationConfig,
    schema: &BucketSchema,
    params: &TrainParams,
    seeds: &[u64],
    strategies: &[Strategy],
) -> Result<Vec<ExperimentReport>> {
    let per_seed: Vec<Result<Vec<ExperimentReport>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || {
                    let sim = SimConfig { seed, ..sim.clone() };
                    strategies.iter().map(|&s| run_experiment(&sim, config, schema, params, s)).collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });
    let mut out = Vec::new();
    for reports in per_seed {
        out.extend(reports?);
    }
    Ok(out)
}
