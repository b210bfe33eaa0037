//! Discoverability classifier: a logistic model over item features
//! concatenated with a one-hot traffic bucket, trained by gradient descent on
//! mean cross-entropy. Also hosts curve post-processing and the confidence
//! inversion that turns a curve into a per-item traffic cap.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AllocationConfig, BucketSchema};
use crate::error::{Error, Result};

/// One observed (features, traffic bucket, discovered) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub features: Vec<f64>,
    pub bucket: usize,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Mini-batch size; `None` trains on the full batch each step.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Examples a bucket needs before its predictions are trusted.
    pub min_bucket_support: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { learning_rate: 0.5, epochs: 400, batch_size: None, seed: 0, min_bucket_support: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub seed: u64,
    pub learning_rate: f64,
    pub examples: usize,
    /// Training examples per bucket.
    pub bucket_counts: Vec<usize>,
    pub min_bucket_support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverabilityModel {
    /// Feature weights followed by one weight per bucket.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub schema: BucketSchema,
    pub training_meta: Option<TrainingMeta>,
}

/// Predicted discoverability per bucket for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketCurve {
    pub probabilities: Vec<f64>,
}

impl BucketCurve {
    pub fn new(probabilities: Vec<f64>) -> Self {
        Self { probabilities }
    }

    pub fn at_top(&self) -> f64 {
        *self.probabilities.last().expect("curve has at least one bucket")
    }

    pub fn is_monotone(&self) -> bool {
        self.first_violation().is_none()
    }

    fn first_violation(&self) -> Option<usize> {
        self.probabilities.windows(2).position(|w| w[1] < w[0]).map(|k| k + 1)
    }
}

/// Outcome of inverting a curve at a confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cap {
    Traffic(u64),
    NotAchievable,
}

const PROB_FLOOR: f64 = 1e-12;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl DiscoverabilityModel {
    /// Model with explicit parameters; `weights` holds the feature block then the bucket block.
    pub fn from_parts(weights: Vec<f64>, bias: f64, schema: BucketSchema) -> Result<Self> {
        if weights.len() <= schema.len() {
            return Err(Error::DimensionMismatch { expected: schema.len() + 1, got: weights.len() });
        }
        Ok(Self { weights, bias, schema, training_meta: None })
    }

    pub fn zeros(feature_dim: usize, schema: BucketSchema) -> Self {
        Self { weights: vec![0.0; feature_dim + schema.len()], bias: 0.0, schema, training_meta: None }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len() - self.schema.len()
    }

    pub fn buckets(&self) -> usize {
        self.schema.len()
    }

    /// Buckets that had training examples. Unseen buckets keep their initial
    /// weight, so predictions there say nothing about that traffic level.
    /// Models built from explicit parameters count as fully supported.
    pub fn bucket_support(&self) -> Vec<bool> {
        match &self.training_meta {
            Some(meta) => meta.bucket_counts.iter().map(|&n| n > 0 && n >= meta.min_bucket_support).collect(),
            None => vec![true; self.buckets()],
        }
    }

    fn check_input(&self, features: &[f64], bucket: usize) -> Result<()> {
        if features.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch { expected: self.feature_dim(), got: features.len() });
        }
        if bucket >= self.buckets() {
            return Err(Error::InvalidBucket { bucket, buckets: self.buckets() });
        }
        Ok(())
    }

    fn logit(&self, features: &[f64], bucket: usize) -> f64 {
        let d = self.feature_dim();
        let dot: f64 = self.weights[..d].iter().zip(features).map(|(w, x)| w * x).sum();
        dot + self.weights[d + bucket] + self.bias
    }

    /// Per-example cross-entropy at the current parameters.
    pub fn loss(&self, example: &TrainingExample) -> Result<f64> {
        self.check_input(&example.features, example.bucket)?;
        let z = self.logit(&example.features, example.bucket);
        Ok(softplus(z) - f64::from(example.label) * z)
    }

    pub fn mean_loss(&self, examples: &[TrainingExample]) -> Result<f64> {
        let mut total = 0.0;
        for e in examples {
            total += self.loss(e)?;
        }
        Ok(total / examples.len() as f64)
    }
}

/// Probability that an item with `features` is discoverable at traffic `bucket`.
pub fn predict(model: &DiscoverabilityModel, features: &[f64], bucket: usize) -> Result<f64> {
    model.check_input(features, bucket)?;
    Ok(sigmoid(model.logit(features, bucket)).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
}

pub fn predict_curve(model: &DiscoverabilityModel, features: &[f64]) -> Result<BucketCurve> {
    let probabilities = (0..model.buckets()).map(|k| predict(model, features, k)).collect::<Result<Vec<_>>>()?;
    Ok(BucketCurve { probabilities })
}

/// Gradient of the per-example cross-entropy: feature weights, bucket
/// weights, then bias as the final component.
pub fn gradient(model: &DiscoverabilityModel, example: &TrainingExample) -> Result<Vec<f64>> {
    model.check_input(&example.features, example.bucket)?;
    let mut grad = vec![0.0; model.weights.len() + 1];
    accumulate_gradient(model, example, 1.0, &mut grad);
    Ok(grad)
}

fn accumulate_gradient(model: &DiscoverabilityModel, example: &TrainingExample, scale: f64, grad: &mut [f64]) {
    let d = model.feature_dim();
    let residual = scale * (sigmoid(model.logit(&example.features, example.bucket)) - f64::from(example.label));
    for (g, x) in grad[..d].iter_mut().zip(&example.features) {
        *g += residual * x;
    }
    grad[d + example.bucket] += residual;
    grad[model.weights.len()] += residual;
}

fn validate_examples(examples: &[TrainingExample], schema: &BucketSchema) -> Result<usize> {
    let first = examples.first().ok_or(Error::EmptyDataset)?;
    let dim = first.features.len();
    let (mut pos, mut neg) = (0usize, 0usize);
    for e in examples {
        if e.features.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: e.features.len() });
        }
        if e.bucket >= schema.len() {
            return Err(Error::InvalidBucket { bucket: e.bucket, buckets: schema.len() });
        }
        match e.label {
            0 => neg += 1,
            1 => pos += 1,
            l => return Err(Error::Data(format!("label must be 0 or 1, got {l}"))),
        }
        if e.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
    }
    if pos == 0 {
        return Err(Error::SingleClass(0));
    }
    if neg == 0 {
        return Err(Error::SingleClass(1));
    }
    Ok(dim)
}

/// Fits the model by (mini-)batch gradient descent from zero parameters.
/// Mini-batch order is shuffled per epoch from `params.seed`.
pub fn train(
    examples: &[TrainingExample],
    schema: &BucketSchema,
    params: &TrainParams,
) -> Result<DiscoverabilityModel> {
    let dim = validate_examples(examples, schema)?;
    if params.learning_rate.is_nan() || params.learning_rate <= 0.0 || params.epochs == 0 {
        return Err(Error::Config("training needs a positive learning rate and >= 1 epoch".into()));
    }
    let mut model = DiscoverabilityModel::zeros(dim, schema.clone());
    let n = examples.len();
    let batch = params.batch_size.unwrap_or(n).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut grad = vec![0.0; model.weights.len() + 1];

    let initial_loss = model.mean_loss(examples)?;
    for _ in 0..params.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                accumulate_gradient(&model, &examples[i], scale, &mut grad);
            }
            let (wg, bg) = grad.split_at(model.weights.len());
            for (w, g) in model.weights.iter_mut().zip(wg) {
                *w -= params.learning_rate * g;
            }
            model.bias -= params.learning_rate * bg[0];
        }
    }
    let final_loss = model.mean_loss(examples)?;
    if !final_loss.is_finite() {
        return Err(Error::Data("training diverged".into()));
    }
    let mut bucket_counts = vec![0; schema.len()];
    for e in examples {
        bucket_counts[e.bucket] += 1;
    }
    model.training_meta = Some(TrainingMeta {
        epochs: params.epochs,
        initial_loss,
        final_loss,
        seed: params.seed,
        learning_rate: params.learning_rate,
        examples: n,
        bucket_counts,
        min_bucket_support: params.min_bucket_support,
    });
    Ok(model)
}

/// Isotonic (non-decreasing) least-squares fit of a curve, by pool-adjacent-violators.
pub fn monotone_curve(curve: &BucketCurve) -> BucketCurve {
    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(curve.probabilities.len());
    for &p in &curve.probabilities {
        blocks.push((p, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 > s1 / n1 as f64 {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    let mut probabilities = Vec::with_capacity(curve.probabilities.len());
    for (s, n) in blocks {
        probabilities.extend(std::iter::repeat_n(s / n as f64, n));
    }
    BucketCurve { probabilities }
}

/// Monotone curve that only trusts supported buckets: the isotonic fit of
/// the supported entries, carried forward over unsupported buckets above
/// them, and 0 for unsupported buckets below the first supported one.
/// Carrying forward is a lower bound since discoverability cannot drop as
/// traffic grows. With every bucket supported this is [`monotone_curve`].
pub fn supported_curve(curve: &BucketCurve, support: &[bool]) -> BucketCurve {
    let kept: Vec<usize> =
        (0..curve.probabilities.len()).filter(|&k| support.get(k).copied().unwrap_or(false)).collect();
    if kept.is_empty() {
        return monotone_curve(curve);
    }
    let fitted = monotone_curve(&BucketCurve::new(kept.iter().map(|&k| curve.probabilities[k]).collect()));
    let mut out = Vec::with_capacity(curve.probabilities.len());
    let mut next = 0;
    let mut last = 0.0;
    for k in 0..curve.probabilities.len() {
        if next < kept.len() && kept[next] == k {
            last = fitted.probabilities[next];
            next += 1;
        }
        out.push(last);
    }
    BucketCurve::new(out)
}

/// Traffic needed to reach confidence `cf`: the representative of the smallest
/// bucket whose probability is at least `cf`, clamped into `[min_cap, max_cap]`.
pub fn invert_cap(curve: &BucketCurve, cf: f64, config: &AllocationConfig, schema: &BucketSchema) -> Result<Cap> {
    if curve.probabilities.len() != schema.len() {
        return Err(Error::DimensionMismatch { expected: schema.len(), got: curve.probabilities.len() });
    }
    if !(cf > 0.0 && cf < 1.0) {
        return Err(Error::Config(format!("confidence {cf} outside (0, 1)")));
    }
    if let Some(k) = curve.first_violation() {
        return Err(Error::NonMonotoneCurve(k));
    }
    // curve is sorted, so the qualifying buckets form a suffix
    let k = curve.probabilities.partition_point(|&p| p < cf);
    Ok(match schema.representative.get(k) {
        Some(&traffic) => Cap::Traffic(config.clamp_traffic(traffic)),
        None => Cap::NotAchievable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    fn schema4() -> BucketSchema {
        BucketSchema::new(vec![0, 101, 201, 401], vec![100, 200, 400, 1600]).unwrap()
    }

    fn config() -> AllocationConfig {
        AllocationConfig { min_cap: 100, max_cap: 1600, cf_low: 0.2, cf_high: 0.9, ..Default::default() }
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = DiscoverabilityModel::zeros(3, BucketSchema::default());
        assert_eq!(predict(&m, &[1.0, -2.0, 3.0], 2).unwrap(), 0.5);
        let curve = predict_curve(&m, &[0.0, 0.0, 0.0]).unwrap();
        assert!(curve.probabilities.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn logit_two_gives_closed_form() {
        // feature weight 1.5 · x 1.0 + bucket weight 0.25 + bias 0.25 = 2.0
        let mut w = vec![1.5];
        w.extend([0.0, 0.25, 0.0, 0.0, 0.0, 0.0]);
        let m = DiscoverabilityModel::from_parts(w, 0.25, BucketSchema::default()).unwrap();
        let p = predict(&m, &[1.0], 1).unwrap();
        assert!((p - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn bucket_weights_give_increasing_curve() {
        let schema = BucketSchema::geometric(100, 5).unwrap();
        let w = vec![0.0, 0.0, -2.0, -1.0, 0.0, 1.0, 2.0];
        let m = DiscoverabilityModel::from_parts(w, 0.0, schema).unwrap();
        let c = predict_curve(&m, &[3.0, -1.0]).unwrap();
        assert!(c.probabilities.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn predict_rejects_bad_input() {
        let m = DiscoverabilityModel::zeros(2, BucketSchema::default());
        assert!(matches!(predict(&m, &[1.0], 0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(predict(&m, &[1.0, 2.0], 6), Err(Error::InvalidBucket { .. })));
    }

    #[test]
    fn predict_stays_inside_open_interval() {
        let m = DiscoverabilityModel::from_parts(vec![1000.0, 0.0, 0.0, 0.0, 0.0], 0.0, schema4()).unwrap();
        let hi = predict(&m, &[10.0], 0).unwrap();
        let lo = predict(&m, &[-10.0], 0).unwrap();
        assert!(hi < 1.0 && lo > 0.0);
    }

    #[test]
    fn gradient_flips_sign_with_label_at_half() {
        let m = DiscoverabilityModel::zeros(2, schema4());
        let mut e = TrainingExample { features: vec![0.3, -0.7], bucket: 1, label: 1 };
        let g1 = gradient(&m, &e).unwrap();
        e.label = 0;
        let g0 = gradient(&m, &e).unwrap();
        for (a, b) in g1.iter().zip(&g0) {
            assert_eq!(a + b, 0.0);
        }
    }

    #[test]
    fn gradient_zero_model_label_one() {
        let m = DiscoverabilityModel::zeros(3, schema4());
        let x = vec![0.4, -1.2, 2.0];
        let g = gradient(&m, &TrainingExample { features: x.clone(), bucket: 2, label: 1 }).unwrap();
        for (gi, xi) in g[..3].iter().zip(&x) {
            assert_eq!(*gi, -0.5 * xi);
        }
        assert_eq!(&g[3..], &[0.0, 0.0, -0.5, 0.0, -0.5]);
    }

    #[test]
    fn gradient_vanishes_when_prediction_saturates_to_label() {
        let m = DiscoverabilityModel::from_parts(vec![0.0; 5], 60.0, schema4()).unwrap();
        let g = gradient(&m, &TrainingExample { features: vec![1.0], bucket: 0, label: 1 }).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn train_rejects_bad_datasets() {
        let s = schema4();
        let p = TrainParams::default();
        assert!(matches!(train(&[], &s, &p), Err(Error::EmptyDataset)));
        let ones: Vec<_> = (0..5).map(|i| TrainingExample { features: vec![i as f64], bucket: 0, label: 1 }).collect();
        let err = train(&ones, &s, &p).unwrap_err();
        assert!(err.to_string().contains("single-class"));
        let mixed = vec![
            TrainingExample { features: vec![1.0], bucket: 0, label: 1 },
            TrainingExample { features: vec![1.0, 2.0], bucket: 0, label: 0 },
        ];
        assert!(matches!(train(&mixed, &s, &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_features_learn_base_rate() {
        let s = schema4();
        let examples: Vec<_> = (0..200)
            .map(|i| TrainingExample { features: vec![0.0, 0.0], bucket: 1, label: u8::from(i % 10 < 3) })
            .collect();
        let m = train(&examples, &s, &TrainParams { epochs: 2000, ..Default::default() }).unwrap();
        let p = predict(&m, &[0.0, 0.0], 1).unwrap();
        assert!((p - 0.3).abs() <= 0.05, "p = {p}");
        let meta = m.training_meta.unwrap();
        assert!(meta.final_loss <= meta.initial_loss);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let examples: Vec<_> = (0..100)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                TrainingExample { features: vec![x], bucket: rng.random_range(0..4), label: u8::from(x > 0.0) }
            })
            .collect();
        let p = TrainParams { batch_size: Some(16), epochs: 20, seed: 4, ..Default::default() };
        assert_eq!(train(&examples, &schema4(), &p).unwrap(), train(&examples, &schema4(), &p).unwrap());
    }

    #[test]
    fn monotone_examples() {
        let c = BucketCurve::new(vec![0.1, 0.4, 0.7, 0.9]);
        assert_eq!(monotone_curve(&c), c);
        assert_eq!(monotone_curve(&BucketCurve::new(vec![0.5, 0.3])).probabilities, vec![0.4, 0.4]);
        let fixed = monotone_curve(&BucketCurve::new(vec![0.2, 0.6, 0.5, 0.9]));
        let want = [0.2, 0.55, 0.55, 0.9];
        for (a, b) in fixed.probabilities.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Exhaustive search over non-decreasing vectors on a 0.05 grid.
    fn brute_force_isotonic(y: &[f64]) -> Vec<f64> {
        fn rec(y: &[f64], start: usize, prefix: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
            if prefix.len() == y.len() {
                let sse: f64 = prefix.iter().zip(y).map(|(&g, &v)| (g as f64 * 0.05 - v).powi(2)).sum();
                if sse < best.0 {
                    *best = (sse, prefix.clone());
                }
                return;
            }
            for g in start..=20 {
                prefix.push(g);
                rec(y, g, prefix, best);
                prefix.pop();
            }
        }
        let mut best = (f64::INFINITY, vec![]);
        rec(y, 0, &mut Vec::new(), &mut best);
        best.1.into_iter().map(|g| g as f64 * 0.05).collect()
    }

    #[test]
    fn monotone_matches_brute_force_grid() {
        let y = [0.2, 0.6, 0.5, 0.9];
        let oracle = brute_force_isotonic(&y);
        let pav = monotone_curve(&BucketCurve::new(y.to_vec()));
        for (a, b) in pav.probabilities.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{pav:?} vs {oracle:?}");
        }
    }

    #[test]
    fn invert_examples() {
        let s = schema4();
        let c = config();
        assert_eq!(invert_cap(&BucketCurve::new(vec![1.0; 4]), 0.9, &c, &s).unwrap(), Cap::Traffic(100));
        let curve = BucketCurve::new(vec![0.1, 0.4, 0.7, 0.95]);
        assert_eq!(invert_cap(&curve, 0.9, &c, &s).unwrap(), Cap::Traffic(1600));
        let low = BucketCurve::new(vec![0.1, 0.2, 0.4, 0.5]);
        assert_eq!(invert_cap(&low, 0.9, &c, &s).unwrap(), Cap::NotAchievable);
    }

    #[test]
    fn invert_clamps_into_caps() {
        let s = BucketSchema::default();
        let c = AllocationConfig { min_cap: 150, ..config() };
        let curve = BucketCurve::new(vec![0.95; 6]);
        assert_eq!(invert_cap(&curve, 0.9, &c, &s).unwrap(), Cap::Traffic(150));
    }

    #[test]
    fn invert_reports_non_monotone_curve() {
        let curve = BucketCurve::new(vec![0.1, 0.5, 0.4, 0.9]);
        assert!(matches!(invert_cap(&curve, 0.3, &config(), &schema4()), Err(Error::NonMonotoneCurve(2))));
    }

    #[test]
    fn supported_curve_fills_forward() {
        let c = BucketCurve::new(vec![0.9, 0.9, 0.6, 0.9, 0.3, 0.5]);
        let s = supported_curve(&c, &[false, false, false, true, false, false]);
        assert_eq!(s.probabilities, vec![0.0, 0.0, 0.0, 0.9, 0.9, 0.9]);
        let s = supported_curve(&c, &[false, true, true, false, true, false]);
        assert_eq!(s.probabilities, vec![0.0, 0.6, 0.6, 0.6, 0.6, 0.6]);
        assert_eq!(supported_curve(&c, &[true; 6]), monotone_curve(&c));
    }

    #[test]
    fn trained_model_reports_bucket_support() {
        let examples = vec![
            TrainingExample { features: vec![1.0], bucket: 2, label: 1 },
            TrainingExample { features: vec![-1.0], bucket: 2, label: 0 },
        ];
        let params = TrainParams { min_bucket_support: 1, ..Default::default() };
        let m = train(&examples, &schema4(), &params).unwrap();
        assert_eq!(m.bucket_support(), vec![false, false, true, false]);
        let params = TrainParams { min_bucket_support: 3, ..Default::default() };
        let m = train(&examples, &schema4(), &params).unwrap();
        assert_eq!(m.bucket_support(), vec![false; 4]);
        assert_eq!(DiscoverabilityModel::zeros(1, schema4()).bucket_support(), vec![true; 4]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_is_sorted_and_idempotent(v in prop::collection::vec(0.0f64..=1.0, 1..12)) {
                let once = monotone_curve(&BucketCurve::new(v.clone()));
                prop_assert!(once.is_monotone());
                prop_assert_eq!(once.probabilities.len(), v.len());
                prop_assert_eq!(monotone_curve(&once), once.clone());
                let mean_in: f64 = v.iter().sum::<f64>();
                let mean_out: f64 = once.probabilities.iter().sum::<f64>();
                prop_assert!((mean_in - mean_out).abs() < 1e-9);
            }

            #[test]
            fn predictions_are_probabilities(
                w in prop::collection::vec(-50.0f64..50.0, 8),
                x in prop::collection::vec(-5.0f64..5.0, 2),
                bias in -50.0f64..50.0,
                bucket in 0usize..6,
            ) {
                let m = DiscoverabilityModel::from_parts(w, bias, BucketSchema::default()).unwrap();
                let p = predict(&m, &x, bucket).unwrap();
                prop_assert!(p > 0.0 && p < 1.0);
            }
        }
    }
}
