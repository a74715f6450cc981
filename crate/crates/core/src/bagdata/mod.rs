//! Percentage-based bag datasets.
//!
//! A bag is labelled positive when the fraction of positive instances it
//! holds reaches a threshold `q*` (or, under the standard rule, when it holds
//! any positive instance at all). Instance labels are kept alongside each bag
//! for diagnostics only; training never reads them.

pub mod idx;
mod store;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::idx::{load_idx, IdxImages};
pub use self::store::{DatasetFile, InstanceEncoding, Partition, DATASET_SCHEMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub id: String,
    pub instances: Vec<Vec<f64>>,
    pub label: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_instance_labels: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_fraction: Option<f64>,
}

impl Bag {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.instances.first().map(Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim().unwrap_or(0);
        if self.instances.iter().any(|x| x.len() != dim) {
            return Err(Error::domain(format!("bag {} mixes instance dimensions", self.id)));
        }
        if let Some(h) = &self.hidden_instance_labels {
            if h.len() != self.len() {
                return Err(Error::domain(format!(
                    "bag {} has {} hidden labels for {} instances",
                    self.id,
                    h.len(),
                    self.len()
                )));
            }
            if let Some(f) = self.positive_fraction {
                if (f - realized_fraction(h)).abs() > 1e-12 {
                    return Err(Error::domain(format!(
                        "bag {} positive_fraction disagrees with hidden labels",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn realized_fraction(hidden: &[bool]) -> f64 {
    hidden.iter().filter(|&&h| h).count() as f64 / hidden.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRule {
    /// Positive iff the realized positive fraction is at least `q*`.
    Percentage,
    /// Positive iff at least one instance is positive.
    Standard,
}

impl LabelRule {
    pub fn label(self, hidden: &[bool], threshold: f64) -> bool {
        match self {
            LabelRule::Percentage => realized_fraction(hidden) >= threshold,
            LabelRule::Standard => hidden.iter().any(|&h| h),
        }
    }
}

fn default_size_mean() -> f64 {
    30.0
}
fn default_size_std() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_bags: usize,
    #[serde(default = "default_size_mean")]
    pub bag_size_mean: f64,
    #[serde(default = "default_size_std")]
    pub bag_size_std: f64,
    pub threshold_qstar: f64,
    pub feature_dim: usize,
    /// Distance between the two cluster means.
    pub class_separation: f64,
    pub noise_std: f64,
    pub label_rule: LabelRule,
    /// Resample bags until the two classes are equally represented.
    #[serde(default)]
    pub rebalance: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_bags: 1000,
            bag_size_mean: default_size_mean(),
            bag_size_std: default_size_std(),
            threshold_qstar: 0.3,
            feature_dim: 2,
            class_separation: 6.0,
            noise_std: 1.0,
            label_rule: LabelRule::Percentage,
            rebalance: false,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_bags < 2 {
            return Err(Error::config("n_bags", "must be at least 2"));
        }
        if !(self.threshold_qstar > 0.0 && self.threshold_qstar < 1.0) {
            return Err(Error::config("threshold_qstar", "must lie inside (0, 1)"));
        }
        if !(self.bag_size_mean.is_finite() && self.bag_size_mean > 0.0) {
            return Err(Error::config("bag_size_mean", "must be positive"));
        }
        if !(self.bag_size_std.is_finite() && self.bag_size_std >= 0.0) {
            return Err(Error::config("bag_size_std", "must be nonnegative"));
        }
        if self.feature_dim == 0 {
            return Err(Error::config("feature_dim", "must be positive"));
        }
        if !(self.class_separation.is_finite() && self.class_separation >= 0.0) {
            return Err(Error::config("class_separation", "must be nonnegative"));
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return Err(Error::config("noise_std", "must be positive"));
        }
        Ok(())
    }

    /// Cluster means at `+-separation/2` along the unit diagonal.
    pub fn cluster_mean(&self, positive: bool) -> Vec<f64> {
        let half = self.class_separation / 2.0 / (self.feature_dim as f64).sqrt();
        let s = if positive { half } else { -half };
        vec![s; self.feature_dim]
    }
}

fn sample_bag_size(rng: &mut ChaCha8Rng, size_dist: &Normal<f64>) -> usize {
    let s = size_dist.sample(rng).round();
    if s < 2.0 {
        2
    } else {
        s as usize
    }
}

/// Draws the composition of one bag: its size and how many of its
/// instances are positive, as a shuffled vector of hidden labels.
fn sample_composition(rng: &mut ChaCha8Rng, size_dist: &Normal<f64>) -> Vec<bool> {
    let size = sample_bag_size(rng, size_dist);
    let target: f64 = rng.random_range(0.0..1.0);
    let n_pos = (target * size as f64).floor() as usize;
    let mut hidden: Vec<bool> = (0..size).map(|i| i < n_pos).collect();
    hidden.shuffle(rng);
    hidden
}

struct Balancer {
    target_pos: usize,
    target_neg: usize,
    pos: usize,
    neg: usize,
}

impl Balancer {
    fn new(n: usize) -> Self {
        Self {
            target_pos: n.div_ceil(2),
            target_neg: n / 2,
            pos: 0,
            neg: 0,
        }
    }

    fn accept(&mut self, label: bool) -> bool {
        if label && self.pos < self.target_pos {
            self.pos += 1;
            true
        } else if !label && self.neg < self.target_neg {
            self.neg += 1;
            true
        } else {
            false
        }
    }
}

// Bound on rejected draws while rebalancing.
const MAX_REBALANCE_DRAWS: usize = 10_000_000;

fn compositions(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<(Vec<bool>, bool)>> {
    let size_dist = Normal::new(spec.bag_size_mean, spec.bag_size_std)
        .map_err(|e| Error::config("bag_size_std", e.to_string()))?;
    let mut out = Vec::with_capacity(spec.n_bags);
    let mut balancer = Balancer::new(spec.n_bags);
    let mut draws = 0usize;
    while out.len() < spec.n_bags {
        let hidden = sample_composition(rng, &size_dist);
        let label = spec.label_rule.label(&hidden, spec.threshold_qstar);
        draws += 1;
        if spec.rebalance && !balancer.accept(label) {
            if draws > MAX_REBALANCE_DRAWS {
                return Err(Error::domain("rebalancing did not reach a 50/50 split"));
            }
            continue;
        }
        out.push((hidden, label));
    }
    Ok(out)
}

/// Bags of Gaussian instances. Positive instances come from the cluster at
/// `+separation/2`, negatives from `-separation/2`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Vec<Bag>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|e| Error::config("noise_std", e.to_string()))?;
    let pos_mean = spec.cluster_mean(true);
    let neg_mean = spec.cluster_mean(false);
    let comps = compositions(spec, &mut rng)?;
    let bags = comps
        .into_iter()
        .enumerate()
        .map(|(i, (hidden, label))| {
            let instances = hidden
                .iter()
                .map(|&h| {
                    let mean = if h { &pos_mean } else { &neg_mean };
                    mean.iter().map(|m| m + noise.sample(&mut rng)).collect()
                })
                .collect();
            Bag {
                id: format!("bag-{i:05}"),
                instances,
                label,
                positive_fraction: Some(realized_fraction(&hidden)),
                hidden_instance_labels: Some(hidden),
            }
        })
        .collect();
    Ok(bags)
}

/// The digit that marks a positive instance in MNIST bags.
pub const POSITIVE_DIGIT: u8 = 9;

/// Bags of real digit images: digit 9 is the positive class. Instances are
/// drawn with replacement from the supplied images, scaled to `[0, 1]` and
/// flattened. Only the size, fraction and labelling fields of `spec` apply.
pub fn make_mnist_bags(
    images: &IdxImages,
    labels: &[u8],
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<Vec<Bag>> {
    spec.validate()?;
    if images.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let (pos_pool, neg_pool): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| labels[i] == POSITIVE_DIGIT);
    if pos_pool.is_empty() {
        return Err(Error::domain("no images of digit 9 available"));
    }
    if neg_pool.is_empty() {
        return Err(Error::domain("no images of digits other than 9 available"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = compositions(spec, &mut rng)?;
    let bags = comps
        .into_iter()
        .enumerate()
        .map(|(i, (hidden, label))| {
            let instances = hidden
                .iter()
                .map(|&h| {
                    let pool = if h { &pos_pool } else { &neg_pool };
                    let idx = pool[rng.random_range(0..pool.len())];
                    images.pixels[idx].iter().map(|&b| b as f64 / 255.0).collect()
                })
                .collect();
            Bag {
                id: format!("mnist-{i:05}"),
                instances,
                label,
                positive_fraction: Some(realized_fraction(&hidden)),
                hidden_instance_labels: Some(hidden),
            }
        })
        .collect();
    Ok(bags)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<Bag>,
    pub validation: Vec<Bag>,
    pub test: Vec<Bag>,
}

impl DatasetSplit {
    pub fn partition(&self) -> Partition {
        let ids = |b: &[Bag]| b.iter().map(|b| b.id.clone()).collect();
        Partition {
            train: ids(&self.train),
            validation: ids(&self.validation),
            test: ids(&self.test),
        }
    }
}

fn check_fractions(fractions: [f64; 3]) -> Result<()> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::config("split", "fractions must be nonnegative"));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::config("split", format!("fractions sum to {total}, not 1")));
    }
    Ok(())
}

/// Seeded split, stratified by bag label. Fractions are `(train, validation,
/// test)`. A split that receives bags must receive bags of both classes.
pub fn split_dataset(bags: Vec<Bag>, fractions: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    check_fractions(fractions)?;
    let mut seen = HashSet::new();
    if let Some(dup) = bags.iter().find(|b| !seen.insert(b.id.as_str())) {
        return Err(Error::domain(format!("duplicate bag id {}", dup.id)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<Bag>, Vec<Bag>) = bags.into_iter().partition(|b| b.label);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut split = DatasetSplit::default();
    for class in [pos, neg] {
        let n = class.len() as f64;
        let n_train = (fractions[0] * n).round() as usize;
        let n_val = ((fractions[1] * n).round() as usize).min(class.len() - n_train);
        let mut it = class.into_iter();
        split.train.extend(it.by_ref().take(n_train));
        split.validation.extend(it.by_ref().take(n_val));
        split.test.extend(it);
    }
    for (name, part) in [
        ("train", &mut split.train),
        ("validation", &mut split.validation),
        ("test", &mut split.test),
    ] {
        if part.is_empty() {
            continue;
        }
        let n_pos = part.iter().filter(|b| b.label).count();
        if n_pos == 0 || n_pos == part.len() {
            return Err(Error::domain(format!("{name} split would hold a single class")));
        }
        part.sort_by(|a, b| a.id.cmp(&b.id));
        part.shuffle(&mut rng);
    }
    Ok(split)
}

/// Resolves a stored partition against the bag list.
pub fn apply_partition(bags: &[Bag], partition: &Partition) -> Result<DatasetSplit> {
    let by_id: std::collections::HashMap<&str, &Bag> =
        bags.iter().map(|b| (b.id.as_str(), b)).collect();
    let pick = |ids: &[String]| -> Result<Vec<Bag>> {
        ids.iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|b| (*b).clone())
                    .ok_or_else(|| Error::Format(format!("partition names unknown bag {id}")))
            })
            .collect()
    };
    Ok(DatasetSplit {
        train: pick(&partition.train)?,
        validation: pick(&partition.validation)?,
        test: pick(&partition.test)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_bags: usize) -> SyntheticSpec {
        SyntheticSpec {
            n_bags,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn labels_follow_the_rule() {
        let bags = generate_synthetic(&spec(1000), 17).unwrap();
        for b in &bags {
            b.validate().unwrap();
            let h = b.hidden_instance_labels.as_ref().unwrap();
            let frac = h.iter().filter(|&&x| x).count() as f64 / h.len() as f64;
            assert_eq!(b.label, frac >= 0.3, "{}", b.id);
            assert!(b.len() >= 2);
        }
    }

    #[test]
    fn threshold_examples() {
        let r = LabelRule::Percentage;
        let half = [true, false, true, false];
        let tenth: Vec<bool> = (0..10).map(|i| i == 0).collect();
        assert!(r.label(&half, 0.3));
        assert!(!r.label(&tenth, 0.3));
        let four_of_ten: Vec<bool> = (0..10).map(|i| i < 4).collect();
        assert!(r.label(&four_of_ten, 0.3));
        assert!(!LabelRule::Standard.label(&[false; 10], 0.3));
        assert!(!LabelRule::Percentage.label(&[false; 10], 0.3));
    }

    #[test]
    fn standard_rule() {
        let s = SyntheticSpec {
            label_rule: LabelRule::Standard,
            ..spec(300)
        };
        for b in generate_synthetic(&s, 5).unwrap() {
            let h = b.hidden_instance_labels.unwrap();
            assert_eq!(b.label, h.iter().any(|&x| x));
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate_synthetic(&spec(50), 3).unwrap(),
            generate_synthetic(&spec(50), 3).unwrap()
        );
        assert_ne!(
            generate_synthetic(&spec(50), 3).unwrap(),
            generate_synthetic(&spec(50), 4).unwrap()
        );
    }

    #[test]
    fn size_and_balance_statistics() {
        let bags = generate_synthetic(&spec(2000), 8).unwrap();
        let mean = bags.iter().map(|b| b.len() as f64).sum::<f64>() / bags.len() as f64;
        assert!((mean - 30.0).abs() < 3.0, "{mean}");
        let pos_rate = bags.iter().filter(|b| b.label).count() as f64 / bags.len() as f64;
        assert!((pos_rate - 0.7).abs() < 0.05, "{pos_rate}");
    }

    #[test]
    fn rebalance_gives_even_classes() {
        let s = SyntheticSpec {
            rebalance: true,
            ..spec(101)
        };
        let bags = generate_synthetic(&s, 2).unwrap();
        assert_eq!(bags.iter().filter(|b| b.label).count(), 51);
    }

    #[test]
    fn invalid_specs() {
        for (s, field) in [
            (SyntheticSpec { n_bags: 1, ..spec(10) }, "n_bags"),
            (SyntheticSpec { threshold_qstar: 1.0, ..spec(10) }, "threshold_qstar"),
            (SyntheticSpec { noise_std: 0.0, ..spec(10) }, "noise_std"),
            (SyntheticSpec { feature_dim: 0, ..spec(10) }, "feature_dim"),
        ] {
            match generate_synthetic(&s, 0) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn shuffling_instances_keeps_labels() {
        let mut bags = generate_synthetic(&spec(100), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for b in &mut bags {
            let mut h = b.hidden_instance_labels.clone().unwrap();
            h.shuffle(&mut rng);
            assert_eq!(LabelRule::Percentage.label(&h, 0.3), b.label);
        }
    }

    #[test]
    fn split_examples() {
        let bags = generate_synthetic(&spec(40), 0).unwrap();
        let s = split_dataset(bags.clone(), [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(s.train.len(), 40);
        assert!(s.validation.is_empty() && s.test.is_empty());

        let balanced = generate_synthetic(
            &SyntheticSpec {
                rebalance: true,
                ..spec(100)
            },
            4,
        )
        .unwrap();
        let s = split_dataset(balanced.clone(), [0.8, 0.1, 0.1], 9).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (80, 10, 10));
        for part in [&s.train, &s.validation, &s.test] {
            let pos = part.iter().filter(|b| b.label).count() as i64;
            let neg = part.len() as i64 - pos;
            assert!((pos - neg).abs() <= 1);
        }
        assert_eq!(s, split_dataset(balanced, [0.8, 0.1, 0.1], 9).unwrap());

        let mut ids = HashSet::new();
        for b in s.train.iter().chain(&s.validation).chain(&s.test) {
            assert!(ids.insert(b.id.clone()));
        }
    }

    #[test]
    fn split_errors() {
        let bags = generate_synthetic(&spec(10), 0).unwrap();
        assert!(split_dataset(bags.clone(), [0.5, 0.5, 0.5], 0).is_err());
        let only_pos: Vec<Bag> = bags.iter().filter(|b| b.label).cloned().collect();
        assert!(split_dataset(only_pos, [1.0, 0.0, 0.0], 0).is_err());
    }

    #[test]
    fn mnist_bags_from_synthetic_digits() {
        let images = IdxImages {
            rows: 2,
            cols: 2,
            pixels: (0..20u8).map(|d| vec![d, 255, 0, d * 10]).collect(),
        };
        let labels: Vec<u8> = (0..20u8).map(|d| d % 10).collect();
        let s = SyntheticSpec {
            threshold_qstar: 0.4,
            ..spec(200)
        };
        let bags = make_mnist_bags(&images, &labels, &s, 3).unwrap();
        for b in &bags {
            let h = b.hidden_instance_labels.as_ref().unwrap();
            // every instance's digit is recoverable from its first pixel
            for (x, &pos) in b.instances.iter().zip(h) {
                let digit = ((x[0] * 255.0).round() as u8) % 10;
                assert_eq!(digit == POSITIVE_DIGIT, pos);
                assert_eq!(x[1], 1.0);
            }
            assert_eq!(b.label, LabelRule::Percentage.label(h, 0.4));
        }
        let no_nines: Vec<u8> = labels.iter().map(|&l| if l == 9 { 8 } else { l }).collect();
        assert!(make_mnist_bags(&images, &no_nines, &s, 3).is_err());
    }
}
