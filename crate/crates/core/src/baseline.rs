//! Multinomial logistic regression on raw intensities.
//!
//! Features are the image bytes scaled to [0, 1] in buffer order. The loss
//! is mean cross-entropy plus `l2 / 2 * ||W||²` (biases are not penalised).
//!
//! Saved models use a flat little-endian layout:
//!
//! ```text
//! b"PBSM"                          magic
//! u32 version = 1
//! u32 width, u32 height, u32 channels, u32 classes
//! f64 weights[classes][width*height*channels]
//! f64 bias[classes]
//! ```

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::apply_chain_seeded;
use crate::raster::{LabeledDataset, RasterImage, SeedSpec, DOMAIN_INIT, DOMAIN_SHUFFLE, DOMAIN_TRAIN};
use crate::report::PredictionRecord;
use crate::suite::{group_dir, read_group_dir, GroupSpec, SuiteManifest};

const MAGIC: &[u8; 4] = b"PBSM";
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxModel {
    shape: (u32, u32, u8),
    classes: usize,
    /// Row-major `classes x features`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 20,
            l2: 1e-4,
            batch_size: 25,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch size must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::domain("L2 penalty must be >= 0"));
        }
        Ok(())
    }
}

/// Feature vectors and labels for gradient computations.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

impl Batch {
    pub fn from_images(images: &[RasterImage], labels: &[u32]) -> Self {
        Batch {
            features: images.iter().map(features).collect(),
            labels: labels.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn features(image: &RasterImage) -> Vec<f64> {
    image.data().iter().map(|&v| v as f64 / 255.0).collect()
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl SoftmaxModel {
    /// All-zero parameters.
    pub fn zeros(shape: (u32, u32, u8), classes: usize) -> Self {
        let f = shape.0 as usize * shape.1 as usize * shape.2 as usize;
        SoftmaxModel {
            shape,
            classes,
            weights: vec![0.0; classes * f],
            bias: vec![0.0; classes],
        }
    }

    /// Weights drawn from N(0, 0.01²) on the initialisation stream; zero biases.
    pub fn init(shape: (u32, u32, u8), classes: usize, seed: &SeedSpec) -> Self {
        let mut m = Self::zeros(shape, classes);
        let mut rng = seed.stream(DOMAIN_INIT, 0, 0);
        let normal = Normal::new(0.0, 0.01).expect("valid normal");
        for w in &mut m.weights {
            *w = normal.sample(&mut rng);
        }
        m
    }

    pub fn shape(&self) -> (u32, u32, u8) {
        self.shape
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len() / self.classes.max(1)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let f = self.feature_count();
        self.weights
            .chunks_exact(f)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    fn check_shape(&self, image: &RasterImage) -> Result<()> {
        if image.shape() != self.shape {
            return Err(Error::Dimension(format!(
                "model expects {:?}, image is {:?}",
                self.shape,
                image.shape()
            )));
        }
        Ok(())
    }

    /// Argmax of the logits; ties go to the lowest class index.
    pub fn predict(&self, image: &RasterImage) -> Result<u32> {
        self.check_shape(image)?;
        let z = self.logits(&features(image));
        let mut best = 0;
        for (i, &v) in z.iter().enumerate().skip(1) {
            if v > z[best] {
                best = i;
            }
        }
        Ok(best as u32)
    }

    pub fn loss(&self, batch: &Batch, l2: f64) -> f64 {
        let n = batch.features.len() as f64;
        let mut ce = 0.0;
        for (x, &y) in batch.features.iter().zip(&batch.labels) {
            let mut p = self.logits(x);
            softmax_in_place(&mut p);
            ce -= p[y as usize].ln();
        }
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        ce / n + 0.5 * l2 * sq
    }

    pub fn gradients(&self, batch: &Batch, l2: f64) -> Gradients {
        let f = self.feature_count();
        let n = batch.features.len() as f64;
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.classes];
        for (x, &y) in batch.features.iter().zip(&batch.labels) {
            let mut p = self.logits(x);
            softmax_in_place(&mut p);
            p[y as usize] -= 1.0;
            for (k, &err) in p.iter().enumerate() {
                gb[k] += err;
                for (g, v) in gw[k * f..(k + 1) * f].iter_mut().zip(x) {
                    *g += err * v;
                }
            }
        }
        for g in &mut gb {
            *g /= n;
        }
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g = *g / n + l2 * w;
        }
        Gradients { weights: gw, bias: gb }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * (self.weights.len() + self.bias.len()));
        out.extend_from_slice(MAGIC);
        for v in [
            MODEL_VERSION,
            self.shape.0,
            self.shape.1,
            self.shape.2 as u32,
            self.classes as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.weights.iter().chain(&self.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..4] != MAGIC {
            return Err(Error::format("not a saved softmax model"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
        if word(0) != MODEL_VERSION {
            return Err(Error::Version {
                expected: MODEL_VERSION.to_string(),
                found: word(0).to_string(),
            });
        }
        let (w, h, c, classes) = (word(1), word(2), word(3), word(4) as usize);
        if c != 1 && c != 3 {
            return Err(Error::format(format!("bad channel count {c}")));
        }
        let f = w as usize * h as usize * c as usize;
        let count = classes * f + classes;
        let body = &bytes[24..];
        if body.len() != count * 8 {
            return Err(Error::format(format!("model body is {} bytes, expected {}", body.len(), count * 8)));
        }
        let vals: Vec<f64> = body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::format("non-finite model parameter"));
        }
        Ok(SoftmaxModel {
            shape: (w, h, c as u8),
            classes,
            weights: vals[..classes * f].to_vec(),
            bias: vals[classes * f..].to_vec(),
        })
    }
}

/// Mini-batch gradient descent from the seeded initialisation. Single
/// threaded so the accumulation order, and hence the result, is fixed.
pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<SoftmaxModel> {
    cfg.validate()?;
    let shape = dataset
        .shape()
        .ok_or_else(|| Error::domain("cannot train on an empty dataset"))?;
    let classes = dataset.class_names().len();
    let distinct: std::collections::BTreeSet<_> = dataset.labels().iter().collect();
    if classes < 2 || distinct.len() < 2 {
        return Err(Error::domain("training needs at least two classes present"));
    }
    let seed = SeedSpec::new(cfg.seed);
    let mut model = SoftmaxModel::init(shape, classes, &seed);
    let all: Vec<Vec<f64>> = dataset.images().iter().map(features).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut seed.stream(DOMAIN_SHUFFLE, epoch as u64, 0));
        for chunk in order.chunks(cfg.batch_size) {
            let batch = Batch {
                features: chunk.iter().map(|&i| all[i].clone()).collect(),
                labels: chunk.iter().map(|&i| dataset.labels()[i]).collect(),
            };
            let g = model.gradients(&batch, cfg.l2);
            for (w, d) in model.weights.iter_mut().zip(&g.weights) {
                *w -= cfg.learning_rate * d;
            }
            for (b, d) in model.bias.iter_mut().zip(&g.bias) {
                *b -= cfg.learning_rate * d;
            }
        }
    }
    Ok(model)
}

/// Largest relative error between analytic and central-difference gradients
/// over a deterministic sample of at most `samples` weights plus every bias.
pub fn gradient_check(model: &SoftmaxModel, batch: &Batch, l2: f64, samples: usize) -> f64 {
    const H: f64 = 1e-5;
    let g = model.gradients(batch, l2);
    let mut probe = model.clone();
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    let mut worst: f64 = 0.0;

    let stride = (model.weights.len() / samples.max(1)).max(1);
    for i in (0..model.weights.len()).step_by(stride).take(samples) {
        let orig = probe.weights[i];
        probe.weights[i] = orig + H;
        let up = probe.loss(batch, l2);
        probe.weights[i] = orig - H;
        let down = probe.loss(batch, l2);
        probe.weights[i] = orig;
        worst = worst.max(rel(g.weights[i], (up - down) / (2.0 * H)));
    }
    for k in 0..model.classes {
        let orig = probe.bias[k];
        probe.bias[k] = orig + H;
        let up = probe.loss(batch, l2);
        probe.bias[k] = orig - H;
        let down = probe.loss(batch, l2);
        probe.bias[k] = orig;
        worst = worst.max(rel(g.bias[k], (up - down) / (2.0 * H)));
    }
    worst
}

/// Applies a training group's chain to every image of `dataset`. Streams are
/// keyed on `DOMAIN_TRAIN ^ group_id`, distinct from any test-suite stream.
pub fn corrupt_training_set(dataset: &LabeledDataset, group: &GroupSpec, seed: &SeedSpec) -> Result<LabeledDataset> {
    let domain = DOMAIN_TRAIN ^ group.group_id as u64;
    let images = dataset
        .images()
        .iter()
        .enumerate()
        .map(|(k, img)| apply_chain_seeded(img, &group.chain, seed, domain, k as u64))
        .collect::<Result<Vec<_>>>()?;
    dataset.with_images(images)
}

/// Predictions for in-memory images of one test group.
pub fn evaluate_images(
    model: &SoftmaxModel,
    group_id: u32,
    images: &[RasterImage],
    labels: &[u32],
) -> Result<Vec<PredictionRecord>> {
    images
        .par_iter()
        .zip(labels.par_iter())
        .enumerate()
        .map(|(k, (img, &y))| {
            Ok(PredictionRecord {
                group_id,
                image_index: k as u32,
                true_label: y,
                predicted_label: model.predict(img)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupEvaluation {
    pub accuracy: f64,
    pub records: Vec<PredictionRecord>,
}

/// Scores the images under one group directory of a suite.
pub fn evaluate(model: &SoftmaxModel, dir: impl AsRef<Path>, group_id: u32) -> Result<GroupEvaluation> {
    let (images, labels) = read_group_dir(dir)?;
    if images.is_empty() {
        return Err(Error::structure("empty group"));
    }
    let records = evaluate_images(model, group_id, &images, &labels)?;
    let correct = records.iter().filter(|r| r.true_label == r.predicted_label).count();
    Ok(GroupEvaluation {
        accuracy: 100.0 * correct as f64 / records.len() as f64,
        records,
    })
}

/// Scores every group of a generated suite, in manifest order.
pub fn evaluate_suite(model: &SoftmaxModel, manifest: &SuiteManifest, suite_dir: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let suite_dir = suite_dir.as_ref();
    let per_group: Vec<Vec<PredictionRecord>> = manifest
        .groups
        .par_iter()
        .map(|g| {
            evaluate(model, group_dir(suite_dir, &g.spec), g.spec.group_id)
                .map(|e| e.records)
                .map_err(|e| Error::Group {
                    group_id: g.spec.group_id,
                    name: g.spec.name.clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    Ok(per_group.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{synth_dataset, ShapeClass, SynthSpec};
    use rand::Rng;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            side: 12,
            channels: 1,
            classes: vec![ShapeClass::Disc, ShapeClass::Bar],
            jitter: 0.05,
        }
    }

    fn random_batch(f: usize, n: usize, classes: u32, seed: u64) -> Batch {
        let mut rng = SeedSpec::new(seed).stream(1, 2, 3);
        Batch {
            features: (0..n).map(|_| (0..f).map(|_| rng.random::<f64>()).collect()).collect(),
            labels: (0..n).map(|_| rng.random_range(0..classes)).collect(),
        }
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let m = SoftmaxModel::zeros((4, 4, 1), 3);
        let img = RasterImage::filled(4, 4, 1, 200).unwrap();
        assert_eq!(m.predict(&img).unwrap(), 0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = SoftmaxModel::zeros((4, 4, 1), 3);
        let img = RasterImage::filled(4, 4, 3, 200).unwrap();
        assert!(matches!(m.predict(&img), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let ds = synth_dataset(&small_spec(), 20, &SeedSpec::new(1)).unwrap();
        let cfg = TrainConfig { epochs: 0, seed: 4, ..TrainConfig::default() };
        let m = train(&ds, &cfg).unwrap();
        assert_eq!(m, SoftmaxModel::init((12, 12, 1), 2, &SeedSpec::new(4)));
    }

    #[test]
    fn training_is_deterministic() {
        let ds = synth_dataset(&small_spec(), 40, &SeedSpec::new(2)).unwrap();
        let cfg = TrainConfig { epochs: 3, seed: 9, ..TrainConfig::default() };
        assert_eq!(train(&ds, &cfg).unwrap().to_bytes(), train(&ds, &cfg).unwrap().to_bytes());
    }

    #[test]
    fn separable_two_class_set_is_learned() {
        let ds = synth_dataset(&small_spec(), 200, &SeedSpec::new(3)).unwrap();
        let m = train(&ds, &TrainConfig { epochs: 30, seed: 1, ..TrainConfig::default() }).unwrap();
        let correct = ds
            .images()
            .iter()
            .zip(ds.labels())
            .filter(|(img, &y)| m.predict(img).unwrap() == y)
            .count();
        assert!(correct as f64 / 200.0 >= 0.99, "{correct}/200");
    }

    #[test]
    fn single_class_is_rejected() {
        let imgs = vec![RasterImage::filled(2, 2, 1, 0).unwrap(); 3];
        let ds = LabeledDataset::new(imgs, vec![0; 3], vec!["a".into(), "b".into()]).unwrap();
        assert!(matches!(train(&ds, &TrainConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = SoftmaxModel::init((5, 5, 1), 4, &SeedSpec::new(8));
        let b = random_batch(25, 6, 4, 8);
        assert!(gradient_check(&m, &b, 0.01, 100) <= 1e-5);
    }

    #[test]
    fn bias_gradient_on_zero_input_is_softmax_minus_onehot() {
        let mut m = SoftmaxModel::init((3, 3, 1), 3, &SeedSpec::new(1));
        m.bias_mut().copy_from_slice(&[0.3, -1.0, 0.7]);
        let b = Batch { features: vec![vec![0.0; 9]], labels: vec![2] };
        let g = m.gradients(&b, 0.0);
        let mut p = m.bias().to_vec();
        softmax_in_place(&mut p);
        p[2] -= 1.0;
        assert_eq!(g.bias, p);
    }

    #[test]
    fn penalty_contribution_is_linear() {
        let m = SoftmaxModel::init((3, 3, 1), 3, &SeedSpec::new(2));
        let b = random_batch(9, 4, 3, 5);
        let g0 = m.gradients(&b, 0.0).weights;
        let g1 = m.gradients(&b, 0.1).weights;
        let g2 = m.gradients(&b, 0.2).weights;
        for i in 0..g0.len() {
            let once = g1[i] - g0[i];
            let twice = g2[i] - g0[i];
            assert!((twice - 2.0 * once).abs() <= 1e-15, "{twice} vs {once}");
        }
    }

    #[test]
    fn model_bytes_round_trip() {
        let m = SoftmaxModel::init((3, 2, 3), 4, &SeedSpec::new(6));
        let back = SoftmaxModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        let mut bytes = m.to_bytes();
        bytes.pop();
        assert!(SoftmaxModel::from_bytes(&bytes).is_err());
        bytes = m.to_bytes();
        bytes[4] = 2;
        assert!(matches!(SoftmaxModel::from_bytes(&bytes), Err(Error::Version { .. })));
    }
}
