//! The nine-run train-on-corrupted experiment on the synthetic dataset.
//!
//! One synthetic dataset is split by index: the first `test_images` images
//! form the test source and the next `train_images` images the training
//! source, so the two never share an image. Each training group's chain is
//! applied to the training images, a baseline model is trained, and the model
//! is scored on all 69 test groups.

use serde::{Deserialize, Serialize};

use crate::baseline::{corrupt_training_set, evaluate_images, train, TrainConfig};
use crate::error::{Error, Result};
use crate::raster::{synth_dataset, SeedSpec, SynthSpec};
use crate::report::{summarize_against_clean, ClassifierRun, RobustnessSummary};
use crate::suite::{corrupt_group, enumerate_groups, find_group};

/// Clean plus the eight corrupted training chains.
pub const TRAINING_GROUPS: [&str; 9] = [
    "clean",
    "SP0.1",
    "GA0.1",
    "SP0.1GA0.1",
    "GA0.1SP0.1",
    "SP0.1RL30",
    "SP0.1RR30",
    "RL30",
    "RR30",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub master_seed: u64,
    pub test_images: usize,
    pub train_images: usize,
    pub synth: SynthSpec,
    /// `seed` is overridden by `master_seed`.
    pub train: TrainConfig,
    pub classifier_name: String,
    pub training_groups: Vec<String>,
}

impl ProtocolConfig {
    pub fn new(master_seed: u64) -> Self {
        ProtocolConfig {
            master_seed,
            test_images: 100,
            train_images: 500,
            synth: SynthSpec::default(),
            train: TrainConfig::default(),
            classifier_name: "softmax".into(),
            training_groups: TRAINING_GROUPS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Trains one model per training group and returns the runs in
/// `cfg.training_groups` order.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<Vec<ClassifierRun>> {
    if cfg.test_images == 0 || cfg.train_images == 0 {
        return Err(Error::domain("test and training sets must be non-empty"));
    }
    let seed = SeedSpec::new(cfg.master_seed);
    let ds = synth_dataset(&cfg.synth, cfg.test_images + cfg.train_images, &seed)?;
    let test_idx: Vec<usize> = (0..cfg.test_images).collect();
    let train_idx: Vec<usize> = (cfg.test_images..cfg.test_images + cfg.train_images).collect();
    let test = ds.select(&test_idx)?;
    let train_src = ds.select(&train_idx)?;

    let groups = enumerate_groups();
    let test_groups = groups
        .iter()
        .map(|g| corrupt_group(test.images(), g, &seed))
        .collect::<Result<Vec<_>>>()?;
    let train_cfg = TrainConfig {
        seed: cfg.master_seed,
        ..cfg.train.clone()
    };

    cfg.training_groups
        .iter()
        .map(|name| {
            let g = find_group(name)
                .ok_or_else(|| Error::domain(format!("unknown training group {name:?}")))?;
            let model = train(&corrupt_training_set(&train_src, &g, &seed)?, &train_cfg)?;
            let mut records = Vec::with_capacity(groups.len() * cfg.test_images);
            for (spec, images) in groups.iter().zip(&test_groups) {
                records.extend(evaluate_images(&model, spec.group_id, images, test.labels())?);
            }
            ClassifierRun::from_records(cfg.classifier_name.clone(), name.clone(), &records, &groups)
        })
        .collect()
}

/// [`run_protocol`] followed by [`summarize_against_clean`].
pub fn protocol_summaries(cfg: &ProtocolConfig) -> Result<Vec<RobustnessSummary>> {
    summarize_against_clean(&run_protocol(cfg)?)
}
