//! Shared inputs for the benchmarks.

use perturbench::raster::{synth_dataset, SynthSpec};
use perturbench::{LabeledDataset, RasterImage, SeedSpec};

pub const SEED: u64 = 7;

/// A 32x32 RGB synthetic image.
pub fn sample_image() -> RasterImage {
    sample_dataset(1).images()[0].clone()
}

pub fn sample_dataset(n: usize) -> LabeledDataset {
    synth_dataset(&SynthSpec::default(), n, &SeedSpec::new(SEED)).expect("synthetic dataset")
}

/// Accuracy-like values in (40, 100), deterministic in `n`.
pub fn accuracy_values(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 40.0 + 60.0 * ((i as f64 * 0.618_033_988_75).fract()))
        .collect()
}
