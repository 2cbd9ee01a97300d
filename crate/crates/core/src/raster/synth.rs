//! Parametric shape dataset used when CIFAR-10 is not at hand.
//!
//! Image `i` depends only on `(seed, i)`, so a dataset of `n` images is a
//! prefix of any larger dataset built with the same spec and seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, RasterImage, SeedSpec, DOMAIN_SYNTH};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Disc,
    /// Horizontal bar.
    Bar,
    /// Upright plus sign.
    Cross,
    Ring,
}

impl ShapeClass {
    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Disc => "disc",
            ShapeClass::Bar => "bar",
            ShapeClass::Cross => "cross",
            ShapeClass::Ring => "ring",
        }
    }

    /// Whether the offset `(dx, dy)` from the shape centre, in units of the
    /// image side, lies inside the shape.
    fn contains(self, dx: f64, dy: f64) -> bool {
        match self {
            ShapeClass::Disc => dx * dx + dy * dy <= 0.28 * 0.28,
            ShapeClass::Bar => dx.abs() <= 0.38 && dy.abs() <= 0.10,
            ShapeClass::Cross => {
                (dx.abs() <= 0.35 && dy.abs() <= 0.08) || (dy.abs() <= 0.35 && dx.abs() <= 0.08)
            }
            ShapeClass::Ring => {
                let r2 = dx * dx + dy * dy;
                (0.18 * 0.18..=0.32 * 0.32).contains(&r2)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub side: u32,
    pub channels: u8,
    pub classes: Vec<ShapeClass>,
    /// Maximum centre offset as a fraction of the side.
    pub jitter: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            side: 32,
            channels: 3,
            classes: vec![ShapeClass::Disc, ShapeClass::Bar, ShapeClass::Cross],
            jitter: 0.08,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::domain("synthetic dataset needs at least 2 classes"));
        }
        if self.side < 4 {
            return Err(Error::domain(format!("side {} too small", self.side)));
        }
        if !(0.0..=0.25).contains(&self.jitter) {
            return Err(Error::domain(format!("jitter {} outside [0, 0.25]", self.jitter)));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::domain(format!("channels {} not 1 or 3", self.channels)));
        }
        Ok(())
    }
}

/// Draws image `index`; its class is `index % classes.len()`.
pub fn synth_image(spec: &SynthSpec, index: u64, seed: &SeedSpec) -> Result<RasterImage> {
    spec.validate()?;
    let class = spec.classes[(index % spec.classes.len() as u64) as usize];
    let mut rng = seed.stream(DOMAIN_SYNTH, index, 0);
    let c = spec.channels as usize;

    let cx = 0.5 + rng.random_range(-spec.jitter..=spec.jitter);
    let cy = 0.5 + rng.random_range(-spec.jitter..=spec.jitter);
    let fg: Vec<f64> = (0..c).map(|_| rng.random_range(150.0..=255.0)).collect();
    let bg: Vec<f64> = (0..c).map(|_| rng.random_range(0.0..=70.0)).collect();

    let side = spec.side as usize;
    let inv = 1.0 / spec.side as f64;
    let mut data = Vec::with_capacity(side * side * c);
    for y in 0..side {
        for x in 0..side {
            let dx = (x as f64 + 0.5) * inv - cx;
            let dy = (y as f64 + 0.5) * inv - cy;
            let base = if class.contains(dx, dy) { &fg } else { &bg };
            for &v in base {
                let texture: f64 = rng.random_range(-12.0..=12.0);
                data.push((v + texture).clamp(0.0, 255.0).round() as u8);
            }
        }
    }
    RasterImage::new(spec.side, spec.side, spec.channels, data)
}

pub fn synth_dataset(spec: &SynthSpec, n: usize, seed: &SeedSpec) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::domain("synthetic dataset needs n >= 1"));
    }
    spec.validate()?;
    let k = spec.classes.len() as u64;
    let images = (0..n as u64)
        .map(|i| synth_image(spec, i, seed))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..n as u64).map(|i| (i % k) as u32).collect();
    let names = spec.classes.iter().map(|c| c.name().to_string()).collect();
    LabeledDataset::new(images, labels, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_round_robin() {
        let spec = SynthSpec::default();
        let seed = SeedSpec::new(7);
        let a = synth_dataset(&spec, 300, &seed).unwrap();
        let b = synth_dataset(&spec, 300, &seed).unwrap();
        assert_eq!(a, b);
        for class in 0..3 {
            assert_eq!(a.labels().iter().filter(|&&l| l == class).count(), 100);
        }
    }

    #[test]
    fn smaller_dataset_is_a_prefix() {
        let spec = SynthSpec::default();
        let seed = SeedSpec::new(3);
        let small = synth_dataset(&spec, 10, &seed).unwrap();
        let big = synth_dataset(&spec, 25, &seed).unwrap();
        assert_eq!(small.images(), &big.images()[..10]);
    }

    #[test]
    fn seeds_matter() {
        let spec = SynthSpec::default();
        let a = synth_dataset(&spec, 5, &SeedSpec::new(1)).unwrap();
        let b = synth_dataset(&spec, 5, &SeedSpec::new(2)).unwrap();
        assert_ne!(a.images(), b.images());
    }

    #[test]
    fn invalid_parameters() {
        let seed = SeedSpec::new(0);
        assert!(synth_dataset(&SynthSpec::default(), 0, &seed).is_err());
        let one = SynthSpec {
            classes: vec![ShapeClass::Disc],
            ..SynthSpec::default()
        };
        assert!(synth_dataset(&one, 10, &seed).is_err());
    }

    #[test]
    fn grayscale_supported() {
        let spec = SynthSpec {
            channels: 1,
            side: 12,
            ..SynthSpec::default()
        };
        let ds = synth_dataset(&spec, 4, &SeedSpec::new(0)).unwrap();
        assert_eq!(ds.shape(), Some((12, 12, 1)));
    }
}
