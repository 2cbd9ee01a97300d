//! Images, labelled datasets and their I/O.

mod cifar;
mod png_io;
mod seed;
mod synth;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cifar::{load_cifar10_batch, parse_cifar10_batch, CIFAR10_CLASSES, CIFAR10_RECORD_LEN};
pub use png_io::{decode_png, encode_png, load_png, save_png};
pub use seed::{
    SeedSpec, Stream, DOMAIN_INIT, DOMAIN_SAMPLE, DOMAIN_SHUFFLE, DOMAIN_SYNTH, DOMAIN_TRAIN,
};
pub use synth::{synth_dataset, synth_image, ShapeClass, SynthSpec};

/// A row-major, channel-interleaved 8-bit raster with 1 or 3 channels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Dimension(format!(
                "unsupported channel count {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{width}x{height}x{channels} image needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// `(width, height, channels)`.
    pub fn shape(&self) -> (u32, u32, u8) {
        (self.width, self.height, self.channels)
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    /// Iterates over pixels as channel slices in row-major order.
    pub fn pixels(&self) -> std::slice::ChunksExact<'_, u8> {
        self.data.chunks_exact(self.channels as usize)
    }

    pub fn pixels_mut(&mut self) -> std::slice::ChunksExactMut<'_, u8> {
        self.data.chunks_exact_mut(self.channels as usize)
    }
}

/// How source images are picked for a suite or a training set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Sampling {
    /// Indices `skip .. skip + n` in dataset order.
    Sequential { skip: usize },
    /// Shuffle all indices with the sampling stream, then take `skip .. skip + n`.
    Shuffled { skip: usize },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Sequential { skip: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset {
    images: Vec<RasterImage>,
    labels: Vec<u32>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(images: Vec<RasterImage>, labels: Vec<u32>, class_names: Vec<String>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::structure(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(first) = images.first() {
            if let Some((i, img)) = images
                .iter()
                .enumerate()
                .find(|(_, img)| img.shape() != first.shape())
            {
                return Err(Error::Dimension(format!(
                    "image {i} is {:?}, expected {:?}",
                    img.shape(),
                    first.shape()
                )));
            }
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= class_names.len())
        {
            return Err(Error::structure(format!(
                "label {l} at index {i} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(LabeledDataset {
            images,
            labels,
            class_names,
        })
    }

    pub fn images(&self) -> &[RasterImage] {
        &self.images
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> Option<(u32, u32, u8)> {
        self.images.first().map(RasterImage::shape)
    }

    /// Picks `n` source indices according to `rule`.
    pub fn sample_indices(&self, rule: Sampling, n: usize, seed: &SeedSpec) -> Result<Vec<usize>> {
        let (mut order, skip): (Vec<usize>, usize) = match rule {
            Sampling::Sequential { skip } => ((0..self.len()).collect(), skip),
            Sampling::Shuffled { skip } => {
                let mut order: Vec<usize> = (0..self.len()).collect();
                order.shuffle(&mut seed.stream(DOMAIN_SAMPLE, 0, 0));
                (order, skip)
            }
        };
        let end = skip.checked_add(n).filter(|&e| e <= self.len()).ok_or_else(|| {
            Error::domain(format!(
                "need {n} images after skipping {skip}, dataset has {}",
                self.len()
            ))
        })?;
        order.truncate(end);
        Ok(order.split_off(skip))
    }

    /// A new dataset made of the images at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let mut images = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let img = self
                .images
                .get(i)
                .ok_or_else(|| Error::domain(format!("index {i} out of range")))?;
            images.push(img.clone());
            labels.push(self.labels[i]);
        }
        Ok(LabeledDataset {
            images,
            labels,
            class_names: self.class_names.clone(),
        })
    }

    /// Replaces the images, keeping labels and class names.
    pub fn with_images(&self, images: Vec<RasterImage>) -> Result<LabeledDataset> {
        LabeledDataset::new(images, self.labels.clone(), self.class_names.clone())
    }
}
