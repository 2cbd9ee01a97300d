use std::path::Path;

use super::{LabeledDataset, RasterImage};
use crate::error::{Error, Result};

/// Bytes per record: one label byte followed by 32x32 R, G and B planes.
pub const CIFAR10_RECORD_LEN: usize = 1 + 3 * PLANE;

const SIDE: usize = 32;
const PLANE: usize = SIDE * SIDE;

pub const CIFAR10_CLASSES: [&str; 10] = [
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
];

pub fn load_cifar10_batch(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_cifar10_batch(&bytes)
}

/// Decodes a CIFAR-10 binary batch, converting planar RGB to interleaved.
pub fn parse_cifar10_batch(bytes: &[u8]) -> Result<LabeledDataset> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR10_RECORD_LEN) {
        return Err(Error::format(format!(
            "batch length {} is not a positive multiple of {CIFAR10_RECORD_LEN}",
            bytes.len()
        )));
    }
    let count = bytes.len() / CIFAR10_RECORD_LEN;
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for (i, record) in bytes.chunks_exact(CIFAR10_RECORD_LEN).enumerate() {
        let label = record[0];
        if label as usize >= CIFAR10_CLASSES.len() {
            return Err(Error::format(format!("record {i}: label byte {label} > 9")));
        }
        let planes = &record[1..];
        let mut data = vec![0u8; 3 * PLANE];
        for (p, px) in data.chunks_exact_mut(3).enumerate() {
            px[0] = planes[p];
            px[1] = planes[PLANE + p];
            px[2] = planes[2 * PLANE + p];
        }
        images.push(RasterImage::new(SIDE as u32, SIDE as u32, 3, data)?);
        labels.push(label as u32);
    }
    LabeledDataset::new(
        images,
        labels,
        CIFAR10_CLASSES.iter().map(|s| s.to_string()).collect(),
    )
}
