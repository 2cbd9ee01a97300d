//! Perturbation operators and their ordered composition.
//!
//! Random draw order is fixed so that outputs are reproducible byte for byte:
//!
//! * salt & pepper: for each pixel in row-major order draw `u ~ U[0,1)`;
//!   if `u < density` draw a fair bit (true = salt/255, false = pepper/0).
//! * Gaussian: for each channel value in buffer order draw one standard
//!   normal `z`; the noise is `sqrt(variance) * z`.
//!
//! Re-quantisation everywhere is `round-half-away-from-zero` of the value
//! clamped to `[0, 255]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{RasterImage, SeedSpec, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationStep {
    /// Fraction of pixels forced to black or white.
    SaltPepper { density: f64 },
    /// Zero-mean additive noise; variance on the [0, 1] intensity scale.
    Gaussian { variance: f64 },
    /// Rotation about the centre; positive is clockwise.
    Rotation { degrees: f64 },
}

impl PerturbationStep {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PerturbationStep::SaltPepper { density } => {
                if !(0.0..=1.0).contains(&density) {
                    return Err(Error::domain(format!("salt & pepper density {density} outside [0, 1]")));
                }
            }
            PerturbationStep::Gaussian { variance } => {
                if !(variance >= 0.0 && variance.is_finite()) {
                    return Err(Error::domain(format!("Gaussian variance {variance} must be finite and >= 0")));
                }
            }
            PerturbationStep::Rotation { degrees } => {
                if !degrees.is_finite() {
                    return Err(Error::domain(format!("rotation angle {degrees} not finite")));
                }
            }
        }
        Ok(())
    }

    /// True when the step cannot change any image.
    pub fn is_identity(&self) -> bool {
        match *self {
            PerturbationStep::SaltPepper { density } => density == 0.0,
            PerturbationStep::Gaussian { variance } => variance == 0.0,
            PerturbationStep::Rotation { degrees } => degrees == 0.0,
        }
    }

    pub fn apply(&self, image: &RasterImage, stream: &mut Stream) -> Result<RasterImage> {
        match *self {
            PerturbationStep::SaltPepper { density } => apply_salt_pepper(image, density, stream),
            PerturbationStep::Gaussian { variance } => apply_gaussian(image, variance, stream),
            PerturbationStep::Rotation { degrees } => rotate(image, degrees),
        }
    }
}

/// `SP0.1`, `GA0.15`, `RL30` (counter-clockwise), `RR60` (clockwise).
impl fmt::Display for PerturbationStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PerturbationStep::SaltPepper { density } => write!(f, "SP{density}"),
            PerturbationStep::Gaussian { variance } => write!(f, "GA{variance}"),
            PerturbationStep::Rotation { degrees } if degrees < 0.0 => write!(f, "RL{}", -degrees),
            PerturbationStep::Rotation { degrees } => write!(f, "RR{degrees}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerturbationChain {
    steps: Vec<PerturbationStep>,
}

impl PerturbationChain {
    pub fn new(steps: Vec<PerturbationStep>) -> Result<Self> {
        for s in &steps {
            s.validate()?;
        }
        Ok(PerturbationChain { steps })
    }

    pub fn clean() -> Self {
        PerturbationChain { steps: Vec::new() }
    }

    pub fn steps(&self) -> &[PerturbationStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Canonical group name: `clean`, or the concatenated step tokens.
    pub fn name(&self) -> String {
        if self.steps.is_empty() {
            return "clean".to_string();
        }
        self.steps.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for PerturbationChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses the canonical names produced by [`PerturbationChain::name`].
impl FromStr for PerturbationChain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "clean" {
            return Ok(PerturbationChain::clean());
        }
        let bad = || Error::format(format!("unparseable chain name {s:?}"));
        if s.is_empty() {
            return Err(bad());
        }
        let mut steps = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            if rest.len() < 3 || !rest.is_char_boundary(2) {
                return Err(bad());
            }
            let (tag, tail) = rest.split_at(2);
            let num_len = tail
                .find(|c: char| !(c.is_ascii_digit() || c == '.'))
                .unwrap_or(tail.len());
            let value: f64 = tail[..num_len].parse().map_err(|_| bad())?;
            steps.push(match tag {
                "SP" => PerturbationStep::SaltPepper { density: value },
                "GA" => PerturbationStep::Gaussian { variance: value },
                "RL" => PerturbationStep::Rotation { degrees: -value },
                "RR" => PerturbationStep::Rotation { degrees: value },
                _ => return Err(bad()),
            });
            rest = &tail[num_len..];
        }
        PerturbationChain::new(steps)
    }
}

pub fn apply_salt_pepper(image: &RasterImage, density: f64, stream: &mut Stream) -> Result<RasterImage> {
    PerturbationStep::SaltPepper { density }.validate()?;
    let mut out = image.clone();
    for px in out.pixels_mut() {
        let u: f64 = stream.random();
        if u < density {
            let v = if stream.random::<bool>() { 255 } else { 0 };
            px.fill(v);
        }
    }
    Ok(out)
}

#[inline]
fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

pub fn apply_gaussian(image: &RasterImage, variance: f64, stream: &mut Stream) -> Result<RasterImage> {
    PerturbationStep::Gaussian { variance }.validate()?;
    let sigma = variance.sqrt();
    let mut out = image.clone();
    for v in out.pixels_mut().flatten() {
        let z: f64 = StandardNormal.sample(stream);
        let x = (*v as f64 / 255.0 + sigma * z).clamp(0.0, 1.0);
        *v = quantize(x * 255.0);
    }
    Ok(out)
}

/// Rotates about the image centre, keeping the input size. Bilinear sampling;
/// source samples outside the image read as 0.
pub fn rotate(image: &RasterImage, degrees: f64) -> Result<RasterImage> {
    PerturbationStep::Rotation { degrees }.validate()?;
    if degrees == 0.0 {
        return Ok(image.clone());
    }
    let (w, h, c) = (image.width() as i64, image.height() as i64, image.channels() as usize);
    let (sin, cos) = degrees.to_radians().sin_cos();
    let cx = (w - 1) as f64 * 0.5;
    let cy = (h - 1) as f64 * 0.5;
    let src = image.data();
    let sample = |x: i64, y: i64, ch: usize| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            src[((y * w + x) as usize) * c + ch] as f64
        }
    };

    let mut data = Vec::with_capacity(src.len());
    let mut acc = vec![0.0f64; c];
    for y in 0..h {
        for x in 0..w {
            // Screen y grows downward, so this forward map is clockwise for
            // positive angles; sample through its inverse.
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let (x0, y0) = (x0 as i64, y0 as i64);
            for (ch, a) in acc.iter_mut().enumerate() {
                let top = sample(x0, y0, ch) * (1.0 - fx) + sample(x0 + 1, y0, ch) * fx;
                let bottom = sample(x0, y0 + 1, ch) * (1.0 - fx) + sample(x0 + 1, y0 + 1, ch) * fx;
                *a = top * (1.0 - fy) + bottom * fy;
            }
            data.extend(acc.iter().map(|&a| quantize(a)));
        }
    }
    RasterImage::new(image.width(), image.height(), image.channels(), data)
}

/// Applies `chain` in order; step `i` draws from `stream_for(i)`.
pub fn apply_chain<F>(image: &RasterImage, chain: &PerturbationChain, mut stream_for: F) -> Result<RasterImage>
where
    F: FnMut(usize) -> Stream,
{
    let mut current = image.clone();
    for (i, step) in chain.steps().iter().enumerate() {
        let mut stream = stream_for(i);
        current = step.apply(&current, &mut stream)?;
    }
    Ok(current)
}

/// [`apply_chain`] with step streams keyed `(domain, index, step)`.
pub fn apply_chain_seeded(
    image: &RasterImage,
    chain: &PerturbationChain,
    seed: &SeedSpec,
    domain: u64,
    index: u64,
) -> Result<RasterImage> {
    apply_chain(image, chain, |step| seed.stream(domain, index, step as u64))
}
