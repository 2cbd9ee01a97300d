use std::io::Cursor;
use std::path::Path;

use super::RasterImage;
use crate::error::{Error, Result};

/// Encodes as 8-bit grayscale or RGB PNG with fixed encoder settings, so the
/// same image always yields the same bytes.
pub fn encode_png(image: &RasterImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width(), image.height());
        enc.set_color(match image.channels() {
            1 => png::ColorType::Grayscale,
            _ => png::ColorType::Rgb,
        });
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::Adaptive);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::format(format!("png encode: {e}")))?;
        writer
            .write_image_data(image.data())
            .map_err(|e| Error::format(format!("png encode: {e}")))?;
        writer
            .finish()
            .map_err(|e| Error::format(format!("png encode: {e}")))?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(format!("png decode: {e}")))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::format(format!("unsupported png bit depth {depth:?}")));
    }
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(Error::format(format!("unsupported png color type {other:?}"))),
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("png image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(format!("png decode: {e}")))?;
    buf.truncate(info.buffer_size());
    RasterImage::new(info.width, info.height, channels, buf)
}

pub fn save_png(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(image)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_png(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes)
}
