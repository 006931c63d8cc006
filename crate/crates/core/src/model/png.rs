//! 8-bit PNG load/save with fixed encoder settings, so identical buffers
//! always produce identical bytes.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::model::ImageBuffer;

pub fn to_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn from_u8(v: u8) -> f64 {
    v as f64 / 255.0
}

/// Loads a PNG as RGB; an alpha channel, if present, is returned separately.
pub fn load_rgba(path: impl AsRef<Path>) -> Result<(ImageBuffer, Option<ImageBuffer>)> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let has_alpha = img.color().has_alpha();
    let rgba = img.to_rgba8();
    let (w, h) = (rgba.width() as usize, rgba.height() as usize);
    let raw = rgba.as_raw();
    let rgb = ImageBuffer::from_fn(h, w, 3, |y, x, c| from_u8(raw[(y * w + x) * 4 + c]));
    let alpha = has_alpha
        .then(|| ImageBuffer::from_fn(h, w, 1, |y, x, _| from_u8(raw[(y * w + x) * 4 + 3])));
    Ok((rgb, alpha))
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    Ok(load_rgba(path)?.0)
}

/// Loads a single-channel mask (luma of whatever the file holds).
pub fn load_gray(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let luma = img.to_luma8();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    let raw = luma.as_raw();
    Ok(ImageBuffer::from_fn(h, w, 1, |y, x, _| {
        from_u8(raw[y * w + x])
    }))
}

/// Encodes `rgb` (1 or 3 channels) plus optional alpha to PNG bytes.
pub fn encode(rgb: &ImageBuffer, alpha: Option<&ImageBuffer>) -> Result<Vec<u8>> {
    let (h, w) = (rgb.height(), rgb.width());
    if let Some(a) = alpha {
        if a.height() != h || a.width() != w || a.channels() != 1 {
            return Err(Error::DimensionMismatch(
                "alpha plane does not match image".into(),
            ));
        }
    }
    let (color, out_channels) = match (rgb.channels(), alpha.is_some()) {
        (1, false) => (ExtendedColorType::L8, 1),
        (1, true) => (ExtendedColorType::La8, 2),
        (3, false) => (ExtendedColorType::Rgb8, 3),
        (3, true) => (ExtendedColorType::Rgba8, 4),
        (c, _) => {
            return Err(Error::InvalidArgument(format!(
                "cannot encode {c}-channel image as PNG"
            )))
        }
    };
    let mut raw = Vec::with_capacity(h * w * out_channels);
    for y in 0..h {
        for x in 0..w {
            for c in 0..rgb.channels() {
                raw.push(to_u8(rgb.get(y, x, c)));
            }
            if let Some(a) = alpha {
                raw.push(to_u8(a.get(y, x, 0)));
            }
        }
    }
    let mut bytes = Vec::new();
    PngEncoder::new_with_quality(&mut bytes, CompressionType::Default, FilterType::Adaptive)
        .write_image(&raw, w as u32, h as u32, color)
        .map_err(|source| Error::Image {
            path: "<memory>".into(),
            source,
        })?;
    Ok(bytes)
}

pub fn save(path: impl AsRef<Path>, rgb: &ImageBuffer, alpha: Option<&ImageBuffer>) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let bytes = encode(rgb, alpha)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
