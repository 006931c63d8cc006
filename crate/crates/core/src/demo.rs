//! Procedural seabed scenes with annotated objects, for examples, tests and
//! smoke runs where no real dataset is at hand.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::Result;
use crate::eval::iou;
use crate::model::{
    png, sea_farm_categories, Annotation, BBox, CategoryId, DatasetManifest, ImageBuffer,
    ImageEntry, InMemoryImages, RngConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    /// Inclusive object-count range per category (sea-farm order).
    pub objects: [(usize, usize); 3],
    /// Object size range in pixels (longer side).
    pub size: (usize, usize),
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 160,
            height: 120,
            objects: [(0, 1), (1, 3), (0, 1)],
            size: (12, 22),
        }
    }
}

fn base_color(category: usize) -> [f64; 3] {
    match category {
        0 => [0.36, 0.25, 0.16],
        1 => [0.28, 0.12, 0.30],
        _ => [0.85, 0.72, 0.55],
    }
}

/// Seabed background: vertical blue-green gradient with mild texture.
pub fn background(width: usize, height: usize, rng: &mut impl Rng) -> ImageBuffer {
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let tint: f64 = rng.random_range(-0.05..0.05);
    ImageBuffer::from_fn(height, width, 3, |y, x, c| {
        let t = y as f64 / height.max(1) as f64;
        let wave = 0.03 * ((x as f64 * 0.21 + phase).sin() + (y as f64 * 0.17 - phase).cos());
        let base = [0.10 + 0.10 * t, 0.35 + 0.15 * t + tint, 0.45 - 0.10 * t][c];
        (base + wave).clamp(0.0, 1.0)
    })
}

/// Draws one filled ellipse object into `image` and returns its tight box.
fn draw_object(
    image: &mut ImageBuffer,
    category: usize,
    (x, y, w, h): (usize, usize, usize, usize),
    rng: &mut impl Rng,
) {
    let color = base_color(category);
    let jitter: f64 = rng.random_range(-0.05..0.05);
    let (cx, cy) = (x as f64 + w as f64 / 2.0, y as f64 + h as f64 / 2.0);
    let (rx, ry) = (w as f64 / 2.0, h as f64 / 2.0);
    for py in y..y + h {
        for px in x..x + w {
            let dx = (px as f64 + 0.5 - cx) / rx;
            let dy = (py as f64 + 0.5 - cy) / ry;
            let r2 = dx * dx + dy * dy;
            if r2 <= 1.0 {
                let shade = 1.0 - 0.35 * r2;
                let spikes = if category == 1 {
                    0.06 * ((px + py) % 3) as f64
                } else {
                    0.0
                };
                for (c, &base) in color.iter().enumerate() {
                    image.set(
                        py,
                        px,
                        c,
                        ((base + jitter) * shade + spikes).clamp(0.0, 1.0),
                    );
                }
            }
        }
    }
}

/// One scene and its boxes. Objects overlap by at most IoU 0.1.
pub fn scene(config: &SceneConfig, rng: &mut impl Rng) -> (ImageBuffer, Vec<BBox>) {
    let mut image = background(config.width, config.height, rng);
    let mut boxes: Vec<BBox> = Vec::new();
    for (cat, &(lo, hi)) in config.objects.iter().enumerate() {
        let n = rng.random_range(lo..=hi);
        for _ in 0..n {
            for _ in 0..100 {
                let long = rng.random_range(config.size.0..=config.size.1);
                let (w, h) = if cat == 0 {
                    (long, (long / 2).max(4))
                } else {
                    (long, (long as f64 * rng.random_range(0.8..1.0)) as usize)
                };
                if w + 2 > config.width || h + 2 > config.height {
                    break;
                }
                let x = rng.random_range(1..=config.width - w - 1);
                let y = rng.random_range(1..=config.height - h - 1);
                let b = BBox::new(x as f64, y as f64, w as f64, h as f64, CategoryId(cat));
                if boxes.iter().all(|o| iou(o, &b) <= 0.1) {
                    draw_object(&mut image, cat, (x, y, w, h), rng);
                    boxes.push(b);
                    break;
                }
            }
        }
    }
    (image, boxes)
}

/// `n` scenes as an in-memory dataset with ids `1..=n`.
pub fn dataset(n: usize, config: &SceneConfig, seed: u64) -> (DatasetManifest, InMemoryImages) {
    let rng = RngConfig::new(seed);
    let mut manifest = DatasetManifest::new(sea_farm_categories());
    let mut store = InMemoryImages::new();
    for k in 0..n {
        let id = k as u64 + 1;
        let (img, boxes) = scene(config, &mut rng.stream(id));
        manifest.images.push(ImageEntry {
            id,
            file: PathBuf::from(format!("images/{id:06}.png")),
            width: config.width,
            height: config.height,
        });
        manifest
            .annotations
            .extend(boxes.into_iter().map(|b| Annotation::new(id, b)));
        store.insert(id, img);
    }
    (manifest, store)
}

/// Writes a dataset to `dir` (`images/*.png` plus `manifest.json`) and
/// returns the manifest path.
pub fn write_dataset(dir: &Path, n: usize, config: &SceneConfig, seed: u64) -> Result<PathBuf> {
    let (manifest, store) = dataset(n, config, seed);
    for entry in &manifest.images {
        png::save(dir.join(&entry.file), &store.images[&entry.id], None)?;
    }
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}
