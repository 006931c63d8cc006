//! Shared data model: rasters, boxes, manifests, object crops and seeding.

mod crop;
mod image;
mod manifest;
pub mod png;
mod rng;
mod store;

pub use crop::ObjectCrop;
pub use image::{ImageBuffer, PixelRect};
pub use manifest::{
    category_counts, validate_manifest, Annotation, BBox, CategoryId, DatasetManifest, ImageEntry,
    Rule, Violation,
};
pub use rng::RngConfig;
pub use store::{DiskImages, ImageStore, InMemoryImages};

/// Category list of the three-class sea-farm profile.
pub const SEA_FARM_CATEGORIES: [&str; 3] = ["seacucumber", "seaurchin", "scallop"];

pub fn sea_farm_categories() -> Vec<String> {
    SEA_FARM_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

/// Smallest integer pixel rectangle covering `b`, clipped to the image.
pub fn rasterize_box(b: &BBox, width: usize, height: usize) -> Option<PixelRect> {
    let x0 = b.x.floor().max(0.0) as usize;
    let y0 = b.y.floor().max(0.0) as usize;
    let x1 = (b.right().ceil().max(0.0) as usize).min(width);
    let y1 = (b.bottom().ceil().max(0.0) as usize).min(height);
    (x1 > x0 && y1 > y0).then(|| PixelRect::new(x0, y0, x1 - x0, y1 - y0))
}
