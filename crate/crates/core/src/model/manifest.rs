use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a manifest's ordered category list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryId(pub usize);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Axis-aligned box in continuous pixel coordinates (top-left origin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub category: CategoryId,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, category: CategoryId) -> Self {
        BBox {
            x,
            y,
            w,
            h,
            category,
        }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
            || ![self.x, self.y, self.w, self.h]
                .iter()
                .all(|v| v.is_finite())
    }

    pub fn fits_within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.right() <= width && self.bottom() <= height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: u64,
    pub file: PathBuf,
    pub width: usize,
    pub height: usize,
}

/// A box bound to an image. `score` marks a detection, `weight` a mixup
/// annotation, `mask` an optional contour mask (grayscale PNG relative to the
/// manifest, sized either like the image or like the rasterized box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawAnnotation", into = "RawAnnotation")]
pub struct Annotation {
    pub image_id: u64,
    pub bbox: BBox,
    pub score: Option<f64>,
    pub weight: Option<f64>,
    pub mask: Option<PathBuf>,
}

impl Annotation {
    pub fn new(image_id: u64, bbox: BBox) -> Self {
        Annotation {
            image_id,
            bbox,
            score: None,
            weight: None,
            mask: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotation {
    image_id: u64,
    category_id: usize,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<PathBuf>,
}

impl From<RawAnnotation> for Annotation {
    fn from(raw: RawAnnotation) -> Self {
        let [x, y, w, h] = raw.bbox;
        Annotation {
            image_id: raw.image_id,
            bbox: BBox::new(x, y, w, h, CategoryId(raw.category_id)),
            score: raw.score,
            weight: raw.weight,
            mask: raw.mask,
        }
    }
}

impl From<Annotation> for RawAnnotation {
    fn from(a: Annotation) -> Self {
        RawAnnotation {
            image_id: a.image_id,
            category_id: a.bbox.category.0,
            bbox: [a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h],
            score: a.score,
            weight: a.weight,
            mask: a.mask,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub categories: Vec<String>,
    pub images: Vec<ImageEntry>,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateImageId,
    UnknownImageId,
    UnknownCategory,
    DegenerateBox,
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub image_id: u64,
    /// Position in `annotations`, absent for image-level rules.
    pub annotation: Option<usize>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.annotation {
            Some(i) => write!(
                f,
                "image {} annotation {}: {}",
                self.image_id, i, self.message
            ),
            None => write!(f, "image {}: {}", self.image_id, self.message),
        }
    }
}

impl DatasetManifest {
    pub fn new(categories: Vec<String>) -> Self {
        DatasetManifest {
            categories,
            ..Default::default()
        }
    }

    pub fn category_id(&self, name: &str) -> Result<CategoryId> {
        self.categories
            .iter()
            .position(|c| c == name)
            .map(CategoryId)
            .ok_or_else(|| Error::UnknownCategory(name.to_string()))
    }

    pub fn category_name(&self, id: CategoryId) -> &str {
        self.categories.get(id.0).map(String::as_str).unwrap_or("?")
    }

    pub fn image(&self, id: u64) -> Option<&ImageEntry> {
        self.images.iter().find(|i| i.id == id)
    }

    /// Annotations grouped by image id, in manifest order within each image.
    pub fn annotations_by_image(&self) -> HashMap<u64, Vec<&Annotation>> {
        let mut map: HashMap<u64, Vec<&Annotation>> = HashMap::new();
        for a in &self.annotations {
            map.entry(a.image_id).or_default().push(a);
        }
        map
    }

    pub fn boxes_for(&self, image_id: u64) -> Vec<BBox> {
        self.annotations
            .iter()
            .filter(|a| a.image_id == image_id)
            .map(|a| a.bbox)
            .collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json_string()?;
        text.push('\n');
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Checks every manifest invariant and returns one violation per breach.
pub fn validate_manifest(manifest: &DatasetManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for img in &manifest.images {
        if !seen.insert(img.id) {
            out.push(Violation {
                image_id: img.id,
                annotation: None,
                rule: Rule::DuplicateImageId,
                message: format!("image id {} appears more than once", img.id),
            });
        }
    }
    let dims: HashMap<u64, (usize, usize)> = manifest
        .images
        .iter()
        .map(|i| (i.id, (i.width, i.height)))
        .collect();

    for (idx, ann) in manifest.annotations.iter().enumerate() {
        let b = &ann.bbox;
        let mut push = |rule, message: String| {
            out.push(Violation {
                image_id: ann.image_id,
                annotation: Some(idx),
                rule,
                message,
            })
        };
        if b.category.0 >= manifest.categories.len() {
            push(
                Rule::UnknownCategory,
                format!(
                    "category index {} is not in the {}-entry category list",
                    b.category.0,
                    manifest.categories.len()
                ),
            );
        }
        if b.is_degenerate() {
            push(
                Rule::DegenerateBox,
                format!(
                    "box [{}, {}, {}, {}] has non-positive or non-finite extent",
                    b.x, b.y, b.w, b.h
                ),
            );
            continue;
        }
        match dims.get(&ann.image_id) {
            None => push(
                Rule::UnknownImageId,
                format!("image id {} does not resolve", ann.image_id),
            ),
            Some(&(w, h)) => {
                if !b.fits_within(w as f64, h as f64) {
                    push(
                        Rule::OutOfBounds,
                        format!(
                            "box [{}, {}, {}, {}] exceeds {}x{} image",
                            b.x, b.y, b.w, b.h, w, h
                        ),
                    );
                }
            }
        }
    }
    out
}

/// Per-category annotation tally in category-list order; absent categories count zero.
pub fn category_counts(manifest: &DatasetManifest) -> IndexMap<String, usize> {
    let mut counts: IndexMap<String, usize> =
        manifest.categories.iter().map(|c| (c.clone(), 0)).collect();
    for a in &manifest.annotations {
        if let Some(name) = manifest.categories.get(a.bbox.category.0) {
            counts[name.as_str()] += 1;
        }
    }
    counts
}
