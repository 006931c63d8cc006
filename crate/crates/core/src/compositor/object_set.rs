use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    png, rasterize_box, Annotation, BBox, CategoryId, DatasetManifest, ImageStore, ObjectCrop,
    RngConfig,
};

/// Stream domain of object-set sampling.
const SAMPLING_DOMAIN: u32 = 1;

/// Pool of object crops, one list per category.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSet {
    categories: Vec<String>,
    lists: Vec<Vec<ObjectCrop>>,
}

impl ObjectSet {
    pub fn new(categories: Vec<String>) -> Self {
        let lists = vec![Vec::new(); categories.len()];
        ObjectSet { categories, lists }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn push(&mut self, crop: ObjectCrop) -> Result<()> {
        let list = self
            .lists
            .get_mut(crop.category().0)
            .ok_or_else(|| Error::UnknownCategory(format!("index {}", crop.category().0)))?;
        list.push(crop);
        Ok(())
    }

    pub fn crops(&self, category: CategoryId) -> &[ObjectCrop] {
        self.lists.get(category.0).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Crop count per category name.
    pub fn sizes(&self) -> IndexMap<String, usize> {
        self.categories
            .iter()
            .cloned()
            .zip(self.lists.iter().map(Vec::len))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ObjectCrop> {
        self.lists.iter().flatten()
    }

    /// Re-indexes the crops against another category list, matching by name.
    /// Categories missing from `categories` are an error.
    pub fn aligned_to(&self, categories: &[String]) -> Result<ObjectSet> {
        if self.categories == categories {
            return Ok(self.clone());
        }
        let mut out = ObjectSet::new(categories.to_vec());
        for (name, list) in self.categories.iter().zip(&self.lists) {
            if list.is_empty() {
                continue;
            }
            let idx = categories
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::UnknownCategory(name.clone()))?;
            for crop in list {
                let mut b = crop.source_box();
                b.category = CategoryId(idx);
                out.lists[idx].push(ObjectCrop::new(
                    crop.patch().clone(),
                    crop.alpha().clone(),
                    CategoryId(idx),
                    crop.source_image(),
                    b,
                )?);
            }
        }
        Ok(out)
    }
}

/// Cuts the patch (and contour mask, if any) of one annotation.
pub fn crop_annotation(
    annotation: &Annotation,
    image: &crate::model::ImageBuffer,
    store: &dyn ImageStore,
) -> Result<ObjectCrop> {
    let b = annotation.bbox;
    let rect = rasterize_box(&b, image.width(), image.height()).ok_or_else(|| {
        Error::OutOfBounds(format!("box {:?} misses image {}", b, annotation.image_id))
    })?;
    let patch = image.crop(rect)?;
    match store.load_mask(annotation)? {
        None => ObjectCrop::rectangle(patch, b.category, annotation.image_id, b),
        Some(mask) => {
            let alpha = if mask.width() == image.width() && mask.height() == image.height() {
                mask.crop(rect)?
            } else if mask.width() == rect.w && mask.height() == rect.h {
                mask
            } else {
                return Err(Error::DimensionMismatch(format!(
                    "mask of {}x{} matches neither the image nor the {}x{} box",
                    mask.width(),
                    mask.height(),
                    rect.w,
                    rect.h
                )));
            };
            ObjectCrop::new(patch, alpha, b.category, annotation.image_id, b)
        }
    }
}

/// Samples `counts[name]` annotations of each category without replacement
/// and cuts their crops.
pub fn build_object_set(
    manifest: &DatasetManifest,
    store: &dyn ImageStore,
    counts: &IndexMap<String, usize>,
    rng: &RngConfig,
) -> Result<ObjectSet> {
    let mut chosen: Vec<&Annotation> = Vec::new();
    for (name, &requested) in counts {
        let cat = manifest.category_id(name)?;
        let pool: Vec<&Annotation> = manifest
            .annotations
            .iter()
            .filter(|a| a.bbox.category == cat && !a.bbox.is_degenerate())
            .collect();
        if requested > pool.len() {
            return Err(Error::InsufficientInstances {
                category: name.clone(),
                available: pool.len(),
                requested,
            });
        }
        let mut stream = rng.substream(SAMPLING_DOMAIN, cat.0 as u64);
        chosen.extend(
            index::sample(&mut stream, pool.len(), requested)
                .into_iter()
                .map(|i| pool[i]),
        );
    }

    let mut images = BTreeMap::new();
    let mut set = ObjectSet::new(manifest.categories.clone());
    for a in chosen {
        let image = match images.entry(a.image_id) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let entry = manifest
                    .image(a.image_id)
                    .ok_or(Error::UnknownImage(a.image_id))?;
                e.insert(store.load_image(entry)?)
            }
        };
        set.push(crop_annotation(a, image, store)?)?;
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropIndexEntry {
    pub file: PathBuf,
    pub category: String,
    pub source_image: u64,
    pub source_box: [f64; 4],
}

/// `index.json` of a crop directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropIndex {
    pub categories: Vec<String>,
    pub crops: Vec<CropIndexEntry>,
}

pub const CROP_INDEX_FILE: &str = "index.json";

/// Writes each crop as an RGBA PNG (alpha = mask) plus `index.json`.
pub fn save_object_set(set: &ObjectSet, dir: &Path) -> Result<CropIndex> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut crops = Vec::with_capacity(set.len());
    let mut per_cat = vec![0usize; set.categories.len()];
    for crop in set.iter() {
        let cat = crop.category().0;
        let name = &set.categories[cat];
        let file = PathBuf::from(format!("{name}_{:05}.png", per_cat[cat]));
        per_cat[cat] += 1;
        png::save(dir.join(&file), crop.patch(), Some(crop.alpha()))?;
        let b = crop.source_box();
        crops.push(CropIndexEntry {
            file,
            category: name.clone(),
            source_image: crop.source_image(),
            source_box: [b.x, b.y, b.w, b.h],
        });
    }
    let index = CropIndex {
        categories: set.categories.clone(),
        crops,
    };
    let path = dir.join(CROP_INDEX_FILE);
    fs::write(&path, serde_json::to_string_pretty(&index)?).map_err(|e| Error::io(&path, e))?;
    Ok(index)
}

/// Samples crops like [`build_object_set`] and writes them to `out_dir`.
pub fn extract_crops(
    manifest: &DatasetManifest,
    store: &dyn ImageStore,
    out_dir: &Path,
    counts: &IndexMap<String, usize>,
    rng: &RngConfig,
) -> Result<(ObjectSet, CropIndex)> {
    let set = build_object_set(manifest, store, counts, rng)?;
    let index = save_object_set(&set, out_dir)?;
    Ok((set, index))
}

/// Reads a directory written by [`save_object_set`].
pub fn load_object_set(dir: &Path) -> Result<ObjectSet> {
    let path = dir.join(CROP_INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: CropIndex = serde_json::from_str(&text)?;
    let mut set = ObjectSet::new(index.categories.clone());
    for entry in &index.crops {
        let cat = index
            .categories
            .iter()
            .position(|c| *c == entry.category)
            .ok_or_else(|| Error::UnknownCategory(entry.category.clone()))?;
        let (rgb, alpha) = png::load_rgba(dir.join(&entry.file))?;
        let alpha = alpha.unwrap_or_else(|| {
            crate::model::ImageBuffer::filled(rgb.height(), rgb.width(), 1, 1.0)
        });
        let [x, y, w, h] = entry.source_box;
        let b = BBox::new(x, y, w, h, CategoryId(cat));
        set.push(ObjectCrop::new(
            rgb,
            alpha,
            CategoryId(cat),
            entry.source_image,
            b,
        )?)?;
    }
    Ok(set)
}
