//! Heat-map decoding and detection scoring (per-category AP, mAP@0.5).

mod ap;
mod decode;

use std::collections::BTreeMap;

pub use ap::{
    average_precision, average_precision_grouped, iou, map50, mean_average_precision, CategoryEval,
    ImageGroup, Interpolation, MapReport,
};
pub use decode::{decode, DecodeParams, Detection, HeadMaps};

use crate::error::{Error, Result};
use crate::model::DatasetManifest;

/// Scores a detection manifest (annotations carrying `score`) against a
/// ground-truth manifest. Categories are aligned by name and images by id;
/// detections without a score count as score 1.
pub fn evaluate_manifests(
    ground_truth: &DatasetManifest,
    detections: &DatasetManifest,
    iou_thresh: f64,
    interp: Interpolation,
) -> Result<MapReport> {
    let remap: Vec<usize> = detections
        .categories
        .iter()
        .map(|name| ground_truth.category_id(name).map(|id| id.0))
        .collect::<Result<_>>()?;

    let mut per_cat: Vec<BTreeMap<u64, ImageGroup>> =
        vec![BTreeMap::new(); ground_truth.categories.len()];
    for a in &ground_truth.annotations {
        let slot = per_cat.get_mut(a.bbox.category.0).ok_or_else(|| {
            Error::InvalidManifest(format!(
                "ground-truth category index {} out of range",
                a.bbox.category.0
            ))
        })?;
        slot.entry(a.image_id)
            .or_default()
            .ground_truth
            .push(a.bbox);
    }
    for a in &detections.annotations {
        let cat = *remap.get(a.bbox.category.0).ok_or_else(|| {
            Error::InvalidManifest(format!(
                "detection category index {} out of range",
                a.bbox.category.0
            ))
        })?;
        let mut bbox = a.bbox;
        bbox.category.0 = cat;
        per_cat[cat]
            .entry(a.image_id)
            .or_default()
            .detections
            .push(Detection {
                bbox,
                score: a.score.unwrap_or(1.0),
            });
    }
    let categories: Vec<CategoryEval> = ground_truth
        .categories
        .iter()
        .zip(per_cat)
        .map(|(name, groups)| CategoryEval {
            name: name.clone(),
            images: groups.into_values().collect(),
        })
        .collect();
    Ok(mean_average_precision(&categories, iou_thresh, interp))
}
