use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::eval::Detection;
use crate::model::BBox;

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Area under the monotone precision envelope.
    #[default]
    AllPoint,
    /// Mean envelope precision at recall 0, 0.1, …, 1.
    ElevenPoint,
}

/// Detections and ground truth of one category in one image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageGroup {
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<BBox>,
}

/// Single-image AP with all-point interpolation.
pub fn average_precision(dets: &[Detection], gts: &[BBox], iou_thresh: f64) -> f64 {
    let group = ImageGroup {
        detections: dets.to_vec(),
        ground_truth: gts.to_vec(),
    };
    average_precision_grouped(
        std::slice::from_ref(&group),
        iou_thresh,
        Interpolation::AllPoint,
    )
}

/// AP over several images of one category. Detections are ranked globally
/// by descending score (ties keep insertion order, image by image); each is
/// greedily matched to the unmatched ground-truth box of its own image with
/// the highest IoU, if that IoU reaches the threshold.
pub fn average_precision_grouped(
    groups: &[ImageGroup],
    iou_thresh: f64,
    interp: Interpolation,
) -> f64 {
    let total_gt: usize = groups.iter().map(|g| g.ground_truth.len()).sum();
    let ranked = {
        let mut all: Vec<(usize, &Detection)> = groups
            .iter()
            .enumerate()
            .flat_map(|(gi, g)| g.detections.iter().map(move |d| (gi, d)))
            .collect();
        all.sort_by(|a, b| b.1.score.total_cmp(&a.1.score));
        all
    };
    if total_gt == 0 {
        return if ranked.is_empty() { 1.0 } else { 0.0 };
    }

    let mut matched: Vec<Vec<bool>> = groups
        .iter()
        .map(|g| vec![false; g.ground_truth.len()])
        .collect();
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(ranked.len());
    let mut recall = Vec::with_capacity(ranked.len());
    for (rank, (gi, det)) in ranked.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (k, gt) in groups[*gi].ground_truth.iter().enumerate() {
            if matched[*gi][k] {
                continue;
            }
            let o = iou(&det.bbox, gt);
            if o >= iou_thresh && best.is_none_or(|(_, b)| o > b) {
                best = Some((k, o));
            }
        }
        if let Some((k, _)) = best {
            matched[*gi][k] = true;
            tp += 1;
        }
        precision.push(tp as f64 / (rank + 1) as f64);
        recall.push(tp as f64 / total_gt as f64);
    }

    // Precision envelope: running max from the right.
    let mut envelope = precision.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }

    match interp {
        Interpolation::AllPoint => {
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (r, p) in recall.iter().zip(&envelope) {
                ap += (r - prev_recall) * p;
                prev_recall = *r;
            }
            ap
        }
        Interpolation::ElevenPoint => {
            let mut ap = 0.0;
            for step in 0..=10 {
                let t = step as f64 / 10.0;
                let p = recall
                    .iter()
                    .position(|&r| r >= t - 1e-12)
                    .map(|i| envelope[i])
                    .unwrap_or(0.0);
                ap += p / 11.0;
            }
            ap
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryEval {
    pub name: String,
    pub images: Vec<ImageGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub iou_threshold: f64,
    pub interpolation: Interpolation,
    /// AP for every category with ground truth, in input order.
    pub per_category: IndexMap<String, f64>,
    /// Categories without ground truth (excluded from the mean).
    pub skipped: Vec<String>,
    #[serde(rename = "mAP50")]
    pub mean: f64,
}

pub fn map50(categories: &[CategoryEval]) -> MapReport {
    mean_average_precision(categories, 0.5, Interpolation::AllPoint)
}

/// Unweighted mean of per-category AP over categories present in ground truth.
pub fn mean_average_precision(
    categories: &[CategoryEval],
    iou_thresh: f64,
    interp: Interpolation,
) -> MapReport {
    let mut per_category = IndexMap::new();
    let mut skipped = Vec::new();
    for cat in categories {
        if cat.images.iter().all(|g| g.ground_truth.is_empty()) {
            skipped.push(cat.name.clone());
            continue;
        }
        per_category.insert(
            cat.name.clone(),
            average_precision_grouped(&cat.images, iou_thresh, interp),
        );
    }
    let mean = if per_category.is_empty() {
        0.0
    } else {
        per_category.values().sum::<f64>() / per_category.len() as f64
    };
    MapReport {
        iou_threshold: iou_thresh,
        interpolation: interp,
        per_category,
        skipped,
        mean,
    }
}
