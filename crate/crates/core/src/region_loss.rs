//! Box-weighted region loss and the generator loss aggregate.
//!
//! The mask weights pixels covered by embedded-object boxes at 100 and every
//! other pixel at 0.1; the loss is the mask-weighted absolute difference
//! averaged over `c·h·w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, ImageBuffer};

pub const INSIDE_WEIGHT: f64 = 100.0;
pub const OUTSIDE_WEIGHT: f64 = 0.1;
/// Weight of the adversarial term in the generator loss.
pub const DEFAULT_ADVERSARIAL_WEIGHT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    height: usize,
    width: usize,
    weights: Vec<f64>,
}

impl RegionMask {
    /// Mask from raw weights; each must be one of the two mask levels.
    pub fn from_weights(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} mask needs {} weights, got {}",
                height,
                width,
                height * width,
                weights.len()
            )));
        }
        if let Some(bad) = weights
            .iter()
            .find(|&&v| v != INSIDE_WEIGHT && v != OUTSIDE_WEIGHT)
        {
            return Err(Error::InvalidArgument(format!(
                "mask weight {bad} is neither {INSIDE_WEIGHT} nor {OUTSIDE_WEIGHT}"
            )));
        }
        Ok(RegionMask {
            height,
            width,
            weights,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn inside_count(&self) -> usize {
        self.weights.iter().filter(|&&v| v == INSIDE_WEIGHT).count()
    }
}

/// Pixel `(row, col)` is inside a box when its center `(col + ½, row + ½)`
/// satisfies `x ≤ cx < x + w` and `y ≤ cy < y + h`.
pub fn build_region_mask(boxes: &[BBox], height: usize, width: usize) -> RegionMask {
    let mut weights = vec![OUTSIDE_WEIGHT; height * width];
    for b in boxes {
        for (y, row) in weights.chunks_mut(width.max(1)).enumerate().take(height) {
            let cy = y as f64 + 0.5;
            if cy < b.y || cy >= b.bottom() {
                continue;
            }
            for (x, v) in row.iter_mut().enumerate() {
                let cx = x as f64 + 0.5;
                if cx >= b.x && cx < b.right() {
                    *v = INSIDE_WEIGHT;
                }
            }
        }
    }
    RegionMask {
        height,
        width,
        weights,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Sum of absolute weighted differences.
    #[default]
    L1,
    /// Sum of squared weighted differences.
    L2,
}

pub fn region_loss(pred: &ImageBuffer, target: &ImageBuffer, mask: &RegionMask) -> Result<f64> {
    region_loss_with(pred, target, mask, Norm::L1)
}

pub fn region_loss_with(
    pred: &ImageBuffer,
    target: &ImageBuffer,
    mask: &RegionMask,
    norm: Norm,
) -> Result<f64> {
    if !pred.same_shape(target) {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}x{}, target is {}x{}x{}",
            pred.height(),
            pred.width(),
            pred.channels(),
            target.height(),
            target.width(),
            target.channels()
        )));
    }
    if mask.height != pred.height() || mask.width != pred.width() {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{}, images are {}x{}",
            mask.height,
            mask.width,
            pred.height(),
            pred.width()
        )));
    }
    let channels = pred.channels();
    let mut sum = 0.0;
    for (i, (p, t)) in pred.data().iter().zip(target.data()).enumerate() {
        let weighted = (p - t).abs() * mask.weights[i / channels];
        sum += match norm {
            Norm::L1 => weighted,
            Norm::L2 => weighted * weighted,
        };
    }
    let n = (channels * pred.height() * pred.width()) as f64;
    Ok(if n == 0.0 { 0.0 } else { sum / n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub region: f64,
    pub content: f64,
    pub adversarial: f64,
    pub lambda_adv: f64,
    pub total: f64,
}

/// `total = content + λ·adversarial + region`.
pub fn dr_total(
    content: f64,
    adversarial: f64,
    region: f64,
    lambda_adv: f64,
) -> Result<LossBreakdown> {
    for (name, v) in [
        ("content term", content),
        ("adversarial term", adversarial),
        ("region term", region),
        ("adversarial weight", lambda_adv),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    Ok(LossBreakdown {
        region,
        content,
        adversarial,
        lambda_adv,
        total: content + lambda_adv * adversarial + region,
    })
}
