use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::iou;
use crate::model::{BBox, CategoryId};

/// Smallest side a placed crop may have; the clone mask needs an interior.
pub const MIN_PLACED_SIDE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementPolicy {
    /// Vicinity radius as a multiple of the anchor box diagonal.
    pub vicinity_factor: f64,
    /// Largest IoU a placed box may have with any existing box.
    pub max_iou: f64,
    pub scale_jitter: (f64, f64),
    pub max_attempts: usize,
}

impl Default for PlacementPolicy {
    fn default() -> Self {
        PlacementPolicy {
            vicinity_factor: 1.5,
            max_iou: 0.3,
            scale_jitter: (0.8, 1.25),
            max_attempts: 50,
        }
    }
}

impl PlacementPolicy {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_jitter;
        if !(self.vicinity_factor > 0.0 && self.vicinity_factor.is_finite()) {
            return Err(Error::InvalidArgument(
                "vicinity factor must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.max_iou) {
            return Err(Error::InvalidArgument(format!(
                "IoU threshold {} outside [0, 1)",
                self.max_iou
            )));
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale jitter ({lo}, {hi}) must satisfy 0 < lo <= hi"
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidArgument(
                "max attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Vicinity radius around `anchor`.
    pub fn radius(&self, anchor: &BBox) -> f64 {
        self.vicinity_factor * anchor.diagonal()
    }

    /// Whether `placed` sits in the vicinity of some box of its category in `existing`.
    pub fn within_vicinity(&self, placed: &BBox, existing: &[BBox]) -> bool {
        let (cx, cy) = placed.center();
        existing
            .iter()
            .filter(|a| a.category == placed.category)
            .any(|a| {
                let (ax, ay) = a.center();
                (cx - ax).hypot(cy - ay) <= self.radius(a)
            })
    }
}

/// Integer top-left position and size of a placed crop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub scale: f64,
    /// Whether a same-category anchor guided the position.
    pub anchored: bool,
}

impl Placement {
    pub fn bbox(&self, category: CategoryId) -> BBox {
        BBox::new(
            self.x as f64,
            self.y as f64,
            self.w as f64,
            self.h as f64,
            category,
        )
    }
}

fn scaled_side(side: usize, scale: f64) -> usize {
    ((side as f64 * scale).round() as usize).max(MIN_PLACED_SIDE)
}

/// Proposes a position and scale for a `crop_w`×`crop_h` crop of `category`.
///
/// With same-category boxes in `existing`, each attempt picks one of them
/// uniformly and draws a center uniformly from its vicinity disk; otherwise
/// the top-left corner is uniform over the valid range. The placed box keeps
/// a 1 px margin and its IoU with every existing box stays within the policy.
pub fn propose_placement(
    existing: &[BBox],
    category: CategoryId,
    crop_size: (usize, usize),
    image_size: (usize, usize),
    policy: &PlacementPolicy,
    rng: &mut impl Rng,
) -> Result<Placement> {
    policy.validate()?;
    let (cw, ch) = crop_size;
    let (iw, ih) = image_size;
    let (lo, hi) = policy.scale_jitter;
    if scaled_side(cw, hi) + 2 > iw || scaled_side(ch, hi) + 2 > ih {
        return Err(Error::CropTooLarge {
            crop_w: cw,
            crop_h: ch,
            max_scale: hi,
            image_w: iw,
            image_h: ih,
        });
    }
    let anchors: Vec<&BBox> = existing.iter().filter(|b| b.category == category).collect();

    for _ in 0..policy.max_attempts {
        let scale = if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        };
        let (w, h) = (scaled_side(cw, scale), scaled_side(ch, scale));
        let (max_x, max_y) = (iw - 1 - w, ih - 1 - h);
        let (x, y) = if anchors.is_empty() {
            (rng.random_range(1..=max_x), rng.random_range(1..=max_y))
        } else {
            let anchor = anchors[rng.random_range(0..anchors.len())];
            let r = policy.radius(anchor) * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let (ax, ay) = anchor.center();
            let fx = (ax + r * theta.cos() - w as f64 / 2.0).round();
            let fy = (ay + r * theta.sin() - h as f64 / 2.0).round();
            if fx < 1.0 || fy < 1.0 || fx > max_x as f64 || fy > max_y as f64 {
                continue;
            }
            (fx as usize, fy as usize)
        };
        let placement = Placement {
            x,
            y,
            w,
            h,
            scale,
            anchored: !anchors.is_empty(),
        };
        let b = placement.bbox(category);
        // Rounding can push the center slightly past the disk; re-check.
        if !anchors.is_empty() && !policy.within_vicinity(&b, existing) {
            continue;
        }
        if existing.iter().all(|e| iou(&b, e) <= policy.max_iou) {
            return Ok(placement);
        }
    }
    Err(Error::PlacementFailed {
        attempts: policy.max_attempts,
    })
}
