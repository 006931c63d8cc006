//! Baseline geometric pipeline and the comparison augmentations:
//! Cutout, random erasing, GridMask, Hide-and-Seek and mixup.
//!
//! Every information-dropping op returns the regions it declared, and never
//! writes outside them.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, ImageBuffer, PixelRect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    pub flip_prob: f64,
    pub scale_range: (f64, f64),
    /// `[width, height]` of the random crop. `None` crops to the size of the
    /// smallest possible rescale, so every draw is feasible.
    pub crop: Option<[usize; 2]>,
    /// Per-channel means subtracted last.
    pub mean: Vec<f64>,
    /// Boxes keeping less than this fraction of their area after cropping are dropped.
    pub min_visible: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            flip_prob: 0.5,
            scale_range: (0.6, 1.3),
            crop: None,
            mean: vec![0.408, 0.447, 0.470],
            min_visible: 0.25,
        }
    }
}

/// The random choices of one baseline pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineDraw {
    pub flip: bool,
    pub scale: f64,
    pub crop_origin: (usize, usize),
}

fn scaled_dims(image: &ImageBuffer, scale: f64) -> (usize, usize) {
    let w = ((image.width() as f64 * scale).round() as usize).max(1);
    let h = ((image.height() as f64 * scale).round() as usize).max(1);
    (w, h)
}

fn crop_dims(image: &ImageBuffer, params: &BaselineParams) -> (usize, usize) {
    match params.crop {
        Some([w, h]) => (w, h),
        None => scaled_dims(image, params.scale_range.0),
    }
}

fn validate_baseline(params: &BaselineParams) -> Result<()> {
    let (lo, hi) = params.scale_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale range ({lo}, {hi}) must satisfy 0 < lo <= hi"
        )));
    }
    if !(0.0..=1.0).contains(&params.flip_prob) {
        return Err(Error::InvalidArgument(
            "flip probability must lie in [0, 1]".into(),
        ));
    }
    Ok(())
}

pub fn draw_baseline(
    image: &ImageBuffer,
    params: &BaselineParams,
    rng: &mut impl Rng,
) -> Result<BaselineDraw> {
    validate_baseline(params)?;
    let flip = rng.random_bool(params.flip_prob);
    let (lo, hi) = params.scale_range;
    let scale = if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    };
    let (sw, sh) = scaled_dims(image, scale);
    let (cw, ch) = crop_dims(image, params);
    if cw > sw || ch > sh {
        return Err(Error::InvalidArgument(format!(
            "{cw}x{ch} crop is larger than the {sw}x{sh} rescaled image"
        )));
    }
    let ox = rng.random_range(0..=sw - cw);
    let oy = rng.random_range(0..=sh - ch);
    Ok(BaselineDraw {
        flip,
        scale,
        crop_origin: (ox, oy),
    })
}

/// Flip, rescale and crop (no normalization).
pub fn baseline_geometry(
    image: &ImageBuffer,
    boxes: &[BBox],
    draw: &BaselineDraw,
    params: &BaselineParams,
) -> Result<(ImageBuffer, Vec<BBox>)> {
    let width = image.width() as f64;
    let (mut img, mut out): (ImageBuffer, Vec<BBox>) = if draw.flip {
        let mirrored = boxes
            .iter()
            .map(|b| BBox {
                x: width - b.x - b.w,
                ..*b
            })
            .collect();
        (image.flip_horizontal(), mirrored)
    } else {
        (image.clone(), boxes.to_vec())
    };

    let (sw, sh) = scaled_dims(image, draw.scale);
    let (fx, fy) = (
        sw as f64 / image.width() as f64,
        sh as f64 / image.height() as f64,
    );
    img = img.resize_bilinear(sh, sw);
    for b in &mut out {
        *b = BBox::new(b.x * fx, b.y * fy, b.w * fx, b.h * fy, b.category);
    }

    let (cw, ch) = crop_dims(image, params);
    let (ox, oy) = draw.crop_origin;
    if ox + cw > sw || oy + ch > sh {
        return Err(Error::InvalidArgument(format!(
            "{cw}x{ch} crop at ({ox}, {oy}) is larger than the {sw}x{sh} rescaled image"
        )));
    }
    let img = img.crop(PixelRect::new(ox, oy, cw, ch))?;
    let kept = out
        .into_iter()
        .filter_map(|b| {
            let x0 = (b.x - ox as f64).clamp(0.0, cw as f64);
            let y0 = (b.y - oy as f64).clamp(0.0, ch as f64);
            let x1 = (b.right() - ox as f64).clamp(0.0, cw as f64);
            let y1 = (b.bottom() - oy as f64).clamp(0.0, ch as f64);
            let clipped = BBox::new(x0, y0, x1 - x0, y1 - y0, b.category);
            (clipped.w > 0.0 && clipped.h > 0.0 && clipped.area() >= params.min_visible * b.area())
                .then_some(clipped)
        })
        .collect();
    Ok((img, kept))
}

/// Subtracts `mean[c]` from channel `c`.
pub fn zero_mean(image: &ImageBuffer, mean: &[f64]) -> Result<ImageBuffer> {
    if mean.len() != image.channels() {
        return Err(Error::DimensionMismatch(format!(
            "{} means for a {}-channel image",
            mean.len(),
            image.channels()
        )));
    }
    let channels = image.channels();
    let data = image
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v - mean[i % channels])
        .collect();
    ImageBuffer::from_vec(image.height(), image.width(), channels, data)
}

pub fn baseline_apply(
    image: &ImageBuffer,
    boxes: &[BBox],
    draw: &BaselineDraw,
    params: &BaselineParams,
) -> Result<(ImageBuffer, Vec<BBox>)> {
    let (img, boxes) = baseline_geometry(image, boxes, draw, params)?;
    Ok((zero_mean(&img, &params.mean)?, boxes))
}

/// Random flip (p = 0.5), scale in [0.6, 1.3], crop, then zero-mean normalization.
pub fn baseline_augment(
    image: &ImageBuffer,
    boxes: &[BBox],
    params: &BaselineParams,
    rng: &mut impl Rng,
) -> Result<(ImageBuffer, Vec<BBox>)> {
    let draw = draw_baseline(image, params, rng)?;
    baseline_apply(image, boxes, &draw, params)
}

/// Output of an information-dropping op: the image and every region it touched.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    pub image: ImageBuffer,
    pub regions: Vec<PixelRect>,
}

fn zero_rects(image: &ImageBuffer, regions: Vec<PixelRect>) -> Dropped {
    let mut out = image.clone();
    for r in &regions {
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                for c in 0..out.channels() {
                    out.set(y, x, c, 0.0);
                }
            }
        }
    }
    Dropped {
        image: out,
        regions,
    }
}

/// Square with top-left `(x0, y0)` (may be negative) clipped to the image.
fn clipped_square(
    x0: isize,
    y0: isize,
    w: usize,
    h: usize,
    width: usize,
    height: usize,
) -> Option<PixelRect> {
    let xa = x0.max(0) as usize;
    let ya = y0.max(0) as usize;
    let xb = (x0 + w as isize).clamp(0, width as isize) as usize;
    let yb = (y0 + h as isize).clamp(0, height as isize) as usize;
    (xb > xa && yb > ya).then(|| PixelRect::new(xa, ya, xb - xa, yb - ya))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CutoutParams {
    /// Square side; `None` uses a quarter of the shorter image side.
    pub side: Option<usize>,
}

/// Zeroes one square centered at a uniformly drawn pixel, clipped at the borders.
pub fn cutout(image: &ImageBuffer, params: &CutoutParams, rng: &mut impl Rng) -> Dropped {
    let (w, h) = (image.width(), image.height());
    if w == 0 || h == 0 {
        return Dropped {
            image: image.clone(),
            regions: vec![],
        };
    }
    let side = params.side.unwrap_or((w.min(h) / 4).max(1));
    let cx = rng.random_range(0..w) as isize;
    let cy = rng.random_range(0..h) as isize;
    let half = (side / 2) as isize;
    let regions = clipped_square(cx - half, cy - half, side, side, w, h)
        .into_iter()
        .collect();
    zero_rects(image, regions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErasingParams {
    pub area_range: (f64, f64),
    pub aspect_range: (f64, f64),
    pub attempts: usize,
}

impl Default for ErasingParams {
    fn default() -> Self {
        ErasingParams {
            area_range: (0.02, 0.4),
            aspect_range: (0.3, 1.0 / 0.3),
            attempts: 100,
        }
    }
}

/// Fills one rectangle of random area and aspect with uniform noise. Leaves
/// the image unchanged if no drawn rectangle fits within `attempts`.
pub fn random_erase(image: &ImageBuffer, params: &ErasingParams, rng: &mut impl Rng) -> Dropped {
    let (w, h) = (image.width(), image.height());
    let total = (w * h) as f64;
    for _ in 0..params.attempts {
        let area = rng.random_range(params.area_range.0..=params.area_range.1) * total;
        let aspect = rng.random_range(params.aspect_range.0..=params.aspect_range.1);
        let rh = (area * aspect).sqrt().round() as usize;
        let rw = (area / aspect).sqrt().round() as usize;
        if rh == 0 || rw == 0 || rh > h || rw > w {
            continue;
        }
        let x = rng.random_range(0..=w - rw);
        let y = rng.random_range(0..=h - rh);
        let rect = PixelRect::new(x, y, rw, rh);
        let mut out = image.clone();
        for yy in y..y + rh {
            for xx in x..x + rw {
                for c in 0..out.channels() {
                    out.set(yy, xx, c, rng.random::<f64>());
                }
            }
        }
        return Dropped {
            image: out,
            regions: vec![rect],
        };
    }
    Dropped {
        image: image.clone(),
        regions: vec![],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridMaskParams {
    /// Range of the grid period `d`; `None` uses `[min_side/7, min_side/3]`.
    pub unit_range: Option<(usize, usize)>,
    /// Side of each zeroed square as a fraction of `d`.
    pub ratio: f64,
}

impl Default for GridMaskParams {
    fn default() -> Self {
        GridMaskParams {
            unit_range: None,
            ratio: 0.4,
        }
    }
}

/// Geometry of one grid: period, zeroed side, offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub unit: usize,
    pub side: usize,
    pub offset: (usize, usize),
}

impl Grid {
    /// Whether pixel `(x, y)` falls in a zeroed square.
    pub fn covers(&self, x: usize, y: usize) -> bool {
        let d = self.unit as isize;
        let inside =
            |v: usize, off: usize| (v as isize - off as isize).rem_euclid(d) < self.side as isize;
        inside(x, self.offset.0) && inside(y, self.offset.1)
    }
}

pub fn draw_grid(image: &ImageBuffer, params: &GridMaskParams, rng: &mut impl Rng) -> Grid {
    let min_side = image.width().min(image.height());
    let (lo, hi) = params
        .unit_range
        .unwrap_or(((min_side / 7).max(2), (min_side / 3).max(2)));
    let unit = rng.random_range(lo.max(1)..=hi.max(lo).max(1));
    let side = ((params.ratio * unit as f64).round() as usize).min(unit);
    let offset = (rng.random_range(0..unit), rng.random_range(0..unit));
    Grid { unit, side, offset }
}

pub fn gridmask_with(image: &ImageBuffer, grid: &Grid) -> Dropped {
    let (w, h) = (image.width(), image.height());
    let mut regions = Vec::new();
    if grid.side > 0 {
        let d = grid.unit as isize;
        let starts = |off: usize, len: usize| {
            let mut s = off as isize - d;
            let mut v = Vec::new();
            while s < len as isize {
                v.push(s);
                s += d;
            }
            v
        };
        for y0 in starts(grid.offset.1, h) {
            for x0 in starts(grid.offset.0, w) {
                regions.extend(clipped_square(x0, y0, grid.side, grid.side, w, h));
            }
        }
    }
    zero_rects(image, regions)
}

/// Zeroes a periodic lattice of squares.
pub fn gridmask(image: &ImageBuffer, params: &GridMaskParams, rng: &mut impl Rng) -> Dropped {
    let grid = draw_grid(image, params, rng);
    gridmask_with(image, &grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HideSeekParams {
    pub grid: usize,
    pub prob: f64,
}

impl Default for HideSeekParams {
    fn default() -> Self {
        HideSeekParams { grid: 4, prob: 0.5 }
    }
}

/// Splits the image into `grid × grid` patches and zeroes each with probability `prob`.
pub fn hide_and_seek(image: &ImageBuffer, params: &HideSeekParams, rng: &mut impl Rng) -> Dropped {
    let (w, h) = (image.width(), image.height());
    let s = params.grid.max(1);
    let (pw, ph) = (w.div_ceil(s), h.div_ceil(s));
    let mut regions = Vec::new();
    for i in 0..s {
        for j in 0..s {
            let hide = rng.random_bool(params.prob.clamp(0.0, 1.0));
            if hide {
                regions.extend(PixelRect::new(j * pw, i * ph, pw, ph).clip(w, h));
            }
        }
    }
    zero_rects(image, regions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedBox {
    pub bbox: BBox,
    pub weight: f64,
}

/// `λ·a + (1 − λ)·b`; annotations from both images, weighted λ and 1 − λ.
pub fn mixup(
    image_a: &ImageBuffer,
    boxes_a: &[BBox],
    image_b: &ImageBuffer,
    boxes_b: &[BBox],
    lambda: f64,
) -> Result<(ImageBuffer, Vec<WeightedBox>)> {
    if !image_a.same_shape(image_b) {
        return Err(Error::DimensionMismatch(format!(
            "mixup needs equal shapes, got {}x{}x{} and {}x{}x{}",
            image_a.height(),
            image_a.width(),
            image_a.channels(),
            image_b.height(),
            image_b.width(),
            image_b.channels()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "mix coefficient {lambda} outside [0, 1]"
        )));
    }
    let data = image_a
        .data()
        .iter()
        .zip(image_b.data())
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect();
    let image = ImageBuffer::from_vec(image_a.height(), image_a.width(), image_a.channels(), data)?;
    let boxes = boxes_a
        .iter()
        .map(|b| WeightedBox {
            bbox: *b,
            weight: lambda,
        })
        .chain(boxes_b.iter().map(|b| WeightedBox {
            bbox: *b,
            weight: 1.0 - lambda,
        }))
        .collect();
    Ok((image, boxes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixupParams {
    /// λ ~ Beta(alpha, alpha); ignored when `lambda` is set.
    pub alpha: f64,
    pub lambda: Option<f64>,
}

impl Default for MixupParams {
    fn default() -> Self {
        MixupParams {
            alpha: 1.5,
            lambda: None,
        }
    }
}

impl MixupParams {
    pub fn draw_lambda(&self, rng: &mut impl Rng) -> Result<f64> {
        if let Some(l) = self.lambda {
            return Ok(l);
        }
        let beta = Beta::new(self.alpha, self.alpha)
            .map_err(|e| Error::InvalidArgument(format!("mixup alpha {}: {e}", self.alpha)))?;
        Ok(beta.sample(rng))
    }
}

/// Method plus parameters, as read from an augmentation config file:
/// `{"method": "gridmask", "params": {"ratio": 0.5}, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "params", rename_all = "lowercase")]
pub enum AugmentMethod {
    Baseline(#[serde(default)] BaselineParams),
    Cutout(#[serde(default)] CutoutParams),
    Rerase(#[serde(default)] ErasingParams),
    Gridmask(#[serde(default)] GridMaskParams),
    Has(#[serde(default)] HideSeekParams),
    Mixup(#[serde(default)] MixupParams),
}

impl AugmentMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentMethod::Baseline(_) => "baseline",
            AugmentMethod::Cutout(_) => "cutout",
            AugmentMethod::Rerase(_) => "rerase",
            AugmentMethod::Gridmask(_) => "gridmask",
            AugmentMethod::Has(_) => "has",
            AugmentMethod::Mixup(_) => "mixup",
        }
    }

    /// Default parameters for a method name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "baseline" => AugmentMethod::Baseline(Default::default()),
            "cutout" => AugmentMethod::Cutout(Default::default()),
            "rerase" | "random-erase" => AugmentMethod::Rerase(Default::default()),
            "gridmask" => AugmentMethod::Gridmask(Default::default()),
            "has" | "hide-and-seek" => AugmentMethod::Has(Default::default()),
            "mixup" => AugmentMethod::Mixup(Default::default()),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown augmentation method '{other}'"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    #[serde(flatten)]
    pub method: AugmentMethod,
    #[serde(default)]
    pub seed: u64,
}
