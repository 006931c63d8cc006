use rand::Rng;

use crate::compositor::ObjectSet;
use crate::error::{Error, Result};
use crate::model::{rasterize_box, BBox, ImageBuffer, ObjectCrop};

/// Largest ratio between crop and box aspect ratios for a crop to cover a box.
pub const MAX_ASPECT_RATIO_GAP: f64 = 2.0;

/// Real/fake training pair; they differ only inside `covered`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub real: ImageBuffer,
    pub fake: ImageBuffer,
    pub covered: Vec<BBox>,
}

fn aspect_compatible(crop: &ObjectCrop, w: f64, h: f64) -> bool {
    let a = crop.width() as f64 / crop.height() as f64;
    let b = w / h;
    let gap = if a > b { a / b } else { b / a };
    gap <= MAX_ASPECT_RATIO_GAP
}

/// Picks each index in `0..n` independently with probability `prob`.
pub fn choose_cover(n: usize, prob: f64, rng: &mut impl Rng) -> Vec<usize> {
    (0..n)
        .filter(|_| rng.random_bool(prob.clamp(0.0, 1.0)))
        .collect()
}

/// Covers `boxes[i]` for every `i` in `cover` with a same-category crop from
/// `set`, rescaled to the rasterized box and alpha-composited without any
/// blending solve. `real` is the untouched input.
pub fn build_training_pair(
    image: &ImageBuffer,
    boxes: &[BBox],
    cover: &[usize],
    set: &ObjectSet,
    rng: &mut impl Rng,
) -> Result<TrainingPair> {
    let mut fake = image.clone();
    let mut covered = Vec::with_capacity(cover.len());
    for &i in cover {
        let b = *boxes.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!("cover index {i} out of {} boxes", boxes.len()))
        })?;
        let rect = rasterize_box(&b, image.width(), image.height())
            .ok_or_else(|| Error::OutOfBounds(format!("box {b:?} misses the image")))?;
        let candidates: Vec<&ObjectCrop> = set
            .crops(b.category)
            .iter()
            .filter(|c| aspect_compatible(c, rect.w as f64, rect.h as f64))
            .collect();
        if candidates.is_empty() {
            return Err(Error::NoCompatibleCrop {
                category: set
                    .categories()
                    .get(b.category.0)
                    .cloned()
                    .unwrap_or_default(),
                w: b.w,
                h: b.h,
            });
        }
        let crop = candidates[rng.random_range(0..candidates.len())];
        if crop.patch().channels() != image.channels() {
            return Err(Error::DimensionMismatch(format!(
                "crop has {} channels, image has {}",
                crop.patch().channels(),
                image.channels()
            )));
        }
        let scaled = crop.resized(rect.w, rect.h)?;
        for y in 0..rect.h {
            for x in 0..rect.w {
                let a = scaled.alpha().get(y, x, 0);
                for c in 0..image.channels() {
                    let under = fake.get(rect.y + y, rect.x + x, c);
                    fake.set(
                        rect.y + y,
                        rect.x + x,
                        c,
                        a * scaled.patch().get(y, x, c) + (1.0 - a) * under,
                    );
                }
            }
        }
        covered.push(b);
    }
    Ok(TrainingPair {
        real: image.clone(),
        fake,
        covered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CategoryId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn image() -> ImageBuffer {
        ImageBuffer::from_fn(40, 50, 3, |y, x, c| {
            ((y * 7 + x * 3 + c) % 100) as f64 / 100.0
        })
    }

    fn set_from(img: &ImageBuffer, b: BBox) -> ObjectSet {
        let mut s = ObjectSet::new(vec!["a".into(), "b".into()]);
        let rect = rasterize_box(&b, img.width(), img.height()).unwrap();
        s.push(ObjectCrop::rectangle(img.crop(rect).unwrap(), b.category, 0, b).unwrap())
            .unwrap();
        s
    }

    #[test]
    fn covering_nothing_is_identity() {
        let img = image();
        let b = BBox::new(5.0, 5.0, 10.0, 8.0, CategoryId(1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pair = build_training_pair(&img, &[b], &[], &set_from(&img, b), &mut rng).unwrap();
        assert_eq!(pair.real, pair.fake);
    }

    #[test]
    fn one_box_changes_only_that_box() {
        let img = image();
        let b = BBox::new(5.0, 5.0, 10.0, 8.0, CategoryId(1));
        let mut s = ObjectSet::new(vec!["a".into(), "b".into()]);
        let patch = ImageBuffer::filled(16, 20, 3, 1.0);
        s.push(ObjectCrop::rectangle(patch, CategoryId(1), 0, b).unwrap())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pair = build_training_pair(&img, &[b], &[0], &s, &mut rng).unwrap();
        assert_eq!(pair.real, img);
        for y in 0..40 {
            for x in 0..50 {
                let inside = (5..15).contains(&x) && (5..13).contains(&y);
                for c in 0..3 {
                    if inside {
                        assert_eq!(pair.fake.get(y, x, c), 1.0);
                    } else {
                        assert_eq!(pair.fake.get(y, x, c).to_bits(), img.get(y, x, c).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn pasting_the_original_region_is_idempotent() {
        let img = image();
        let b = BBox::new(12.0, 9.0, 14.0, 11.0, CategoryId(0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pair = build_training_pair(&img, &[b], &[0], &set_from(&img, b), &mut rng).unwrap();
        let worst = pair
            .real
            .data()
            .iter()
            .zip(pair.fake.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6);
    }

    #[test]
    fn incompatible_aspect_is_an_error() {
        let img = image();
        let wide = BBox::new(0.0, 0.0, 30.0, 5.0, CategoryId(0));
        let tall = BBox::new(0.0, 0.0, 5.0, 30.0, CategoryId(0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = build_training_pair(&img, &[tall], &[0], &set_from(&img, wide), &mut rng);
        assert!(matches!(r, Err(Error::NoCompatibleCrop { .. })));
    }
}
