use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compositor::{propose_placement, ObjectSet, PlacementPolicy};
use crate::error::{Error, Result};
use crate::model::{BBox, CategoryId, ImageBuffer, RngConfig};
use crate::poisson::{seamless_clone_with, CloneOptions};

/// Inclusive per-image embed-count range of one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub fn new(min: usize, max: usize) -> Self {
        CountRange { min, max }
    }

    pub fn exactly(n: usize) -> Self {
        CountRange { min: n, max: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSpec {
    /// Embeds per image and category; categories not listed get none.
    pub per_image: IndexMap<String, CountRange>,
    /// Dataset-level totals (background boxes plus embeds).
    pub targets: IndexMap<String, usize>,
    pub rng: RngConfig,
    pub clone: CloneOptions,
    /// Fresh crop/placement draws per object before it is reported failed.
    pub object_retries: usize,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        SynthesisSpec {
            per_image: IndexMap::new(),
            targets: IndexMap::new(),
            rng: RngConfig::default(),
            clone: CloneOptions::default(),
            object_retries: 4,
        }
    }
}

impl SynthesisSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in &self.per_image {
            if r.min > r.max {
                return Err(Error::InvalidArgument(format!(
                    "'{name}': min {} exceeds max {}",
                    r.min, r.max
                )));
            }
        }
        Ok(())
    }

    /// Draws one count per listed category, uniform in its range.
    pub fn draw_counts(
        &self,
        categories: &[String],
        rng: &mut impl Rng,
    ) -> Result<Vec<(CategoryId, usize)>> {
        self.validate()?;
        self.per_image
            .iter()
            .map(|(name, r)| {
                let id = categories
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::UnknownCategory(name.clone()))?;
                Ok((CategoryId(id), rng.random_range(r.min..=r.max)))
            })
            .collect()
    }
}

/// What happened to one requested embed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EmbedOutcome {
    Embedded {
        bbox: [f64; 4],
        scale: f64,
        anchored: bool,
        source_image: u64,
        source_box: [f64; 4],
    },
    Failed {
        error: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRecord {
    pub category: String,
    #[serde(flatten)]
    pub outcome: EmbedOutcome,
}

impl EmbedRecord {
    pub fn is_embedded(&self) -> bool {
        matches!(self.outcome, EmbedOutcome::Embedded { .. })
    }
}

/// Clone image with its full annotation list (input boxes first).
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub image: ImageBuffer,
    pub boxes: Vec<BBox>,
    pub records: Vec<EmbedRecord>,
}

impl Synthesized {
    pub fn embedded(&self) -> usize {
        self.records.iter().filter(|r| r.is_embedded()).count()
    }
}

fn arr(b: &BBox) -> [f64; 4] {
    [b.x, b.y, b.w, b.h]
}

/// Embeds `plan[i].1` objects of category `plan[i].0`, in shuffled order.
///
/// Each object tries up to `1 + object_retries` (crop, placement) draws;
/// an object whose draws all fail is recorded as failed and skipped.
pub fn synthesize_counts(
    background: &ImageBuffer,
    boxes: &[BBox],
    set: &ObjectSet,
    plan: &[(CategoryId, usize)],
    policy: &PlacementPolicy,
    spec: &SynthesisSpec,
    rng: &mut impl Rng,
) -> Result<Synthesized> {
    policy.validate()?;
    let mut order: Vec<CategoryId> = Vec::new();
    for &(cat, n) in plan {
        if n > 0 && set.crops(cat).is_empty() {
            return Err(Error::InsufficientInstances {
                category: set
                    .categories()
                    .get(cat.0)
                    .cloned()
                    .unwrap_or_else(|| format!("#{}", cat.0)),
                available: 0,
                requested: n,
            });
        }
        order.extend(std::iter::repeat_n(cat, n));
    }
    order.shuffle(rng);

    let mut image = background.clone();
    let mut boxes = boxes.to_vec();
    let mut records = Vec::with_capacity(order.len());
    let size = (image.width(), image.height());
    for cat in order {
        let crops = set.crops(cat);
        let mut last_err = None;
        let mut done = None;
        for _ in 0..=spec.object_retries {
            let crop = &crops[rng.random_range(0..crops.len())];
            let attempt = propose_placement(
                &boxes,
                cat,
                (crop.width(), crop.height()),
                size,
                policy,
                rng,
            )
            .and_then(|p| {
                let resized = crop.resized(p.w, p.h)?;
                let cloned = seamless_clone_with(&image, &resized, (p.x, p.y), &spec.clone)?;
                Ok((p, cloned))
            });
            match attempt {
                Ok((p, cloned)) => {
                    done = Some((p, cloned, crop));
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        let category = set.categories()[cat.0].clone();
        match done {
            Some((p, cloned, crop)) => {
                let b = p.bbox(cat);
                image = cloned;
                records.push(EmbedRecord {
                    category,
                    outcome: EmbedOutcome::Embedded {
                        bbox: arr(&b),
                        scale: p.scale,
                        anchored: p.anchored,
                        source_image: crop.source_image(),
                        source_box: arr(&crop.source_box()),
                    },
                });
                boxes.push(b);
            }
            None => {
                let e = last_err.expect("at least one attempt ran");
                records.push(EmbedRecord {
                    category,
                    outcome: EmbedOutcome::Failed {
                        error: e.kind().to_string(),
                        message: e.to_string(),
                    },
                });
            }
        }
    }
    Ok(Synthesized {
        image,
        boxes,
        records,
    })
}

/// Draws per-category counts from `spec.per_image` and embeds them.
pub fn synthesize(
    background: &ImageBuffer,
    boxes: &[BBox],
    set: &ObjectSet,
    spec: &SynthesisSpec,
    policy: &PlacementPolicy,
    rng: &mut impl Rng,
) -> Result<Synthesized> {
    let plan = spec.draw_counts(set.categories(), rng)?;
    synthesize_counts(background, boxes, set, &plan, policy, spec, rng)
}
