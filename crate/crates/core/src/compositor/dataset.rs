use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use indexmap::IndexMap;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compositor::{
    synthesize_counts, CountRange, EmbedRecord, ObjectSet, PlacementPolicy, SynthesisSpec,
};
use crate::error::{Error, Result};
use crate::model::{
    png, Annotation, BBox, CategoryId, DatasetManifest, ImageBuffer, ImageEntry, ImageStore,
};

const GENERATION_DOMAIN: u32 = 2;
const RETRY_DOMAIN_BASE: u32 = 100;

/// Destination of generated images. Writing the same id twice replaces it.
pub trait ImageSink: Sync {
    fn put(&self, id: u64, image: &ImageBuffer) -> Result<()>;

    fn get(&self, id: u64) -> Result<ImageBuffer>;

    /// Manifest path recorded for `id`.
    fn file_name(&self, id: u64) -> PathBuf {
        PathBuf::from(format!("images/{id:06}.png"))
    }
}

#[derive(Debug, Default)]
pub struct MemorySink {
    images: Mutex<BTreeMap<u64, ImageBuffer>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_inner(self) -> BTreeMap<u64, ImageBuffer> {
        self.images.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}

impl ImageSink for MemorySink {
    fn put(&self, id: u64, image: &ImageBuffer) -> Result<()> {
        self.images
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, image.clone());
        Ok(())
    }

    fn get(&self, id: u64) -> Result<ImageBuffer> {
        self.images
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&id)
            .cloned()
            .ok_or(Error::UnknownImage(id))
    }
}

/// PNG files under `root`, at [`ImageSink::file_name`].
#[derive(Debug, Clone)]
pub struct DirectorySink {
    root: PathBuf,
}

impl DirectorySink {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirectorySink { root: root.into() }
    }
}

impl ImageSink for DirectorySink {
    fn put(&self, id: u64, image: &ImageBuffer) -> Result<()> {
        let path = self.root.join(self.file_name(id));
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        png::save(path, image, None)
    }

    fn get(&self, id: u64) -> Result<ImageBuffer> {
        png::load_rgb(self.root.join(self.file_name(id)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateOptions {
    /// Number of output images; backgrounds are reused in order. `None`
    /// produces one image per background.
    pub output_images: Option<usize>,
    /// Worker threads; 0 lets the pool pick.
    pub jobs: usize,
    /// Sequential top-up passes for embeds that failed to place.
    pub retry_passes: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            output_images: None,
            jobs: 0,
            retry_passes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub id: u64,
    pub background_id: u64,
    pub embeds: Vec<EmbedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub seed: u64,
    pub targets: IndexMap<String, usize>,
    pub background_counts: IndexMap<String, usize>,
    pub embedded_counts: IndexMap<String, usize>,
    pub final_counts: IndexMap<String, usize>,
    /// Categories whose target was missed, with the missing amount.
    pub shortfall: IndexMap<String, usize>,
    pub placement_failures: usize,
    pub retry_passes: usize,
    pub images: Vec<ImageReport>,
}

impl GenerationReport {
    pub fn is_exact(&self) -> bool {
        self.shortfall.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub manifest: DatasetManifest,
    pub report: GenerationReport,
}

struct OutputSlot {
    id: u64,
    background: usize,
}

struct ImageState {
    boxes: Vec<BBox>,
    records: Vec<EmbedRecord>,
}

/// Per-category embed limits; categories without a range are unbounded above.
fn limits(spec: &SynthesisSpec, categories: &[String]) -> Result<Vec<CountRange>> {
    for name in spec.per_image.keys().chain(spec.targets.keys()) {
        if !categories.contains(name) {
            return Err(Error::UnknownCategory(name.clone()));
        }
    }
    Ok(categories
        .iter()
        .map(|name| {
            spec.per_image
                .get(name)
                .copied()
                .unwrap_or(if spec.targets.contains_key(name) {
                    CountRange::new(0, usize::MAX)
                } else {
                    CountRange::exactly(0)
                })
        })
        .collect())
}

/// Round-robin schedule of `deficit[c]` embeds over `n` images, largest
/// deficit first, within `range[c]`. Categories with `deficit[c] = None`
/// are left at zero.
pub fn schedule_embeds(
    n: usize,
    deficit: &[Option<usize>],
    range: &[CountRange],
) -> Vec<Vec<usize>> {
    let cats = deficit.len();
    let mut plan = vec![vec![0usize; cats]; n];
    let mut remaining = vec![0usize; cats];
    for c in 0..cats {
        if let Some(d) = deficit[c] {
            for row in &mut plan {
                row[c] = range[c].min;
            }
            remaining[c] = d.saturating_sub(range[c].min * n);
        }
    }
    let mut order: Vec<usize> = (0..cats).filter(|&c| deficit[c].is_some()).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(remaining[c]));
    let mut cursor = 0usize;
    for c in order {
        let mut idle = 0;
        while remaining[c] > 0 && idle < n {
            let i = cursor % n;
            cursor += 1;
            if plan[i][c] < range[c].max {
                plan[i][c] += 1;
                remaining[c] -= 1;
                idle = 0;
            } else {
                idle += 1;
            }
        }
    }
    plan
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))
}

/// Expands `backgrounds` into a synthetic dataset whose per-category totals
/// (background boxes plus embeds) equal `spec.targets`.
///
/// Output image `k` (1-based id) is derived from background `(k - 1) mod B`
/// with its own random stream (seed plus output id), so results do not
/// depend on `jobs`.
/// Embeds that fail to place are retried in top-up passes on the images
/// with the fewest boxes; anything still missing is listed in
/// `report.shortfall`.
pub fn generate_dataset(
    backgrounds: &DatasetManifest,
    store: &dyn ImageStore,
    set: &ObjectSet,
    spec: &SynthesisSpec,
    policy: &PlacementPolicy,
    options: &GenerateOptions,
    sink: &dyn ImageSink,
) -> Result<GeneratedDataset> {
    spec.validate()?;
    policy.validate()?;
    let categories = &backgrounds.categories;
    let set = set.aligned_to(categories)?;
    let range = limits(spec, categories)?;
    let n = options.output_images.unwrap_or(backgrounds.images.len());
    if n > 0 && backgrounds.images.is_empty() {
        return Err(Error::InvalidArgument("no background images".into()));
    }
    // Output ids are 1-based positions.
    let slots: Vec<OutputSlot> = (0..n)
        .map(|k| OutputSlot {
            id: k as u64 + 1,
            background: k % backgrounds.images.len().max(1),
        })
        .collect();

    let by_image = backgrounds.annotations_by_image();
    let bg_boxes: Vec<Vec<BBox>> = backgrounds
        .images
        .iter()
        .map(|e| {
            by_image
                .get(&e.id)
                .map(|v| v.iter().map(|a| a.bbox).collect())
                .unwrap_or_default()
        })
        .collect();
    let mut existing = vec![0usize; categories.len()];
    for slot in &slots {
        for b in &bg_boxes[slot.background] {
            existing[b.category.0] += 1;
        }
    }

    let mut deficit = vec![None; categories.len()];
    for (c, name) in categories.iter().enumerate() {
        let Some(&target) = spec.targets.get(name) else {
            continue;
        };
        let min_achievable = existing[c].saturating_add(range[c].min.saturating_mul(n));
        let max_achievable = existing[c].saturating_add(range[c].max.saturating_mul(n));
        if target < min_achievable || target > max_achievable {
            return Err(Error::InfeasibleTarget {
                category: name.clone(),
                target,
                min_achievable,
                max_achievable,
            });
        }
        if target > existing[c] && set.crops(CategoryId(c)).is_empty() {
            return Err(Error::InsufficientInstances {
                category: name.clone(),
                available: 0,
                requested: target - existing[c],
            });
        }
        deficit[c] = Some(target - existing[c]);
    }
    let schedule = schedule_embeds(n, &deficit, &range);

    let workers = pool(options.jobs)?;
    let run = |slot: &OutputSlot,
               base: Option<(ImageBuffer, Vec<BBox>)>,
               plan: Vec<(CategoryId, usize)>,
               domain: u32| {
        let (image, boxes) = match base {
            Some(b) => b,
            None => (
                store.load_image(&backgrounds.images[slot.background])?,
                bg_boxes[slot.background].clone(),
            ),
        };
        let mut rng = spec.rng.substream(domain, slot.id);
        let out = synthesize_counts(&image, &boxes, &set, &plan, policy, spec, &mut rng)?;
        sink.put(slot.id, &out.image)?;
        Ok::<_, Error>(ImageState {
            boxes: out.boxes,
            records: out.records,
        })
    };

    let mut states: Vec<ImageState> = workers.install(|| {
        slots
            .par_iter()
            .zip(schedule.par_iter())
            .map(|(slot, planned)| {
                // Untargeted categories draw their counts from the image's own stream.
                let mut draw = spec.rng.substream(GENERATION_DOMAIN + 1, slot.id);
                let plan: Vec<(CategoryId, usize)> = (0..categories.len())
                    .map(|c| {
                        let count = if deficit[c].is_some() {
                            planned[c]
                        } else {
                            draw.random_range(range[c].min..=range[c].max)
                        };
                        (CategoryId(c), count)
                    })
                    .collect();
                run(slot, None, plan, GENERATION_DOMAIN)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let bg_len = |i: usize| bg_boxes[slots[i].background].len();
    let embedded_in = |states: &[ImageState], i: usize| {
        let mut counts = vec![0usize; categories.len()];
        for b in &states[i].boxes[bg_len(i)..] {
            counts[b.category.0] += 1;
        }
        counts
    };
    let shortfall_of = |states: &[ImageState]| {
        let mut embedded = vec![0usize; categories.len()];
        for i in 0..states.len() {
            for (c, k) in embedded_in(states, i).into_iter().enumerate() {
                embedded[c] += k;
            }
        }
        (0..categories.len())
            .map(|c| deficit[c].map_or(0, |d| d.saturating_sub(embedded[c])))
            .collect::<Vec<_>>()
    };

    let mut passes = 0;
    for pass in 1..=options.retry_passes {
        let short = shortfall_of(&states);
        if short.iter().all(|&s| s == 0) {
            break;
        }
        passes = pass;
        let mut extra: Vec<Vec<usize>> = vec![vec![0; categories.len()]; n];
        let mut order: Vec<usize> = (0..categories.len()).filter(|&c| short[c] > 0).collect();
        order.sort_by_key(|&c| std::cmp::Reverse(short[c]));
        let mut by_load: Vec<usize> = (0..n).collect();
        by_load.sort_by_key(|&i| (states[i].boxes.len(), i));
        for c in order {
            let current: Vec<usize> = (0..n).map(|i| embedded_in(&states, i)[c]).collect();
            let mut left = short[c];
            let mut progress = true;
            while left > 0 && progress {
                progress = false;
                for &i in &by_load {
                    if left == 0 {
                        break;
                    }
                    if current[i] + extra[i][c] < range[c].max {
                        extra[i][c] += 1;
                        left -= 1;
                        progress = true;
                    }
                }
            }
        }
        let targets: Vec<usize> = (0..n)
            .filter(|&i| extra[i].iter().any(|&k| k > 0))
            .collect();
        let domain = RETRY_DOMAIN_BASE + pass as u32;
        let updates: Vec<(usize, ImageState)> = workers.install(|| {
            targets
                .par_iter()
                .map(|&i| {
                    let slot = &slots[i];
                    let base = (sink.get(slot.id)?, states[i].boxes.clone());
                    let plan = extra[i]
                        .iter()
                        .enumerate()
                        .map(|(c, &k)| (CategoryId(c), k))
                        .collect();
                    run(slot, Some(base), plan, domain).map(|s| (i, s))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (i, update) in updates {
            states[i].boxes = update.boxes;
            states[i].records.extend(update.records);
        }
    }

    // Assemble manifest and report.
    let mut manifest = DatasetManifest::new(categories.clone());
    let mut reports = Vec::with_capacity(n);
    let mut embedded_counts = vec![0usize; categories.len()];
    let mut failures = 0;
    for (slot, state) in slots.iter().zip(states) {
        let bg = &backgrounds.images[slot.background];
        manifest.images.push(ImageEntry {
            id: slot.id,
            file: sink.file_name(slot.id),
            width: bg.width,
            height: bg.height,
        });
        for b in &state.boxes[bg_boxes[slot.background].len()..] {
            embedded_counts[b.category.0] += 1;
        }
        failures += state.records.iter().filter(|r| !r.is_embedded()).count();
        manifest
            .annotations
            .extend(state.boxes.iter().map(|b| Annotation::new(slot.id, *b)));
        reports.push(ImageReport {
            id: slot.id,
            background_id: bg.id,
            embeds: state.records,
        });
    }
    let named = |v: &[usize]| -> IndexMap<String, usize> {
        categories.iter().cloned().zip(v.iter().copied()).collect()
    };
    let final_counts: Vec<usize> = existing
        .iter()
        .zip(&embedded_counts)
        .map(|(a, b)| a + b)
        .collect();
    let shortfall = categories
        .iter()
        .enumerate()
        .filter_map(|(c, name)| {
            let t = *spec.targets.get(name)?;
            (t > final_counts[c]).then(|| (name.clone(), t - final_counts[c]))
        })
        .collect();
    let report = GenerationReport {
        seed: spec.rng.seed,
        targets: spec.targets.clone(),
        background_counts: named(&existing),
        embedded_counts: named(&embedded_counts),
        final_counts: named(&final_counts),
        shortfall,
        placement_failures: failures,
        retry_passes: passes,
        images: reports,
    };
    Ok(GeneratedDataset { manifest, report })
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

/// Runs [`generate_dataset`] into `out_dir`: `images/*.png`, `manifest.json`
/// and `report.json`.
pub fn write_dataset(
    out_dir: &Path,
    backgrounds: &DatasetManifest,
    store: &dyn ImageStore,
    set: &ObjectSet,
    spec: &SynthesisSpec,
    policy: &PlacementPolicy,
    options: &GenerateOptions,
) -> Result<GeneratedDataset> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let sink = DirectorySink::new(out_dir);
    let out = generate_dataset(backgrounds, store, set, spec, policy, options, &sink)?;
    out.manifest.save(out_dir.join(MANIFEST_FILE))?;
    let path = out_dir.join(REPORT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&out.report)?)
        .map_err(|e| Error::io(&path, e))?;
    Ok(out)
}

/// Background boxes per image id.
pub fn boxes_by_image(manifest: &DatasetManifest) -> HashMap<u64, Vec<BBox>> {
    manifest
        .annotations_by_image()
        .into_iter()
        .map(|(id, v)| (id, v.into_iter().map(|a| a.bbox).collect()))
        .collect()
}
