//! The `seaclone` command line.
//!
//! Every subcommand is a thin wrapper over a library call. Failures print a
//! JSON object `{"error": kind, "message": text}` on stderr and exit nonzero.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{self, AugmentMethod, AugmentSpec, WeightedBox};
use crate::compositor::{
    build_training_pair, choose_cover, extract_crops, load_object_set, write_dataset, CountRange,
    GenerateOptions, PlacementPolicy, SynthesisSpec,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_manifests, Interpolation};
use crate::model::{
    png, Annotation, BBox, DatasetManifest, DiskImages, ImageEntry, ImageStore, PixelRect,
    RngConfig,
};
use crate::nn::{describe_backbone, BackboneDescriptor, MffConfig, WeightFile};
use crate::poisson::GuidanceMode;
use crate::region_loss::{
    build_region_mask, dr_total, region_loss_with, Norm, DEFAULT_ADVERSARIAL_WEIGHT,
};
use crate::stats::{stats, write_stats, StatsOptions};

/// Default output directory when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "seaclone-out";
pub const OUT_DIR_ENV: &str = "SEACLONE_OUT";

/// Three-class sea-farm defaults.
pub mod profile {
    /// Crops harvested per category.
    pub const CROP_COUNTS: [(&str, usize); 3] =
        [("seaurchin", 1000), ("seacucumber", 150), ("scallop", 35)];
    /// Per-category totals of the expanded dataset.
    pub const EXPANDED_TARGETS: [(&str, usize); 3] = [
        ("seacucumber", 18350),
        ("seaurchin", 101422),
        ("scallop", 9624),
    ];
    /// Image count of the expanded dataset.
    pub const EXPANDED_IMAGES: usize = 18661;

    /// `round_half_up(value * scale)`.
    pub fn scaled(value: usize, scale: f64) -> usize {
        (value as f64 * scale + 0.5).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Udd,
}

#[derive(Debug, Parser)]
#[command(
    name = "seaclone",
    version,
    about = "Poisson-blending dataset synthesis and detection evaluation"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-image work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Preset category counts and targets.
    #[arg(long, global = true, value_enum)]
    pub profile: Option<Profile>,
    /// Multiplier applied to profile counts (rounded half up).
    #[arg(long, global = true, default_value_t = 1.0)]
    pub scale: f64,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Instance-size statistics, CSV table and SVG histogram.
    Stats(StatsArgs),
    /// Harvest object crops (RGBA PNG + index.json).
    CropObjects(CropArgs),
    /// Expand a background set with embedded objects up to category targets.
    Synthesize(SynthArgs),
    /// Build real/fake pairs by pasting crops over annotated objects.
    Pairs(PairsArgs),
    /// Region loss of every pair in a pairs directory.
    PairScore(PairScoreArgs),
    /// Apply a baseline or information-dropping augmentation to every image.
    Augment(AugmentArgs),
    /// Per-category AP and mAP of detections against ground truth.
    Eval(EvalArgs),
    /// Parameter accounting of the fusion backbone.
    DescribeNet(DescribeNetArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Reference resolution, `WIDTHxHEIGHT`.
    #[arg(long, default_value = "512x512", value_parser = parse_resolution)]
    pub reference: [usize; 2],
    /// Relative-area thresholds (repeatable).
    #[arg(long = "threshold")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct CropArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// `CATEGORY=N` (repeatable); overrides profile counts.
    #[arg(long = "count", value_parser = parse_count)]
    pub counts: Vec<(String, usize)>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Background manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Crop directory written by `crop-objects`.
    #[arg(long)]
    pub objects: PathBuf,
    /// `CATEGORY=TOTAL` (repeatable); overrides profile targets.
    #[arg(long = "target", value_parser = parse_count)]
    pub targets: Vec<(String, usize)>,
    /// `CATEGORY=MIN:MAX` embeds per image (repeatable).
    #[arg(long = "per-image", value_parser = parse_range)]
    pub per_image: Vec<(String, CountRange)>,
    /// Output image count (default: profile image count, else one per background).
    #[arg(long)]
    pub images: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Source)]
    pub mode: ModeArg,
    /// Placement policy JSON (defaults for missing fields).
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Source,
    Mixed,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Manifest of the original images.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Crop directory harvested from clone images.
    #[arg(long)]
    pub objects: PathBuf,
    /// Probability of covering each annotated object.
    #[arg(long, default_value_t = 1.0)]
    pub cover_prob: f64,
}

#[derive(Debug, Args)]
pub struct PairScoreArgs {
    /// Directory written by `pairs`.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum, default_value_t = NormArg::L1)]
    pub norm: NormArg,
    /// Content term to fold into the total.
    #[arg(long)]
    pub content: Option<f64>,
    /// Adversarial term to fold into the total.
    #[arg(long)]
    pub adversarial: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ADVERSARIAL_WEIGHT)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L1,
    L2,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// baseline, cutout, rerase, gridmask, has or mixup.
    #[arg(long, conflicts_with = "config")]
    pub method: Option<String>,
    /// JSON config: `{"method": ..., "params": {...}, "seed": ...}`.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, value_enum, default_value_t = InterpArg::AllPoint)]
    pub interp: InterpArg,
    /// Also write the report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpArg {
    AllPoint,
    ElevenPoint,
}

#[derive(Debug, Args)]
pub struct DescribeNetArgs {
    /// Channel widths of stages 2..5.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    pub widths: Vec<usize>,
    /// Fusion blocks of stages 2..5.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2,2")]
    pub blocks: Vec<usize>,
    /// Backbone descriptor JSON instead of widths/blocks.
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
    /// Weight file to check against the descriptor (`stage{S}.block{B}` prefixes).
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> std::result::Result<[usize; 2], String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    Ok([w, h])
}

fn parse_count(s: &str) -> std::result::Result<(String, usize), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected CATEGORY=N, got '{s}'"))?;
    Ok((
        k.trim().to_string(),
        v.trim()
            .parse()
            .map_err(|e| format!("count for '{k}': {e}"))?,
    ))
}

fn parse_range(s: &str) -> std::result::Result<(String, CountRange), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected CATEGORY=MIN:MAX, got '{s}'"))?;
    let (lo, hi) = v.split_once(':').unwrap_or((v, v));
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|e| format!("min for '{k}': {e}"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|e| format!("max for '{k}': {e}"))?;
    if lo > hi {
        return Err(format!("min {lo} exceeds max {hi} for '{k}'"));
    }
    Ok((k.trim().to_string(), CountRange::new(lo, hi)))
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{body}");
}

pub fn run(cli: &Cli) -> Result<()> {
    if !(cli.scale > 0.0 && cli.scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "--scale must be positive, got {}",
            cli.scale
        )));
    }
    match &cli.command {
        Command::Stats(a) => cmd_stats(cli, a),
        Command::CropObjects(a) => cmd_crop(cli, a),
        Command::Synthesize(a) => cmd_synthesize(cli, a),
        Command::Pairs(a) => cmd_pairs(cli, a),
        Command::PairScore(a) => cmd_pair_score(a),
        Command::Augment(a) => cmd_augment(cli, a),
        Command::Eval(a) => cmd_eval(a),
        Command::DescribeNet(a) => cmd_describe_net(a),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn load_manifest(path: &Path) -> Result<(DatasetManifest, DiskImages)> {
    Ok((DatasetManifest::load(path)?, DiskImages::beside(path)))
}

fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))
}

fn profile_map(cli: &Cli, table: &[(&str, usize)]) -> IndexMap<String, usize> {
    table
        .iter()
        .map(|&(k, v)| (k.to_string(), profile::scaled(v, cli.scale)))
        .collect()
}

fn cmd_stats(cli: &Cli, a: &StatsArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let mut options = StatsOptions {
        reference: a.reference,
        bins: a.bins,
        ..Default::default()
    };
    if !a.thresholds.is_empty() {
        options.thresholds = a.thresholds.clone();
    }
    let report = stats(&manifest, &options)?;
    write_stats(&report, a.bins, &cli.out)?;
    println!("instances = {}", report.instances);
    for (name, n) in &report.counts {
        println!("count[{name}] = {n}");
    }
    for b in &report.below {
        println!("below[{}] = {:.4}", b.threshold, b.fraction);
    }
    let [rw, rh] = report.mean_size.reference;
    println!(
        "mean size at {rw}x{rh} = {:.1}x{:.1} ({} of the image)",
        report.mean_size.width, report.mean_size.height, report.mean_size.relative_area_percent
    );
    Ok(())
}

fn cmd_crop(cli: &Cli, a: &CropArgs) -> Result<()> {
    let (manifest, store) = load_manifest(&a.manifest)?;
    let mut counts = match cli.profile {
        // A scaled-down profile still harvests at least one crop per category.
        Some(Profile::Udd) => profile_map(cli, &profile::CROP_COUNTS)
            .into_iter()
            .map(|(k, v)| (k, v.max(1)))
            .collect(),
        None => IndexMap::new(),
    };
    counts.extend(a.counts.iter().cloned());
    if counts.is_empty() {
        return Err(Error::InvalidArgument(
            "no crop counts: pass --count CATEGORY=N or --profile udd".into(),
        ));
    }
    let (set, index) = extract_crops(
        &manifest,
        &store,
        &cli.out,
        &counts,
        &RngConfig::new(cli.seed),
    )?;
    for (name, n) in set.sizes() {
        println!("crops[{name}] = {n}");
    }
    println!("wrote {} crops to {}", index.crops.len(), cli.out.display());
    Ok(())
}

fn cmd_synthesize(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let (backgrounds, store) = load_manifest(&a.manifest)?;
    let set = load_object_set(&a.objects)?;
    let mut targets = match cli.profile {
        Some(Profile::Udd) => profile_map(cli, &profile::EXPANDED_TARGETS),
        None => IndexMap::new(),
    };
    targets.extend(a.targets.iter().cloned());
    let mut spec = SynthesisSpec {
        per_image: a.per_image.iter().cloned().collect(),
        targets,
        rng: RngConfig::new(cli.seed),
        ..Default::default()
    };
    spec.clone.mode = match a.mode {
        ModeArg::Source => GuidanceMode::SourceGradients,
        ModeArg::Mixed => GuidanceMode::MixedGradients,
    };
    let policy: PlacementPolicy = match &a.policy {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => PlacementPolicy::default(),
    };
    let output_images = a.images.or(cli
        .profile
        .map(|Profile::Udd| profile::scaled(profile::EXPANDED_IMAGES, cli.scale)));
    let options = GenerateOptions {
        output_images,
        jobs: cli.jobs,
        ..Default::default()
    };
    let out = write_dataset(
        &cli.out,
        &backgrounds,
        &store,
        &set,
        &spec,
        &policy,
        &options,
    )?;
    let r = &out.report;
    println!("images = {}", out.manifest.images.len());
    for (name, n) in &r.final_counts {
        println!("final[{name}] = {n}");
    }
    println!("placement failures = {}", r.placement_failures);
    if !r.is_exact() {
        let missing: Vec<String> = r
            .shortfall
            .iter()
            .map(|(k, v)| format!("{k} short by {v}"))
            .collect();
        return Err(Error::TargetsMissed(missing.join(", ")));
    }
    Ok(())
}

/// One entry of `pairs.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub image_id: u64,
    pub real: PathBuf,
    pub fake: PathBuf,
    /// Covered boxes as `[x, y, w, h]`.
    pub covered: Vec<[f64; 4]>,
}

pub const PAIRS_FILE: &str = "pairs.json";

fn cmd_pairs(cli: &Cli, a: &PairsArgs) -> Result<()> {
    let (manifest, store) = load_manifest(&a.manifest)?;
    let set = load_object_set(&a.objects)?.aligned_to(&manifest.categories)?;
    let by_image = crate::compositor::boxes_by_image(&manifest);
    let rng = RngConfig::new(cli.seed);
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let entries: Vec<PairEntry> = worker_pool(cli.jobs)?.install(|| {
        manifest
            .images
            .par_iter()
            .map(|entry| {
                let image = store.load_image(entry)?;
                let boxes = by_image.get(&entry.id).cloned().unwrap_or_default();
                let mut stream = rng.substream(3, entry.id);
                let cover = choose_cover(boxes.len(), a.cover_prob, &mut stream);
                let pair = build_training_pair(&image, &boxes, &cover, &set, &mut stream)?;
                let real = PathBuf::from(format!("{:06}_real.png", entry.id));
                let fake = PathBuf::from(format!("{:06}_fake.png", entry.id));
                png::save(cli.out.join(&real), &pair.real, None)?;
                png::save(cli.out.join(&fake), &pair.fake, None)?;
                Ok(PairEntry {
                    image_id: entry.id,
                    real,
                    fake,
                    covered: pair.covered.iter().map(|b| [b.x, b.y, b.w, b.h]).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    write_json(&cli.out.join(PAIRS_FILE), &entries)?;
    println!("wrote {} pairs to {}", entries.len(), cli.out.display());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PairScore {
    image_id: u64,
    region_loss: f64,
}

fn cmd_pair_score(a: &PairScoreArgs) -> Result<()> {
    let index_path = a.pairs.join(PAIRS_FILE);
    let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let entries: Vec<PairEntry> = serde_json::from_str(&text)?;
    let norm = match a.norm {
        NormArg::L1 => Norm::L1,
        NormArg::L2 => Norm::L2,
    };
    let mut scores = Vec::with_capacity(entries.len());
    for e in &entries {
        let real = png::load_rgb(a.pairs.join(&e.real))?;
        let fake = png::load_rgb(a.pairs.join(&e.fake))?;
        let boxes: Vec<BBox> = e
            .covered
            .iter()
            .map(|&[x, y, w, h]| BBox::new(x, y, w, h, crate::model::CategoryId(0)))
            .collect();
        let mask = build_region_mask(&boxes, real.height(), real.width());
        scores.push(PairScore {
            image_id: e.image_id,
            region_loss: region_loss_with(&fake, &real, &mask, norm)?,
        });
    }
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().map(|s| s.region_loss).sum::<f64>() / scores.len() as f64
    };
    let total = match (a.content, a.adversarial) {
        (None, None) => None,
        (c, adv) => Some(dr_total(
            c.unwrap_or(0.0),
            adv.unwrap_or(0.0),
            mean,
            a.lambda,
        )?),
    };
    let body = serde_json::json!({ "pairs": scores, "mean_region_loss": mean, "dr_total": total });
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(())
}

/// Per-image record of `augment.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub image_id: u64,
    /// Regions written by information-dropping methods, `[x, y, w, h]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub method: String,
    pub seed: u64,
    pub images: Vec<AugmentRecord>,
}

pub const AUGMENT_REPORT_FILE: &str = "augment.json";

fn rect_arr(r: &PixelRect) -> [usize; 4] {
    [r.x, r.y, r.w, r.h]
}

/// Applies `spec` to every image of `manifest`, writing `images/*.png`,
/// `manifest.json` and `augment.json` under `out`. Mixup pairs each image
/// with the next one (resized to match). The baseline method writes the
/// geometric result; mean subtraction is left to the consumer since PNG
/// cannot hold negative samples.
pub fn augment_dataset(
    manifest: &DatasetManifest,
    store: &dyn ImageStore,
    spec: &AugmentSpec,
    jobs: usize,
    out: &Path,
) -> Result<(DatasetManifest, AugmentReport)> {
    let by_image = crate::compositor::boxes_by_image(manifest);
    let rng = RngConfig::new(spec.seed);
    let n = manifest.images.len();
    let results: Vec<(ImageEntry, Vec<Annotation>, AugmentRecord)> =
        worker_pool(jobs)?.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let entry = &manifest.images[i];
                    let image = store.load_image(entry)?;
                    let boxes = by_image.get(&entry.id).cloned().unwrap_or_default();
                    let mut stream = rng.substream(4, entry.id);
                    let mut record = AugmentRecord {
                        image_id: entry.id,
                        regions: Vec::new(),
                        lambda: None,
                        partner: None,
                    };
                    let (img, weighted): (_, Vec<WeightedBox>) = match &spec.method {
                        AugmentMethod::Baseline(p) => {
                            let draw = augment::draw_baseline(&image, p, &mut stream)?;
                            let (img, b) = augment::baseline_geometry(&image, &boxes, &draw, p)?;
                            (
                                img,
                                b.into_iter()
                                    .map(|bbox| WeightedBox { bbox, weight: 1.0 })
                                    .collect(),
                            )
                        }
                        AugmentMethod::Mixup(p) => {
                            let partner = &manifest.images[(i + 1) % n];
                            let other = store.load_image(partner)?;
                            let (fx, fy) = (
                                image.width() as f64 / other.width() as f64,
                                image.height() as f64 / other.height() as f64,
                            );
                            let other = other.resize_bilinear(image.height(), image.width());
                            let other_boxes: Vec<BBox> = by_image
                                .get(&partner.id)
                                .cloned()
                                .unwrap_or_default()
                                .into_iter()
                                .map(|b| {
                                    BBox::new(b.x * fx, b.y * fy, b.w * fx, b.h * fy, b.category)
                                })
                                .collect();
                            let lambda = p.draw_lambda(&mut stream)?;
                            record.lambda = Some(lambda);
                            record.partner = Some(partner.id);
                            augment::mixup(&image, &boxes, &other, &other_boxes, lambda)?
                        }
                        method => {
                            let dropped = match method {
                                AugmentMethod::Cutout(p) => augment::cutout(&image, p, &mut stream),
                                AugmentMethod::Rerase(p) => {
                                    augment::random_erase(&image, p, &mut stream)
                                }
                                AugmentMethod::Gridmask(p) => {
                                    augment::gridmask(&image, p, &mut stream)
                                }
                                AugmentMethod::Has(p) => {
                                    augment::hide_and_seek(&image, p, &mut stream)
                                }
                                AugmentMethod::Baseline(_) | AugmentMethod::Mixup(_) => {
                                    unreachable!()
                                }
                            };
                            record.regions = dropped.regions.iter().map(rect_arr).collect();
                            (
                                dropped.image,
                                boxes
                                    .iter()
                                    .map(|&bbox| WeightedBox { bbox, weight: 1.0 })
                                    .collect(),
                            )
                        }
                    };
                    let file = PathBuf::from(format!("images/{:06}.png", entry.id));
                    png::save(out.join(&file), &img, None)?;
                    let new_entry = ImageEntry {
                        id: entry.id,
                        file,
                        width: img.width(),
                        height: img.height(),
                    };
                    let anns = weighted
                        .into_iter()
                        .map(|w| {
                            let mut a = Annotation::new(entry.id, w.bbox);
                            if w.weight != 1.0 {
                                a.weight = Some(w.weight);
                            }
                            a
                        })
                        .collect();
                    Ok((new_entry, anns, record))
                })
                .collect::<Result<Vec<_>>>()
        })?;
    let mut out_manifest = DatasetManifest::new(manifest.categories.clone());
    let mut records = Vec::with_capacity(n);
    for (entry, anns, record) in results {
        out_manifest.images.push(entry);
        out_manifest.annotations.extend(anns);
        records.push(record);
    }
    let report = AugmentReport {
        method: spec.method.name().to_string(),
        seed: spec.seed,
        images: records,
    };
    out_manifest.save(out.join("manifest.json"))?;
    write_json(&out.join(AUGMENT_REPORT_FILE), &report)?;
    Ok((out_manifest, report))
}

fn cmd_augment(cli: &Cli, a: &AugmentArgs) -> Result<()> {
    let (manifest, store) = load_manifest(&a.manifest)?;
    let spec = match (&a.config, &a.method) {
        (Some(path), _) => {
            serde_json::from_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?
        }
        (None, Some(name)) => AugmentSpec {
            method: AugmentMethod::from_name(name)?,
            seed: cli.seed,
        },
        (None, None) => {
            return Err(Error::InvalidArgument(
                "pass --method NAME or --config FILE".into(),
            ))
        }
    };
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let (out, _) = augment_dataset(&manifest, &store, &spec, cli.jobs, &cli.out)?;
    println!(
        "augmented {} images with {}",
        out.images.len(),
        spec.method.name()
    );
    Ok(())
}

/// `0.8333`, `1.0`: four decimals without trailing zeros, keeping one.
pub fn format_score(v: f64) -> String {
    let s = format!("{v:.4}");
    let trimmed = s.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0")
    } else {
        trimmed.to_string()
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let gt = DatasetManifest::load(&a.gt)?;
    let dets = DatasetManifest::load(&a.dets)?;
    let interp = match a.interp {
        InterpArg::AllPoint => Interpolation::AllPoint,
        InterpArg::ElevenPoint => Interpolation::ElevenPoint,
    };
    let report = evaluate_manifests(&gt, &dets, a.iou, interp)?;
    for (name, ap) in &report.per_category {
        println!("AP[{name}] = {}", format_score(*ap));
    }
    for name in &report.skipped {
        println!("AP[{name}] = n/a (no ground truth)");
    }
    let label = if (a.iou - 0.5).abs() < 1e-12 {
        "mAP50".to_string()
    } else {
        format!("mAP@{}", a.iou)
    };
    println!("{label} = {}", format_score(report.mean));
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BlockCheck {
    prefix: String,
    params: usize,
}

fn cmd_describe_net(a: &DescribeNetArgs) -> Result<()> {
    let descriptor = match &a.descriptor {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => {
            let four = |v: &[usize], what: &str| -> Result<[usize; 4]> {
                v.try_into().map_err(|_| {
                    Error::InvalidArgument(format!("--{what} needs 4 values, got {}", v.len()))
                })
            };
            BackboneDescriptor::reference(four(&a.widths, "widths")?, four(&a.blocks, "blocks")?)
        }
    };
    let report = describe_backbone(&descriptor)?;
    let mut checked = Vec::new();
    if let Some(path) = &a.weights {
        let file = WeightFile::load(path)?;
        for s in &report.stages {
            for b in 0..s.blocks {
                let prefix = format!("stage{}.block{}", s.stage, b);
                let cfg = MffConfig::from_tensors(&file, &prefix)?;
                let params = crate::nn::param_count(&cfg);
                if params != s.params_per_block
                    || cfg.in_channels != s.channels
                    || cfg.kernels != s.kernels
                {
                    return Err(Error::InvalidNetwork(format!(
                        "{prefix}: weights describe {} channels, kernels {:?}, {params} parameters; descriptor expects {} channels, kernels {:?}, {} parameters",
                        cfg.in_channels, cfg.kernels, s.channels, s.kernels, s.params_per_block
                    )));
                }
                checked.push(BlockCheck { prefix, params });
            }
        }
    }
    let mut body = serde_json::to_value(&report)?;
    if a.weights.is_some() {
        body["checked_blocks"] = serde_json::to_value(&checked)?;
    }
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(())
}
