//! Instance-size statistics of a manifest, with CSV and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{category_counts, DatasetManifest};

/// Small-object threshold on relative area used by the default report.
pub const DEFAULT_SMALL_THRESHOLD: f64 = 0.01654;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsOptions {
    /// `[width, height]` that mean object sizes are rescaled to.
    pub reference: [usize; 2],
    /// Relative-area thresholds to report the fraction of instances below.
    pub thresholds: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub bins: usize,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            reference: [512, 512],
            thresholds: vec![DEFAULT_SMALL_THRESHOLD],
            quantiles: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSize {
    pub image_id: u64,
    pub category: String,
    pub width: f64,
    pub height: f64,
    pub relative_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BelowThreshold {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSize {
    pub reference: [usize; 2],
    pub width: f64,
    pub height: f64,
    pub relative_area: f64,
    /// `relative_area` as a percentage with 3 significant figures.
    pub relative_area_percent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub images: usize,
    pub instances: usize,
    pub counts: IndexMap<String, usize>,
    pub quantiles: Vec<Quantile>,
    pub below: Vec<BelowThreshold>,
    pub mean_size: MeanSize,
    #[serde(skip)]
    pub sizes: Vec<InstanceSize>,
}

/// Formats `x` with `sig` significant figures.
pub fn format_significant(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i64;
    let mut decimals = (sig as i64 - 1 - exp).max(0) as usize;
    let rounded: f64 = format!("{x:.decimals$}").parse().unwrap_or(x);
    // Rounding can carry into the next power of ten (9.995 -> 10.00).
    if rounded.abs() >= 10f64.powi(exp as i32 + 1) && decimals > 0 {
        decimals -= 1;
    }
    format!("{x:.decimals$}")
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fraction of `values` strictly below `threshold`.
pub fn fraction_below(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| v < threshold).count() as f64 / values.len() as f64
}

pub fn stats(manifest: &DatasetManifest, options: &StatsOptions) -> Result<StatsReport> {
    if manifest.annotations.is_empty() {
        return Err(Error::InvalidArgument("manifest has no annotations".into()));
    }
    let [rw, rh] = options.reference;
    if rw == 0 || rh == 0 {
        return Err(Error::InvalidArgument(
            "reference resolution must be positive".into(),
        ));
    }
    let mut sizes = Vec::with_capacity(manifest.annotations.len());
    let (mut sum_w, mut sum_h) = (0.0, 0.0);
    for a in &manifest.annotations {
        let img = manifest
            .image(a.image_id)
            .ok_or(Error::UnknownImage(a.image_id))?;
        let b = a.bbox;
        if b.is_degenerate() {
            return Err(Error::InvalidManifest(format!(
                "degenerate box in image {}",
                a.image_id
            )));
        }
        let area = (img.width * img.height) as f64;
        sizes.push(InstanceSize {
            image_id: a.image_id,
            category: manifest.category_name(b.category).to_string(),
            width: b.w,
            height: b.h,
            relative_area: b.area() / area,
        });
        sum_w += b.w * rw as f64 / img.width as f64;
        sum_h += b.h * rh as f64 / img.height as f64;
    }
    let n = sizes.len() as f64;
    let mut sorted: Vec<f64> = sizes.iter().map(|s| s.relative_area).collect();
    sorted.sort_by(f64::total_cmp);
    let (mw, mh) = (sum_w / n, sum_h / n);
    let rel = mw * mh / (rw * rh) as f64;
    Ok(StatsReport {
        images: manifest.images.len(),
        instances: sizes.len(),
        counts: category_counts(manifest),
        quantiles: options
            .quantiles
            .iter()
            .map(|&p| Quantile {
                p,
                value: quantile_sorted(&sorted, p),
            })
            .collect(),
        below: options
            .thresholds
            .iter()
            .map(|&t| BelowThreshold {
                threshold: t,
                fraction: fraction_below(&sorted, t),
            })
            .collect(),
        mean_size: MeanSize {
            reference: options.reference,
            width: mw,
            height: mh,
            relative_area: rel,
            relative_area_percent: format!("{}%", format_significant(rel * 100.0, 3)),
        },
        sizes,
    })
}

/// Per-instance table: `image_id,category,width,height,relative_area`.
pub fn sizes_csv(report: &StatsReport) -> String {
    let mut out = String::from("image_id,category,width,height,relative_area\n");
    for s in &report.sizes {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.image_id, s.category, s.width, s.height, s.relative_area
        );
    }
    out
}

/// Equal-width bin counts over `[0, max]`.
pub fn histogram(values: &[f64], bins: usize) -> (f64, Vec<usize>) {
    let bins = bins.max(1);
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut counts = vec![0usize; bins];
    if max <= 0.0 {
        counts[0] = values.len();
        return (max, counts);
    }
    for &v in values {
        let k = ((v / max) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    (max, counts)
}

/// Histogram of relative instance areas as a standalone SVG document.
pub fn histogram_svg(report: &StatsReport, bins: usize) -> String {
    let values: Vec<f64> = report.sizes.iter().map(|s| s.relative_area).collect();
    let (max, counts) = histogram(&values, bins);
    let (w, h, left, bottom, top, right) = (640.0, 360.0, 60.0, 40.0, 20.0, 20.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar_w = plot_w / counts.len() as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, &c) in counts.iter().enumerate() {
        let bh = plot_h * c as f64 / peak;
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#3b6ea5"/>"##,
            left + i as f64 * bar_w,
            top + plot_h - bh,
            (bar_w - 1.0).max(0.5),
            bh
        );
    }
    let axis_y = top + plot_h;
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        left + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="{}" font-size="12" font-family="sans-serif">0</text>"#,
        axis_y + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="end">{}</text>"#,
        left + plot_w,
        axis_y + 16.0,
        format_significant(max, 3)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="middle">relative instance area</text>"#,
        left + plot_w / 2.0,
        h - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="end">{}</text>"#,
        left - 6.0,
        top + 12.0,
        peak as usize
    );
    svg.push_str("</svg>\n");
    svg
}

pub const STATS_FILE: &str = "stats.json";
pub const SIZES_FILE: &str = "sizes.csv";
pub const HISTOGRAM_FILE: &str = "histogram.svg";

/// Writes `stats.json`, `sizes.csv` and `histogram.svg` into `dir`.
pub fn write_stats(report: &StatsReport, bins: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (STATS_FILE, serde_json::to_string_pretty(report)?),
        (SIZES_FILE, sizes_csv(report)),
        (HISTOGRAM_FILE, histogram_svg(report, bins)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sea_farm_categories, Annotation, BBox, CategoryId, ImageEntry};

    fn manifest(w: usize, h: usize, boxes: &[(f64, f64)]) -> DatasetManifest {
        let mut m = DatasetManifest::new(sea_farm_categories());
        m.images.push(ImageEntry {
            id: 1,
            file: "a.png".into(),
            width: w,
            height: h,
        });
        for &(bw, bh) in boxes {
            m.annotations.push(Annotation::new(
                1,
                BBox::new(0.0, 0.0, bw, bh, CategoryId(1)),
            ));
        }
        m
    }

    #[test]
    fn reference_sized_object_reports_percent() {
        let r = stats(
            &manifest(512, 512, &[(44.0, 28.0)]),
            &StatsOptions::default(),
        )
        .unwrap();
        assert_eq!(r.sizes[0].relative_area, 1232.0 / 262144.0);
        assert_eq!(r.mean_size.relative_area_percent, "0.470%");
        assert_eq!((r.mean_size.width, r.mean_size.height), (44.0, 28.0));
    }

    #[test]
    fn full_image_box_has_unit_area() {
        let r = stats(&manifest(40, 30, &[(40.0, 30.0)]), &StatsOptions::default()).unwrap();
        assert_eq!(r.sizes[0].relative_area, 1.0);
    }

    #[test]
    fn fraction_below_by_tally() {
        // 9 boxes at 1% of a 100x100 image, one at 50%.
        let mut boxes = vec![(10.0, 10.0); 9];
        boxes.push((50.0, 100.0));
        let r = stats(&manifest(100, 100, &boxes), &StatsOptions::default()).unwrap();
        let tally = r.sizes.iter().filter(|s| s.relative_area < 0.01654).count() as f64 / 10.0;
        assert_eq!(r.below[0].fraction, tally);
        assert_eq!(r.below[0].fraction, 0.9);
    }

    #[test]
    fn empty_manifest_is_an_error() {
        assert!(stats(&manifest(10, 10, &[]), &StatsOptions::default()).is_err());
    }

    #[test]
    fn significant_figures() {
        assert_eq!(format_significant(0.46997, 3), "0.470");
        assert_eq!(format_significant(12.345, 3), "12.3");
        assert_eq!(format_significant(9.9996, 3), "10.0");
        assert_eq!(format_significant(1234.0, 3), "1234");
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn outputs_are_written() {
        let r = stats(
            &manifest(64, 64, &[(8.0, 8.0), (16.0, 4.0)]),
            &StatsOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_stats(&r, 10, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join(SIZES_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 3);
        let svg = fs::read_to_string(dir.path().join(HISTOGRAM_FILE)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(STATS_FILE)).unwrap())
                .unwrap();
        assert_eq!(json["instances"], 2);
    }
}
