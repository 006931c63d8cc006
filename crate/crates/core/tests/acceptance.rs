//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seaclone::augment::{
    cutout, gridmask, hide_and_seek, mixup, random_erase, CutoutParams, Dropped, ErasingParams,
    GridMaskParams, HideSeekParams,
};
use seaclone::compositor::{
    boxes_by_image, build_object_set, write_dataset, EmbedOutcome, GenerateOptions,
    PlacementPolicy, SynthesisSpec,
};
use seaclone::demo::{self, SceneConfig};
use seaclone::eval::{
    average_precision, decode, iou, map50, CategoryEval, DecodeParams, Detection, HeadMaps,
    ImageGroup,
};
use seaclone::model::{
    category_counts, BBox, CategoryId, DatasetManifest, ImageBuffer, ObjectCrop, PixelRect,
    RngConfig,
};
use seaclone::nn::mbp::raw_taps;
use seaclone::nn::{
    describe_backbone, make_blur_kernel, max_pool_stride2, mbp_forward, mff_forward, param_count,
    BackboneDescriptor, MffConfig, Tensor4,
};
use seaclone::poisson::{
    seamless_clone_with, solve_dirichlet, CloneMask, CloneOptions, GuidanceDivergence,
    GuidanceMode, SolverParams,
};
use seaclone::region_loss::{build_region_mask, dr_total, region_loss, RegionMask};
use seaclone::stats::{stats, StatsOptions};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);
type DropOp = Box<dyn Fn(&ImageBuffer, &mut ChaCha8Rng) -> Dropped>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: seaclone::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (upper, lower) = a.split_at_mut(row);
                for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *dst -= f * src;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for case in 0..20 {
        let (h, w) = (rng.random_range(4..=11), rng.random_range(4..=11));
        let mut interior = vec![false; h * w];
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                interior[y * w + x] = rng.random_bool(0.75);
            }
        }
        interior[(h / 2) * w + w / 2] = true;
        let cells: Vec<usize> = (0..h * w).filter(|&i| interior[i]).collect();
        ensure(cells.len() <= 81, || {
            format!("case {case} has {} unknowns", cells.len())
        })?;
        let mask = lib(CloneMask::new(h, w, interior.clone()))?;
        let boundary = ImageBuffer::from_fn(h, w, 1, |_, _, _| rng.random());
        let div_values: Vec<f64> = (0..h * w).map(|_| rng.random_range(-0.5..0.5)).collect();
        let div = lib(GuidanceDivergence::from_planes(h, w, 1, div_values.clone()))?;

        let start = Instant::now();
        let sol = lib(solve_dirichlet(
            &div,
            &boundary,
            &mask,
            &SolverParams::default(),
        ))?;
        slowest = slowest.max(start.elapsed());

        // Δu = div on the interior: 4u_p - Σ interior u_q = Σ boundary b_q - div_p.
        let pos = |i: usize| cells.iter().position(|&c| c == i);
        let n = cells.len();
        let mut a = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for (r, &i) in cells.iter().enumerate() {
            a[r][r] = 4.0;
            rhs[r] = -div_values[i];
            for q in [i - 1, i + 1, i - w, i + w] {
                match pos(q) {
                    Some(k) => a[r][k] -= 1.0,
                    None => rhs[r] += boundary.get(q / w, q % w, 0),
                }
            }
        }
        let exact = dense_solve(a, rhs);
        let num: f64 = cells
            .iter()
            .zip(&exact)
            .map(|(&i, e)| (sol.image.get(i / w, i % w, 0) - e).powi(2))
            .sum();
        let den: f64 = exact.iter().map(|e| e * e).sum();
        let rel = (num / den).sqrt();
        worst = worst.max(rel);
        ensure(rel < 1e-6, || {
            format!("case {case}: relative error {rel:.3e}")
        })?;
    }
    ensure(slowest < Duration::from_secs(1), || {
        format!("slowest solve took {slowest:?}")
    })?;
    Ok(format!(
        "20 systems, worst relative error {worst:.2e}, slowest {slowest:?}"
    ))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let (h, w) = (rng.random_range(12..=40), rng.random_range(12..=40));
        let bg = ImageBuffer::from_fn(h, w, 3, |_, _, _| rng.random());
        let (cw, ch) = (rng.random_range(3..=w - 2), rng.random_range(3..=h - 2));
        let (x, y) = (
            rng.random_range(1..=w - cw - 1),
            rng.random_range(1..=h - ch - 1),
        );
        let rect = PixelRect::new(x, y, cw, ch);
        let source_box = BBox::new(x as f64, y as f64, cw as f64, ch as f64, CategoryId(0));
        let crop = lib(ObjectCrop::rectangle(
            lib(bg.crop(rect))?,
            CategoryId(0),
            0,
            source_box,
        ))?;
        let mode = if rng.random_bool(0.5) {
            GuidanceMode::SourceGradients
        } else {
            GuidanceMode::MixedGradients
        };
        let out = lib(seamless_clone_with(
            &bg,
            &crop,
            (x, y),
            &CloneOptions {
                mode,
                ..Default::default()
            },
        ))?;
        let mask = lib(CloneMask::from_alpha(crop.alpha()))?;
        for yy in 0..h {
            for xx in 0..w {
                let inside = rect.contains(xx, yy) && mask.is_interior(yy - y, xx - x);
                for c in 0..3 {
                    let (a, b) = (out.get(yy, xx, c), bg.get(yy, xx, c));
                    if inside {
                        worst = worst.max((a - b).abs());
                    } else {
                        ensure(a.to_bits() == b.to_bits(), || {
                            format!("case {case}: pixel ({xx}, {yy}) outside the mask changed")
                        })?;
                    }
                }
            }
        }
        ensure(worst <= 1e-6, || {
            format!("case {case}: deviation {worst:.3e}")
        })?;
    }
    Ok(format!(
        "50 composites, max deviation {worst:.2e}, outside pixels bit-identical"
    ))
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()) {
            if entry.is_dir() {
                stack.push(entry);
            } else {
                let rel = entry
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, fs::read(&entry).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_3() -> Check {
    let scale = 0.01;
    let scaled = |v: usize| seaclone::cli::profile::scaled(v, scale);
    let targets: IndexMap<String, usize> = seaclone::cli::profile::EXPANDED_TARGETS
        .iter()
        .map(|&(k, v)| (k.to_string(), scaled(v)))
        .collect();
    let n_images = scaled(seaclone::cli::profile::EXPANDED_IMAGES);
    ensure(
        targets.values().copied().collect::<Vec<_>>() == [184, 1014, 96] && n_images == 187,
        || format!("profile scaled to {targets:?} over {n_images} images"),
    )?;

    let (source, source_store) = demo::dataset(40, &SceneConfig::default(), 3);
    let crop_counts: IndexMap<String, usize> = seaclone::cli::profile::CROP_COUNTS
        .iter()
        .map(|&(k, v)| (k.to_string(), scaled(v).max(1)))
        .collect();
    let set = lib(build_object_set(
        &source,
        &source_store,
        &crop_counts,
        &RngConfig::new(3),
    ))?;

    let bg_config = SceneConfig {
        objects: [(0, 1), (0, 2), (0, 0)],
        ..Default::default()
    };
    let (backgrounds, store) = demo::dataset(n_images, &bg_config, 4);
    let bg_counts = category_counts(&backgrounds);
    for (name, &t) in &targets {
        ensure(bg_counts[name] <= t, || {
            format!("background already holds {} {name}", bg_counts[name])
        })?;
    }

    let spec = SynthesisSpec {
        targets: targets.clone(),
        rng: RngConfig::new(2024),
        ..Default::default()
    };
    let policy = PlacementPolicy::default();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |dir: &Path| {
        write_dataset(
            dir,
            &backgrounds,
            &store,
            &set,
            &spec,
            &policy,
            &GenerateOptions::default(),
        )
    };
    let out = lib(run(&tmp.path().join("a")))?;
    lib(run(&tmp.path().join("b")))?;

    let final_counts = category_counts(&out.manifest);
    ensure(final_counts == targets, || {
        format!("final counts {final_counts:?}, targets {targets:?}")
    })?;
    ensure(out.manifest.images.len() == n_images, || {
        format!("{} images", out.manifest.images.len())
    })?;
    for a in &out.manifest.annotations {
        let img = out
            .manifest
            .image(a.image_id)
            .ok_or("annotation on unknown image")?;
        ensure(
            a.bbox.fits_within(img.width as f64, img.height as f64),
            || format!("{:?} out of bounds", a.bbox),
        )?;
    }

    let by_image = boxes_by_image(&backgrounds);
    let mut embeds = 0;
    for img in &out.report.images {
        let mut present = by_image
            .get(&img.background_id)
            .cloned()
            .unwrap_or_default();
        for rec in &img.embeds {
            if let EmbedOutcome::Embedded {
                bbox: [x, y, w, h], ..
            } = rec.outcome
            {
                let cat = lib(out.manifest.category_id(&rec.category))?;
                let b = BBox::new(x, y, w, h, cat);
                ensure(present.iter().all(|p| iou(&b, p) <= policy.max_iou), || {
                    format!("image {}: overlap", img.id)
                })?;
                if present.iter().any(|p| p.category == cat) {
                    ensure(policy.within_vicinity(&b, &present), || {
                        format!("image {}: vicinity", img.id)
                    })?;
                }
                present.push(b);
                embeds += 1;
            }
        }
    }

    let (a, b) = (
        files_under(&tmp.path().join("a")),
        files_under(&tmp.path().join("b")),
    );
    ensure(a == b, || "two runs with the same seed differ".into())?;
    Ok(format!(
        "{n_images} images, counts {:?}, {embeds} embeds checked, {} files byte-identical",
        final_counts.values().collect::<Vec<_>>(),
        a.len()
    ))
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let img = ImageBuffer::from_fn(9, 11, 3, |_, _, _| rng.random());
    let mask = build_region_mask(&[BBox::new(2.0, 1.0, 4.0, 5.0, CategoryId(0))], 9, 11);
    let zero = lib(region_loss(&img, &img, &mask))?;
    ensure(zero == 0.0, || format!("pred = target gives {zero}"))?;

    let pred = lib(ImageBuffer::from_vec(2, 2, 1, vec![0.1, 0.0, 0.0, 0.2]))?;
    let target = ImageBuffer::new(2, 2, 1);
    let m = lib(RegionMask::from_weights(2, 2, vec![100.0, 0.1, 0.1, 0.1]))?;
    let hand = lib(region_loss(&pred, &target, &m))?;
    let expected = 0.25 * (0.1 * 100.0 + 0.2 * 0.1);
    ensure(
        (hand - 2.505).abs() <= 1e-9 && (hand - expected).abs() <= 1e-12,
        || format!("hand case gives {hand}"),
    )?;

    let base = lib(dr_total(1.0, 10000.0, 2.505, 1e-4))?;
    ensure((base.total - 4.505).abs() <= 1e-12, || {
        format!("(1, 10000, 2.505) totals {}", base.total)
    })?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (c, a, r) = (
            rng.random_range(0.0..5.0),
            rng.random_range(0.0..1e4),
            rng.random_range(0.0..5.0),
        );
        let t0 = lib(dr_total(c, a, r, 1e-4))?;
        let t1 = lib(dr_total(c, a + 1.0, r, 1e-4))?;
        worst = worst.max(((t1.total - t0.total) - 1e-4).abs());
        ensure(t0.lambda_adv == 1e-4, || "weight not recorded".into())?;
    }
    ensure(worst <= 1e-12, || {
        format!("adversarial step off by {worst:.3e}")
    })?;
    Ok(format!(
        "zero loss exact, hand case {hand:.12}, adversarial step within {worst:.1e} of 1e-4"
    ))
}

fn box_smooth(x: &Tensor4) -> Tensor4 {
    let [_, _, h, w] = x.dims();
    Tensor4::from_fn(x.dims(), |b, c, i, j| {
        let mut s = 0.0;
        let mut n = 0.0;
        for di in -1..=1isize {
            for dj in -1..=1isize {
                let (ii, jj) = (i as isize + di, j as isize + dj);
                if ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < w {
                    s += x.get(b, c, ii as usize, jj as usize);
                    n += 1.0;
                }
            }
        }
        s / n
    })
}

fn window(x: &Tensor4, dy: usize, dx: usize, size: usize) -> Tensor4 {
    Tensor4::from_fn([x.batch(), x.channels(), size, size], |b, c, i, j| {
        x.get(b, c, i + dy, j + dx)
    })
}

/// Mean absolute change of the stride-2 output, over interior cells, when
/// the input window moves by one pixel diagonally. Half a cell rounds to no
/// output shift, so cells are compared in place.
fn shift_statistic(f: &dyn Fn(&Tensor4) -> Tensor4, x: &Tensor4, size: usize) -> f64 {
    let base = f(&window(x, 0, 0, size));
    let moved = f(&window(x, 1, 1, size));
    let (oh, ow) = (base.height(), base.width());
    let margin = 2;
    let mut sum = 0.0;
    let mut n = 0.0;
    for c in 0..base.channels() {
        for i in margin..oh - margin {
            for j in margin..ow - margin {
                sum += (moved.get(0, c, i, j) - base.get(0, c, i, j)).abs();
                n += 1.0;
            }
        }
    }
    sum / n
}

fn criterion_5() -> Check {
    let constant = Tensor4::filled(2, 7, 9, 13, 5.0);
    let out = lib(mbp_forward(&constant, 3))?;
    let dev = out
        .data()
        .iter()
        .map(|v| (v - 5.0).abs())
        .fold(0.0, f64::max);
    ensure(dev <= 1e-6, || format!("constant deviates by {dev:.3e}"))?;
    let dims = lib(mbp_forward(&Tensor4::zeros(1, 6, 8, 8), 3))?.dims();
    ensure(dims == [1, 6, 4, 4], || {
        format!("(1,6,8,8) maps to {dims:?}")
    })?;

    for (size, raw) in [
        (3, vec![1.0, 2.0, 1.0]),
        (5, vec![1.0, 4.0, 6.0, 4.0, 1.0]),
        (7, vec![1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]),
    ] {
        ensure(raw_taps(size) == Some(raw.as_slice()), || {
            format!("raw taps for {size}")
        })?;
        let k = lib(make_blur_kernel(size))?;
        let total: f64 = raw.iter().sum();
        let sum2: f64 = k.weights().iter().sum();
        ensure((sum2 - 1.0).abs() <= 1e-9, || {
            format!("size {size} sums to {sum2}")
        })?;
        for a in 0..size {
            ensure((k.taps()[a] - raw[a] / total).abs() <= 1e-15, || {
                format!("size {size} tap {a}")
            })?;
            for b in 0..size {
                ensure(
                    (k.weight(a, b) - raw[a] * raw[b] / (total * total)).abs() <= 1e-15,
                    || format!("size {size} weight ({a},{b})"),
                )?;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let size = 32;
    let (mut blur_stat, mut plain_stat) = (0.0, 0.0);
    let trials = 120;
    for _ in 0..trials {
        let noise = Tensor4::from_fn([1, 3, size + 1, size + 1], |_, _, _, _| rng.random());
        let x = box_smooth(&noise);
        blur_stat += shift_statistic(&|t| mbp_forward(t, 3).unwrap(), &x, size);
        plain_stat += shift_statistic(&max_pool_stride2, &x, size);
    }
    blur_stat /= trials as f64;
    plain_stat /= trials as f64;
    ensure(blur_stat <= plain_stat, || {
        format!("shift statistic {blur_stat:.4} exceeds max-pool {plain_stat:.4}")
    })?;
    Ok(format!(
        "constant within {dev:.1e}, kernels match, shift statistic {blur_stat:.4} vs max-pool {plain_stat:.4} over {trials} inputs"
    ))
}

fn enumerate_params(c: usize, kernels: &[usize]) -> usize {
    let nc = kernels.len() * c;
    let mut total = c * nc + nc;
    for &k in kernels {
        total += k * k * c + c;
    }
    total + nc * c + c
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let zero = MffConfig::zeros(5, &[3, 5, 7]);
    let x = Tensor4::from_fn([2, 5, 7, 6], |_, _, _, _| rng.random_range(-1.0..1.0));
    let y = lib(mff_forward(&x, &zero))?;
    ensure(y == x, || "zero-weight block is not the identity".into())?;

    let mut configs: Vec<(usize, Vec<usize>)> = vec![(16, vec![3, 5, 7])];
    while configs.len() < 10 {
        let c = rng.random_range(1..=24);
        let n = rng.random_range(1..=4);
        configs.push((c, [3, 5, 7, 9][..n].to_vec()));
    }
    for (c, kernels) in &configs {
        let cfg = MffConfig::random(*c, kernels, 0.1, &mut rng);
        let stored = cfg.expand_weight.len()
            + cfg.expand_bias.len()
            + cfg
                .branches
                .iter()
                .map(|b| b.weights.len() + b.bias.len())
                .sum::<usize>()
            + cfg.project_weight.len()
            + cfg.project_bias.len();
        let expected = enumerate_params(*c, kernels);
        let got = param_count(&cfg);
        ensure(got == expected && stored == expected, || {
            format!("C={c} {kernels:?}: {got} vs {expected} ({stored} stored)")
        })?;
    }
    let reference = param_count(&MffConfig::zeros(16, &[3, 5, 7]));
    ensure(reference == 2976, || {
        format!("C=16 [3,5,7] has {reference} params")
    })?;

    let good = BackboneDescriptor::reference([16, 32, 64, 128], [2, 2, 2, 2]);
    let report = lib(describe_backbone(&good))?;
    ensure(report.total_blocks == 8, || {
        format!("{} blocks", report.total_blocks)
    })?;
    let seven = BackboneDescriptor::reference([16, 32, 64, 128], [2, 2, 2, 1]);
    ensure(describe_backbone(&seven).is_err(), || {
        "7 blocks accepted".into()
    })?;
    let mut wrong_tail = good.clone();
    wrong_tail.stages[3].kernels = vec![3, 5, 7];
    ensure(describe_backbone(&wrong_tail).is_err(), || {
        "stage 5 with [3,5,7] accepted".into()
    })?;
    Ok(format!(
        "identity exact, 10 configs enumerated (C=16 [3,5,7] = {reference}), 8-block rule enforced"
    ))
}

/// Greedy matching plus all-point precision envelope, written out directly.
fn oracle_ap(images: &[(Vec<Detection>, Vec<BBox>)]) -> f64 {
    let total: usize = images.iter().map(|(_, g)| g.len()).sum();
    let mut ranked: Vec<(usize, Detection)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, (d, _))| d.iter().map(move |d| (i, *d)))
        .collect();
    ranked.sort_by(|a, b| b.1.score.total_cmp(&a.1.score));
    if total == 0 {
        return if ranked.is_empty() { 1.0 } else { 0.0 };
    }
    let mut used: Vec<Vec<bool>> = images.iter().map(|(_, g)| vec![false; g.len()]).collect();
    let mut points = Vec::new();
    let mut tp = 0.0;
    for (k, (img, det)) in ranked.iter().enumerate() {
        let gts = &images[*img].1;
        let best = (0..gts.len())
            .filter(|&g| !used[*img][g])
            .map(|g| (g, iou(&det.bbox, &gts[g])))
            .filter(|&(_, v)| v >= 0.5)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((g, _)) = best {
            used[*img][g] = true;
            tp += 1.0;
        }
        points.push((tp / total as f64, tp / (k + 1) as f64));
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, &(r, _)) in points.iter().enumerate() {
        if r > prev_recall {
            let envelope = points[i..].iter().map(|p| p.1).fold(0.0, f64::max);
            ap += (r - prev_recall) * envelope;
            prev_recall = r;
        }
    }
    ap
}

fn random_micro(rng: &mut ChaCha8Rng) -> Vec<(Vec<Detection>, Vec<BBox>)> {
    (0..rng.random_range(1..=3))
        .map(|_| {
            let gts: Vec<BBox> = (0..rng.random_range(0..=4))
                .map(|_| {
                    BBox::new(
                        rng.random_range(0.0..80.0),
                        rng.random_range(0.0..80.0),
                        rng.random_range(5.0..20.0),
                        rng.random_range(5.0..20.0),
                        CategoryId(0),
                    )
                })
                .collect();
            let mut dets = Vec::new();
            for g in &gts {
                if rng.random_bool(0.7) {
                    let (dx, dy) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                    dets.push(Detection {
                        bbox: BBox::new(g.x + dx, g.y + dy, g.w, g.h, CategoryId(0)),
                        score: rng.random(),
                    });
                }
            }
            for _ in 0..rng.random_range(0..=3) {
                dets.push(Detection {
                    bbox: BBox::new(
                        rng.random_range(0.0..80.0),
                        rng.random_range(0.0..80.0),
                        10.0,
                        10.0,
                        CategoryId(0),
                    ),
                    score: rng.random(),
                });
            }
            (dets, gts)
        })
        .collect()
}

fn criterion_7() -> Check {
    let mut maps = HeadMaps::zeros(2, 8, 8);
    maps.set_cell(1, 2, 3, 0.9, (8.0, 12.0), (0.1, 0.2));
    let dets = decode(&maps, &DecodeParams::default());
    ensure(dets.len() == 1, || format!("{} detections", dets.len()))?;
    let d = dets[0];
    let (cx, cy) = d.bbox.center();
    ensure(
        (cx - 12.4).abs() < 1e-9
            && (cy - 8.8).abs() < 1e-9
            && d.bbox.w == 8.0
            && d.bbox.h == 12.0
            && d.score == 0.9
            && d.bbox.category == CategoryId(1),
        || format!("decoded {d:?}"),
    )?;

    let g = |x: f64| BBox::new(x, 0.0, 10.0, 10.0, CategoryId(0));
    let gts = vec![g(0.0), g(50.0)];
    let dets = vec![
        Detection {
            bbox: g(0.0),
            score: 0.9,
        },
        Detection {
            bbox: g(100.0),
            score: 0.8,
        },
        Detection {
            bbox: g(50.0),
            score: 0.7,
        },
    ];
    let ap = average_precision(&dets, &gts, 0.5);
    let oracle = oracle_ap(&[(dets.clone(), gts.clone())]);
    ensure(
        (ap - 0.8333333333).abs() <= 1e-6 && (ap - oracle).abs() <= 1e-12,
        || format!("AP {ap}, oracle {oracle}"),
    )?;

    let perfect: Vec<CategoryEval> = ["seacucumber", "seaurchin", "scallop"]
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let boxes: Vec<BBox> = (0..3)
                .map(|k| BBox::new(20.0 * k as f64, 5.0 * c as f64, 8.0, 8.0, CategoryId(c)))
                .collect();
            CategoryEval {
                name: name.to_string(),
                images: vec![ImageGroup {
                    detections: boxes
                        .iter()
                        .map(|&bbox| Detection { bbox, score: 1.0 })
                        .collect(),
                    ground_truth: boxes,
                }],
            }
        })
        .collect();
    let m = map50(&perfect);
    ensure(m.mean == 1.0, || {
        format!("perfect detections give mAP50 {}", m.mean)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for case in 0..20 {
        let micro = random_micro(&mut rng);
        let groups: Vec<ImageGroup> = micro
            .iter()
            .map(|(d, g)| ImageGroup {
                detections: d.clone(),
                ground_truth: g.clone(),
            })
            .collect();
        let rescaled: Vec<ImageGroup> = groups
            .iter()
            .map(|gr| ImageGroup {
                detections: gr
                    .detections
                    .iter()
                    .map(|d| Detection {
                        score: 0.05 + 0.9 * d.score.powi(3),
                        ..*d
                    })
                    .collect(),
                ground_truth: gr.ground_truth.clone(),
            })
            .collect();
        let eval = |gs: &[ImageGroup]| {
            map50(&[CategoryEval {
                name: "c".into(),
                images: gs.to_vec(),
            }])
        };
        let (a, b) = (eval(&groups), eval(&rescaled));
        let oracle = oracle_ap(&micro);
        let value = a.per_category.get("c").copied().unwrap_or(oracle);
        ensure(a == b, || {
            format!("case {case}: rescaling changed the report")
        })?;
        ensure((value - oracle).abs() <= 1e-12, || {
            format!("case {case}: AP {value} vs oracle {oracle}")
        })?;
    }
    Ok(format!("center ({cx:.1}, {cy:.1}), fixture AP {ap:.6}, perfect mAP50 1.0, 20 rescaled datasets agree"))
}

fn criterion_8() -> Check {
    let mut m = DatasetManifest::new(vec!["obj".into()]);
    m.images.push(seaclone::model::ImageEntry {
        id: 1,
        file: "a.png".into(),
        width: 512,
        height: 512,
    });
    m.annotations.push(seaclone::model::Annotation::new(
        1,
        BBox::new(10.0, 10.0, 44.0, 28.0, CategoryId(0)),
    ));
    let r = lib(stats(&m, &StatsOptions::default()))?;
    let p = &r.mean_size.relative_area_percent;
    ensure(p == "0.470%", || format!("reported {p}"))?;
    Ok(format!("44x28 at 512x512 reports {p}"))
}

fn outside_untouched(before: &ImageBuffer, d: &Dropped) -> bool {
    (0..before.height()).all(|y| {
        (0..before.width()).all(|x| {
            d.regions.iter().any(|r| r.contains(x, y))
                || (0..before.channels())
                    .all(|c| before.get(y, x, c).to_bits() == d.image.get(y, x, c).to_bits())
        })
    })
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let ops: Vec<(&str, DropOp)> = vec![
        (
            "cutout",
            Box::new(|i, r| cutout(i, &CutoutParams::default(), r)),
        ),
        (
            "rerase",
            Box::new(|i, r| random_erase(i, &ErasingParams::default(), r)),
        ),
        (
            "gridmask",
            Box::new(|i, r| gridmask(i, &GridMaskParams::default(), r)),
        ),
        (
            "has",
            Box::new(|i, r| hide_and_seek(i, &HideSeekParams::default(), r)),
        ),
    ];
    for (name, op) in &ops {
        for case in 0..25 {
            let (h, w) = (rng.random_range(8..=48), rng.random_range(8..=48));
            let img = ImageBuffer::from_fn(h, w, 3, |_, _, _| rng.random_range(0.01..1.0));
            let seed = rng.random();
            let a = op(&img, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = op(&img, &mut ChaCha8Rng::seed_from_u64(seed));
            ensure(outside_untouched(&img, &a), || {
                format!("{name} case {case}: pixel outside its regions changed")
            })?;
            ensure(a == b, || format!("{name} case {case}: not deterministic"))?;
        }
    }
    for _ in 0..10 {
        let a = ImageBuffer::from_fn(10, 12, 3, |_, _, _| rng.random());
        let b = ImageBuffer::from_fn(10, 12, 3, |_, _, _| rng.random());
        let ba = [BBox::new(1.0, 1.0, 3.0, 3.0, CategoryId(0))];
        let bb = [BBox::new(5.0, 2.0, 4.0, 4.0, CategoryId(1))];
        let (one, w1) = lib(mixup(&a, &ba, &b, &bb, 1.0))?;
        let (zero, w0) = lib(mixup(&a, &ba, &b, &bb, 0.0))?;
        ensure(one == a && zero == b, || {
            "mixup endpoints are not exact".into()
        })?;
        ensure(
            w1[0].weight == 1.0
                && w1[1].weight == 0.0
                && w0[0].weight == 0.0
                && w0[1].weight == 1.0,
            || "endpoint label weights".into(),
        )?;
        let params = seaclone::augment::MixupParams::default();
        let s: u64 = rng.random();
        let l1 = lib(params.draw_lambda(&mut ChaCha8Rng::seed_from_u64(s)))?;
        let l2 = lib(params.draw_lambda(&mut ChaCha8Rng::seed_from_u64(s)))?;
        ensure(l1 == l2, || "mixup coefficient not deterministic".into())?;
    }
    Ok("cutout, rerase, gridmask, has: 25 cases each untouched outside regions and seed-deterministic; mixup endpoints exact".into())
}

fn run_cli(out: &Path, args: &[&str]) -> Result<String, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_seaclone"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    ensure(output.status.success(), || {
        format!(
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&output.stderr)
        )
    })?;
    Ok(stdout)
}

fn criterion_10() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let manifest = lib(demo::write_dataset(
        &root.join("fixture"),
        20,
        &SceneConfig::default(),
        10,
    ))?;
    let manifest = manifest.to_str().ok_or("non-UTF-8 path")?;
    let (objects, synth, stats_dir) =
        (root.join("objects"), root.join("synth"), root.join("stats"));
    run_cli(
        &objects,
        &[
            "crop-objects",
            "--manifest",
            manifest,
            "--count",
            "seaurchin=12",
            "--count",
            "seacucumber=4",
            "--count",
            "scallop=3",
        ],
    )?;
    let objects_s = objects.to_str().ok_or("non-UTF-8 path")?;
    run_cli(
        &synth,
        &[
            "--seed",
            "5",
            "synthesize",
            "--manifest",
            manifest,
            "--objects",
            objects_s,
            "--target",
            "seaurchin=80",
            "--target",
            "seacucumber=20",
            "--target",
            "scallop=15",
        ],
    )?;
    let synth_manifest = synth.join("manifest.json");
    let synth_manifest = synth_manifest.to_str().ok_or("non-UTF-8 path")?;
    let stats_out = run_cli(&stats_dir, &["stats", "--manifest", synth_manifest])?;
    let eval_out = run_cli(
        root,
        &["eval", "--gt", synth_manifest, "--dets", synth_manifest],
    )?;
    let elapsed = start.elapsed();

    let m = lib(DatasetManifest::load(synth_manifest))?;
    ensure(seaclone::model::validate_manifest(&m).is_empty(), || {
        "synthesized manifest has violations".into()
    })?;
    let counts = category_counts(&m);
    ensure(
        counts.get("seaurchin") == Some(&80)
            && counts.get("seacucumber") == Some(&20)
            && counts.get("scallop") == Some(&15),
        || format!("counts {counts:?}"),
    )?;
    for f in ["stats.json", "sizes.csv", "histogram.svg"] {
        ensure(stats_dir.join(f).is_file(), || {
            format!("stats did not write {f}")
        })?;
    }
    ensure(stats_out.contains("mean size"), || {
        "stats printed no mean size".into()
    })?;
    ensure(eval_out.lines().any(|l| l.trim() == "mAP50 = 1.0"), || {
        format!("eval printed {eval_out}")
    })?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("pipeline took {elapsed:?}")
    })?;
    Ok(format!(
        "crop-objects, synthesize, stats, eval on 20 images in {:.1} s, counts exact, mAP50 = 1.0",
        elapsed.as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Poisson solver vs dense oracle", criterion_1),
        ("seamless-clone identity", criterion_2),
        ("synthesis targets", criterion_3),
        ("region loss", criterion_4),
        ("blur downsampling", criterion_5),
        ("fusion block", criterion_6),
        ("detection evaluation", criterion_7),
        ("relative-area arithmetic", criterion_8),
        ("augmentations", criterion_9),
        ("end-to-end pipeline", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] criterion {}: {name}: {detail} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name}: {why} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
