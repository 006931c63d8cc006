//! Runs every comparison augmentation on one scene and writes the results.
//!
//! ```text
//! cargo run --example augmentations -- /tmp/aug
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seaclone::augment::{
    baseline_geometry, cutout, draw_baseline, gridmask, hide_and_seek, mixup, random_erase,
    BaselineParams, CutoutParams, ErasingParams, GridMaskParams, HideSeekParams, MixupParams,
};
use seaclone::demo::{scene, SceneConfig};
use seaclone::model::png;

fn main() -> seaclone::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "augment-demo".into()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (img, boxes) = scene(&SceneConfig::default(), &mut rng);
    let (other, other_boxes) = scene(&SceneConfig::default(), &mut rng);
    png::save(out.join("original.png"), &img, None)?;

    let params = BaselineParams::default();
    let draw = draw_baseline(&img, &params, &mut rng)?;
    let (base, kept) = baseline_geometry(&img, &boxes, &draw, &params)?;
    println!(
        "baseline {draw:?}: {} -> {} boxes, {}x{}",
        boxes.len(),
        kept.len(),
        base.width(),
        base.height()
    );
    png::save(out.join("baseline.png"), &base, None)?;

    let drops = [
        ("cutout", cutout(&img, &CutoutParams::default(), &mut rng)),
        (
            "rerase",
            random_erase(&img, &ErasingParams::default(), &mut rng),
        ),
        (
            "gridmask",
            gridmask(&img, &GridMaskParams::default(), &mut rng),
        ),
        (
            "has",
            hide_and_seek(&img, &HideSeekParams::default(), &mut rng),
        ),
    ];
    for (name, d) in &drops {
        let area: usize = d.regions.iter().map(|r| r.area()).sum();
        println!("{name:8} {} regions, {area} px", d.regions.len());
        png::save(out.join(format!("{name}.png")), &d.image, None)?;
    }

    let lambda = MixupParams::default().draw_lambda(&mut rng)?;
    let (mixed, labels) = mixup(&img, &boxes, &other, &other_boxes, lambda)?;
    println!("mixup lambda {lambda:.3}: {} weighted boxes", labels.len());
    png::save(out.join("mixup.png"), &mixed, None)?;
    println!("images in {}", out.display());
    Ok(())
}
