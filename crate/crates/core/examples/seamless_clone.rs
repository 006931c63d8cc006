//! Clones a bright object into a seabed background with both guidance modes
//! and writes the results as PNG.
//!
//! ```text
//! cargo run --example seamless_clone -- /tmp/clone
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seaclone::demo;
use seaclone::model::{png, BBox, CategoryId, ImageBuffer, ObjectCrop};
use seaclone::poisson::{seamless_clone_with, CloneOptions, GuidanceMode};

fn main() -> seaclone::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "clone-demo".into()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bg = demo::background(160, 120, &mut rng);

    // A shell-coloured disc on a reddish square; the solve keeps the
    // disc's gradients and lets the background tint bleed in.
    let patch = ImageBuffer::from_fn(30, 30, 3, |y, x, c| {
        let r = ((y as f64 - 14.5).powi(2) + (x as f64 - 14.5).powi(2)).sqrt();
        if r < 11.0 {
            [0.9, 0.8, 0.6][c]
        } else {
            [0.6, 0.2, 0.2][c]
        }
    });
    let source = BBox::new(0.0, 0.0, 30.0, 30.0, CategoryId(2));
    let crop = ObjectCrop::rectangle(patch.clone(), CategoryId(2), 0, source)?;

    png::save(out.join("background.png"), &bg, None)?;
    let mut pasted = bg.clone();
    pasted.paste(&patch, 60, 45)?;
    png::save(out.join("direct_paste.png"), &pasted, None)?;

    for (mode, name) in [
        (GuidanceMode::SourceGradients, "source"),
        (GuidanceMode::MixedGradients, "mixed"),
    ] {
        let options = CloneOptions {
            mode,
            ..Default::default()
        };
        let cloned = seamless_clone_with(&bg, &crop, (60, 45), &options)?;
        let changed = cloned
            .data()
            .iter()
            .zip(bg.data())
            .filter(|(a, b)| a != b)
            .count();
        println!("{name:6} guidance: {changed} samples changed");
        png::save(out.join(format!("clone_{name}.png")), &cloned, None)?;
    }
    println!("images in {}", out.display());
    Ok(())
}
