//! Writes a procedural seabed dataset (PNG images + manifest.json) that the
//! `seaclone` subcommands can consume.
//!
//! ```text
//! cargo run --example demo_dataset -- /tmp/seabed 20 7
//! seaclone --out /tmp/crops crop-objects --manifest /tmp/seabed/manifest.json --count seaurchin=10
//! ```

use std::path::PathBuf;

use seaclone::demo::{write_dataset, SceneConfig};
use seaclone::model::{category_counts, DatasetManifest};

fn main() -> seaclone::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "seabed-demo".into()));
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let path = write_dataset(&dir, n, &SceneConfig::default(), seed)?;
    let manifest = DatasetManifest::load(&path)?;
    println!(
        "wrote {} images to {}",
        manifest.images.len(),
        dir.display()
    );
    for (name, count) in category_counts(&manifest) {
        println!("  {name:12} {count}");
    }
    Ok(())
}
