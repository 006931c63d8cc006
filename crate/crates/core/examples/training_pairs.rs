//! Builds real/fake pairs by pasting same-category crops over annotated
//! objects, then scores each pair with the box-weighted region loss.

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seaclone::compositor::{build_object_set, build_training_pair, choose_cover};
use seaclone::demo::{dataset, SceneConfig};
use seaclone::model::{ImageStore, RngConfig};
use seaclone::region_loss::{build_region_mask, region_loss};

fn main() -> seaclone::Result<()> {
    let (manifest, store) = dataset(6, &SceneConfig::default(), 9);
    let counts = IndexMap::from([
        ("seaurchin".to_string(), 6),
        ("seacucumber".to_string(), 2),
        ("scallop".to_string(), 2),
    ]);
    let set = build_object_set(&manifest, &store, &counts, &RngConfig::new(2))?;
    let boxes = seaclone::compositor::boxes_by_image(&manifest);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for entry in &manifest.images {
        let image = store.load_image(entry)?;
        let b = boxes.get(&entry.id).cloned().unwrap_or_default();
        let cover = choose_cover(b.len(), 0.5, &mut rng);
        let pair = build_training_pair(&image, &b, &cover, &set, &mut rng)?;
        let mask = build_region_mask(&pair.covered, image.height(), image.width());
        println!(
            "image {}: covered {}/{} objects, region loss {:.5}",
            entry.id,
            pair.covered.len(),
            b.len(),
            region_loss(&pair.fake, &pair.real, &mask)?
        );
    }
    Ok(())
}
