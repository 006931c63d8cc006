//! Instance-size statistics of a procedural dataset and of a single
//! reference-sized object.

use seaclone::demo::{dataset, SceneConfig};
use seaclone::model::{Annotation, BBox, CategoryId, DatasetManifest, ImageEntry};
use seaclone::stats::{stats, StatsOptions};

fn main() -> seaclone::Result<()> {
    let (manifest, _) = dataset(30, &SceneConfig::default(), 4);
    let report = stats(&manifest, &StatsOptions::default())?;
    println!("{} instances in {} images", report.instances, report.images);
    for q in &report.quantiles {
        println!("  q{:.2} relative area = {:.5}", q.p, q.value);
    }
    for b in &report.below {
        println!("  below {}: {:.3}", b.threshold, b.fraction);
    }
    println!(
        "  mean object at 512x512: {}",
        report.mean_size.relative_area_percent
    );

    // A 44x28 object on a 512x512 image.
    let mut single = DatasetManifest::new(vec!["seaurchin".into()]);
    single.images.push(ImageEntry {
        id: 1,
        file: "x.png".into(),
        width: 512,
        height: 512,
    });
    single.annotations.push(Annotation::new(
        1,
        BBox::new(100.0, 100.0, 44.0, 28.0, CategoryId(0)),
    ));
    let r = stats(&single, &StatsOptions::default())?;
    println!(
        "44x28 at 512x512 covers {} of the image",
        r.mean_size.relative_area_percent
    );
    Ok(())
}
