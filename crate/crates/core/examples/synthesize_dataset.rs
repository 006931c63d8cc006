//! Harvests an object set from procedural scenes and expands the scenes to
//! fixed per-category totals, checking the placement invariants afterwards.

use indexmap::IndexMap;
use seaclone::compositor::{
    build_object_set, generate_dataset, EmbedOutcome, GenerateOptions, MemorySink, PlacementPolicy,
    SynthesisSpec,
};
use seaclone::demo::{dataset, SceneConfig};
use seaclone::eval::iou;
use seaclone::model::{category_counts, validate_manifest, BBox, RngConfig};

fn main() -> seaclone::Result<()> {
    let (backgrounds, store) = dataset(12, &SceneConfig::default(), 1);
    let counts = IndexMap::from([
        ("seaurchin".to_string(), 8),
        ("seacucumber".to_string(), 3),
        ("scallop".to_string(), 2),
    ]);
    let set = build_object_set(&backgrounds, &store, &counts, &RngConfig::new(1))?;
    println!("object set: {:?}", set.sizes());
    println!("backgrounds: {:?}", category_counts(&backgrounds));

    let spec = SynthesisSpec {
        targets: IndexMap::from([
            ("seacucumber".to_string(), 20),
            ("seaurchin".to_string(), 60),
            ("scallop".to_string(), 12),
        ]),
        rng: RngConfig::new(42),
        ..Default::default()
    };
    let policy = PlacementPolicy::default();
    let sink = MemorySink::new();
    let out = generate_dataset(
        &backgrounds,
        &store,
        &set,
        &spec,
        &policy,
        &GenerateOptions::default(),
        &sink,
    )?;
    println!("final counts: {:?}", out.report.final_counts);
    println!("placement failures: {}", out.report.placement_failures);
    assert!(out.report.is_exact());
    assert!(validate_manifest(&out.manifest).is_empty());

    // Replay each image's embeds in order and check vicinity and overlap.
    let by_image = seaclone::compositor::boxes_by_image(&backgrounds);
    for img in &out.report.images {
        let mut present: Vec<BBox> = by_image
            .get(&img.background_id)
            .cloned()
            .unwrap_or_default();
        for rec in &img.embeds {
            if let EmbedOutcome::Embedded {
                bbox: [x, y, w, h], ..
            } = rec.outcome
            {
                let cat = out.manifest.category_id(&rec.category)?;
                let b = BBox::new(x, y, w, h, cat);
                assert!(present.iter().all(|p| iou(&b, p) <= policy.max_iou));
                if present.iter().any(|p| p.category == cat) {
                    assert!(policy.within_vicinity(&b, &present));
                }
                present.push(b);
            }
        }
    }
    println!("vicinity and overlap invariants hold for every embed");
    Ok(())
}
