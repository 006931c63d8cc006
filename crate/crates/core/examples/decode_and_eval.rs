//! Decodes center-point heat maps into boxes and scores them with mAP@0.5.

use seaclone::eval::{decode, map50, CategoryEval, DecodeParams, HeadMaps, ImageGroup};
use seaclone::model::{BBox, CategoryId};

fn main() {
    // Quarter-resolution maps of a 64x48 input: 16x12 cells, 3 classes.
    let mut maps = HeadMaps::zeros(3, 12, 16);
    maps.set_cell(1, 2, 3, 0.9, (8.0, 12.0), (0.1, 0.2));
    maps.set_cell(1, 8, 10, 0.6, (10.0, 10.0), (0.5, 0.5));
    maps.set_cell(0, 5, 5, 0.4, (20.0, 6.0), (0.0, 0.0));
    let dets = decode(&maps, &DecodeParams::default());
    for d in &dets {
        let (cx, cy) = d.bbox.center();
        println!(
            "class {} score {:.2} center ({cx:.1}, {cy:.1}) size {}x{}",
            d.bbox.category.0, d.score, d.bbox.w, d.bbox.h
        );
    }

    let gt = [
        BBox::new(8.4, 2.8, 8.0, 12.0, CategoryId(1)),
        BBox::new(37.0, 29.0, 10.0, 10.0, CategoryId(1)),
        BBox::new(50.0, 40.0, 6.0, 6.0, CategoryId(2)),
    ];
    let names = ["seacucumber", "seaurchin", "scallop"];
    let categories: Vec<CategoryEval> = (0..3)
        .map(|c| CategoryEval {
            name: names[c].to_string(),
            images: vec![ImageGroup {
                detections: dets
                    .iter()
                    .filter(|d| d.bbox.category.0 == c)
                    .copied()
                    .collect(),
                ground_truth: gt.iter().filter(|b| b.category.0 == c).copied().collect(),
            }],
        })
        .collect();
    let report = map50(&categories);
    for (name, ap) in &report.per_category {
        println!("AP[{name}] = {ap:.4}");
    }
    println!("skipped (no ground truth): {:?}", report.skipped);
    println!("mAP50 = {:.4}", report.mean);
}
