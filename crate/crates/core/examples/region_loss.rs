//! Region-weighted loss on a hand-sized case and the generator loss total.

use seaclone::model::{BBox, CategoryId, ImageBuffer};
use seaclone::region_loss::{
    build_region_mask, dr_total, region_loss, region_loss_with, Norm, DEFAULT_ADVERSARIAL_WEIGHT,
};

fn main() -> seaclone::Result<()> {
    // 2x2 single-channel images, one box over the top-left pixel.
    let target = ImageBuffer::new(2, 2, 1);
    let pred = ImageBuffer::from_vec(2, 2, 1, vec![0.1, 0.1, 0.1, 0.1])?;
    let mask = build_region_mask(&[BBox::new(0.0, 0.0, 1.0, 1.0, CategoryId(0))], 2, 2);
    println!("mask weights: {:?}", mask.weights());
    let l1 = region_loss(&pred, &target, &mask)?;
    let l2 = region_loss_with(&pred, &target, &mask, Norm::L2)?;
    println!("L1 region loss = {l1:.6}");
    println!("L2 region loss = {l2:.6}");
    println!(
        "identical images = {}",
        region_loss(&target, &target, &mask)?
    );

    let total = dr_total(0.8, 3.0, l1, DEFAULT_ADVERSARIAL_WEIGHT)?;
    println!("{total:#?}");
    Ok(())
}
