//! Parameter accounting of the 8-block fusion backbone, and a weight file
//! round trip for one block.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seaclone::nn::{describe_backbone, BackboneDescriptor, MffConfig, WeightFile};

fn main() -> seaclone::Result<()> {
    let descriptor = BackboneDescriptor::reference([16, 32, 64, 128], [2, 2, 2, 2]);
    let report = describe_backbone(&descriptor)?;
    for s in &report.stages {
        println!(
            "stage {}: {} blocks x {} params (C={}, kernels {:?})",
            s.stage, s.blocks, s.params_per_block, s.channels, s.kernels
        );
    }
    println!(
        "total: {} blocks, {} params",
        report.total_blocks, report.total_params
    );

    let bad = BackboneDescriptor::reference([16, 32, 64, 128], [2, 2, 2, 3]);
    println!(
        "9-block descriptor: {}",
        describe_backbone(&bad).unwrap_err()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let block = MffConfig::random(16, &[3, 5, 7], 0.05, &mut rng);
    let file = WeightFile {
        tensors: block.to_tensors("stage2.block0"),
    };
    let bytes = file.to_bytes()?;
    let back = MffConfig::from_tensors(&WeightFile::from_bytes(&bytes)?, "stage2.block0")?;
    println!(
        "weight file: {} bytes, {} tensors, kernels {:?}",
        bytes.len(),
        file.tensors.len(),
        back.kernels
    );
    Ok(())
}
