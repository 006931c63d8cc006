//! Multi-scale blur downsampling and the fusion block on random tensors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seaclone::nn::{
    make_blur_kernel, max_pool_stride2, mbp_forward, mff_forward, param_count, MffConfig, Tensor4,
};

fn main() -> seaclone::Result<()> {
    for size in [3, 5, 7] {
        let k = make_blur_kernel(size)?;
        println!("blur {size}: taps {:?}", k.taps());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor4::from_fn([1, 6, 8, 8], |_, _, _, _| rng.random());
    let y = mbp_forward(&x, 3)?;
    println!("mbp: {:?} -> {:?}", x.dims(), y.dims());
    println!("plain max-pool: {:?}", max_pool_stride2(&x).dims());

    let constant = Tensor4::filled(1, 6, 8, 8, 0.25);
    let c = mbp_forward(&constant, 3)?;
    println!(
        "constant input stays constant: max deviation {:.2e}",
        c.data()
            .iter()
            .map(|v| (v - 0.25).abs())
            .fold(0.0, f64::max)
    );

    let zero = MffConfig::zeros(16, &[3, 5, 7]);
    let z = Tensor4::from_fn([1, 16, 6, 6], |_, c, y, x| (c + y * x) as f64);
    println!(
        "zero-weight block is identity: {}",
        mff_forward(&z, &zero)?.max_abs_diff(&z) == 0.0
    );
    println!("params(C=16, [3,5,7]) = {}", param_count(&zero));

    let cfg = MffConfig::random(8, &[3, 5, 7, 9], 0.1, &mut rng);
    let out = mff_forward(
        &Tensor4::from_fn([2, 8, 10, 10], |_, _, _, _| rng.random()),
        &cfg,
    )?;
    println!(
        "random block: output {:?}, {} params",
        out.dims(),
        param_count(&cfg)
    );
    Ok(())
}
