//! Gaussian kernel correlation over every cyclic shift: locating a known
//! shift and timing the FFT path at two grid sizes.
//!
//! ```text
//! cargo run --release --example kernel_correlation
//! ```

use std::time::Instant;

use huber_kcf::features::FeatureMap;
use huber_kcf::kernel::{gaussian_kernel_correlation, KernelConfig};
use huber_kcf::spectrum::RealGrid;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_map(rng: &mut StdRng, side: usize, channels: usize) -> FeatureMap {
    FeatureMap::new(
        (0..channels)
            .map(|_| RealGrid::from_fn(side, side, |_, _| rng.gen_range(0.0..1.0)))
            .collect(),
    )
    .expect("equal channel sizes")
}

fn main() -> huber_kcf::Result<()> {
    let mut rng = StdRng::seed_from_u64(7);
    let cfg = KernelConfig::default();

    let x = random_map(&mut rng, 16, 4);
    let z = x.cyclic_shift(-5, -2);
    let k = gaussian_kernel_correlation(&x, &z, cfg)?;
    let (peak, value) = k.values.argmax();
    println!("z = x rolled by (-5,-2): kernel peak at {peak:?} with value {value:.6}");

    for side in [32, 64, 128] {
        let (a, b) = (
            random_map(&mut rng, side, 31),
            random_map(&mut rng, side, 31),
        );
        let t = Instant::now();
        for _ in 0..20 {
            std::hint::black_box(gaussian_kernel_correlation(&a, &b, cfg)?);
        }
        println!(
            "{side:>4}x{side:<4} 31 channels: {:.3} ms",
            t.elapsed().as_secs_f64() / 20.0 * 1e3
        );
    }
    Ok(())
}
