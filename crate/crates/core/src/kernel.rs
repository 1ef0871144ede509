//! Gaussian kernel correlation over all cyclic shifts, computed with FFTs.
//!
//! For every shift `j` the kernel value is
//! `exp(-max(0, ‖x‖² + ‖z‖² − 2·corr_j) / (σ² · n))`, where `corr_j` is the
//! multi-channel circular cross-correlation and `n` the total element count.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::spectrum::{check_dims, fft2, ifft2, ComplexSpectrum, RealGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub sigma: f64,
}

impl KernelConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be > 0, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { sigma: 0.5 }
    }
}

/// Kernel value for every cyclic shift, laid out like the feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelResponse {
    pub values: RealGrid,
}

/// Per-channel spectra of a feature map plus its squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpectra {
    channels: Vec<ComplexSpectrum>,
    sq_norm: f64,
}

impl FeatureSpectra {
    pub fn from_map(map: &FeatureMap) -> Self {
        let channels: Vec<ComplexSpectrum> = map.channels().iter().map(fft2).collect();
        let sq_norm = parseval_norm(&channels);
        Self { channels, sq_norm }
    }

    /// Wraps spectra directly. The norm always comes from the spectra
    /// (Parseval), so equal spectra carry bit-equal norms.
    pub fn from_spectra(channels: Vec<ComplexSpectrum>) -> Result<Self> {
        let first = channels.first().ok_or(Error::InvalidGrid)?;
        let dims = first.dims();
        for c in &channels {
            check_dims(dims, c.dims())?;
        }
        let sq_norm = parseval_norm(&channels);
        Ok(Self { channels, sq_norm })
    }

    pub fn channels(&self) -> &[ComplexSpectrum] {
        &self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn sq_norm(&self) -> f64 {
        self.sq_norm
    }

    /// Cells times channels.
    pub fn total_len(&self) -> usize {
        self.channels.len() * self.channels[0].bins()
    }

    /// `self = (1 - rate) * self + rate * other`, channel by channel; the norm
    /// is recomputed from the blended spectra.
    pub fn blend(&mut self, other: &FeatureSpectra, rate: f64) -> Result<()> {
        if self.channels.len() != other.channels.len() {
            return Err(Error::ChannelMismatch(
                self.channels.len(),
                other.channels.len(),
            ));
        }
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            a.blend(b, rate)?;
        }
        self.sq_norm = parseval_norm(&self.channels);
        Ok(())
    }
}

fn parseval_norm(channels: &[ComplexSpectrum]) -> f64 {
    let m = channels[0].bins() as f64;
    channels.iter().map(ComplexSpectrum::energy).sum::<f64>() / m
}

fn check_pair(x: &FeatureSpectra, z: &FeatureSpectra) -> Result<()> {
    if x.channels.len() != z.channels.len() {
        return Err(Error::ChannelMismatch(x.channels.len(), z.channels.len()));
    }
    check_dims(x.dims(), z.dims())
}

/// `Σ_ch X_ch ⊙ conj(Z_ch)`, summed in channel order.
fn summed_cross_spectrum(x: &FeatureSpectra, z: &FeatureSpectra) -> Result<ComplexSpectrum> {
    check_pair(x, z)?;
    let (w, h) = x.dims();
    let mut acc = vec![Complex64::new(0.0, 0.0); w * h];
    for (xc, zc) in x.channels.iter().zip(&z.channels) {
        for ((a, p), q) in acc.iter_mut().zip(xc.as_slice()).zip(zc.as_slice()) {
            *a += p * q.conj();
        }
    }
    ComplexSpectrum::new(w, h, acc)
}

/// Sum of per-channel circular cross-correlations.
pub fn multichannel_corr(x: &FeatureMap, z: &FeatureMap) -> Result<RealGrid> {
    if x.channel_count() != z.channel_count() {
        return Err(Error::ChannelMismatch(x.channel_count(), z.channel_count()));
    }
    check_dims(x.dims(), z.dims())?;
    let cross = summed_cross_spectrum(&FeatureSpectra::from_map(x), &FeatureSpectra::from_map(z))?;
    ifft2(&cross)
}

/// Gaussian kernel correlation from precomputed spectra.
pub fn gaussian_kernel_spectral(
    x: &FeatureSpectra,
    z: &FeatureSpectra,
    cfg: KernelConfig,
) -> Result<KernelResponse> {
    let corr = ifft2(&summed_cross_spectrum(x, z)?)?;
    Ok(kernel_from_corr(
        corr,
        x.sq_norm + z.sq_norm,
        x.total_len(),
        cfg,
    ))
}

/// Gaussian kernel between `x` and every cyclic shift of `z`.
///
/// Streams one channel at a time; results are bit-identical to
/// [`gaussian_kernel_spectral`] on the corresponding [`FeatureSpectra`].
pub fn gaussian_kernel_correlation(
    x: &FeatureMap,
    z: &FeatureMap,
    cfg: KernelConfig,
) -> Result<KernelResponse> {
    if x.channel_count() != z.channel_count() {
        return Err(Error::ChannelMismatch(x.channel_count(), z.channel_count()));
    }
    check_dims(x.dims(), z.dims())?;
    let (w, h) = x.dims();
    let mut acc = vec![Complex64::new(0.0, 0.0); w * h];
    let (mut ex, mut ez) = (0.0, 0.0);
    for (xc, zc) in x.channels().iter().zip(z.channels()) {
        let (xs, zs) = (fft2(xc), fft2(zc));
        ex += xs.energy();
        ez += zs.energy();
        for ((a, p), q) in acc.iter_mut().zip(xs.as_slice()).zip(zs.as_slice()) {
            *a += p * q.conj();
        }
    }
    let m = (w * h) as f64;
    let corr = ifft2(&ComplexSpectrum::new(w, h, acc)?)?;
    Ok(kernel_from_corr(corr, ex / m + ez / m, x.total_len(), cfg))
}

fn kernel_from_corr(
    corr: RealGrid,
    base: f64,
    total_len: usize,
    cfg: KernelConfig,
) -> KernelResponse {
    let (w, h) = corr.dims();
    let denom = cfg.sigma * cfg.sigma * total_len as f64;
    let values = corr
        .into_vec()
        .into_iter()
        .map(|c| (-(base - 2.0 * c).max(0.0) / denom).exp())
        .collect();
    KernelResponse {
        values: RealGrid::from_raw(w, h, values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::circ_xcorr;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_map(rng: &mut StdRng, w: usize, h: usize, ch: usize) -> FeatureMap {
        FeatureMap::new(
            (0..ch)
                .map(|_| RealGrid::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn direct_kernel(x: &FeatureMap, z: &FeatureMap, sigma: f64) -> RealGrid {
        let (w, h) = x.dims();
        let n = x.total_len() as f64;
        RealGrid::from_fn(w, h, |dx, dy| {
            let shifted = z.cyclic_shift(dx as isize, dy as isize);
            let d: f64 = x
                .channels()
                .iter()
                .zip(shifted.channels())
                .flat_map(|(a, b)| {
                    a.as_slice()
                        .iter()
                        .zip(b.as_slice())
                        .map(|(p, q)| (p - q).powi(2))
                })
                .sum();
            (-d / (sigma * sigma * n)).exp()
        })
    }

    #[test]
    fn self_similarity_peaks_at_one() {
        let mut rng = StdRng::seed_from_u64(20);
        let x = random_map(&mut rng, 6, 5, 3);
        let k = gaussian_kernel_correlation(&x, &x, KernelConfig::default()).unwrap();
        assert!((k.values.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_evaluation() {
        let mut rng = StdRng::seed_from_u64(21);
        let x = random_map(&mut rng, 8, 8, 1);
        let z = random_map(&mut rng, 8, 8, 1);
        let fast = gaussian_kernel_correlation(&x, &z, KernelConfig::default()).unwrap();
        let slow = direct_kernel(&x, &z, 0.5);
        for (a, b) in fast.values.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn locates_shift() {
        let mut rng = StdRng::seed_from_u64(22);
        let x = random_map(&mut rng, 8, 8, 2);
        // x is z moved by (3, 1)
        let z = x.cyclic_shift(-3, -1);
        let k = gaussian_kernel_correlation(&x, &z, KernelConfig::default()).unwrap();
        let (peak, v) = k.values.argmax();
        assert_eq!(peak, (3, 1));
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multichannel_degenerate_cases() {
        let mut rng = StdRng::seed_from_u64(23);
        let a = random_map(&mut rng, 5, 4, 1);
        let b = random_map(&mut rng, 5, 4, 1);
        let single = multichannel_corr(&a, &b).unwrap();
        let reference = circ_xcorr(&a.channels()[0], &b.channels()[0]).unwrap();
        for (p, q) in single.as_slice().iter().zip(reference.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }

        let zero = RealGrid::zeros(5, 4);
        let a2 = FeatureMap::new(vec![a.channels()[0].clone(), zero.clone()]).unwrap();
        let b2 = FeatureMap::new(vec![b.channels()[0].clone(), zero]).unwrap();
        let two = multichannel_corr(&a2, &b2).unwrap();
        for (p, q) in two.as_slice().iter().zip(reference.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn multichannel_matches_loop() {
        let mut rng = StdRng::seed_from_u64(24);
        let x = random_map(&mut rng, 4, 4, 3);
        let z = random_map(&mut rng, 4, 4, 3);
        let fast = multichannel_corr(&x, &z).unwrap();
        for dy in 0..4 {
            for dx in 0..4 {
                let mut acc = 0.0;
                for c in 0..3 {
                    for y in 0..4 {
                        for xx in 0..4 {
                            let zx = (xx + 4 - dx) % 4;
                            let zy = (y + 4 - dy) % 4;
                            acc += x.channels()[c].get(xx, y) * z.channels()[c].get(zx, zy);
                        }
                    }
                }
                assert!((fast.get(dx, dy) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn streaming_and_spectral_paths_agree_bitwise() {
        let mut rng = StdRng::seed_from_u64(26);
        let x = random_map(&mut rng, 7, 5, 4);
        let z = random_map(&mut rng, 7, 5, 4);
        let cfg = KernelConfig::default();
        let streamed = gaussian_kernel_correlation(&x, &z, cfg).unwrap();
        let spectral = gaussian_kernel_spectral(
            &FeatureSpectra::from_map(&x),
            &FeatureSpectra::from_map(&z),
            cfg,
        )
        .unwrap();
        assert_eq!(streamed, spectral);
    }

    #[test]
    fn mismatches() {
        let mut rng = StdRng::seed_from_u64(25);
        let a = random_map(&mut rng, 4, 4, 2);
        let b = random_map(&mut rng, 4, 4, 3);
        let c = random_map(&mut rng, 4, 5, 2);
        let cfg = KernelConfig::default();
        assert!(matches!(
            multichannel_corr(&a, &b),
            Err(Error::ChannelMismatch(2, 3))
        ));
        assert!(matches!(
            gaussian_kernel_correlation(&a, &b, cfg),
            Err(Error::ChannelMismatch(2, 3))
        ));
        assert!(matches!(
            gaussian_kernel_correlation(&a, &c, cfg),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KernelConfig::new(0.0).is_err());
    }

    #[test]
    fn spectra_norm_via_parseval() {
        let mut rng = StdRng::seed_from_u64(26);
        let a = random_map(&mut rng, 7, 3, 2);
        let spectra = FeatureSpectra::from_map(&a);
        let direct = a.sum_of_squares();
        assert!((spectra.sq_norm() - direct).abs() < 1e-10 * direct);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair() -> impl Strategy<Value = (FeatureMap, FeatureMap)> {
            (1usize..=8, 1usize..=8, 1usize..=3).prop_flat_map(|(w, h, ch)| {
                let grid = move || prop::collection::vec(-1.0f64..1.0, w * h);
                (
                    prop::collection::vec(grid(), ch),
                    prop::collection::vec(grid(), ch),
                )
                    .prop_map(move |(a, b)| {
                        let mk = |v: Vec<Vec<f64>>| {
                            FeatureMap::new(
                                v.into_iter()
                                    .map(|d| RealGrid::new(w, h, d).unwrap())
                                    .collect(),
                            )
                            .unwrap()
                        };
                        (mk(a), mk(b))
                    })
            })
        }

        proptest! {
            #[test]
            fn range_and_oracle((x, z) in pair()) {
                let k = gaussian_kernel_correlation(&x, &z, KernelConfig::default()).unwrap();
                let slow = direct_kernel(&x, &z, 0.5);
                for (a, b) in k.values.as_slice().iter().zip(slow.as_slice()) {
                    prop_assert!(*a > 0.0 && *a <= 1.0);
                    prop_assert!((a - b).abs() <= 1e-6 * b.abs());
                }
            }

            #[test]
            fn shift_equivariance((x, z) in pair(), dx in -8isize..8, dy in -8isize..8) {
                let cfg = KernelConfig::default();
                let base = gaussian_kernel_correlation(&x, &z, cfg).unwrap().values;
                let moved = gaussian_kernel_correlation(&x, &z.cyclic_shift(dx, dy), cfg).unwrap().values;
                // shifting z by d moves the response by -d
                let expected = base.cyclic_shift(-dx, -dy);
                for (a, b) in moved.as_slice().iter().zip(expected.as_slice()) {
                    prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300));
                }
            }
        }
    }
}
