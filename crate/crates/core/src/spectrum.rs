//! Two-dimensional DFT utilities and element-wise spectral algebra.
//!
//! Every transform in the crate goes through [`fft2`] / [`ifft2`], so the
//! normalization convention lives here only: the forward transform is
//! unnormalized and the inverse scales by `1 / (width * height)`.
//!
//! Grids are stored row-major, `index = y * width + x`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Imaginary residue tolerated by [`ifft2`], relative to the largest real magnitude.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

/// A real-valued 2-D signal (image patch, label, response map, feature channel).
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (data.len(), 1),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty grid");
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty grid");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Location and value of the maximum; the first occurrence in row-major order wins ties.
    pub fn argmax(&self) -> ((usize, usize), f64) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        ((best % self.width, best / self.width), self.data[best])
    }

    /// Cyclic shift with `out[(x + dx, y + dy)] = self[(x, y)]` (indices wrap).
    pub fn cyclic_shift(&self, dx: isize, dy: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }
}

/// Full complex DFT grid of a real signal. Always holds all `width * height` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (data.len(), 1),
            });
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidGrid);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty spectrum");
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Total bin count `m`.
    #[inline]
    pub fn bins(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Complex64) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// `Σ |X|²`; divided by `m` this is the spatial energy (Parseval).
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// In-place `self = (1 - rate) * self + rate * other`, evaluated as
    /// `self + rate * (other - self)` so that equal inputs are a fixed point.
    pub fn blend(&mut self, other: &ComplexSpectrum, rate: f64) -> Result<()> {
        check_dims(self.dims(), other.dims())?;
        if rate >= 1.0 {
            self.data.copy_from_slice(&other.data);
            return Ok(());
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += (*b - *a) * rate;
        }
        Ok(())
    }

    /// In-place `self += other`.
    pub fn accumulate(&mut self, other: &ComplexSpectrum) -> Result<()> {
        check_dims(self.dims(), other.dims())?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }
}

pub(crate) fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Unnormalized 2-D transform of a row-major complex buffer, in place.
fn transform_2d(data: &mut [Complex64], width: usize, height: usize, direction: FftDirection) {
    let row = plan(width, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row.get_inplace_scratch_len()];
    row.process_with_scratch(data, &mut scratch);

    if height > 1 {
        // gather up to COLUMN_BLOCK columns into contiguous rows, transform them
        // in one call, scatter back
        const COLUMN_BLOCK: usize = 16;
        let col = plan(height, direction);
        let mut block = vec![Complex64::new(0.0, 0.0); height * COLUMN_BLOCK.min(width)];
        let mut scratch = vec![Complex64::new(0.0, 0.0); col.get_inplace_scratch_len()];
        for x0 in (0..width).step_by(COLUMN_BLOCK) {
            let b = COLUMN_BLOCK.min(width - x0);
            for y in 0..height {
                let row = &data[y * width + x0..y * width + x0 + b];
                for (k, v) in row.iter().enumerate() {
                    block[k * height + y] = *v;
                }
            }
            col.process_with_scratch(&mut block[..b * height], &mut scratch);
            for y in 0..height {
                let row = &mut data[y * width + x0..y * width + x0 + b];
                for (k, v) in row.iter_mut().enumerate() {
                    *v = block[k * height + y];
                }
            }
        }
    }
}

/// Unnormalized 1-D transform of every consecutive `row_len` chunk of `data`.
pub(crate) fn fft_rows(data: &mut [Complex64], row_len: usize, inverse: bool) {
    let direction = if inverse {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    let fft = plan(row_len, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
}

/// Forward, unnormalized 2-D DFT of a real grid.
pub fn fft2(x: &RealGrid) -> ComplexSpectrum {
    let mut data: Vec<Complex64> = x.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(&mut data, x.width, x.height, FftDirection::Forward);
    ComplexSpectrum::from_raw(x.width, x.height, data)
}

/// Inverse 2-D DFT, scaled by `1/m`, of the spectrum of a real signal.
///
/// The imaginary part of the result is discarded once its largest magnitude is
/// confirmed below [`SYMMETRY_TOLERANCE`] times the largest real magnitude.
pub fn ifft2(spectrum: &ComplexSpectrum) -> Result<RealGrid> {
    let mut data = spectrum.data.clone();
    transform_2d(
        &mut data,
        spectrum.width,
        spectrum.height,
        FftDirection::Inverse,
    );
    let norm = 1.0 / data.len() as f64;

    let mut residue = 0.0f64;
    let mut scale = 0.0f64;
    let out: Vec<f64> = data
        .iter()
        .map(|c| {
            let (re, im) = (c.re * norm, c.im * norm);
            residue = residue.max(im.abs());
            scale = scale.max(re.abs());
            re
        })
        .collect();
    if residue > SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ConjugateSymmetryViolation { residue, scale });
    }
    Ok(RealGrid::from_raw(spectrum.width, spectrum.height, out))
}

/// Element-wise complex product `A ⊙ B`, or `A ⊙ conj(B)` when `conjugate_b` is set.
pub fn spectral_mul(
    a: &ComplexSpectrum,
    b: &ComplexSpectrum,
    conjugate_b: bool,
) -> Result<ComplexSpectrum> {
    check_dims(a.dims(), b.dims())?;
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&p, &q)| if conjugate_b { p * q.conj() } else { p * q })
        .collect();
    Ok(ComplexSpectrum::from_raw(a.width, a.height, data))
}

/// Circular cross-correlation: entry `j` is `⟨x, cyclic_shift_j(z)⟩`.
///
/// With [`RealGrid::cyclic_shift`] semantics, if `x = z.cyclic_shift(dx, dy)`
/// the result peaks at `(dx, dy)`.
pub fn circ_xcorr(x: &RealGrid, z: &RealGrid) -> Result<RealGrid> {
    check_dims(x.dims(), z.dims())?;
    ifft2(&spectral_mul(&fft2(x), &fft2(z), true)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_grid(rng: &mut StdRng, w: usize, h: usize) -> RealGrid {
        RealGrid::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_spectrum(rng: &mut StdRng, w: usize, h: usize) -> ComplexSpectrum {
        let data = (0..w * h)
            .map(|_| Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        ComplexSpectrum::new(w, h, data).unwrap()
    }

    /// O(n²) oracle: direct inner product with every cyclic shift.
    fn xcorr_oracle(x: &RealGrid, z: &RealGrid) -> RealGrid {
        RealGrid::from_fn(x.width(), x.height(), |dx, dy| {
            let shifted = z.cyclic_shift(dx as isize, dy as isize);
            x.as_slice()
                .iter()
                .zip(shifted.as_slice())
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    #[test]
    fn constant_grid_is_dc_only() {
        let (w, h, v) = (5, 3, 2.5);
        let s = fft2(&RealGrid::from_fn(w, h, |_, _| v));
        for y in 0..h {
            for x in 0..w {
                let c = s.get(x, y);
                if (x, y) == (0, 0) {
                    assert!((c.re - v * (w * h) as f64).abs() < 1e-12);
                    assert!(c.im.abs() < 1e-12);
                } else {
                    assert!(c.norm() < 1e-12, "bin ({x},{y}) = {c}");
                }
            }
        }
    }

    #[test]
    fn impulse_transforms_to_ones_and_back() {
        let mut g = RealGrid::zeros(4, 4);
        g.set(0, 0, 1.0);
        let s = fft2(&g);
        assert!(s
            .as_slice()
            .iter()
            .all(|c| (c.re - 1.0).abs() < 1e-15 && c.im.abs() < 1e-15));

        let ones = ComplexSpectrum::new(4, 4, vec![Complex64::new(1.0, 0.0); 16]).unwrap();
        let back = ifft2(&ones).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expected = if (x, y) == (0, 0) { 1.0 } else { 0.0 };
                assert!((back.get(x, y) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn round_trip_random() {
        let mut rng = StdRng::seed_from_u64(1);
        for (w, h) in [(8, 8), (1, 7), (6, 1), (5, 9), (16, 12)] {
            let g = random_grid(&mut rng, w, h);
            let back = ifft2(&fft2(&g)).unwrap();
            let scale = g.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
                assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let mut s = ComplexSpectrum::zeros(4, 4);
        s.set(1, 0, Complex64::new(1.0, 0.0));
        assert!(matches!(
            ifft2(&s),
            Err(Error::ConjugateSymmetryViolation { .. })
        ));
    }

    #[test]
    fn xcorr_of_impulses() {
        let mut g = RealGrid::zeros(4, 4);
        g.set(0, 0, 1.0);
        let c = circ_xcorr(&g, &g).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expected = if (x, y) == (0, 0) { 1.0 } else { 0.0 };
                assert!((c.get(x, y) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn xcorr_matches_shift_oracle() {
        let mut rng = StdRng::seed_from_u64(2);
        let x = random_grid(&mut rng, 8, 8);
        let z = random_grid(&mut rng, 8, 8);
        let fast = circ_xcorr(&x, &z).unwrap();
        let slow = xcorr_oracle(&x, &z);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn xcorr_locates_shift() {
        let mut rng = StdRng::seed_from_u64(3);
        let z = random_grid(&mut rng, 8, 8);
        let x = z.cyclic_shift(2, 3);
        let (peak, _) = circ_xcorr(&x, &z).unwrap().argmax();
        assert_eq!(peak, xcorr_oracle(&x, &z).argmax().0);
        assert_eq!(peak, (2, 3));
    }

    #[test]
    fn xcorr_dimension_mismatch() {
        let a = RealGrid::zeros(4, 4);
        let b = RealGrid::zeros(4, 5);
        assert!(matches!(
            circ_xcorr(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spectral_mul_identity_and_definition() {
        let mut rng = StdRng::seed_from_u64(4);
        let a = random_spectrum(&mut rng, 3, 2);
        let ones = ComplexSpectrum::new(3, 2, vec![Complex64::new(1.0, 0.0); 6]).unwrap();
        assert_eq!(spectral_mul(&a, &ones, false).unwrap(), a);

        let p = ComplexSpectrum::new(1, 1, vec![Complex64::new(2.0, 3.0)]).unwrap();
        let q = ComplexSpectrum::new(1, 1, vec![Complex64::new(5.0, -7.0)]).unwrap();
        let r = spectral_mul(&p, &q, false).unwrap().get(0, 0);
        assert_eq!(
            (r.re, r.im),
            (2.0 * 5.0 - 3.0 * -7.0, 2.0 * -7.0 + 3.0 * 5.0)
        );
    }

    #[test]
    fn spectral_mul_conjugate_matches_scalar_loop() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = random_spectrum(&mut rng, 4, 4);
        let b = random_spectrum(&mut rng, 4, 4);
        let r = spectral_mul(&a, &b, true).unwrap();
        for i in 0..16 {
            let (p, q) = (a.as_slice()[i], b.as_slice()[i]);
            let re = p.re * q.re + p.im * q.im;
            let im = p.im * q.re - p.re * q.im;
            assert!((r.as_slice()[i].re - re).abs() < 1e-12);
            assert!((r.as_slice()[i].im - im).abs() < 1e-12);
        }
        assert!(spectral_mul(&a, &ComplexSpectrum::zeros(2, 8), true).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RealGrid::new(0, 3, vec![]).is_err());
        assert!(RealGrid::new(2, 2, vec![1.0; 3]).is_err());
        assert!(RealGrid::new(1, 1, vec![f64::NAN]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grid() -> impl Strategy<Value = RealGrid> {
            (1usize..=16, 1usize..=16).prop_flat_map(|(w, h)| {
                prop::collection::vec(-100.0f64..100.0, w * h)
                    .prop_map(move |d| RealGrid::new(w, h, d).unwrap())
            })
        }

        fn grid_pair() -> impl Strategy<Value = (RealGrid, RealGrid)> {
            (1usize..=16, 1usize..=16).prop_flat_map(|(w, h)| {
                (
                    prop::collection::vec(-10.0f64..10.0, w * h),
                    prop::collection::vec(-10.0f64..10.0, w * h),
                )
                    .prop_map(move |(a, b)| {
                        (
                            RealGrid::new(w, h, a).unwrap(),
                            RealGrid::new(w, h, b).unwrap(),
                        )
                    })
            })
        }

        proptest! {
            #[test]
            fn parseval(g in grid()) {
                let energy = g.sum_of_squares();
                let spectral = fft2(&g).energy() / g.len() as f64;
                prop_assert!((energy - spectral).abs() <= 1e-8 * energy.max(1e-300));
            }

            #[test]
            fn round_trip(g in grid()) {
                let back = ifft2(&fft2(&g)).unwrap();
                let scale = g.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
                    prop_assert!((a - b).abs() <= 1e-10 * scale.max(1e-300));
                }
            }

            #[test]
            fn linearity((x, z) in grid_pair(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
                let combo = RealGrid::from_fn(x.width(), x.height(), |i, j| {
                    alpha * x.get(i, j) + beta * z.get(i, j)
                });
                let lhs = fft2(&combo);
                let (fx, fz) = (fft2(&x), fft2(&z));
                for i in 0..lhs.bins() {
                    let rhs = fx.as_slice()[i] * alpha + fz.as_slice()[i] * beta;
                    prop_assert!((lhs.as_slice()[i] - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
                }
            }

            #[test]
            fn xcorr_oracle_equivalence((x, z) in grid_pair()) {
                let fast = circ_xcorr(&x, &z).unwrap();
                let slow = xcorr_oracle(&x, &z);
                for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
                    prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
                }
            }
        }
    }
}
