//! Image sampling, HOG feature maps, cosine windowing and the scale pyramid.

mod hog;

pub use hog::{hog, CELL_SIZE, HOG_CHANNELS};

use crate::error::{Error, Result};
use crate::spectrum::RealGrid;

/// Grayscale intensity raster, row-major, values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (data.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "empty frame");
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

    /// 8-bit grayscale buffer.
    pub fn from_luma8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        )
    }

    /// Interleaved 8-bit RGB buffer, converted with Rec. 601 luma weights.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (bytes.len() / 3, 1),
            });
        }
        let data = bytes
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) / 255.0)
            .collect();
        Self::new(width, height, data)
    }

    /// Decodes any raster the `image` crate understands.
    pub fn from_dynamic(img: &image::DynamicImage) -> Result<Self> {
        use image::DynamicImage;
        match img {
            DynamicImage::ImageLuma8(g) => {
                Self::from_luma8(g.width() as usize, g.height() as usize, g.as_raw())
            }
            other => {
                let rgb = other.to_rgb8();
                Self::from_rgb8(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
            }
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
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

/// A patch cut from a frame. `origin` is the top-left corner of the sampled
/// region in source pixel coordinates and may lie outside the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    pixels: Frame,
    origin: (f64, f64),
}

impl ImagePatch {
    pub fn from_frame(pixels: Frame) -> Self {
        Self {
            pixels,
            origin: (0.0, 0.0),
        }
    }

    pub fn size(&self) -> (usize, usize) {
        (self.pixels.width, self.pixels.height)
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels.data
    }

    pub fn frame(&self) -> &Frame {
        &self.pixels
    }
}

/// Per-output-pixel bilinear taps along one axis, with replicated borders.
fn taps(start: f64, step: f64, count: usize, limit: usize) -> Vec<(usize, usize, f32)> {
    let max = (limit - 1) as f64;
    (0..count)
        .map(|i| {
            let u = (start + (i as f64 + 0.5) * step - 0.5).clamp(0.0, max);
            let i0 = u.floor() as usize;
            let i1 = (i0 + 1).min(limit - 1);
            (i0, i1, (u - i0 as f64) as f32)
        })
        .collect()
}

/// Bilinearly samples the `region` (px, centered on `center`) of `frame` onto
/// an `out` grid. Coordinates outside the frame replicate the border.
///
/// Pixel `k` spans `[k, k + 1)`, so a box `(x, y, w, h)` has center
/// `(x + w/2, y + h/2)`. When `out` equals an integral `region` and the
/// region is pixel-aligned this is an exact crop.
pub fn sample_region(
    frame: &Frame,
    center: (f64, f64),
    region: (f64, f64),
    out: (usize, usize),
) -> Result<ImagePatch> {
    if frame.data.is_empty() {
        return Err(Error::EmptyImage);
    }
    if out.0 == 0 || out.1 == 0 || !(region.0 > 0.0 && region.1 > 0.0) {
        return Err(Error::InvalidGrid);
    }
    let origin = (center.0 - region.0 / 2.0, center.1 - region.1 / 2.0);
    let xs = taps(origin.0, region.0 / out.0 as f64, out.0, frame.width);
    let ys = taps(origin.1, region.1 / out.1 as f64, out.1, frame.height);

    let mut data = Vec::with_capacity(out.0 * out.1);
    for &(y0, y1, ty) in &ys {
        let r0 = &frame.data[y0 * frame.width..(y0 + 1) * frame.width];
        let r1 = &frame.data[y1 * frame.width..(y1 + 1) * frame.width];
        for &(x0, x1, tx) in &xs {
            let top = r0[x0] + (r0[x1] - r0[x0]) * tx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * tx;
            data.push(top + (bottom - top) * ty);
        }
    }
    Ok(ImagePatch {
        pixels: Frame {
            width: out.0,
            height: out.1,
            data,
        },
        origin,
    })
}

/// Patch of `size` px centered on `center`, replicate-padded outside the frame.
pub fn extract_patch(
    frame: &Frame,
    center: (f64, f64),
    size: (usize, usize),
) -> Result<ImagePatch> {
    sample_region(frame, center, (size.0 as f64, size.1 as f64), size)
}

/// Bilinear resize of a whole frame (pixel-center aligned).
pub fn resize_bilinear(frame: &Frame, size: (usize, usize)) -> Result<Frame> {
    let center = (frame.width as f64 / 2.0, frame.height as f64 / 2.0);
    let region = (frame.width as f64, frame.height as f64);
    Ok(sample_region(frame, center, region, size)?.pixels)
}

/// Multi-channel real feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: Vec<RealGrid>,
    windowed: bool,
}

impl FeatureMap {
    pub fn new(channels: Vec<RealGrid>) -> Result<Self> {
        let first = channels.first().ok_or(Error::InvalidGrid)?;
        let dims = first.dims();
        for c in &channels {
            if c.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: c.dims(),
                });
            }
        }
        Ok(Self {
            width: dims.0,
            height: dims.1,
            channels,
            windowed: false,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[RealGrid] {
        &self.channels
    }

    pub fn is_windowed(&self) -> bool {
        self.windowed
    }

    /// Cells times channels.
    pub fn total_len(&self) -> usize {
        self.width * self.height * self.channels.len()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.channels.iter().map(RealGrid::sum_of_squares).sum()
    }

    /// Every channel cyclically shifted (see [`RealGrid::cyclic_shift`]).
    pub fn cyclic_shift(&self, dx: isize, dy: isize) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.cyclic_shift(dx, dy))
                .collect(),
            ..self.clone()
        }
    }
}

/// Symmetric Hann window of length `n` with zero endpoints (`[1.0]` for `n = 1`).
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Separable 2-D Hann window as a grid.
pub fn hann_2d(width: usize, height: usize) -> RealGrid {
    let (wx, wy) = (hann(width), hann(height));
    RealGrid::from_fn(width, height, |x, y| wx[x] * wy[y])
}

/// Multiplies every channel by the separable Hann window. Refuses to window twice.
pub fn cosine_window(mut map: FeatureMap) -> Result<FeatureMap> {
    if map.windowed {
        return Err(Error::DoubleWindowing);
    }
    let window = hann_2d(map.width, map.height);
    for c in &mut map.channels {
        for (v, w) in c.as_mut_slice().iter_mut().zip(window.as_slice()) {
            *v *= w;
        }
    }
    map.windowed = true;
    Ok(map)
}

/// Geometric ladder of scale multipliers `base^r`, `r = -(N-1)/2 ..= (N-1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePool {
    base: f64,
    factors: Vec<f64>,
}

impl ScalePool {
    pub fn new(count: usize, base: f64) -> Result<Self> {
        if count == 0 || count.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "scale count must be odd, got {count}"
            )));
        }
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "scale base must be > 1, got {base}"
            )));
        }
        let half = (count as i32 - 1) / 2;
        let factors = (-half..=half).map(|r| base.powi(r)).collect();
        Ok(Self { base, factors })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn middle(&self) -> usize {
        self.factors.len() / 2
    }
}

/// One HOG map per scale factor: the `s·W x s·H` region around `center`,
/// resampled to `template` px.
pub fn build_scale_samples(
    frame: &Frame,
    center: (f64, f64),
    base_size: (f64, f64),
    pool: &ScalePool,
    template: (usize, usize),
) -> Result<Vec<FeatureMap>> {
    if template.0 == 0 || template.1 == 0 {
        return Err(Error::InvalidConfig(
            "template size must be positive".into(),
        ));
    }
    pool.factors
        .iter()
        .enumerate()
        .map(|(index, &s)| {
            sample_region(frame, center, (base_size.0 * s, base_size.1 * s), template)
                .and_then(|p| hog(&p))
                .map_err(|e| Error::ScaleSample {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| (x + 100 * y) as f32)
    }

    #[test]
    fn exact_crop_inside_frame() {
        let f = ramp(20, 16);
        let p = extract_patch(&f, (10.0, 8.0), (6, 4)).unwrap();
        assert_eq!(p.origin(), (7.0, 6.0));
        for y in 0..4 {
            for x in 0..6 {
                assert_eq!(p.frame().get(x, y), f.get(7 + x, 6 + y));
            }
        }
    }

    /// Reference: pad with replicated edges, then crop at integer offsets.
    fn padded_crop(f: &Frame, x0: isize, y0: isize, w: usize, h: usize) -> Vec<f32> {
        let pad = 64isize;
        let (pw, ph) = (f.width() as isize + 2 * pad, f.height() as isize + 2 * pad);
        let padded = Frame::from_fn(pw as usize, ph as usize, |x, y| {
            let sx = (x as isize - pad).clamp(0, f.width() as isize - 1) as usize;
            let sy = (y as isize - pad).clamp(0, f.height() as isize - 1) as usize;
            f.get(sx, sy)
        });
        let mut out = vec![];
        for y in 0..h as isize {
            for x in 0..w as isize {
                out.push(padded.get((x0 + x + pad) as usize, (y0 + y + pad) as usize));
            }
        }
        out
    }

    #[test]
    fn corner_center_replicates_border() {
        let f = ramp(12, 10);
        let p = extract_patch(&f, (0.0, 0.0), (8, 6)).unwrap();
        assert_eq!(p.pixels(), padded_crop(&f, -4, -3, 8, 6).as_slice());
        // the bottom-right quadrant of the patch is the top-left of the image
        assert_eq!(p.frame().get(4, 3), f.get(0, 0));
        assert_eq!(p.frame().get(7, 5), f.get(3, 2));
    }

    #[test]
    fn out_of_bounds_center_is_edge_replication() {
        let f = ramp(12, 10);
        let p = extract_patch(&f, (-40.0, 25.0), (6, 6)).unwrap();
        assert_eq!(p.pixels(), padded_crop(&f, -43, 22, 6, 6).as_slice());
        assert!(p.pixels().iter().all(|&v| v == f.get(0, 9)));
    }

    #[test]
    fn empty_region_rejected() {
        let f = ramp(4, 4);
        assert!(extract_patch(&f, (2.0, 2.0), (0, 3)).is_err());
        assert!(matches!(Frame::new(0, 3, vec![]), Err(Error::EmptyImage)));
    }

    #[test]
    fn resize_preserves_constant_and_identity() {
        let f = Frame::from_fn(9, 7, |_, _| 0.25);
        let r = resize_bilinear(&f, (4, 13)).unwrap();
        assert!(r.as_slice().iter().all(|&v| (v - 0.25).abs() < 1e-7));
        let g = ramp(9, 7);
        assert_eq!(resize_bilinear(&g, (9, 7)).unwrap(), g);
    }

    #[test]
    fn rgb_luma() {
        let f = Frame::from_rgb8(2, 1, &[255, 255, 255, 255, 0, 0]).unwrap();
        assert!((f.get(0, 0) - 1.0).abs() < 1e-6);
        assert!((f.get(1, 0) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn cosine_window_definition() {
        let ones = FeatureMap::new(vec![RealGrid::from_fn(4, 4, |_, _| 1.0)]).unwrap();
        let w = cosine_window(ones).unwrap();
        assert!(w.is_windowed());
        let h = hann(4);
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(w.channels()[0].get(x, y), h[x] * h[y]);
            }
        }
        for (x, y) in [(0, 0), (3, 0), (0, 3), (3, 3)] {
            assert_eq!(w.channels()[0].get(x, y), 0.0);
        }
        assert!(matches!(cosine_window(w), Err(Error::DoubleWindowing)));
    }

    #[test]
    fn scale_pool() {
        let p = ScalePool::new(33, 1.02).unwrap();
        assert_eq!(p.len(), 33);
        assert_eq!(p.factors()[p.middle()], 1.0);
        for i in 0..33 {
            assert!((p.factors()[i] * p.factors()[32 - i] - 1.0).abs() < 1e-12);
        }
        assert!(p.factors().windows(2).all(|w| w[0] < w[1]));
        assert!(ScalePool::new(4, 1.02).is_err());
        assert!(ScalePool::new(3, 1.0).is_err());
        assert_eq!(ScalePool::new(1, 1.02).unwrap().factors(), &[1.0]);
    }

    fn textured(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            (((x as f32) * 0.37).sin() * ((y as f32) * 0.23).cos() * 0.5 + 0.5).clamp(0.0, 1.0)
        })
    }

    #[test]
    fn single_scale_matches_plain_extraction() {
        let f = textured(80, 60);
        let pool = ScalePool::new(1, 1.02).unwrap();
        let maps = build_scale_samples(&f, (40.0, 30.0), (32.0, 24.0), &pool, (32, 24)).unwrap();
        assert_eq!(maps.len(), 1);
        let direct = hog(&extract_patch(&f, (40.0, 30.0), (32, 24)).unwrap()).unwrap();
        assert_eq!(maps[0], direct);
    }

    #[test]
    fn middle_of_pyramid_matches_single_scale() {
        let f = textured(120, 100);
        let one = ScalePool::new(1, 1.02).unwrap();
        let many = ScalePool::new(33, 1.02).unwrap();
        let c = (61.3, 47.8);
        let a = build_scale_samples(&f, c, (40.0, 32.0), &one, (32, 24)).unwrap();
        let b = build_scale_samples(&f, c, (40.0, 32.0), &many, (32, 24)).unwrap();
        assert_eq!(b.len(), 33);
        assert_eq!(b[16], a[0]);
    }

    #[test]
    fn scale_sample_errors_carry_index() {
        let f = textured(40, 40);
        let pool = ScalePool::new(3, 1.1).unwrap();
        let err = build_scale_samples(&f, (20.0, 20.0), (10.0, 10.0), &pool, (3, 3)).unwrap_err();
        assert!(matches!(err, Error::ScaleSample { index: 0, .. }));
    }

    #[test]
    fn hog_translation_covariance() {
        let f = textured(160, 160);
        let a = hog(&extract_patch(&f, (80.0, 80.0), (64, 64)).unwrap()).unwrap();
        let b = hog(&extract_patch(&f, (84.0, 80.0), (64, 64)).unwrap()).unwrap();
        let (cw, ch) = a.dims();
        for c in 0..HOG_CHANNELS {
            // skip cells whose gradients or block norms touch the patch border
            for y in 2..ch - 2 {
                for x in 2..cw - 3 {
                    let va = a.channels()[c].get(x + 1, y);
                    let vb = b.channels()[c].get(x, y);
                    assert!((va - vb).abs() < 1e-6, "c={c} ({x},{y}) {va} {vb}");
                }
            }
        }
    }
}
