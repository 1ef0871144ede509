//! Frame-by-frame tracking loop.
//!
//! Per frame: kernel response against the learned appearance, position from
//! the response peak, scale from the 1-D scale filter, then a closed-form
//! filter solve and a learning-rate blend of the model, skipped when the
//! peak-to-sidelobe ratio says the detection is unreliable.

mod config;
mod scale_filter;

pub use config::{RegularizerKind, TrackerConfig};
pub use scale_filter::{ScaleFilter, ScaleSample};

use log::warn;

use crate::error::{Error, Result};
use crate::features::{
    cosine_window, hann_2d, hog, sample_region, FeatureMap, Frame, ScalePool, CELL_SIZE,
};
use crate::geometry::BBox;
use crate::huber_solver::{accumulate_bin_coefficients, solve_filter_with};
use crate::kernel::{gaussian_kernel_spectral, FeatureSpectra, KernelConfig};
use crate::spectrum::{fft2, ifft2, spectral_mul, ComplexSpectrum, RealGrid};

/// Where the target is and how big it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    /// Center, px.
    pub center: (f64, f64),
    /// Size at scale 1, px.
    pub base_size: (f64, f64),
    pub scale: f64,
}

impl TargetState {
    pub fn size(&self) -> (f64, f64) {
        (self.base_size.0 * self.scale, self.base_size.1 * self.scale)
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_center(self.center, self.size())
    }
}

/// Learned appearance `ẑ_t`, filter `ĥ*_t` and scale filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerModel {
    pub z_hat: FeatureSpectra,
    pub h_hat: ComplexSpectrum,
    pub scale_filter: Option<ScaleFilter>,
    /// Frames processed, starting at 1 for the initialization frame.
    pub frame_index: usize,
}

/// Regression response over all cyclic shifts of the search window.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub values: RealGrid,
    pub peak: (usize, usize),
    pub peak_value: f64,
}

impl ResponseMap {
    pub fn new(values: RealGrid) -> Self {
        let (peak, peak_value) = values.argmax();
        Self {
            values,
            peak,
            peak_value,
        }
    }
}

/// Peak-to-sidelobe ratio `(R_max − μ) / σ`, with `μ`, `σ` taken over every cell
/// outside an `exclusion x exclusion` square (cyclic) around the peak.
///
/// A (numerically) zero numerator gives 0; otherwise a vanishing `σ` gives `+∞`.
pub fn psr(response: &ResponseMap, exclusion: usize) -> f64 {
    let grid = &response.values;
    let (w, h) = grid.dims();
    let (px, py) = response.peak;
    let half = exclusion / 2;
    let excluded = |i: usize, p: usize, n: usize| {
        let d = (i + n - p) % n;
        d.min(n - d) <= half
    };
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0usize);
    for y in 0..h {
        let ey = excluded(y, py, h);
        for x in 0..w {
            if ey && excluded(x, px, w) {
                continue;
            }
            let v = grid.get(x, y);
            sum += v;
            sum_sq += v * v;
            count += 1;
        }
    }
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let var = (sum_sq / count as f64 - mean * mean).max(0.0);
    let numerator = response.peak_value - mean;
    if numerator.abs() <= 1e-12 * response.peak_value.abs().max(1.0) {
        return 0.0;
    }
    let sd = var.sqrt();
    if sd < 1e-12 {
        return f64::INFINITY;
    }
    numerator / sd
}

/// Per-frame tracking result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOutput {
    pub bbox: BBox,
    pub psr: f64,
    /// Whether the model was updated on this frame.
    pub updated: bool,
    /// Scale multiplier chosen on this frame (1 when scale is off).
    pub scale_factor: f64,
}

/// Fixed sampling geometry of the translation template.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Geometry {
    /// Template size in cells.
    cells: (usize, usize),
    /// Search window at scale 1, px.
    window: (f64, f64),
}

impl Geometry {
    fn new(target: (f64, f64), cfg: &TrackerConfig) -> Self {
        let cell = CELL_SIZE as f64;
        let raw = (target.0 * cfg.padding, target.1 * cfg.padding);
        let shrink = (cfg.max_template_cells as f64 * cell / raw.0.max(raw.1)).min(1.0);
        let cells = |side: f64| ((side * shrink / cell).round() as usize).max(2);
        let cells = (cells(raw.0), cells(raw.1));
        Self {
            cells,
            window: (
                cells.0 as f64 * cell / shrink,
                cells.1 as f64 * cell / shrink,
            ),
        }
    }

    fn template_px(&self) -> (usize, usize) {
        (self.cells.0 * CELL_SIZE, self.cells.1 * CELL_SIZE)
    }

    /// Source px per template cell at `scale`.
    fn cell_px(&self, scale: f64) -> (f64, f64) {
        (
            self.window.0 * scale / self.cells.0 as f64,
            self.window.1 * scale / self.cells.1 as f64,
        )
    }
}

/// Gaussian regression target peaked at zero shift (wrapping at the borders).
fn gaussian_label(cells: (usize, usize), sigma: f64) -> RealGrid {
    let wrap = |i: usize, n: usize| {
        let i = i as f64;
        let n = n as f64;
        if i >= n / 2.0 {
            i - n
        } else {
            i
        }
    };
    RealGrid::from_fn(cells.0, cells.1, |x, y| {
        let (dx, dy) = (wrap(x, cells.0), wrap(y, cells.1));
        (-0.5 * (dx * dx + dy * dy) / (sigma * sigma)).exp()
    })
}

/// Signed offset of a cyclic index, refined by a parabola through its neighbours.
fn subcell_offset(line: impl Fn(usize) -> f64, peak: usize, n: usize) -> f64 {
    let signed = if peak > n / 2 {
        peak as f64 - n as f64
    } else {
        peak as f64
    };
    if n < 3 {
        return signed;
    }
    let left = line((peak + n - 1) % n);
    let mid = line(peak);
    let right = line((peak + 1) % n);
    let curvature = left - 2.0 * mid + right;
    let delta = if curvature < 0.0 {
        (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    signed + delta
}

/// A single-target tracker.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    kernel: KernelConfig,
    geometry: Geometry,
    window: RealGrid,
    label_hat: ComplexSpectrum,
    model: TrackerModel,
    state: TargetState,
}

impl Tracker {
    /// Trains on the first frame. The box is clipped to the frame first.
    pub fn init(frame: &Frame, bbox: BBox, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let min = cfg.min_box_size;
        let clipped = bbox
            .clip(frame.width() as f64, frame.height() as f64)
            .ok_or(Error::BoxTooSmall {
                w: 0.0,
                h: 0.0,
                min,
            })?;
        if clipped.w < min || clipped.h < min {
            return Err(Error::BoxTooSmall {
                w: clipped.w,
                h: clipped.h,
                min,
            });
        }

        let state = TargetState {
            center: clipped.center(),
            base_size: (clipped.w, clipped.h),
            scale: 1.0,
        };
        let geometry = Geometry::new(state.base_size, &cfg);
        let shrink = geometry.cells.0 as f64 * CELL_SIZE as f64 / geometry.window.0;
        let sigma =
            (state.base_size.0 * state.base_size.1).sqrt() * cfg.label_sigma_factor * shrink
                / CELL_SIZE as f64;
        let label_hat = fft2(&gaussian_label(geometry.cells, sigma));
        let window = hann_2d(geometry.cells.0, geometry.cells.1);
        let kernel = KernelConfig::new(cfg.sigma)?;

        let scale_filter = if cfg.estimate_scale {
            let pool = ScalePool::new(cfg.num_scales, cfg.scale_base)?;
            let mut sf = ScaleFilter::new(
                pool,
                state.base_size,
                cfg.scale_template_cells,
                cfg.scale_sigma_factor,
                cfg.scale_lambda,
            );
            sf.update(frame, state.center, state.size(), 1.0)?;
            Some(sf)
        } else {
            None
        };

        let mut tracker = Self {
            kernel,
            geometry,
            window,
            label_hat,
            model: TrackerModel {
                z_hat: FeatureSpectra::from_spectra(vec![ComplexSpectrum::zeros(1, 1)])?,
                h_hat: ComplexSpectrum::zeros(1, 1),
                scale_filter,
                frame_index: 1,
            },
            state,
            cfg,
        };
        let (z_hat, h_hat) = tracker.train(frame)?;
        tracker.model.z_hat = z_hat;
        tracker.model.h_hat = h_hat;
        Ok(tracker)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TargetState {
        &self.state
    }

    pub fn model(&self) -> &TrackerModel {
        &self.model
    }

    pub fn bbox(&self) -> BBox {
        self.state.bbox()
    }

    /// Template size in cells (equals the response-map size).
    pub fn template_cells(&self) -> (usize, usize) {
        self.geometry.cells
    }

    /// Windowed HOG of the search window around `center` at the current scale.
    pub fn features_at(&self, frame: &Frame, center: (f64, f64)) -> Result<FeatureMap> {
        let scale = self.state.scale;
        let region = (
            self.geometry.window.0 * scale,
            self.geometry.window.1 * scale,
        );
        let patch = sample_region(frame, center, region, self.geometry.template_px())?;
        let map = hog(&patch)?;
        debug_assert_eq!(map.dims(), (self.window.width(), self.window.height()));
        cosine_window(map)
    }

    /// Appearance spectrum and freshly solved filter at the current state.
    fn train(&self, frame: &Frame) -> Result<(FeatureSpectra, ComplexSpectrum)> {
        let z = FeatureSpectra::from_map(&self.features_at(frame, self.state.center)?);
        let k = gaussian_kernel_spectral(&z, &z, self.kernel)?;
        let k_hat = fft2(&k.values);
        let coef = accumulate_bin_coefficients(&[k_hat], std::slice::from_ref(&self.label_hat))?;
        let filter = solve_filter_with(&coef, self.cfg.regularizer())?;
        Ok((z, filter.to_spectrum()))
    }

    /// Response of the current model on `frame` around the current center.
    pub fn response(&self, frame: &Frame) -> Result<ResponseMap> {
        let x = FeatureSpectra::from_map(&self.features_at(frame, self.state.center)?);
        let k = gaussian_kernel_spectral(&x, &self.model.z_hat, self.kernel)?;
        let values = ifft2(&spectral_mul(&self.model.h_hat, &fft2(&k.values), false)?)?;
        Ok(ResponseMap::new(values))
    }

    /// New center from the response peak, plus the response itself.
    pub fn detect_position(&self, frame: &Frame) -> Result<((f64, f64), ResponseMap)> {
        let response = self.response(frame)?;
        let (w, h) = response.values.dims();
        let (px, py) = response.peak;
        let grid = &response.values;
        let dx = subcell_offset(|i| grid.get(i, py), px, w);
        let dy = subcell_offset(|i| grid.get(px, i), py, h);
        let (sx, sy) = self.geometry.cell_px(self.state.scale);
        let center = (self.state.center.0 + dx * sx, self.state.center.1 + dy * sy);
        Ok((center, response))
    }

    /// Best pool factor around `center`; 1 when scale estimation is off.
    pub fn estimate_scale(&self, frame: &Frame, center: (f64, f64)) -> Result<f64> {
        match &self.model.scale_filter {
            Some(sf) => {
                let r = sf.responses(frame, center, self.state.size())?;
                Ok(sf.best_factor(&r))
            }
            None => Ok(1.0),
        }
    }

    /// Retrains and blends the model at the current state when `psr` clears the
    /// threshold. Returns whether an update happened.
    pub fn update(&mut self, frame: &Frame, psr: f64) -> Result<bool> {
        if psr.is_nan() || psr <= self.cfg.psr_threshold {
            return Ok(false);
        }
        self.blend_model(frame, self.cfg.learning_rate)?;
        Ok(true)
    }

    fn blend_model(&mut self, frame: &Frame, rate: f64) -> Result<()> {
        let (z, h) = self.train(frame)?;
        self.model.z_hat.blend(&z, rate)?;
        self.model.h_hat.blend(&h, rate)?;
        Ok(())
    }

    /// Updates the scale filter at the current state, reusing `cached` when it
    /// was sampled at exactly that center and size.
    fn update_scale_filter(&mut self, frame: &Frame, cached: Option<ScaleSample>) -> Result<()> {
        let (center, size) = (self.state.center, self.state.size());
        let rate = self.cfg.scale_learning_rate;
        if let Some(sf) = self.model.scale_filter.as_mut() {
            let sample = match cached {
                Some(s) if s.center == center && s.size == size => s,
                _ => sf.sample(frame, center, size)?,
            };
            sf.update_with(&sample, rate);
        }
        Ok(())
    }

    fn step(&mut self, frame: &Frame) -> Result<FrameOutput> {
        self.model.frame_index += 1;
        let (center, response) = self.detect_position(frame)?;
        let score = psr(&response, self.cfg.psr_exclusion);
        self.state.center = center;

        let (factor, sample) = match &self.model.scale_filter {
            Some(sf) => {
                let sample = sf.sample(frame, center, self.state.size())?;
                (sf.best_factor(&sf.responses_for(&sample)), Some(sample))
            }
            None => (1.0, None),
        };
        self.state.scale =
            (self.state.scale * factor).clamp(self.cfg.min_scale, self.cfg.max_scale);

        let updated = self.update(frame, score)?;
        if updated || !self.cfg.gate_scale_update {
            self.update_scale_filter(frame, sample)?;
        }
        Ok(FrameOutput {
            bbox: self.state.bbox(),
            psr: score,
            updated,
            scale_factor: factor,
        })
    }

    /// Processes the next frame. Never fails: internal errors keep the previous
    /// state and skip the update.
    pub fn track(&mut self, frame: &Frame) -> FrameOutput {
        let before = (self.state, self.model.clone());
        match self.step(frame) {
            Ok(out) => out,
            Err(e) => {
                warn!(
                    "frame {}: {e}; keeping previous state",
                    before.1.frame_index + 1
                );
                self.state = before.0;
                self.model = before.1;
                self.model.frame_index += 1;
                FrameOutput {
                    bbox: self.state.bbox(),
                    psr: 0.0,
                    updated: false,
                    scale_factor: 1.0,
                }
            }
        }
    }
}

/// Boxes for every frame; the first is the (clipped) initial box.
pub fn track_sequence<'a>(
    frames: impl IntoIterator<Item = &'a Frame>,
    init_box: BBox,
    cfg: TrackerConfig,
) -> Result<Vec<BBox>> {
    let mut frames = frames.into_iter();
    let first = frames.next().ok_or(Error::EmptyImage)?;
    let mut tracker = Tracker::init(first, init_box, cfg)?;
    let mut boxes = vec![tracker.bbox()];
    boxes.extend(frames.map(|f| tracker.track(f).bbox));
    Ok(boxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{textured_patch, Scene};

    fn delta_map(w: usize, h: usize, at: (usize, usize)) -> ResponseMap {
        let mut g = RealGrid::zeros(w, h);
        g.set(at.0, at.1, 1.0);
        ResponseMap::new(g)
    }

    #[test]
    fn psr_degenerate_cases() {
        assert_eq!(psr(&delta_map(32, 32, (3, 30)), 11), f64::INFINITY);
        let uniform = ResponseMap::new(RealGrid::from_fn(20, 20, |_, _| 0.7));
        assert_eq!(psr(&uniform, 11), 0.0);
        // everything excluded
        assert_eq!(psr(&delta_map(5, 5, (2, 2)), 11), 0.0);
    }

    #[test]
    fn psr_reference_formula() {
        let g = RealGrid::from_fn(64, 64, |x, y| {
            let (dx, dy) = (x as f64 - 40.0, y as f64 - 21.0);
            (-(dx * dx + dy * dy) / 18.0).exp() + 0.01 * ((x * 7 + y * 13) % 5) as f64
        });
        let r = ResponseMap::new(g.clone());
        assert_eq!(r.peak, (40, 21));
        let mut side = vec![];
        for y in 0..64 {
            for x in 0..64 {
                if (x as i64 - 40).abs() <= 5 && (y as i64 - 21).abs() <= 5 {
                    continue;
                }
                side.push(g.get(x, y));
            }
        }
        let n = side.len() as f64;
        let mean = side.iter().sum::<f64>() / n;
        let sd = (side.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let expected = (r.peak_value - mean) / sd;
        assert!((psr(&r, 11) - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn psr_exclusion_wraps() {
        // peak at a corner: the wrapped neighbours are excluded too
        let g = RealGrid::from_fn(30, 30, |x, y| {
            let near = |i: usize| i.min(30 - i) <= 5;
            if (x, y) == (0, 0) {
                2.0
            } else if near(x) && near(y) {
                1.0
            } else {
                ((x * 3 + y) % 4) as f64 * 0.1
            }
        });
        let r = ResponseMap::new(g.clone());
        let side: Vec<f64> = (0..30)
            .flat_map(|y| (0..30).map(move |x| (x, y)))
            .filter(|&(x, y)| !(x.min(30 - x) <= 5 && y.min(30 - y) <= 5))
            .map(|(x, y)| g.get(x, y))
            .collect();
        assert!(side.iter().all(|&v| v < 1.0));
        let n = side.len() as f64;
        let mean = side.iter().sum::<f64>() / n;
        let sd = (side.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((psr(&r, 11) - (2.0 - mean) / sd).abs() < 1e-9);
    }

    #[test]
    fn label_peaks_at_origin() {
        let g = gaussian_label((10, 7), 1.3);
        assert_eq!(g.argmax().0, (0, 0));
        assert_eq!(g.get(0, 0), 1.0);
        assert!((g.get(1, 0) - g.get(9, 0)).abs() < 1e-15);
    }

    #[test]
    fn subcell_refinement() {
        // parabola with vertex at 2.3
        let f = |i: usize| -((i as f64) - 2.3).powi(2);
        assert!((subcell_offset(f, 2, 10) - 2.3).abs() < 1e-12);
        // wrapped index
        let g = |i: usize| {
            let d = if i > 5 { i as f64 - 10.0 } else { i as f64 };
            -(d + 1.2).powi(2)
        };
        assert!((subcell_offset(g, 9, 10) + 1.2).abs() < 1e-12);
    }

    fn scene() -> Scene {
        Scene::new(160, 120, 0.35).with_object(textured_patch(32, 32, 5), (80.0, 60.0))
    }

    #[test]
    fn init_and_self_detection() {
        let frame = scene().render();
        let bbox = BBox::from_center((80.0, 60.0), (32.0, 32.0));
        let t = Tracker::init(&frame, bbox, TrackerConfig::default()).unwrap();
        let (center, response) = t.detect_position(&frame).unwrap();
        assert_eq!(response.peak, (0, 0));
        assert!((center.0 - 80.0).abs() < 1e-6 && (center.1 - 60.0).abs() < 1e-6);
        assert!(psr(&response, 11) > 10.0);
    }

    #[test]
    fn init_errors_and_clipping() {
        let frame = scene().render();
        assert!(matches!(
            Tracker::init(
                &frame,
                BBox::new(10.0, 10.0, 4.0, 4.0),
                TrackerConfig::default()
            ),
            Err(Error::BoxTooSmall { .. })
        ));
        let t = Tracker::init(
            &frame,
            BBox::new(140.0, 100.0, 40.0, 40.0),
            TrackerConfig::default(),
        )
        .unwrap();
        assert_eq!(t.bbox(), BBox::new(140.0, 100.0, 20.0, 20.0));
        assert!(Tracker::init(
            &frame,
            BBox::new(500.0, 0.0, 40.0, 40.0),
            TrackerConfig::default()
        )
        .is_err());
    }

    #[test]
    fn gate_keeps_model_bit_identical() {
        let frame = scene().render();
        let bbox = BBox::from_center((80.0, 60.0), (32.0, 32.0));
        let mut t = Tracker::init(&frame, bbox, TrackerConfig::default()).unwrap();
        let before = t.model().clone();
        assert!(!t.update(&frame, 9.99).unwrap());
        assert_eq!(t.model(), &before);
        assert!(!t.update(&frame, f64::NAN).unwrap());
        assert_eq!(t.model(), &before);
    }

    #[test]
    fn full_rate_replaces_model() {
        let a = scene().render();
        let b = Scene::new(160, 120, 0.35)
            .with_object(textured_patch(32, 32, 9), (80.0, 60.0))
            .render();
        let bbox = BBox::from_center((80.0, 60.0), (32.0, 32.0));
        let cfg = TrackerConfig {
            learning_rate: 1.0,
            estimate_scale: false,
            ..TrackerConfig::default()
        };
        let mut t = Tracker::init(&a, bbox, cfg.clone()).unwrap();
        assert!(t.update(&b, f64::INFINITY).unwrap());
        let fresh = Tracker::init(&b, bbox, cfg).unwrap();
        assert_eq!(t.model().z_hat, fresh.model().z_hat);
        assert_eq!(t.model().h_hat, fresh.model().h_hat);
    }

    #[test]
    fn identical_frame_is_fixed_point() {
        let frame = scene().render();
        let bbox = BBox::from_center((80.0, 60.0), (32.0, 32.0));
        let mut t = Tracker::init(&frame, bbox, TrackerConfig::default()).unwrap();
        let before = t.model().clone();
        assert!(t.update(&frame, f64::INFINITY).unwrap());
        assert_eq!(t.model().z_hat, before.z_hat);
        assert_eq!(t.model().h_hat, before.h_hat);
    }

    #[test]
    fn single_frame_sequence() {
        let frame = scene().render();
        let bbox = BBox::from_center((80.0, 60.0), (32.0, 32.0));
        let boxes = track_sequence([&frame], bbox, TrackerConfig::default()).unwrap();
        assert_eq!(boxes, vec![bbox]);
    }
}
