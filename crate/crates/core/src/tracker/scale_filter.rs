//! One-dimensional correlation filter over the scale pyramid.
//!
//! Each scale sample is flattened into a feature column; the filter is a
//! per-feature-row 1-D spectrum along the scale axis, with a shared
//! denominator (multi-channel MOSSE along scales).

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::features::{build_scale_samples, hann, FeatureMap, Frame, ScalePool, CELL_SIZE};
use crate::spectrum::fft_rows;

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFilter {
    pool: ScalePool,
    template: (usize, usize),
    window: Vec<f64>,
    label_hat: Vec<Complex64>,
    lambda: f64,
    /// `dims x N`, row-major by feature dimension.
    numerator: Vec<Complex64>,
    denominator: Vec<f64>,
}

impl ScaleFilter {
    /// Pool, template (px) and label for a target of `base_size` px.
    pub fn new(
        pool: ScalePool,
        base_size: (f64, f64),
        max_cells: usize,
        sigma_factor: f64,
        lambda: f64,
    ) -> Self {
        let cell = CELL_SIZE as f64;
        let shrink = (max_cells as f64 * cell / base_size.0.max(base_size.1)).min(1.0);
        let cells = |side: f64| ((side * shrink / cell).round() as usize).clamp(1, max_cells);
        let template = (
            cells(base_size.0) * CELL_SIZE,
            cells(base_size.1) * CELL_SIZE,
        );

        let n = pool.len();
        let mid = pool.middle() as f64;
        let sigma = (n as f64).sqrt() * sigma_factor;
        let mut label_hat: Vec<Complex64> = (0..n)
            .map(|i| {
                let d = i as f64 - mid;
                Complex64::new((-0.5 * d * d / (sigma * sigma)).exp(), 0.0)
            })
            .collect();
        fft_rows(&mut label_hat, n, false);

        Self {
            window: hann(n),
            pool,
            template,
            label_hat,
            lambda,
            numerator: Vec::new(),
            denominator: Vec::new(),
        }
    }

    pub fn pool(&self) -> &ScalePool {
        &self.pool
    }

    pub fn template(&self) -> (usize, usize) {
        self.template
    }

    pub fn is_trained(&self) -> bool {
        !self.denominator.is_empty()
    }

    /// Windowed scale samples around `center` / `size`, transformed along the scale axis.
    pub fn sample(
        &self,
        frame: &Frame,
        center: (f64, f64),
        size: (f64, f64),
    ) -> Result<ScaleSample> {
        let maps = build_scale_samples(frame, center, size, &self.pool, self.template)?;
        let n = maps.len();
        let dims = maps[0].total_len();
        let mut data = vec![Complex64::new(0.0, 0.0); dims * n];
        for (s, (map, w)) in maps.iter().zip(&self.window).enumerate() {
            for (d, v) in flatten(map).enumerate() {
                data[d * n + s] = Complex64::new(v * w, 0.0);
            }
        }
        fft_rows(&mut data, n, false);
        Ok(ScaleSample {
            center,
            size,
            spectra: data,
        })
    }

    /// Trains on the pyramid at `center` / `size`; `rate = 1` replaces the model.
    pub fn update(
        &mut self,
        frame: &Frame,
        center: (f64, f64),
        size: (f64, f64),
        rate: f64,
    ) -> Result<()> {
        let sample = self.sample(frame, center, size)?;
        self.update_with(&sample, rate);
        Ok(())
    }

    /// Trains on a precomputed sample.
    pub fn update_with(&mut self, sample: &ScaleSample, rate: f64) {
        let n = self.pool.len();
        let spectra = &sample.spectra;
        let replace = !self.is_trained() || rate >= 1.0;
        if replace {
            self.numerator = vec![Complex64::new(0.0, 0.0); spectra.len()];
        }
        let mut den = vec![0.0; n];
        for (row_in, row_out) in spectra
            .chunks_exact(n)
            .zip(self.numerator.chunks_exact_mut(n))
        {
            for k in 0..n {
                let v = self.label_hat[k] * row_in[k].conj();
                if replace {
                    row_out[k] = v;
                } else {
                    row_out[k] += (v - row_out[k]) * rate;
                }
                den[k] += row_in[k].norm_sqr();
            }
        }
        if replace {
            self.denominator = den;
        } else {
            for (a, b) in self.denominator.iter_mut().zip(&den) {
                *a += (*b - *a) * rate;
            }
        }
    }

    /// Filter response for every pool entry.
    pub fn responses(
        &self,
        frame: &Frame,
        center: (f64, f64),
        size: (f64, f64),
    ) -> Result<Vec<f64>> {
        Ok(self.responses_for(&self.sample(frame, center, size)?))
    }

    /// Filter response for every pool entry of a precomputed sample.
    pub fn responses_for(&self, sample: &ScaleSample) -> Vec<f64> {
        let n = self.pool.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for (x, h) in sample
            .spectra
            .chunks_exact(n)
            .zip(self.numerator.chunks_exact(n))
        {
            for k in 0..n {
                acc[k] += h[k] * x[k];
            }
        }
        for (a, d) in acc.iter_mut().zip(&self.denominator) {
            *a /= d + self.lambda;
        }
        fft_rows(&mut acc, n, true);
        acc.iter().map(|c| c.re / n as f64).collect()
    }

    /// Pool factor with the highest response.
    pub fn best_factor(&self, responses: &[f64]) -> f64 {
        self.pool.factors()[argmax(responses)]
    }
}

/// Scale-axis spectra of one pyramid, tagged with where it was sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSample {
    pub center: (f64, f64),
    pub size: (f64, f64),
    spectra: Vec<Complex64>,
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn flatten(map: &FeatureMap) -> impl Iterator<Item = f64> + '_ {
    map.channels()
        .iter()
        .flat_map(|c| c.as_slice().iter().copied())
}
