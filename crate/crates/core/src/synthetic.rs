//! Synthetic scenes with known ground truth: textured targets on flat
//! backgrounds, with translation, zoom, occlusion and pixel noise.
//!
//! Everything is deterministic given its seeds.

use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::features::Frame;
use crate::geometry::BBox;

/// Smooth random texture in `[0, 1]`: a handful of random sinusoids plus a few
/// random rectangles, which gives HOG plenty of oriented structure.
pub fn textured_patch(width: usize, height: usize, seed: u64) -> Frame {
    let mut rng = StdRng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let angle = rng.gen_range(0.0..std::f64::consts::PI);
            let freq = rng.gen_range(0.15..0.6);
            (
                angle.cos() * freq,
                angle.sin() * freq,
                rng.gen_range(0.0..6.3),
                rng.gen_range(0.3..1.0),
            )
        })
        .collect();
    let rects: Vec<(usize, usize, usize, usize, f64)> = (0..4)
        .map(|_| {
            let w = rng.gen_range(width / 6..=width / 2).max(1);
            let h = rng.gen_range(height / 6..=height / 2).max(1);
            (
                rng.gen_range(0..width.saturating_sub(w).max(1)),
                rng.gen_range(0..height.saturating_sub(h).max(1)),
                w,
                h,
                rng.gen_range(-0.35..0.35),
            )
        })
        .collect();
    let norm: f64 = waves.iter().map(|w| w.3).sum();
    Frame::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v: f64 = waves
            .iter()
            .map(|&(fx, fy, phase, amp)| amp * (fx * xf + fy * yf + phase).sin())
            .sum::<f64>()
            / norm
            * 0.35
            + 0.55;
        for &(rx, ry, rw, rh, dv) in &rects {
            if x >= rx && x < rx + rw && y >= ry && y < ry + rh {
                v += dv;
            }
        }
        v.clamp(0.0, 1.0) as f32
    })
}

/// A textured object placed at a sub-pixel center with a zoom factor.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub texture: Frame,
    pub center: (f64, f64),
    pub scale: f64,
}

impl SceneObject {
    pub fn bbox(&self) -> BBox {
        BBox::from_center(
            self.center,
            (
                self.texture.width() as f64 * self.scale,
                self.texture.height() as f64 * self.scale,
            ),
        )
    }
}

/// A flat background with objects, occluding blocks and optional noise.
#[derive(Debug, Clone)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub background: f32,
    pub objects: Vec<SceneObject>,
    /// Uniform blocks drawn on top of the objects.
    pub occluders: Vec<(BBox, f32)>,
    /// Gaussian pixel noise: standard deviation and seed.
    pub noise: Option<(f64, u64)>,
}

impl Scene {
    pub fn new(width: usize, height: usize, background: f32) -> Self {
        Self {
            width,
            height,
            background,
            objects: Vec::new(),
            occluders: Vec::new(),
            noise: None,
        }
    }

    pub fn with_object(mut self, texture: Frame, center: (f64, f64)) -> Self {
        self.objects.push(SceneObject {
            texture,
            center,
            scale: 1.0,
        });
        self
    }

    pub fn with_scaled_object(mut self, texture: Frame, center: (f64, f64), scale: f64) -> Self {
        self.objects.push(SceneObject {
            texture,
            center,
            scale,
        });
        self
    }

    pub fn with_occluder(mut self, bbox: BBox, value: f32) -> Self {
        self.occluders.push((bbox, value));
        self
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise = Some((sigma, seed));
        self
    }

    pub fn render(&self) -> Frame {
        let mut data = vec![self.background; self.width * self.height];
        for obj in &self.objects {
            let b = obj.bbox();
            let (tw, th) = (obj.texture.width(), obj.texture.height());
            let x0 = b.x.floor().max(0.0) as usize;
            let y0 = b.y.floor().max(0.0) as usize;
            let x1 = ((b.x + b.w).ceil() as usize).min(self.width);
            let y1 = ((b.y + b.h).ceil() as usize).min(self.height);
            for y in y0..y1 {
                for x in x0..x1 {
                    // pixel-center coverage test, then bilinear texture lookup
                    let u = (x as f64 + 0.5 - b.x) / obj.scale;
                    let v = (y as f64 + 0.5 - b.y) / obj.scale;
                    if u < 0.0 || v < 0.0 || u >= tw as f64 || v >= th as f64 {
                        continue;
                    }
                    data[y * self.width + x] = bilinear(&obj.texture, u - 0.5, v - 0.5);
                }
            }
        }
        for &(b, value) in &self.occluders {
            if let Some(c) = b.clip(self.width as f64, self.height as f64) {
                for y in c.y.round() as usize..(c.y + c.h).round() as usize {
                    for x in c.x.round() as usize..(c.x + c.w).round() as usize {
                        data[y * self.width + x] = value;
                    }
                }
            }
        }
        if let Some((sigma, seed)) = self.noise {
            let mut rng = StdRng::seed_from_u64(seed);
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            for v in &mut data {
                *v = (*v as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32;
            }
        }
        Frame::new(self.width, self.height, data).expect("scene dimensions are positive")
    }
}

fn bilinear(tex: &Frame, u: f64, v: f64) -> f32 {
    let u = u.clamp(0.0, (tex.width() - 1) as f64);
    let v = v.clamp(0.0, (tex.height() - 1) as f64);
    let (x0, y0) = (u.floor() as usize, v.floor() as usize);
    let (x1, y1) = (
        (x0 + 1).min(tex.width() - 1),
        (y0 + 1).min(tex.height() - 1),
    );
    let (tx, ty) = ((u - x0 as f64) as f32, (v - y0 as f64) as f32);
    let top = tex.get(x0, y0) + (tex.get(x1, y0) - tex.get(x0, y0)) * tx;
    let bottom = tex.get(x0, y1) + (tex.get(x1, y1) - tex.get(x0, y1)) * tx;
    top + (bottom - top) * ty
}

/// Rendered frames with their ground-truth boxes.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    pub truth: Vec<BBox>,
}

impl SyntheticSequence {
    /// Renders `len` frames from a per-frame scene builder; the truth is the
    /// box of the scene's first object.
    pub fn generate(len: usize, mut scene_at: impl FnMut(usize) -> Scene) -> Self {
        let (frames, truth) = (0..len)
            .map(|t| {
                let scene = scene_at(t);
                let truth = scene
                    .objects
                    .first()
                    .map(SceneObject::bbox)
                    .expect("scene has a target");
                (scene.render(), truth)
            })
            .unzip();
        Self { frames, truth }
    }

    /// Textured `size x size` patch moving by `velocity` px per frame on a flat background.
    pub fn translating(
        len: usize,
        frame_size: (usize, usize),
        size: usize,
        start: (f64, f64),
        velocity: (f64, f64),
        noise: Option<(f64, u64)>,
    ) -> Self {
        let texture = textured_patch(size, size, 7);
        Self::generate(len, |t| {
            let c = (
                start.0 + velocity.0 * t as f64,
                start.1 + velocity.1 * t as f64,
            );
            let mut s =
                Scene::new(frame_size.0, frame_size.1, 0.35).with_object(texture.clone(), c);
            if let Some((sigma, seed)) = noise {
                s = s.with_noise(sigma, seed.wrapping_add(t as u64));
            }
            s
        })
    }

    /// Static patch zoomed by `rate` per frame (`rate > 1` grows).
    pub fn zooming(len: usize, frame_size: (usize, usize), size: usize, rate: f64) -> Self {
        let texture = textured_patch(size, size, 11);
        let center = (frame_size.0 as f64 / 2.0, frame_size.1 as f64 / 2.0);
        Self::generate(len, |t| {
            Scene::new(frame_size.0, frame_size.1, 0.35).with_scaled_object(
                texture.clone(),
                center,
                rate.powi(t as i32),
            )
        })
    }

    /// Static patch covered by a uniform block (target box grown by `margin`
    /// px per side) on frames `occluded`.
    pub fn occluded(
        len: usize,
        frame_size: (usize, usize),
        size: usize,
        occluded: std::ops::Range<usize>,
        margin: f64,
    ) -> Self {
        let texture = textured_patch(size, size, 13);
        let center = (frame_size.0 as f64 / 2.0, frame_size.1 as f64 / 2.0);
        Self::generate(len, |t| {
            let mut s =
                Scene::new(frame_size.0, frame_size.1, 0.35).with_object(texture.clone(), center);
            if occluded.contains(&t) {
                let b = s.objects[0].bbox();
                let block = BBox::new(
                    b.x - margin,
                    b.y - margin,
                    b.w + 2.0 * margin,
                    b.h + 2.0 * margin,
                );
                s = s.with_occluder(block, 0.8);
            }
            s
        })
    }

    /// Writes the sequence in OTB layout: `<root>/<name>/img/0001.png ...` and a
    /// 1-indexed `groundtruth_rect.txt`, plus `attrs.txt` when tags are given.
    pub fn write_otb(&self, root: &Path, name: &str, attrs: &[&str]) -> Result<PathBuf> {
        let dir = root.join(name);
        let img = dir.join("img");
        fs::create_dir_all(&img).map_err(|e| Error::io(&img, e))?;
        for (i, f) in self.frames.iter().enumerate() {
            let bytes: Vec<u8> = f
                .as_slice()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            let path = img.join(format!("{:04}.png", i + 1));
            image::GrayImage::from_raw(f.width() as u32, f.height() as u32, bytes)
                .expect("buffer matches dimensions")
                .save(&path)
                .map_err(|source| Error::Image {
                    path: path.clone(),
                    source,
                })?;
        }
        let gt: String = self
            .truth
            .iter()
            .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
            .collect();
        let gt_path = dir.join("groundtruth_rect.txt");
        fs::write(&gt_path, gt).map_err(|e| Error::io(&gt_path, e))?;
        if !attrs.is_empty() {
            let path = dir.join("attrs.txt");
            fs::write(&path, attrs.join("\n") + "\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_is_deterministic_and_in_range() {
        let a = textured_patch(40, 40, 3);
        assert_eq!(a, textured_patch(40, 40, 3));
        assert_ne!(a, textured_patch(40, 40, 4));
        assert!(a.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn integer_placement_copies_texture() {
        let tex = textured_patch(8, 6, 1);
        let f = Scene::new(20, 20, 0.0)
            .with_object(tex.clone(), (10.0, 10.0))
            .render();
        for y in 0..6 {
            for x in 0..8 {
                assert_eq!(f.get(6 + x, 7 + y), tex.get(x, y));
            }
        }
        assert_eq!(f.get(5, 7), 0.0);
    }

    #[test]
    fn truth_follows_motion() {
        let s = SyntheticSequence::translating(4, (100, 80), 20, (30.0, 40.0), (3.0, -1.0), None);
        assert_eq!(s.frames.len(), 4);
        assert_eq!(s.truth[3].center(), (39.0, 37.0));
        assert_eq!(s.truth[0].w, 20.0);
        let z = SyntheticSequence::zooming(3, (100, 100), 20, 1.1);
        assert!((z.truth[2].w - 20.0 * 1.21).abs() < 1e-9);
    }
}
