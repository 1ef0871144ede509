//! Felzenszwalb-style HOG: 18 contrast-sensitive orientations, 9
//! contrast-insensitive orientations and 4 gradient-energy channels per cell.
//!
//! Unlike the original formulation, boundary cells are kept (block
//! normalizers clamp to the grid), so a `w x h` patch yields exactly
//! `(w / 4) x (h / 4)` cells.

use super::{FeatureMap, ImagePatch};
use crate::error::{Error, Result};
use crate::spectrum::RealGrid;

pub const CELL_SIZE: usize = 4;
pub const HOG_CHANNELS: usize = 31;

const SENSITIVE: usize = 18;
const INSENSITIVE: usize = 9;
const NORM_EPS: f64 = 1e-4;
const CLIP: f64 = 0.2;
const TEXTURE_WEIGHT: f64 = 0.2357;

/// Unit vectors at the centers of the 9 half-circle orientation bins.
fn bin_directions() -> [(f64, f64); INSENSITIVE] {
    let mut dirs = [(0.0, 0.0); INSENSITIVE];
    for (o, d) in dirs.iter_mut().enumerate() {
        let angle = o as f64 * std::f64::consts::PI / INSENSITIVE as f64;
        *d = (angle.cos(), angle.sin());
    }
    dirs
}

/// 31-channel HOG of a patch, cell size 4.
pub fn hog(patch: &ImagePatch) -> Result<FeatureMap> {
    let (w, h) = patch.size();
    let (cw, ch) = (w / CELL_SIZE, h / CELL_SIZE);
    if cw == 0 || ch == 0 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            cell: CELL_SIZE,
        });
    }
    let px = patch.pixels();
    let at = |x: usize, y: usize| px[y * w + x] as f64;
    let dirs = bin_directions();

    // Orientation histograms with bilinear spatial voting.
    let mut hist = vec![0.0f64; cw * ch * SENSITIVE];
    let inv = 1.0 / CELL_SIZE as f64;
    // per-column (left cell, right-cell weight); the row analogue is computed per row
    let columns: Vec<(isize, f64)> = (0..w)
        .map(|x| {
            let xp = (x as f64 + 0.5) * inv - 0.5;
            let ixp = xp.floor();
            (ixp as isize, xp - ixp)
        })
        .collect();
    for y in 0..h {
        let dy_val = |x: usize| at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
        let yp = (y as f64 + 0.5) * inv - 0.5;
        let iyp = yp.floor();
        let vy0 = yp - iyp;
        let iyp = iyp as isize;
        for (x, &(ixp, vx0)) in columns.iter().enumerate() {
            let dx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
            let dy = dy_val(x);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }

            let mut best = 0.0;
            let mut best_o = 0;
            for (o, &(ux, uy)) in dirs.iter().enumerate() {
                let dot = ux * dx + uy * dy;
                if dot > best {
                    best = dot;
                    best_o = o;
                } else if -dot > best {
                    best = -dot;
                    best_o = o + INSENSITIVE;
                }
            }

            for (cy, wy) in [(iyp, 1.0 - vy0), (iyp + 1, vy0)] {
                if cy < 0 || cy >= ch as isize || wy == 0.0 {
                    continue;
                }
                for (cx, wx) in [(ixp, 1.0 - vx0), (ixp + 1, vx0)] {
                    if cx < 0 || cx >= cw as isize || wx == 0.0 {
                        continue;
                    }
                    let cell = cy as usize * cw + cx as usize;
                    hist[cell * SENSITIVE + best_o] += wx * wy * mag;
                }
            }
        }
    }

    // Energy of the contrast-insensitive histogram per cell.
    let mut energy = vec![0.0f64; cw * ch];
    for (cell, e) in energy.iter_mut().enumerate() {
        let hc = &hist[cell * SENSITIVE..(cell + 1) * SENSITIVE];
        *e = (0..INSENSITIVE)
            .map(|o| {
                let s = hc[o] + hc[o + INSENSITIVE];
                s * s
            })
            .sum();
    }
    let energy_at = |x: isize, y: isize| {
        let x = x.clamp(0, cw as isize - 1) as usize;
        let y = y.clamp(0, ch as isize - 1) as usize;
        energy[y * cw + x]
    };

    let mut channels = vec![vec![0.0f64; cw * ch]; HOG_CHANNELS];
    for y in 0..ch {
        for x in 0..cw {
            let (xi, yi) = (x as isize, y as isize);
            // the four 2x2 blocks that contain this cell
            let mut norms = [0.0f64; 4];
            for (k, (ox, oy)) in [(0, 0), (-1, 0), (0, -1), (-1, -1)].into_iter().enumerate() {
                let s = energy_at(xi + ox, yi + oy)
                    + energy_at(xi + ox + 1, yi + oy)
                    + energy_at(xi + ox, yi + oy + 1)
                    + energy_at(xi + ox + 1, yi + oy + 1);
                norms[k] = 1.0 / (s + NORM_EPS).sqrt();
            }

            let cell = y * cw + x;
            let hc = &hist[cell * SENSITIVE..(cell + 1) * SENSITIVE];
            let mut texture = [0.0f64; 4];
            for o in 0..SENSITIVE {
                let mut acc = 0.0;
                for (k, n) in norms.iter().enumerate() {
                    let v = (hc[o] * n).min(CLIP);
                    acc += v;
                    texture[k] += v;
                }
                channels[o][cell] = 0.5 * acc;
            }
            for o in 0..INSENSITIVE {
                let s = hc[o] + hc[o + INSENSITIVE];
                let acc: f64 = norms.iter().map(|n| (s * n).min(CLIP)).sum();
                channels[SENSITIVE + o][cell] = 0.5 * acc;
            }
            for (k, t) in texture.iter().enumerate() {
                channels[SENSITIVE + INSENSITIVE + k][cell] = TEXTURE_WEIGHT * t;
            }
        }
    }

    let grids = channels
        .into_iter()
        .map(|c| RealGrid::from_raw(cw, ch, c))
        .collect();
    FeatureMap::new(grids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Frame, ImagePatch};

    fn patch(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> ImagePatch {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(f(x, y));
            }
        }
        ImagePatch::from_frame(Frame::new(w, h, data).unwrap())
    }

    #[test]
    fn shape() {
        let m = hog(&patch(32, 32, |x, y| ((x * 7 + y * 3) % 11) as f32 / 11.0)).unwrap();
        assert_eq!(m.channel_count(), HOG_CHANNELS);
        assert_eq!(m.dims(), (8, 8));
        let m = hog(&patch(18, 9, |x, _| x as f32)).unwrap();
        assert_eq!(m.dims(), (4, 2));
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            hog(&patch(3, 8, |_, _| 0.0)),
            Err(Error::PatchTooSmall { .. })
        ));
    }

    #[test]
    fn uniform_patch_has_no_features() {
        let m = hog(&patch(16, 16, |_, _| 0.6)).unwrap();
        for c in m.channels() {
            assert!(c.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn deterministic() {
        let p = patch(24, 20, |x, y| ((x * x + 3 * y) % 17) as f32 / 17.0);
        assert_eq!(hog(&p).unwrap(), hog(&p).unwrap());
    }

    #[test]
    fn values_bounded() {
        let p = patch(24, 24, |x, y| ((x * 31 + y * 17) % 13) as f32 / 13.0);
        let m = hog(&p).unwrap();
        for c in m.channels() {
            assert!(c
                .as_slice()
                .iter()
                .all(|&v| (0.0..=4.0 * CLIP * 0.5 * 18.0).contains(&v)));
        }
        // clipped orientation channels never exceed 4 * 0.2 * 0.5
        for c in &m.channels()[..27] {
            assert!(c.as_slice().iter().all(|&v| v <= 0.4 + 1e-12));
        }
    }
}
