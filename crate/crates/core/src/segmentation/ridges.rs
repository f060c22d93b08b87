use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{sample_bilinear, SegmentationConfig};
use crate::capture::{Frame, GrayFrame, Mask};
use crate::error::{PadError, Result};

/// Which intensity extreme the ridges occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RidgePolarity {
    Dark,
    Bright,
}

/// Gray intensities sampled along one traced ridge path.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSignal {
    pub samples: Vec<f64>,
    pub path: Vec<(usize, usize)>,
}

impl RidgeSignal {
    pub fn from_path(gray: &GrayFrame, path: Vec<(usize, usize)>) -> Self {
        let samples = path
            .iter()
            .map(|&(x, y)| f64::from(gray.get(x, y)))
            .collect();
        Self { samples, path }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Joins signals end to end.
    pub fn concat<'a>(signals: impl IntoIterator<Item = &'a RidgeSignal>) -> RidgeSignal {
        let mut out = RidgeSignal {
            samples: Vec::new(),
            path: Vec::new(),
        };
        for s in signals {
            out.samples.extend_from_slice(&s.samples);
            out.path.extend_from_slice(&s.path);
        }
        out
    }
}

/// Block-wise ridge direction in radians, in `[0, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    pub block: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub angles: Vec<f64>,
}

impl OrientationField {
    pub fn ridge_angle_at(&self, x: usize, y: usize) -> f64 {
        let bx = (x / self.block).min(self.blocks_x - 1);
        let by = (y / self.block).min(self.blocks_y - 1);
        self.angles[by * self.blocks_x + bx]
    }
}

fn sobel(gray: &GrayFrame) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (gray.width, gray.height);
    let p = |x: isize, y: isize| {
        let xx = x.clamp(0, w as isize - 1) as usize;
        let yy = y.clamp(0, h as isize - 1) as usize;
        f64::from(gray.get(xx, yy))
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (p(x + 1, y - 1) + 2.0 * p(x + 1, y) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2.0 * p(x - 1, y) + p(x - 1, y + 1));
            gy[i] = (p(x - 1, y + 1) + 2.0 * p(x, y + 1) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2.0 * p(x, y - 1) + p(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Least-squares ridge orientation per block from Sobel gradients, smoothed
/// over the 3x3 block neighborhood in the doubled-angle domain.
pub fn orientation_field(gray: &GrayFrame, block: usize) -> OrientationField {
    let (w, h) = (gray.width, gray.height);
    let (gx, gy) = sobel(gray);
    let blocks_x = w.div_ceil(block);
    let blocks_y = h.div_ceil(block);
    let mut vx = vec![0.0; blocks_x * blocks_y];
    let mut vy = vec![0.0; blocks_x * blocks_y];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let b = (y / block) * blocks_x + x / block;
            vx[b] += gx[i] * gx[i] - gy[i] * gy[i];
            vy[b] += 2.0 * gx[i] * gy[i];
        }
    }
    let mut angles = vec![0.0; blocks_x * blocks_y];
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let (mut sx, mut sy) = (0.0, 0.0);
            for ny in by.saturating_sub(1)..=(by + 1).min(blocks_y - 1) {
                for nx in bx.saturating_sub(1)..=(bx + 1).min(blocks_x - 1) {
                    sx += vx[ny * blocks_x + nx];
                    sy += vy[ny * blocks_x + nx];
                }
            }
            let gradient = 0.5 * sy.atan2(sx);
            angles[by * blocks_x + bx] = (gradient + PI / 2.0).rem_euclid(PI);
        }
    }
    OrientationField {
        block,
        blocks_x,
        blocks_y,
        angles,
    }
}

const SMOOTH_HALF_LEN: i32 = 3;

/// Mean of seven bilinear samples along the local ridge direction.
fn smooth_along_ridges(gray: &GrayFrame, field: &OrientationField, mask: &Mask) -> Vec<f64> {
    let (w, h) = (gray.width, gray.height);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask.get(x, y) {
                out[i] = f64::from(gray.get(x, y));
                continue;
            }
            let theta = field.ridge_angle_at(x, y);
            let (dx, dy) = (theta.cos(), theta.sin());
            let (mut sum, mut n) = (0.0, 0.0);
            for t in -SMOOTH_HALF_LEN..=SMOOTH_HALF_LEN {
                let t = f64::from(t);
                if let Some(v) = sample_bilinear(gray, x as f64 + t * dx, y as f64 + t * dy) {
                    sum += v;
                    n += 1.0;
                }
            }
            out[i] = sum / n;
        }
    }
    out
}

fn binarize(
    smoothed: &[f64],
    mask: &Mask,
    block: usize,
    polarity: RidgePolarity,
) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let mut out = Mask::empty(w, h);
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (x_end, y_end) = ((bx + block).min(w), (by + block).min(h));
            let (mut sum, mut n) = (0.0, 0usize);
            for y in by..y_end {
                for x in bx..x_end {
                    if mask.get(x, y) {
                        sum += smoothed[y * w + x];
                        n += 1;
                    }
                }
            }
            if n == 0 {
                continue;
            }
            let mean = sum / n as f64;
            for y in by..y_end {
                for x in bx..x_end {
                    let v = smoothed[y * w + x];
                    let ridge = match polarity {
                        RidgePolarity::Dark => v < mean,
                        RidgePolarity::Bright => v > mean,
                    };
                    if mask.get(x, y) && ridge {
                        out.set(x, y, true);
                    }
                }
            }
        }
    }
    out
}

// Neighbor offsets in ring order: N, NE, E, SE, S, SW, W, NW.
const RING: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn ring_values(m: &Mask, x: usize, y: usize) -> [bool; 8] {
    let mut out = [false; 8];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        let (xx, yy) = (x as isize + dx, y as isize + dy);
        out[k] = xx >= 0
            && yy >= 0
            && (xx as usize) < m.width
            && (yy as usize) < m.height
            && m.get(xx as usize, yy as usize);
    }
    out
}

/// Zhang-Suen thinning to a one-pixel-wide skeleton.
pub fn thin(mask: &Mask) -> Mask {
    let mut m = mask.clone();
    let (w, h) = (m.width, m.height);
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !m.get(x, y) {
                        continue;
                    }
                    let r = ring_values(&m, x, y);
                    let b = r.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&k| !r[k] && r[(k + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (n, e, s, wv) = (r[0], r[2], r[4], r[6]);
                    let ok = if pass == 0 {
                        !(n && e && s) && !(e && s && wv)
                    } else {
                        !(n && e && wv) && !(n && s && wv)
                    };
                    if ok {
                        remove.push((x, y));
                    }
                }
            }
            changed |= !remove.is_empty();
            for (x, y) in remove {
                m.set(x, y, false);
            }
        }
        if !changed {
            return m;
        }
    }
}

fn crossing_number(r: &[bool; 8]) -> usize {
    (0..8).filter(|&k| !r[k] && r[(k + 1) % 8]).count()
}

/// Splits a skeleton into ordered branches.
///
/// Pixels with crossing number >= 3 are junctions and belong to no branch.
/// Branches start at endpoints; whatever remains (closed loops) is traced
/// from its first pixel in raster order. Walks prefer 4-neighbors so
/// staircase segments are visited completely.
pub fn trace_skeleton(skeleton: &Mask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (skeleton.width, skeleton.height);
    let mut junction = vec![false; w * h];
    let mut endpoint = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if skeleton.get(x, y) {
                let r = ring_values(skeleton, x, y);
                let cn = crossing_number(&r);
                let degree = r.iter().filter(|&&v| v).count();
                junction[y * w + x] = cn >= 3;
                endpoint[y * w + x] = cn <= 1 || degree <= 1;
            }
        }
    }
    let mut visited = vec![false; w * h];
    let usable = |i: usize, visited: &[bool]| skeleton.as_slice()[i] && !junction[i] && !visited[i];

    let walk = |start: (usize, usize), visited: &mut Vec<bool>| {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            let mut next = None;
            // 4-neighbors first (even ring indices), then diagonals.
            for k in [0usize, 2, 4, 6, 1, 3, 5, 7] {
                let (dx, dy) = RING[k];
                let (xx, yy) = (cur.0 as isize + dx, cur.1 as isize + dy);
                if xx < 0 || yy < 0 || xx as usize >= w || yy as usize >= h {
                    continue;
                }
                let j = yy as usize * w + xx as usize;
                if usable(j, visited) {
                    next = Some((xx as usize, yy as usize));
                    break;
                }
            }
            match next {
                Some(p) => {
                    visited[p.1 * w + p.0] = true;
                    path.push(p);
                    cur = p;
                }
                None => return path,
            }
        }
    };

    let mut branches = Vec::new();
    let trace_from = |start: (usize, usize), visited: &mut Vec<bool>| {
        visited[start.1 * w + start.0] = true;
        let forward = walk(start, visited);
        let mut backward = walk(start, visited);
        backward.reverse();
        backward.push(start);
        backward.extend(forward);
        backward
    };
    for i in 0..w * h {
        if endpoint[i] && usable(i, &visited) {
            branches.push(trace_from((i % w, i / w), &mut visited));
        }
    }
    for i in 0..w * h {
        if usable(i, &visited) {
            branches.push(trace_from((i % w, i / w), &mut visited));
        }
    }
    branches
}

/// Ridge pixels, skeleton branches and the orientation field of one frame.
#[derive(Debug, Clone)]
pub struct RidgeExtraction {
    pub ridge_pixels: Mask,
    pub skeleton: Mask,
    /// Branches of at least the minimum length, longest first.
    pub signals: Vec<RidgeSignal>,
    pub orientation: OrientationField,
    /// Mean ridge width in pixels (ridge area over skeleton length); about
    /// half the local ridge period.
    pub ridge_width: f64,
}

impl RidgeExtraction {
    /// Concatenation of the `n` longest signals.
    pub fn top_signal(&self, n: usize) -> RidgeSignal {
        RidgeSignal::concat(self.signals.iter().take(n))
    }
}

pub fn extract_ridges_gray(
    gray: &GrayFrame,
    foreground: &Mask,
    cfg: &SegmentationConfig,
) -> Result<RidgeExtraction> {
    if foreground.is_empty() {
        return Err(PadError::EmptyRidgeSet);
    }
    let orientation = orientation_field(gray, cfg.block);
    let smoothed = smooth_along_ridges(gray, &orientation, foreground);
    let ridge_pixels = binarize(&smoothed, foreground, cfg.block, cfg.polarity);
    let skeleton = thin(&ridge_pixels);
    let mut paths: Vec<_> = trace_skeleton(&skeleton)
        .into_iter()
        .filter(|p| p.len() >= cfg.min_ridge_len)
        .collect();
    if paths.is_empty() {
        return Err(PadError::EmptyRidgeSet);
    }
    // Stable sort keeps raster order among equal lengths.
    paths.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let ridge_width = ridge_pixels.count() as f64 / skeleton.count().max(1) as f64;
    let signals = paths
        .into_iter()
        .map(|p| RidgeSignal::from_path(gray, p))
        .collect();
    Ok(RidgeExtraction {
        ridge_pixels,
        skeleton,
        signals,
        orientation,
        ridge_width,
    })
}

pub fn extract_ridges(
    frame: &Frame,
    foreground: &Mask,
    cfg: &SegmentationConfig,
) -> Result<RidgeExtraction> {
    extract_ridges_gray(&frame.to_grayscale(), foreground, cfg)
}
