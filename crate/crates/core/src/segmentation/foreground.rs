use std::collections::VecDeque;

use crate::capture::{Frame, GrayFrame, Mask};

/// Marks every block whose population gray variance is at least
/// `var_threshold`. Edge blocks may be smaller than `block`.
///
/// Variance is compared in exact integer arithmetic, so the result is
/// unchanged by any uniform intensity offset that does not clip.
pub fn block_variance_mask(gray: &GrayFrame, block: usize, var_threshold: f64) -> Mask {
    assert!(block > 0, "block size must be positive");
    let (w, h) = (gray.width, gray.height);
    let mut mask = Mask::empty(w, h);
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (x_end, y_end) = ((bx + block).min(w), (by + block).min(h));
            let mut sum: u64 = 0;
            let mut sum_sq: u64 = 0;
            for y in by..y_end {
                for &v in &gray.row(y)[bx..x_end] {
                    sum += u64::from(v);
                    sum_sq += u64::from(v) * u64::from(v);
                }
            }
            let n = ((x_end - bx) * (y_end - by)) as u64;
            // n^2 * var = n * sum_sq - sum^2
            let scaled_var = (n * sum_sq - sum * sum) as f64;
            if scaled_var >= var_threshold * (n * n) as f64 {
                for y in by..y_end {
                    for x in bx..x_end {
                        mask.set(x, y, true);
                    }
                }
            }
        }
    }
    mask
}

fn morph3(mask: &Mask, want_all: bool) -> Mask {
    let (w, h) = (mask.width, mask.height);
    Mask::from_fn(w, h, |x, y| {
        let mut all = true;
        let mut any = false;
        for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                let v = mask.get(xx, yy);
                all &= v;
                any |= v;
            }
        }
        if want_all {
            all
        } else {
            any
        }
    })
}

/// 3x3 dilation; out-of-image neighbors are ignored.
pub fn dilate3(mask: &Mask) -> Mask {
    morph3(mask, false)
}

/// 3x3 erosion; out-of-image neighbors are ignored.
pub fn erode3(mask: &Mask) -> Mask {
    morph3(mask, true)
}

pub fn close3(mask: &Mask) -> Mask {
    erode3(&dilate3(mask))
}

pub fn open3(mask: &Mask) -> Mask {
    dilate3(&erode3(mask))
}

/// Largest 8-connected component. Ties go to the component met first in
/// raster order.
pub fn largest_component(mask: &Mask) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let mut label = vec![0u32; w * h];
    let mut best = (0usize, 0u32);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.as_slice()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = yy * w + xx;
                    if mask.as_slice()[j] && label[j] == 0 {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
        if size > best.0 {
            best = (size, next);
        }
    }
    if best.1 == 0 {
        return Mask::empty(w, h);
    }
    Mask::from_vec(w, h, label.iter().map(|&l| l == best.1).collect())
        .expect("dimensions preserved")
}

pub fn compute_foreground_gray(gray: &GrayFrame, block: usize, var_threshold: f64) -> Mask {
    let raw = block_variance_mask(gray, block, var_threshold);
    largest_component(&open3(&close3(&raw)))
}

pub fn compute_foreground(frame: &Frame, block: usize, var_threshold: f64) -> Mask {
    compute_foreground_gray(&frame.to_grayscale(), block, var_threshold)
}
