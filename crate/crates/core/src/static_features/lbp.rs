//! Rotation-invariant local binary patterns with 8 circular samples at
//! radius 1 and radius 2.
//!
//! Samples sit at angles `2*pi*p/8`, `p = 0..8`, counter-clockwise from the
//! positive x axis (y grows downward). Axis samples fall on pixel centers;
//! diagonal samples are bilinearly interpolated. Bit `p` is set when sample
//! `p` is strictly brighter than the center.
//!
//! For diagonal samples the interpolation weights lie in Q(sqrt 2), so the
//! sign of `sample - center` is decided exactly in integer arithmetic and
//! the codes carry no floating-point rounding.
//!
//! The 256 codes are grouped into the 36 classes of codes equal up to a
//! circular bit rotation ([`RI_CLASS`]); class 0 holds code 0.

use crate::capture::{GrayFrame, Mask};

pub const RADII: [usize; 2] = [1, 2];
pub const CLASSES: usize = 36;

const fn rotate_min(code: u8) -> u8 {
    let mut best = code;
    let mut k = 1;
    while k < 8 {
        let r = code.rotate_right(k);
        if r < best {
            best = r;
        }
        k += 1;
    }
    best
}

const fn build_ri_table() -> [u8; 256] {
    let mut canonical_rank = [255u8; 256];
    let mut next = 0u8;
    let mut c = 0usize;
    while c < 256 {
        if rotate_min(c as u8) as usize == c {
            canonical_rank[c] = next;
            next += 1;
        }
        c += 1;
    }
    let mut table = [0u8; 256];
    let mut c = 0usize;
    while c < 256 {
        table[c] = canonical_rank[rotate_min(c as u8) as usize];
        c += 1;
    }
    table
}

/// Rotation-invariant class of every 8-bit code.
pub const RI_CLASS: [u8; 256] = build_ri_table();

/// Sign of `a + b*sqrt(2)`.
fn sign_q2(a: i64, b: i64) -> i32 {
    let s = |v: i64| v.signum() as i32;
    match (s(a), s(b)) {
        (0, sb) => sb,
        (sa, 0) => sa,
        (sa, sb) if sa == sb => sa,
        (sa, _) => {
            // Opposite signs: compare a^2 with 2 b^2.
            let (a2, b2) = (a * a, 2 * b * b);
            if a2 == b2 {
                0
            } else if a2 > b2 {
                sa
            } else {
                -sa
            }
        }
    }
}

/// Sign of the interpolated diagonal sample minus the center, given the
/// differences to the center of the near corner, the two side corners and
/// the far corner.
fn diagonal_sign(radius: usize, near: i64, sides: i64, far: i64) -> i32 {
    // 2*w = (3 - 2r2, r2 - 1, r2 - 1, 1) at radius 1;
    //   w = (6 - 4r2, 3r2 - 4, 3r2 - 4, 3 - 2r2) at radius 2.
    let (a, b) = match radius {
        1 => (3 * near - sides + far, sides - 2 * near),
        2 => (6 * near - 4 * sides + 3 * far, -4 * near + 3 * sides - 2 * far),
        _ => unreachable!("unsupported radius {radius}"),
    };
    sign_q2(a, b)
}

// (dx, dy) unit directions for p = 0..8.
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// LBP code at `(x, y)`. The caller guarantees a margin of `radius`.
pub fn lbp_code(gray: &GrayFrame, x: usize, y: usize, radius: usize) -> u8 {
    let c = i64::from(gray.get(x, y));
    let px = |dx: i64, dy: i64| i64::from(gray.get((x as i64 + dx) as usize, (y as i64 + dy) as usize)) - c;
    let r = radius as i64;
    let mut code = 0u8;
    for (p, &(sx, sy)) in DIRS.iter().enumerate() {
        let positive = if sx == 0 || sy == 0 {
            px(sx * r, sy * r) > 0
        } else {
            // Near corner sits at floor(r / sqrt 2) along each axis.
            let n = r - 1;
            let near = px(sx * n, sy * n);
            let sides = px(sx * r, sy * n) + px(sx * n, sy * r);
            let far = px(sx * r, sy * r);
            diagonal_sign(radius, near, sides, far) > 0
        };
        if positive {
            code |= 1 << p;
        }
    }
    code
}

/// Normalized 36-class histogram over masked pixels at least `radius`
/// away from the border.
pub fn lbp_histogram(gray: &GrayFrame, mask: &Mask, radius: usize) -> [f64; CLASSES] {
    let mut counts = [0u64; CLASSES];
    let mut n = 0u64;
    let (w, h) = (gray.width, gray.height);
    if w > 2 * radius && h > 2 * radius {
        for y in radius..h - radius {
            for x in radius..w - radius {
                if mask.get(x, y) {
                    counts[usize::from(RI_CLASS[usize::from(lbp_code(gray, x, y, radius))])] += 1;
                    n += 1;
                }
            }
        }
    }
    let mut out = [0.0; CLASSES];
    if n > 0 {
        for (o, &c) in out.iter_mut().zip(&counts) {
            *o = c as f64 / n as f64;
        }
    }
    out
}

/// Radius-1 histogram followed by radius-2 histogram (72 values).
pub fn lbp_features(gray: &GrayFrame, mask: &Mask) -> Vec<f64> {
    RADII
        .iter()
        .flat_map(|&r| lbp_histogram(gray, mask, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn table_has_36_classes() {
        let classes: HashSet<u8> = RI_CLASS.iter().copied().collect();
        assert_eq!(classes.len(), CLASSES);
        assert_eq!(RI_CLASS[0], 0);
        assert_eq!(RI_CLASS[255] as usize, CLASSES - 1);
        for c in 0..=255u8 {
            assert_eq!(RI_CLASS[c as usize], RI_CLASS[c.rotate_left(3) as usize]);
        }
    }

    #[test]
    fn exact_sign() {
        assert_eq!(sign_q2(0, 0), 0);
        assert_eq!(sign_q2(3, -2), 1); // 3 - 2.83
        assert_eq!(sign_q2(-3, 2), -1);
        assert_eq!(sign_q2(-1, 1), 1);
        assert_eq!(sign_q2(2, -1), 1);
        assert_eq!(sign_q2(1, -1), -1);
    }

    #[test]
    fn uniform_image_is_all_zero_code() {
        let g = GrayFrame::filled(12, 12, 90);
        let m = Mask::full(12, 12);
        for r in RADII {
            let h = lbp_histogram(&g, &m, r);
            assert_eq!(h[0], 1.0);
            assert!(h[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn radius2_exact_cancellation() {
        // near +1, far -2, sides 0 interpolates to exactly the center value.
        assert_eq!(diagonal_sign(2, 1, 0, -2), 0);
        assert_eq!(diagonal_sign(2, 1, 0, -1), 1);
    }
}
