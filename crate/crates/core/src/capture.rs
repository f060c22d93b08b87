//! Frames, capture sequences, labels and region masks.
//!
//! Everything here is immutable once constructed. Constructors validate
//! dimensions so downstream code can index planes without re-checking.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PadError, Result};

/// Inter-frame spacing used when a capture carries no timestamps.
pub const DEFAULT_FRAME_SPACING_MS: u64 = 125;

/// Nominal number of frames in one fast-frame-rate burst.
pub const BURST_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Red,
    Green,
    Blue,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Red, Channel::Green, Channel::Blue];

    pub fn short_name(self) -> &'static str {
        match self {
            Channel::Red => "r",
            Channel::Green => "g",
            Channel::Blue => "b",
        }
    }
}

/// One color frame: three 8-bit planes of identical size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    red: Vec<u8>,
    green: Vec<u8>,
    blue: Vec<u8>,
    timestamp_ms: u64,
}

impl Frame {
    pub fn new(
        width: usize,
        height: usize,
        red: Vec<u8>,
        green: Vec<u8>,
        blue: Vec<u8>,
        timestamp_ms: u64,
    ) -> Result<Self> {
        let n = width * height;
        if width == 0 || height == 0 {
            return Err(PadError::InvalidFrame(format!(
                "zero-sized frame {width}x{height}"
            )));
        }
        for (name, plane) in [("red", &red), ("green", &green), ("blue", &blue)] {
            if plane.len() != n {
                return Err(PadError::InvalidFrame(format!(
                    "{name} plane has {} pixels, expected {n}",
                    plane.len()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            red,
            green,
            blue,
            timestamp_ms,
        })
    }

    /// Builds a frame from interleaved RGB bytes.
    pub fn from_interleaved(
        width: usize,
        height: usize,
        rgb: &[u8],
        timestamp_ms: u64,
    ) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(PadError::InvalidFrame(format!(
                "interleaved buffer has {} bytes, expected {}",
                rgb.len(),
                width * height * 3
            )));
        }
        let mut red = Vec::with_capacity(width * height);
        let mut green = Vec::with_capacity(width * height);
        let mut blue = Vec::with_capacity(width * height);
        for px in rgb.chunks_exact(3) {
            red.push(px[0]);
            green.push(px[1]);
            blue.push(px[2]);
        }
        Self::new(width, height, red, green, blue, timestamp_ms)
    }

    /// A frame whose three planes are all equal to `gray`.
    pub fn from_gray(gray: &GrayFrame, timestamp_ms: u64) -> Self {
        Self {
            width: gray.width,
            height: gray.height,
            red: gray.data.clone(),
            green: gray.data.clone(),
            blue: gray.data.clone(),
            timestamp_ms,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    pub fn with_timestamp(mut self, timestamp_ms: u64) -> Self {
        self.timestamp_ms = timestamp_ms;
        self
    }

    pub fn plane(&self, channel: Channel) -> &[u8] {
        match channel {
            Channel::Red => &self.red,
            Channel::Green => &self.green,
            Channel::Blue => &self.blue,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = y * self.width + x;
        [self.red[i], self.green[i], self.blue[i]]
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.red.len() * 3);
        for i in 0..self.red.len() {
            out.extend_from_slice(&[self.red[i], self.green[i], self.blue[i]]);
        }
        out
    }

    pub fn to_grayscale(&self) -> GrayFrame {
        to_grayscale(self)
    }

    /// Reads an 8-bit RGB image file (any format the `image` crate decodes).
    pub fn load(path: &Path, timestamp_ms: u64) -> Result<Self> {
        let img = image::open(path)?.into_rgb8();
        let (w, h) = img.dimensions();
        Self::from_interleaved(w as usize, h as usize, img.as_raw(), timestamp_ms)
    }

    /// Writes the frame as a lossless 8-bit RGB PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        image::save_buffer_with_format(
            path,
            &self.to_interleaved(),
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }
}

/// Single 8-bit intensity plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(PadError::InvalidFrame(format!(
                "gray frame {width}x{height} with {} pixels",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }
}

/// Luma conversion with fixed weights 0.299 R + 0.587 G + 0.114 B.
pub fn to_grayscale(frame: &Frame) -> GrayFrame {
    let data = frame
        .red
        .iter()
        .zip(&frame.green)
        .zip(&frame.blue)
        .map(|((&r, &g), &b)| luma(r, g, b))
        .collect();
    GrayFrame {
        width: frame.width,
        height: frame.height,
        data,
    }
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Live,
    Spoof,
}

impl Class {
    /// Network target index: live = 0, spoof = 1.
    pub fn index(self) -> usize {
        match self {
            Class::Live => 0,
            Class::Spoof => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Class::Live),
            1 => Some(Class::Spoof),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Live => "live",
            Class::Spoof => "spoof",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = PadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(Class::Live),
            "spoof" => Ok(Class::Spoof),
            other => Err(PadError::InvalidSequence(format!(
                "unknown class {other:?}"
            ))),
        }
    }
}

/// Mold used to fabricate a spoof; `None` for live fingers and 2D prints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mold {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "3d")]
    ThreeD,
    #[serde(rename = "dental")]
    Dental,
}

impl Mold {
    pub fn as_str(self) -> &'static str {
        match self {
            Mold::None => "none",
            Mold::ThreeD => "3d",
            Mold::Dental => "dental",
        }
    }
}

impl FromStr for Mold {
    type Err = PadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" | "none" => Ok(Mold::None),
            "3d" => Ok(Mold::ThreeD),
            "dental" => Ok(Mold::Dental),
            other => Err(PadError::InvalidSequence(format!("unknown mold {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class: Class,
    pub mold: Mold,
    pub material: String,
}

impl GroundTruth {
    pub fn live() -> Self {
        Self {
            class: Class::Live,
            mold: Mold::None,
            material: String::new(),
        }
    }

    pub fn spoof(mold: Mold, material: impl Into<String>) -> Self {
        Self {
            class: Class::Spoof,
            mold,
            material: material.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class == Class::Live && (self.mold != Mold::None || !self.material.is_empty()) {
            return Err(PadError::InvalidSequence(
                "live ground truth must have mold=none and an empty material".into(),
            ));
        }
        Ok(())
    }
}

/// An ordered burst of frames for one presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSequence {
    frames: Vec<Frame>,
    label: GroundTruth,
    subject_id: String,
    capture_id: String,
    static_frame: Option<Frame>,
}

impl CaptureSequence {
    /// Validates shared dimensions, strictly increasing timestamps and the
    /// label. The frame count is not checked here; cleaning decides whether
    /// a burst is usable.
    pub fn new(
        frames: Vec<Frame>,
        label: GroundTruth,
        subject_id: impl Into<String>,
        capture_id: impl Into<String>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(PadError::InvalidSequence("no frames".into()));
        }
        label.validate()?;
        let (w, h) = (frames[0].width, frames[0].height);
        for (k, f) in frames.iter().enumerate() {
            if f.width != w || f.height != h {
                return Err(PadError::InvalidSequence(format!(
                    "frame {k} is {}x{}, frame 0 is {w}x{h}",
                    f.width, f.height
                )));
            }
        }
        for (k, pair) in frames.windows(2).enumerate() {
            if pair[1].timestamp_ms <= pair[0].timestamp_ms {
                return Err(PadError::InvalidSequence(format!(
                    "timestamps not strictly increasing at frame {}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            frames,
            label,
            subject_id: subject_id.into(),
            capture_id: capture_id.into(),
            static_frame: None,
        })
    }

    /// Attaches a dedicated static capture; it must match the burst size.
    pub fn with_static_frame(mut self, frame: Frame) -> Result<Self> {
        if (frame.width, frame.height) != self.dimensions() {
            return Err(PadError::InvalidSequence(format!(
                "static frame is {}x{}, burst is {:?}",
                frame.width,
                frame.height,
                self.dimensions()
            )));
        }
        self.static_frame = Some(frame);
        Ok(self)
    }

    pub fn static_frame(&self) -> Option<&Frame> {
        self.static_frame.as_ref()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, index: usize) -> &Frame {
        &self.frames[index]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn label(&self) -> &GroundTruth {
        &self.label
    }

    pub fn class(&self) -> Class {
        self.label.class
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn capture_id(&self) -> &str {
        &self.capture_id
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.frames[0].width, self.frames[0].height)
    }

    pub fn timestamps(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.timestamp_ms).collect()
    }
}

/// Timestamps for a burst without recorded timing.
pub fn synthesized_timestamps(n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| k * DEFAULT_FRAME_SPACING_MS).collect()
}

/// Boolean pixel mask in row-major order.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    data: Vec<bool>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Mask({}x{}, {} set)",
            self.width,
            self.height,
            self.count()
        )
    }
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(PadError::InvalidFrame(format!(
                "mask {width}x{height} with {} cells",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
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

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "mask dimensions differ"
        );
        Mask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn xor(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Indices of set cells in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

/// The three analysis regions of one frame.
#[derive(Debug, Clone)]
pub struct RegionSet {
    pub foreground: Mask,
    pub ridge_pixels: Mask,
    pub ridge_signals: Vec<crate::segmentation::RidgeSignal>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(r: u8, g: u8, b: u8) -> Frame {
        Frame::new(2, 2, vec![r; 4], vec![g; 4], vec![b; 4], 0).unwrap()
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(solid(0, 0, 0).to_grayscale().data, vec![0; 4]);
        assert_eq!(solid(255, 255, 255).to_grayscale().data, vec![255; 4]);
        // 29.9 + 117.4 + 5.7 = 153
        assert_eq!(solid(100, 200, 50).to_grayscale().data, vec![153; 4]);
    }

    #[test]
    fn grayscale_is_identity_on_gray_pixels() {
        for v in 0..=255u8 {
            assert_eq!(luma(v, v, v), v);
        }
    }

    #[test]
    fn frame_rejects_mismatched_planes() {
        let err = Frame::new(2, 2, vec![0; 4], vec![0; 3], vec![0; 4], 0);
        assert!(matches!(err, Err(PadError::InvalidFrame(_))));
    }

    #[test]
    fn sequence_requires_increasing_timestamps() {
        let f0 = solid(1, 1, 1);
        let f1 = solid(1, 1, 1);
        let err = CaptureSequence::new(vec![f0, f1], GroundTruth::live(), "s", "c");
        assert!(matches!(err, Err(PadError::InvalidSequence(_))));
    }

    #[test]
    fn live_label_rejects_material() {
        let label = GroundTruth {
            class: Class::Live,
            mold: Mold::None,
            material: "ecoflex".into(),
        };
        assert!(label.validate().is_err());
        assert!(GroundTruth::spoof(Mold::None, "latex").validate().is_ok());
    }

    #[test]
    fn mask_set_algebra() {
        let a = Mask::from_fn(4, 1, |x, _| x < 2);
        let b = Mask::from_fn(4, 1, |x, _| x >= 1 && x < 3);
        assert_eq!(a.and(&b).count(), 1);
        assert_eq!(a.or(&b).count(), 3);
        assert_eq!(a.xor(&b).count(), 2);
        assert!(a.and(&b).is_subset_of(&a));
    }

    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c_f0.png");
        let rgb: Vec<u8> = (0..5 * 3 * 3).map(|i| (i * 17 % 256) as u8).collect();
        let frame = Frame::from_interleaved(5, 3, &rgb, 250).unwrap();
        frame.save_png(&path).unwrap();
        let back = Frame::load(&path, 250).unwrap();
        assert_eq!(back, frame);
    }
}
