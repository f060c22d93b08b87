//! Feature names, ordering and the layout hash shared by the feature CSV,
//! the classifier and serialized models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::PadError;

pub const STATIC_LEN: usize = 164;
pub const DYNAMIC_LEN: usize = 51;
pub const FUSED_LEN: usize = STATIC_LEN + DYNAMIC_LEN;

/// Columns preceding the features in a feature CSV.
pub const ID_COLUMNS: [&str; 3] = ["capture_id", "subject_id", "class"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Static,
    Dynamic,
    Fused,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Static, FeatureSet::Dynamic, FeatureSet::Fused];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Static => "static",
            FeatureSet::Dynamic => "dynamic",
            FeatureSet::Fused => "fused",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = PadError;

    fn from_str(s: &str) -> Result<Self, PadError> {
        match s {
            "static" => Ok(FeatureSet::Static),
            "dynamic" => Ok(FeatureSet::Dynamic),
            "fused" => Ok(FeatureSet::Fused),
            other => Err(PadError::Config(format!(
                "unknown feature set {other:?} (expected static|dynamic|fused)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lbp,
    Intensity,
    WaveletRidge,
    WaveletValley,
    ColorForeground,
    ColorRidgeSignal,
    ColorRidgePixels,
    Mask,
    Shift,
    IntensityDynamic,
    Perspiration,
}

/// Value a dynamic feature takes when both frames are identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Zero,
    One,
    /// `R / (R + 0.0001)` where `R` is the frame's foreground/background
    /// ratio; the mask ratio change carries its epsilon even for equal masks.
    MaskRatioSelf,
    /// A per-frame measurement with no fixed value.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub family: Family,
    pub identity: Identity,
}

fn spec(name: String, family: Family, identity: Identity) -> FeatureSpec {
    FeatureSpec {
        name,
        family,
        identity,
    }
}

pub const RATIO_TAGS: [&str; 3] = ["gr", "br", "gb"];

pub fn static_specs() -> Vec<FeatureSpec> {
    let mut out = Vec::with_capacity(STATIC_LEN);
    for radius in [1, 2] {
        for bin in 0..36 {
            out.push(spec(format!("lbp_r{radius}_{bin:02}"), Family::Lbp, Identity::None));
        }
    }
    for bin in 0..64 {
        out.push(spec(format!("hist_{bin:02}"), Family::Intensity, Identity::None));
    }
    for (prefix, family) in [
        ("wav_ridge", Family::WaveletRidge),
        ("wav_valley", Family::WaveletValley),
    ] {
        for level in 1..=7 {
            out.push(spec(format!("{prefix}_l{level}_logenergy"), family, Identity::None));
            out.push(spec(format!("{prefix}_l{level}_std"), family, Identity::None));
        }
    }
    out
}

fn color_block(prefix: &str, family: Family, with_sumsq: bool, out: &mut Vec<FeatureSpec>) {
    for tag in RATIO_TAGS {
        out.push(spec(format!("{prefix}_{tag}_diff"), family, Identity::Zero));
        out.push(spec(format!("{prefix}_{tag}_ratio"), family, Identity::One));
        if with_sumsq {
            out.push(spec(format!("{prefix}_{tag}_sumsq"), family, Identity::Zero));
        }
    }
}

pub fn dynamic_specs() -> Vec<FeatureSpec> {
    let mut out = Vec::with_capacity(DYNAMIC_LEN);
    for (prefix, family) in [
        ("fg", Family::ColorForeground),
        ("rs", Family::ColorRidgeSignal),
    ] {
        color_block(prefix, family, true, &mut out);
        for ch in ["r", "g", "b"] {
            out.push(spec(format!("{prefix}_{ch}_diff"), family, Identity::Zero));
        }
    }
    color_block("rp", Family::ColorRidgePixels, false, &mut out);
    out.push(spec("rp_euclid".into(), Family::ColorRidgePixels, Identity::Zero));

    let m = Family::Mask;
    out.push(spec("mask_r1".into(), m, Identity::None));
    out.push(spec("mask_r2".into(), m, Identity::None));
    out.push(spec("mask_rs".into(), m, Identity::MaskRatioSelf));
    out.push(spec("mask_delta_back".into(), m, Identity::Zero));
    out.push(spec("mask_shift".into(), m, Identity::Zero));
    out.push(spec("mask_delta_fore".into(), m, Identity::Zero));

    out.push(spec("delta_image".into(), Family::Shift, Identity::Zero));

    for name in [
        "dint_total_variation",
        "dint_dark_shift",
        "dint_light_shift",
        "dint_mean_shift",
        "dint_energy_change",
        "dint_entropy_change",
    ] {
        out.push(spec(name.into(), Family::IntensityDynamic, Identity::Zero));
    }

    let p = Family::Perspiration;
    out.push(spec("persp_high_freq".into(), p, Identity::None));
    out.push(spec("persp_swing_change".into(), p, Identity::Zero));
    out.push(spec("persp_peak_growth".into(), p, Identity::One));
    out.push(spec("persp_mean_growth".into(), p, Identity::Zero));
    out.push(spec("persp_var_change".into(), p, Identity::Zero));
    out.push(spec("persp_dry_change".into(), p, Identity::Zero));
    out.push(spec("persp_wet_change".into(), p, Identity::Zero));
    out
}

/// Ordered feature names for one feature set: static block first, then
/// dynamic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub set: FeatureSet,
    pub specs: Vec<FeatureSpec>,
}

impl FeatureLayout {
    pub fn new(set: FeatureSet) -> Self {
        let specs = match set {
            FeatureSet::Static => static_specs(),
            FeatureSet::Dynamic => dynamic_specs(),
            FeatureSet::Fused => {
                let mut s = static_specs();
                s.extend(dynamic_specs());
                s
            }
        };
        Self { set, specs }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    /// First 16 hex digits of the SHA-256 over the ordered names.
    pub fn hash(&self) -> String {
        layout_hash(self.names())
    }
}

pub fn layout_hash<'a>(names: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    h.update(b"padpipe-layout-v1\n");
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    hex_prefix(&h.finalize(), 8)
}

pub(crate) fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn family_sizes() {
        let d = dynamic_specs();
        assert_eq!(d.len(), DYNAMIC_LEN);
        let count = |f: Family| d.iter().filter(|s| s.family == f).count();
        assert_eq!(count(Family::ColorForeground), 12);
        assert_eq!(count(Family::ColorRidgeSignal), 12);
        assert_eq!(count(Family::ColorRidgePixels), 7);
        assert_eq!(count(Family::Mask), 6);
        assert_eq!(count(Family::Shift), 1);
        assert_eq!(count(Family::IntensityDynamic), 6);
        assert_eq!(count(Family::Perspiration), 7);

        let s = static_specs();
        assert_eq!(s.len(), STATIC_LEN);
        let count = |f: Family| s.iter().filter(|x| x.family == f).count();
        assert_eq!(count(Family::Lbp), 72);
        assert_eq!(count(Family::Intensity), 64);
        assert_eq!(count(Family::WaveletRidge), 14);
        assert_eq!(count(Family::WaveletValley), 14);
    }

    #[test]
    fn names_unique_and_fused_order() {
        let fused = FeatureLayout::new(FeatureSet::Fused);
        assert_eq!(fused.len(), FUSED_LEN);
        let unique: HashSet<_> = fused.names().collect();
        assert_eq!(unique.len(), FUSED_LEN);
        assert_eq!(fused.specs[0].name, "lbp_r1_00");
        assert_eq!(fused.specs[STATIC_LEN].name, "fg_gr_diff");
    }

    #[test]
    fn hashes_differ_by_set() {
        let hs: HashSet<_> = FeatureSet::ALL
            .iter()
            .map(|&s| FeatureLayout::new(s).hash())
            .collect();
        assert_eq!(hs.len(), 3);
        assert_eq!(FeatureLayout::new(FeatureSet::Static).hash().len(), 16);
    }
}
