//! Fingerprint presentation-attack detection from fast-frame-rate color
//! captures.

pub mod capture;
pub mod classifier;
pub mod config;
pub mod dynamic;
pub mod error;
pub mod features;
pub mod histogram;
pub mod ingest;
pub mod layout;
pub mod pipeline;
pub mod segmentation;
pub mod selection;
pub mod static_features;
pub mod synth;

pub use error::{PadError, Result};
pub use capture::{CaptureSequence, Channel, Class, Frame, GrayFrame, GroundTruth, Mask, Mold, RegionSet};
pub use classifier::{EvalReport, ModelBundle, NetworkSpec, NormalizationStats, RocPoint, TrainConfig};
pub use config::RunConfig;
pub use dynamic::DynamicFeatureBlock;
pub use features::{ExtractionConfig, ExtractionLog, FeatureTable};
pub use ingest::{Dataset, Manifest, ManifestEntry};
pub use layout::{FeatureLayout, FeatureSet};
pub use segmentation::{FrameAnalysis, SegmentationConfig};
pub use selection::FramePair;
pub use static_features::StaticFeatureBlock;
