//! Feature normalization, the fully connected classifier, k-fold cross
//! validation and error-rate reporting.

pub mod cv;
pub mod matrix;
pub mod model;
pub mod network;
pub mod normalize;
pub mod optim;
pub mod roc;
pub mod train;

pub use cv::{assign_folds, fold_seed, kfold_cv, EvalReport, FoldAssignment, FoldPolicy, FoldReport, TargetSummary};
pub use matrix::Matrix;
pub use model::{ModelBundle, ModelHeader};
pub use network::{Network, NetworkSpec};
pub use normalize::{fit_normalizer, NormalizationStats};
pub use optim::{Adam, PlateauScheduler};
pub use roc::{apcer_at, auc, roc_curve, roc_metrics, OperatingPoint, RocMetrics, RocPoint};
pub use train::{spoof_scores, train, TrainConfig, TrainTrace};

/// Default BPCER operating points (0.2% and 1%).
pub const DEFAULT_BPCER_TARGETS: [f64; 2] = [0.002, 0.01];
