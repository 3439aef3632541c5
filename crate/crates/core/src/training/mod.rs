//! Dataset splitting, the training loop, k-fold cross validation, and
//! precision@k evaluation.

pub mod metrics;
pub mod split;
pub mod store;
pub mod trainer;

pub use metrics::{confusion_matrix, precision_at_k, rank_classes};
pub use split::{make_splits, Fold, SplitMode, SplitPlan};
pub use store::{DirectoryStore, FeatureStore, HyperImageSidecar, MemoryStore};
pub use trainer::{
    aggregate_reports, cross_validate, evaluate_fold, history_csv, mix_seed, report_csv,
    train_fold, Aggregate, CvOutcome, EarlyStop, FoldOutcome, FoldReport, Hyperparams, MeanStd,
};
