//! Anomaly-detection and density-estimation experiments built on the
//! embedding, density and circuit layers. Everything here runs in `f64`.

pub mod data;
pub mod density_estimation;
pub mod detect;
pub mod experiment;
pub mod report;
pub mod sweep;

pub use data::{
    load_csv, load_csv_path, split, split_indices, standardize, ClassBalance, CsvSource, Label, LabeledDataset, Scaler,
    SplitIndices, SplitSpec,
};
pub use density_estimation::{
    l1_distance, run_density_experiment, DensityCurves, DensityExperimentConfig, MixtureSpec,
};
pub use detect::{auc_from_densities, classify, metrics, select_threshold, Metrics};
pub use experiment::{
    build_embedding, estimate_densities, prepare, run_experiment, run_on_dataset, run_states, train_model, Backend,
    BuiltEmbedding, Densities, DetectionReport, EmbeddingKind, ExperimentConfig, ExperimentOutcome, MeanStd,
    MetricSummary, PreparedData, StateKind, TrainingConfig,
};
pub use sweep::{run_sweep, SweepGrid, SweepRow};
