//! Anomaly-detection experiment: split, scale, embed, train, estimate,
//! threshold and score, optionally repeated over fresh embedding seeds.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{load_csv, split_indices, CsvSource, Label, LabeledDataset, Scaler, SplitSpec};
use super::detect::{classify, metrics, select_threshold};
use crate::density::{train_mixed, train_pure, DensityModel, EstimatorConfig};
use crate::error::{Error, Result, Stage, StageExt};
use crate::features::{embed_all, sample_rff, train_aff, AffTrainConfig, EpochLoss, FourierParams, QuantumFeature};
use crate::qsim::{run_circuits, run_mixed_circuit, run_pure_circuit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    /// Random Fourier features.
    Rff,
    /// Adaptive (trained) Fourier features.
    Aff,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Rff => "rff",
            EmbeddingKind::Aff => "aff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

impl StateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StateKind::Pure => "pure",
            StateKind::Mixed => "mixed",
        }
    }
}

/// How densities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Direct linear algebra.
    Classical,
    /// Circuit simulation, exact outcome probabilities.
    SimulatorExact,
    /// Circuit simulation, estimated from sampled shots.
    SimulatorShots,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Classical => "classical",
            Backend::SimulatorExact => "simulator-exact",
            Backend::SimulatorShots => "simulator-shots",
        }
    }
}

/// Optimizer settings for adaptive features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let d = AffTrainConfig::default();
        TrainingConfig {
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
        }
    }
}

impl TrainingConfig {
    pub fn aff_config(&self, dim_features: usize, gamma: f64, gamma_s: f64, seed: u64) -> AffTrainConfig {
        AffTrainConfig {
            dim_features,
            gamma,
            gamma_s,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            seed,
        }
    }
}

/// A feature map plus, for adaptive features, its training curve.
#[derive(Debug, Clone)]
pub struct BuiltEmbedding {
    pub params: FourierParams<f64>,
    pub history: Option<Vec<EpochLoss>>,
}

/// Draws random features, or trains adaptive ones on `train`.
pub fn build_embedding(
    kind: EmbeddingKind,
    train: &[Vec<f64>],
    dim_features: usize,
    gamma: f64,
    gamma_s: f64,
    training: &TrainingConfig,
    seed: u64,
) -> Result<BuiltEmbedding> {
    let dim_input = train
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("no training samples"))?;
    match kind {
        EmbeddingKind::Rff => Ok(BuiltEmbedding {
            params: sample_rff(dim_input, dim_features, gamma, seed)?,
            history: None,
        }),
        EmbeddingKind::Aff => {
            let cfg = training.aff_config(dim_features, gamma, gamma_s, seed);
            let out = train_aff(train, &cfg)?;
            Ok(BuiltEmbedding {
                params: out.params,
                history: Some(out.history),
            })
        }
    }
}

/// Builds the training density model of the requested kind.
pub fn train_model(state: StateKind, features: &[QuantumFeature<f64>]) -> Result<DensityModel<f64>> {
    Ok(match state {
        StateKind::Pure => DensityModel::Pure(train_pure(features)?),
        StateKind::Mixed => DensityModel::Mixed(train_mixed(features)?),
    })
}

/// Densities for a batch of states.
#[derive(Debug, Clone, PartialEq)]
pub struct Densities {
    pub values: Vec<f64>,
    /// Exact-probability densities, recorded alongside shot estimates.
    pub exact: Option<Vec<f64>>,
}

/// Unnormalized density of each state under `model`.
///
/// Circuit backends return `P(|0>)`; for a pure model this is the squared
/// overlap, so its square root is reported to match the classical estimator.
pub fn estimate_densities(
    model: &DensityModel<f64>,
    psis: &[QuantumFeature<f64>],
    backend: Backend,
    shots: u64,
    seed: u64,
) -> Result<Densities> {
    let cfg = EstimatorConfig::unnormalized();
    let to_density = |p: f64| match model {
        DensityModel::Pure(_) => p.max(0.0).sqrt(),
        DensityModel::Mixed(_) => p,
    };
    let shots = match backend {
        Backend::Classical => {
            let values = psis
                .par_iter()
                .map(|psi| model.estimate(psi, &cfg))
                .collect::<Result<Vec<f64>>>()?;
            return Ok(Densities { values, exact: None });
        }
        Backend::SimulatorExact => 0,
        Backend::SimulatorShots => {
            if shots == 0 {
                return Err(Error::invalid("simulator-shots backend needs shots > 0"));
            }
            shots
        }
    };
    let runs = match model {
        DensityModel::Pure(m) => run_circuits(psis, shots, seed, |psi, s, sd| run_pure_circuit(m, psi, s, sd))?,
        DensityModel::Mixed(m) => run_circuits(psis, shots, seed, |psi, s, sd| run_mixed_circuit(m, psi, s, sd))?,
    };
    let exact: Vec<f64> = runs.iter().map(|r| to_density(r.exact_prob)).collect();
    if shots == 0 {
        return Ok(Densities {
            values: exact,
            exact: None,
        });
    }
    let values = runs
        .iter()
        .map(|r| to_density(r.shot_estimate.expect("shots requested")))
        .collect();
    Ok(Densities {
        values,
        exact: Some(exact),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: CsvSource,
    /// z-score features with training-partition statistics before embedding.
    pub standardize: bool,
    pub split: SplitSpec,
    pub embedding: EmbeddingKind,
    pub state: StateKind,
    pub dim_features: usize,
    pub gamma: f64,
    pub gamma_s: f64,
    pub training: TrainingConfig,
    /// Reuse a saved feature map instead of drawing or training one.
    pub params_path: Option<PathBuf>,
    pub backend: Backend,
    pub shots: u64,
    pub seed: u64,
    pub repeats: usize,
    /// Fraction of validation samples placed below the threshold.
    pub outlier_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: CsvSource::default(),
            standardize: true,
            split: SplitSpec::default(),
            embedding: EmbeddingKind::Aff,
            state: StateKind::Mixed,
            dim_features: 4,
            gamma: 2f64.powi(-7),
            gamma_s: 2f64.powi(-6),
            training: TrainingConfig::default(),
            params_path: None,
            backend: Backend::Classical,
            shots: 8192,
            seed: 0,
            repeats: 1,
            outlier_rate: 0.096,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.dim_features == 0 {
            return Err(Error::invalid("dim_features must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        if !(self.outlier_rate > 0.0 && self.outlier_rate < 1.0) {
            return Err(Error::invalid("outlier_rate must lie in (0, 1)"));
        }
        if !(self.gamma > 0.0) || !(self.gamma_s > 0.0) {
            return Err(Error::invalid("gamma and gamma_s must be positive"));
        }
        if self.backend == Backend::SimulatorShots && self.shots == 0 {
            return Err(Error::invalid("simulator-shots backend needs shots > 0"));
        }
        Ok(())
    }

    /// Embedding seed of repeat `r`.
    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        self.seed.wrapping_add(repeat as u64)
    }
}

/// Result of one detection run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub embedding: EmbeddingKind,
    pub state: StateKind,
    pub backend: Backend,
    pub dim_features: usize,
    pub gamma: f64,
    pub repeat: usize,
    pub seed: u64,
    pub threshold: f64,
    pub densities_val: Vec<f64>,
    pub densities_test: Vec<f64>,
    pub truth_test: Vec<Label>,
    pub predictions: Vec<Label>,
    pub accuracy: f64,
    pub f1_outlier: f64,
    pub auc: f64,
    /// Shots per circuit, for the shot backend.
    pub shots: Option<u64>,
    /// Exact-probability test densities, for the shot backend.
    pub exact_test: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: MeanStd,
    pub f1_outlier: MeanStd,
    pub auc: MeanStd,
}

impl MetricSummary {
    pub fn of(runs: &[DetectionReport]) -> Self {
        let pick = |f: fn(&DetectionReport) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
        MetricSummary {
            accuracy: pick(|r| r.accuracy),
            f1_outlier: pick(|r| r.f1_outlier),
            auc: pick(|r| r.auc),
        }
    }
}

/// All runs of one (embedding, state) configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub embedding: EmbeddingKind,
    pub state: StateKind,
    pub backend: Backend,
    pub dim_features: usize,
    pub gamma: f64,
    pub runs: Vec<DetectionReport>,
    pub summary: MetricSummary,
}

/// Train/val/test partitions after optional scaling.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
    pub scaler: Option<Scaler>,
}

/// Splits `dataset` and, if configured, scales all partitions with
/// training statistics.
pub fn prepare(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<PreparedData> {
    let idx = split_indices(dataset, &config.split).stage(Stage::Split)?;
    let (train, val, test) = (
        dataset.subset(&idx.train),
        dataset.subset(&idx.val),
        dataset.subset(&idx.test),
    );
    if !config.standardize {
        return Ok(PreparedData {
            train,
            val,
            test,
            scaler: None,
        });
    }
    let scaler = Scaler::fit(&train);
    let scale = |d: &LabeledDataset| scaler.transform(d).stage(Stage::Preprocessing);
    Ok(PreparedData {
        train: scale(&train)?,
        val: scale(&val)?,
        test: scale(&test)?,
        scaler: Some(scaler),
    })
}

/// Loads the configured CSV and runs the experiment for `config.state`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let dataset = load_csv(&config.data).stage(Stage::Ingestion)?;
    run_on_dataset(&dataset, config)
}

pub fn run_on_dataset(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let mut out = run_states(dataset, config, &[config.state])?;
    Ok(out.remove(0))
}

/// Runs the experiment for several state kinds, sharing the split and each
/// repeat's embedding between them.
pub fn run_states(
    dataset: &LabeledDataset,
    config: &ExperimentConfig,
    states: &[StateKind],
) -> Result<Vec<ExperimentOutcome>> {
    config.validate().stage(Stage::Preprocessing)?;
    if states.is_empty() {
        return Err(Error::invalid("no state kinds requested"));
    }
    let data = prepare(dataset, config)?;
    let fixed_params = match &config.params_path {
        Some(path) => {
            let p = FourierParams::<f64>::load(path).stage(Stage::Embedding)?;
            if p.dim_input() != data.train.dim() {
                return Err(Error::DimensionMismatch {
                    expected: data.train.dim(),
                    found: p.dim_input(),
                }
                .at(Stage::Embedding));
            }
            Some(p)
        }
        None => None,
    };

    let mut runs: Vec<Vec<DetectionReport>> = vec![Vec::new(); states.len()];
    for repeat in 0..config.repeats {
        let seed = config.repeat_seed(repeat);
        let params = match &fixed_params {
            Some(p) => p.clone(),
            None => {
                let stage = match config.embedding {
                    EmbeddingKind::Rff => Stage::Embedding,
                    EmbeddingKind::Aff => Stage::Training,
                };
                build_embedding(
                    config.embedding,
                    data.train.samples(),
                    config.dim_features,
                    config.gamma,
                    config.gamma_s,
                    &config.training,
                    seed,
                )
                .stage(stage)?
                .params
            }
        };
        let embed = |d: &LabeledDataset| embed_all(&params, d.samples()).stage(Stage::Embedding);
        let (train_psi, val_psi, test_psi) = (embed(&data.train)?, embed(&data.val)?, embed(&data.test)?);

        for (slot, &state) in states.iter().enumerate() {
            let model = train_model(state, &train_psi).stage(Stage::Training)?;
            let report = detect_with_model(&model, &val_psi, &test_psi, &data.test, config, repeat)?;
            runs[slot].push(DetectionReport {
                state,
                dim_features: params.dim_features(),
                ..report
            });
        }
    }

    Ok(states
        .iter()
        .zip(runs)
        .map(|(&state, runs)| ExperimentOutcome {
            embedding: config.embedding,
            state,
            backend: config.backend,
            dim_features: config.dim_features,
            gamma: config.gamma,
            summary: MetricSummary::of(&runs),
            runs,
        })
        .collect())
}

fn detect_with_model(
    model: &DensityModel<f64>,
    val_psi: &[QuantumFeature<f64>],
    test_psi: &[QuantumFeature<f64>],
    test: &LabeledDataset,
    config: &ExperimentConfig,
    repeat: usize,
) -> Result<DetectionReport> {
    let seed = config.repeat_seed(repeat);
    // Validation and test circuits draw from disjoint per-sample seed families.
    let val = estimate_densities(model, val_psi, config.backend, config.shots, seed.wrapping_mul(2))
        .stage(Stage::Estimation)?;
    let tst = estimate_densities(
        model,
        test_psi,
        config.backend,
        config.shots,
        seed.wrapping_mul(2).wrapping_add(1),
    )
    .stage(Stage::Estimation)?;
    let threshold = select_threshold(&val.values, config.outlier_rate).stage(Stage::Thresholding)?;
    let predictions = classify(&tst.values, threshold);
    let m = metrics(&predictions, test.labels(), &tst.values).stage(Stage::Metrics)?;
    let state = match model {
        DensityModel::Pure(_) => StateKind::Pure,
        DensityModel::Mixed(_) => StateKind::Mixed,
    };
    Ok(DetectionReport {
        embedding: config.embedding,
        state,
        backend: config.backend,
        dim_features: model.dim(),
        gamma: config.gamma,
        repeat,
        seed,
        threshold,
        densities_val: val.values,
        densities_test: tst.values,
        truth_test: test.labels().to_vec(),
        predictions,
        accuracy: m.accuracy,
        f1_outlier: m.f1_outlier,
        auc: m.auc,
        shots: (config.backend == Backend::SimulatorShots).then_some(config.shots),
        exact_test: tst.exact,
    })
}
