//! One-dimensional density estimation on a two-component Gaussian mixture.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::experiment::{
    build_embedding, estimate_densities, train_model, Backend, EmbeddingKind, StateKind, TrainingConfig,
};
use crate::density::{trapezoid, Grid1d};
use crate::error::{Error, Result, Stage, StageExt};
use crate::features::{embed_all, EpochLoss};
use crate::rng::{rng_for, Stream};

/// `w N(mean1, sigma1^2) + (1 - w) N(mean2, sigma2^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSpec {
    pub mean1: f64,
    pub mean2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub weight1: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        MixtureSpec {
            mean1: -2.0,
            mean2: 2.0,
            sigma1: 1.0,
            sigma2: 1.0,
            weight1: 0.5,
        }
    }
}

fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::invalid("mixture sigmas must be positive"));
        }
        if !(0.0..=1.0).contains(&self.weight1) {
            return Err(Error::invalid("mixture weight must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.weight1 * normal_pdf(x, self.mean1, self.sigma1)
            + (1.0 - self.weight1) * normal_pdf(x, self.mean2, self.sigma2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < self.weight1 {
                    self.mean1 + self.sigma1 * g
                } else {
                    self.mean2 + self.sigma2 * g
                }
            })
            .collect()
    }

    /// `[min mean - k sigma, max mean + k sigma]` over both components.
    pub fn grid(&self, margin_sigmas: f64, points: usize) -> Result<Grid1d> {
        let lo = (self.mean1 - margin_sigmas * self.sigma1).min(self.mean2 - margin_sigmas * self.sigma2);
        let hi = (self.mean1 + margin_sigmas * self.sigma1).max(self.mean2 + margin_sigmas * self.sigma2);
        Grid1d::new(lo, hi, points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityExperimentConfig {
    pub mixture: MixtureSpec,
    pub train_size: usize,
    pub grid_points: usize,
    pub margin_sigmas: f64,
    pub embedding: EmbeddingKind,
    pub dim_features: usize,
    pub gamma: f64,
    pub gamma_s: f64,
    pub training: TrainingConfig,
    pub backend: Backend,
    pub shots: u64,
    pub seed: u64,
}

impl Default for DensityExperimentConfig {
    fn default() -> Self {
        DensityExperimentConfig {
            mixture: MixtureSpec::default(),
            train_size: 1000,
            grid_points: 250,
            margin_sigmas: 3.0,
            embedding: EmbeddingKind::Rff,
            dim_features: 16,
            gamma: 1.0,
            gamma_s: 1.0,
            training: TrainingConfig::default(),
            backend: Backend::Classical,
            shots: 8192,
            seed: 0,
        }
    }
}

/// Grid-normalized pure and mixed estimates next to the true pdf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurves {
    pub x: Vec<f64>,
    pub estimate_pure: Vec<f64>,
    pub estimate_mixed: Vec<f64>,
    pub true_pdf: Vec<f64>,
    /// Trapezoidal L1 distance of each estimate to the true pdf.
    pub l1_pure: f64,
    pub l1_mixed: f64,
    pub constant_pure: f64,
    pub constant_mixed: f64,
    pub training_samples: Vec<f64>,
    pub history: Option<Vec<EpochLoss>>,
}

/// Trapezoidal `integral |a - b|` on `grid`.
pub fn l1_distance(a: &[f64], b: &[f64], grid: &Grid1d) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    trapezoid(&diff, grid)
}

/// Samples training data from the mixture, fits pure and mixed models on the
/// chosen embedding, and evaluates both on the grid, each scaled to integrate
/// to one there.
pub fn run_density_experiment(cfg: &DensityExperimentConfig) -> Result<DensityCurves> {
    cfg.mixture.validate()?;
    if cfg.train_size < 2 {
        return Err(Error::invalid("train_size must be at least 2"));
    }
    let grid = cfg.mixture.grid(cfg.margin_sigmas, cfg.grid_points)?;
    let mut rng = rng_for(cfg.seed, Stream::Data);
    let training_samples = cfg.mixture.sample(cfg.train_size, &mut rng);
    let train: Vec<Vec<f64>> = training_samples.iter().map(|&x| vec![x]).collect();

    let built = build_embedding(
        cfg.embedding,
        &train,
        cfg.dim_features,
        cfg.gamma,
        cfg.gamma_s,
        &cfg.training,
        cfg.seed,
    )
    .stage(Stage::Embedding)?;
    let params = &built.params;
    let train_psi = embed_all(params, &train).stage(Stage::Embedding)?;
    let x = grid.values();
    let grid_inputs: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    let grid_psi = embed_all(params, &grid_inputs).stage(Stage::Embedding)?;

    let mut curves = Vec::with_capacity(2);
    for (k, state) in [StateKind::Pure, StateKind::Mixed].into_iter().enumerate() {
        let model = train_model(state, &train_psi).stage(Stage::Training)?;
        let raw = estimate_densities(
            &model,
            &grid_psi,
            cfg.backend,
            cfg.shots,
            cfg.seed.wrapping_add(k as u64),
        )
        .stage(Stage::Estimation)?
        .values;
        let integral = trapezoid(&raw, &grid);
        if !(integral > 0.0) {
            return Err(
                Error::DegenerateModel(format!("{} estimate integrates to {integral}", state.as_str()))
                    .at(Stage::Estimation),
            );
        }
        let constant = 1.0 / integral;
        curves.push((raw.into_iter().map(|v| v * constant).collect::<Vec<f64>>(), constant));
    }
    let (mixed, constant_mixed) = curves.pop().expect("two curves");
    let (pure, constant_pure) = curves.pop().expect("two curves");
    let true_pdf: Vec<f64> = x.iter().map(|&v| cfg.mixture.pdf(v)).collect();

    Ok(DensityCurves {
        l1_pure: l1_distance(&pure, &true_pdf, &grid),
        l1_mixed: l1_distance(&mixed, &true_pdf, &grid),
        x,
        estimate_pure: pure,
        estimate_mixed: mixed,
        true_pdf,
        constant_pure,
        constant_mixed,
        training_samples,
        history: built.history,
    })
}
