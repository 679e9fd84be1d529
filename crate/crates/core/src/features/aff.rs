//! Adaptive Fourier features: kernel-matching pairs, the squared-overlap MSE
//! loss, its exact gradient, and mini-batch training.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{Adam, AdamConfig};
use super::{sample_rff, FourierParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{rng_for, Stream};
use crate::scalar::{dot, Scalar};

/// Pairs per parallel work unit. Partial sums are reduced in chunk order, so
/// results do not depend on the thread count.
const CHUNK: usize = 128;

/// Gaussian kernel `exp(-gamma |x - y|^2)`.
pub fn gaussian_kernel<T: Scalar>(x: &[T], y: &[T], gamma: T) -> T {
    let sq: T = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// Synthetic supervision for kernel matching: pairs of samples labelled with
/// their Gaussian kernel value.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset<T> {
    left: Vec<Vec<T>>,
    right: Vec<Vec<T>>,
    labels: Vec<T>,
    gamma_s: T,
}

impl<T: Scalar> PairDataset<T> {
    /// Builds a pair set, labelling each pair with `exp(-gamma_s |l - r|^2)`.
    pub fn new(left: Vec<Vec<T>>, right: Vec<Vec<T>>, gamma_s: T) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::DimensionMismatch {
                expected: left.len(),
                found: right.len(),
            });
        }
        if !(gamma_s > T::zero()) || !gamma_s.is_finite() {
            return Err(Error::invalid(format!("gamma_s must be positive, got {gamma_s}")));
        }
        if let Some(first) = left.first() {
            let dim = first.len();
            if let Some(bad) = left.iter().chain(&right).find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.len(),
                });
            }
        }
        let labels = left
            .iter()
            .zip(&right)
            .map(|(l, r)| gaussian_kernel(l, r, gamma_s))
            .collect();
        Ok(PairDataset {
            left,
            right,
            labels,
            gamma_s,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn left(&self) -> &[Vec<T>] {
        &self.left
    }

    pub fn right(&self) -> &[Vec<T>] {
        &self.right
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn gamma_s(&self) -> T {
        self.gamma_s
    }

    /// Reorders all three lists by the same permutation.
    pub fn permuted(&self, order: &[usize]) -> Self {
        PairDataset {
            left: order.iter().map(|&i| self.left[i].clone()).collect(),
            right: order.iter().map(|&i| self.right[i].clone()).collect(),
            labels: order.iter().map(|&i| self.labels[i]).collect(),
            gamma_s: self.gamma_s,
        }
    }
}

/// Pairs two independent seeded shuffles of `samples`.
pub fn build_synthetic_pairs<T: Scalar>(samples: &[Vec<T>], gamma_s: T, seed: u64) -> Result<PairDataset<T>> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples to build pairs, got {}",
            samples.len()
        )));
    }
    let mut rng = rng_for(seed, Stream::Pairs);
    let mut first: Vec<usize> = (0..samples.len()).collect();
    let mut second = first.clone();
    first.shuffle(&mut rng);
    second.shuffle(&mut rng);
    PairDataset::new(
        first.iter().map(|&i| samples[i].clone()).collect(),
        second.iter().map(|&i| samples[i].clone()).collect(),
        gamma_s,
    )
}

/// Gradient of the AFF loss with respect to the weight matrix and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrad<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> FourierGrad<T> {
    fn zeros(d: usize, dim_in: usize) -> Self {
        FourierGrad {
            weights: Matrix::zeros(d, dim_in),
            bias: vec![T::zero(); d],
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.weights.as_mut_slice().iter_mut().zip(other.weights.as_slice()) {
            *a += b;
        }
        for (a, &b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    fn scale(&mut self, s: T) {
        self.weights.as_mut_slice().iter_mut().for_each(|a| *a *= s);
        self.bias.iter_mut().for_each(|a| *a *= s);
    }

    /// Weights (row-major) followed by bias.
    pub fn to_flat(&self) -> Vec<T> {
        let mut flat = self.weights.as_slice().to_vec();
        flat.extend_from_slice(&self.bias);
        flat
    }
}

impl<T: Scalar> FourierParams<T> {
    /// Weights (row-major) followed by bias.
    pub fn to_flat(&self) -> Vec<T> {
        let mut flat = self.weights.as_slice().to_vec();
        flat.extend_from_slice(&self.bias);
        flat
    }

    /// Inverse of [`FourierParams::to_flat`].
    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        let nw = self.weights.as_slice().len();
        if flat.len() != nw + self.bias.len() {
            return Err(Error::DimensionMismatch {
                expected: nw + self.bias.len(),
                found: flat.len(),
            });
        }
        self.weights.as_mut_slice().copy_from_slice(&flat[..nw]);
        self.bias.copy_from_slice(&flat[nw..]);
        Ok(())
    }
}

struct Forward<T> {
    phases: Vec<T>,
    psi: Vec<T>,
    norm: T,
}

fn forward<T: Scalar>(params: &FourierParams<T>, x: &[T]) -> Result<Forward<T>> {
    params.check_input(x)?;
    let scale = (T::lit(2.0) / T::from_usize_exact(params.dim_features())).sqrt();
    let phases = params.phases(x);
    let z: Vec<T> = phases.iter().map(|t| scale * t.cos()).collect();
    let norm = dot(&z, &z).sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::DegenerateEmbedding);
    }
    let psi = z.into_iter().map(|v| v / norm).collect();
    Ok(Forward { phases, psi, norm })
}

/// Backpropagates `g_psi` (gradient w.r.t. the normalized state) into `grad`.
fn backward<T: Scalar>(params: &FourierParams<T>, x: &[T], fwd: &Forward<T>, g_psi: &[T], grad: &mut FourierGrad<T>) {
    let scale = (T::lit(2.0) / T::from_usize_exact(params.dim_features())).sqrt();
    let proj = dot(&fwd.psi, g_psi);
    for i in 0..fwd.psi.len() {
        let g_z = (g_psi[i] - fwd.psi[i] * proj) / fwd.norm;
        let g_phase = -g_z * scale * fwd.phases[i].sin();
        grad.bias[i] += g_phase;
        for (w, &xj) in grad.weights.row_mut(i).iter_mut().zip(x) {
            *w += g_phase * xj;
        }
    }
}

fn check_pairs<T: Scalar>(params: &FourierParams<T>, pairs: &PairDataset<T>) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::invalid("pair dataset is empty"));
    }
    params.check_input(&pairs.left[0])
}

/// Sum of squared residuals and its gradient over the listed pairs (unscaled).
fn residual_sum<T: Scalar>(
    params: &FourierParams<T>,
    pairs: &PairDataset<T>,
    indices: &[usize],
    with_grad: bool,
) -> Result<(T, Option<FourierGrad<T>>)> {
    let (d, dim_in) = (params.dim_features(), params.dim_input());
    let partials: Vec<(T, Option<FourierGrad<T>>)> = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut loss = T::zero();
            let mut grad = with_grad.then(|| FourierGrad::zeros(d, dim_in));
            for &k in chunk {
                let (x1, x2) = (&pairs.left[k], &pairs.right[k]);
                let f1 = forward(params, x1)?;
                let f2 = forward(params, x2)?;
                let overlap = dot(&f1.psi, &f2.psi);
                let residual = pairs.labels[k] - overlap * overlap;
                loss += residual * residual;
                if let Some(g) = grad.as_mut() {
                    // d(r^2)/d overlap = 2 r * (-2 overlap)
                    let g_overlap = T::lit(-4.0) * residual * overlap;
                    let g1: Vec<T> = f2.psi.iter().map(|&p| g_overlap * p).collect();
                    let g2: Vec<T> = f1.psi.iter().map(|&p| g_overlap * p).collect();
                    backward(params, x1, &f1, &g1, g);
                    backward(params, x2, &f2, &g2, g);
                }
            }
            Ok((loss, grad))
        })
        .collect::<Result<_>>()?;

    let mut loss = T::zero();
    let mut grad = with_grad.then(|| FourierGrad::zeros(d, dim_in));
    for (l, g) in partials {
        loss += l;
        if let (Some(total), Some(g)) = (grad.as_mut(), g) {
            total.add_assign(&g);
        }
    }
    Ok((loss, grad))
}

/// Mean squared error between pair labels and squared state overlaps,
/// `(1/N) sum_i (y_i - <psi_i1|psi_i2>^2)^2`.
pub fn aff_loss<T: Scalar>(params: &FourierParams<T>, pairs: &PairDataset<T>) -> Result<T> {
    check_pairs(params, pairs)?;
    let idx: Vec<usize> = (0..pairs.len()).collect();
    let (sum, _) = residual_sum(params, pairs, &idx, false)?;
    Ok(sum / T::from_usize_exact(pairs.len()))
}

/// Exact gradient of [`aff_loss`] with respect to weights and bias, by
/// reverse-mode differentiation through cosine, normalization, overlap and
/// square.
pub fn aff_grad<T: Scalar>(params: &FourierParams<T>, pairs: &PairDataset<T>) -> Result<FourierGrad<T>> {
    check_pairs(params, pairs)?;
    let idx: Vec<usize> = (0..pairs.len()).collect();
    batch_grad(params, pairs, &idx)
}

fn batch_grad<T: Scalar>(
    params: &FourierParams<T>,
    pairs: &PairDataset<T>,
    indices: &[usize],
) -> Result<FourierGrad<T>> {
    let (_, grad) = residual_sum(params, pairs, indices, true)?;
    let mut grad = grad.expect("gradient requested");
    grad.scale(T::one() / T::from_usize_exact(indices.len()));
    Ok(grad)
}

/// Settings for adaptive Fourier feature training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffTrainConfig {
    /// Feature dimension `d`.
    pub dim_features: usize,
    /// Spread of the initial random features.
    pub gamma: f64,
    /// Shape parameter of the target Gaussian kernel.
    pub gamma_s: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for AffTrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        AffTrainConfig {
            dim_features: 4,
            gamma: 2f64.powi(-7),
            gamma_s: 2f64.powi(-6),
            epochs: 50,
            batch_size: 64,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
        }
    }
}

impl AffTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim_features == 0 {
            return Err(Error::invalid("dim_features must be at least 1"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.gamma > 0.0) || !(self.gamma_s > 0.0) {
            return Err(Error::invalid("gamma and gamma_s must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Full-dataset loss after an epoch. Epoch 0 is the random initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone)]
pub struct AffTraining<T> {
    /// Parameters with the lowest full-dataset loss seen.
    pub params: FourierParams<T>,
    pub best_epoch: usize,
    pub history: Vec<EpochLoss>,
}

impl<T> AffTraining<T> {
    pub fn initial_loss(&self) -> f64 {
        self.history[0].loss
    }

    pub fn best_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |h| h.best_loss)
    }
}

/// Trains adaptive Fourier features on `samples`.
///
/// Starts from [`sample_rff`], builds the kernel-labelled pair set, and runs
/// mini-batch Adam on [`aff_loss`]. Returns the best parameters seen,
/// evaluated on the full pair set after every epoch.
pub fn train_aff<T: Scalar>(samples: &[Vec<T>], config: &AffTrainConfig) -> Result<AffTraining<T>> {
    config.validate()?;
    let pairs = build_synthetic_pairs(samples, T::lit(config.gamma_s), config.seed)?;
    let mut params = sample_rff(samples[0].len(), config.dim_features, T::lit(config.gamma), config.seed)?;

    let initial = aff_loss(&params, &pairs)?;
    if !initial.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0 });
    }
    let mut best = params.clone();
    let mut best_loss = initial;
    let mut best_epoch = 0;
    let mut history = vec![EpochLoss {
        epoch: 0,
        loss: initial.as_f64(),
        best_loss: initial.as_f64(),
    }];

    let mut flat = params.to_flat();
    let mut adam = Adam::new(flat.len(), config.adam());
    let mut rng = rng_for(config.seed, Stream::Batches);
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let grad = batch_grad(&params, &pairs, batch)?.to_flat();
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDiverged { epoch });
            }
            adam.step(&mut flat, &grad);
            params.set_flat(&flat)?;
        }
        let loss = match aff_loss(&params, &pairs) {
            Ok(l) if l.is_finite() => l,
            Ok(_) | Err(Error::DegenerateEmbedding) => return Err(Error::TrainingDiverged { epoch }),
            Err(e) => return Err(e),
        };
        if loss < best_loss {
            best_loss = loss;
            best = params.clone();
            best_epoch = epoch;
        }
        history.push(EpochLoss {
            epoch,
            loss: loss.as_f64(),
            best_loss: best_loss.as_f64(),
        });
    }

    Ok(AffTraining {
        params: best,
        best_epoch,
        history,
    })
}
