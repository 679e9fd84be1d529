//! Fourier feature maps: random initialization, the normalized cosine
//! embedding, and trainable (adaptive) features.

mod aff;
mod optim;

pub use aff::{
    aff_grad, aff_loss, build_synthetic_pairs, train_aff, AffTrainConfig, AffTraining, EpochLoss, FourierGrad,
    PairDataset,
};
pub use optim::{Adam, AdamConfig};

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{rng_for, Stream};
use crate::scalar::{dot, norm, Scalar};

/// Tolerance used for unit-norm checks, widened for narrow scalar types.
pub(crate) fn unit_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// Parameters of a cosine feature map `x -> cos(W x + b)`.
///
/// `weights` is `d x D` and already carries the `sqrt(2 gamma)` spread from
/// initialization; `gamma` is kept for bookkeeping and serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierParams<T> {
    pub(crate) weights: Matrix<T>,
    pub(crate) bias: Vec<T>,
    pub(crate) gamma: T,
}

impl<T: Scalar> FourierParams<T> {
    pub fn new(weights: Matrix<T>, bias: Vec<T>, gamma: T) -> Result<Self> {
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::invalid("feature and input dimensions must be at least 1"));
        }
        if bias.len() != weights.rows() {
            return Err(Error::DimensionMismatch {
                expected: weights.rows(),
                found: bias.len(),
            });
        }
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(FourierParams { weights, bias, gamma })
    }

    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Input dimension `D`.
    pub fn dim_input(&self) -> usize {
        self.weights.cols()
    }

    /// Feature dimension `d`.
    pub fn dim_features(&self) -> usize {
        self.weights.rows()
    }

    pub(crate) fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim_input() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_input(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Phases `W x + b`.
    pub(crate) fn phases(&self, x: &[T]) -> Vec<T> {
        (0..self.dim_features())
            .map(|i| dot(self.weights.row(i), x) + self.bias[i])
            .collect()
    }

    /// Unnormalized features `sqrt(2/d) cos(W x + b)`.
    pub fn raw_features(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let scale = (T::lit(2.0) / T::from_usize_exact(self.dim_features())).sqrt();
        Ok(self.phases(x).into_iter().map(|t| scale * t.cos()).collect())
    }

    /// Monte Carlo kernel estimate `<z(x), z(y)>` from unnormalized features,
    /// which approximates `exp(-gamma |x - y|^2)` for randomly drawn params.
    pub fn kernel_estimate(&self, x: &[T], y: &[T]) -> Result<T> {
        Ok(dot(&self.raw_features(x)?, &self.raw_features(y)?))
    }

    pub fn to_file(&self) -> FourierParamsFile {
        FourierParamsFile {
            dim_input: self.dim_input(),
            dim_features: self.dim_features(),
            gamma: self.gamma.as_f64(),
            weights: self.weights.as_slice().iter().map(|x| x.as_f64()).collect(),
            bias: self.bias.iter().map(|x| x.as_f64()).collect(),
        }
    }

    pub fn from_file(file: &FourierParamsFile) -> Result<Self> {
        let weights = Matrix::from_row_major(
            file.dim_features,
            file.dim_input,
            file.weights.iter().map(|&x| T::lit(x)).collect(),
        )?;
        Self::new(
            weights,
            file.bias.iter().map(|&x| T::lit(x)).collect(),
            T::lit(file.gamma),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of [`FourierParams`]. `weights` is row-major, `dim_features`
/// rows of `dim_input` entries each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierParamsFile {
    pub dim_input: usize,
    pub dim_features: usize,
    pub gamma: f64,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Unit-norm real feature vector; the quantum state of one data sample.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumFeature<T>(Vec<T>);

impl<T: Scalar> QuantumFeature<T> {
    /// Wraps a vector that is already unit norm.
    pub fn new(amplitudes: Vec<T>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("quantum feature must have at least one amplitude"));
        }
        let n = norm(&amplitudes);
        if !n.is_finite() || (n - T::one()).abs() > unit_tolerance::<T>() {
            return Err(Error::invalid(format!("quantum feature norm is {n}, expected 1")));
        }
        Ok(QuantumFeature(amplitudes))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(v: Vec<T>) -> Result<Self> {
        let n = norm(&v);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(QuantumFeature(v.into_iter().map(|x| x / n).collect()))
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(dot(&self.0, &other.0))
    }
}

/// Draws random Fourier feature parameters for a Gaussian kernel of inverse
/// squared length-scale `gamma`: `W = sqrt(2 gamma) G` with `G` standard
/// normal and `b` uniform on `[0, 2 pi)`.
pub fn sample_rff<T: Scalar>(dim_input: usize, dim_features: usize, gamma: T, seed: u64) -> Result<FourierParams<T>> {
    if dim_input == 0 || dim_features == 0 {
        return Err(Error::invalid("feature and input dimensions must be at least 1"));
    }
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let mut rng = rng_for(seed, Stream::Init);
    let spread = (2.0 * gamma.as_f64()).sqrt();
    let weights = Matrix::from_fn(dim_features, dim_input, |_, _| {
        let g: f64 = rng.sample(StandardNormal);
        T::lit(spread * g)
    });
    let bias = (0..dim_features).map(|_| T::lit(rng.random_range(0.0..TAU))).collect();
    FourierParams::new(weights, bias, gamma)
}

/// Maps a sample to its unit-norm feature state `z / |z|` with
/// `z = sqrt(2/d) cos(W x + b)`.
pub fn embed<T: Scalar>(params: &FourierParams<T>, x: &[T]) -> Result<QuantumFeature<T>> {
    QuantumFeature::normalized(params.raw_features(x)?)
}

/// Embeds every sample, in parallel, preserving order.
pub fn embed_all<T: Scalar>(params: &FourierParams<T>, xs: &[Vec<T>]) -> Result<Vec<QuantumFeature<T>>> {
    xs.par_iter().map(|x| embed(params, x)).collect()
}
