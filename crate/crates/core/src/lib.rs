//! Density matrix kernel density estimation with random and adaptive
//! Fourier features, plus a statevector simulator for the circuits that
//! evaluate the estimators.
//!
//! Numerical layers (`features`, `density`, `qsim`, `linalg`) are generic
//! over [`Scalar`] (`f32` or `f64`). The `pipeline` layer runs in `f64`.

pub mod density;
pub mod error;
pub mod features;
pub mod linalg;
pub mod pipeline;
pub mod qsim;
mod rng;
pub mod scalar;

pub use density::{
    estimate_mixed, estimate_pure, normalize_numeric_1d, train_mixed, train_pure, trapezoid, DensityModel,
    EstimatorConfig, Grid1d, MixedModel, Normalization, PureModel,
};
pub use error::{Error, Result, Stage};
pub use features::{
    aff_grad, aff_loss, build_synthetic_pairs, embed, embed_all, sample_rff, train_aff, AffTrainConfig, FourierParams,
    PairDataset, QuantumFeature,
};
pub use linalg::{symmetric_eigen, Matrix, SymmetricEigen};
pub use qsim::{run_mixed_circuit, run_pure_circuit, CircuitRun, CircuitState, ShotResult, UnitaryBlock};
pub use scalar::Scalar;

pub type FourierParams64 = FourierParams<f64>;
pub type FourierParams32 = FourierParams<f32>;
pub type QuantumFeature64 = QuantumFeature<f64>;
pub type QuantumFeature32 = QuantumFeature<f32>;
pub type PureModel64 = PureModel<f64>;
pub type PureModel32 = PureModel<f32>;
pub type MixedModel64 = MixedModel<f64>;
pub type MixedModel32 = MixedModel<f32>;
pub type DensityModel64 = DensityModel<f64>;
pub type DensityModel32 = DensityModel<f32>;
pub type CircuitState64 = CircuitState<f64>;
pub type CircuitState32 = CircuitState<f32>;
pub type UnitaryBlock64 = UnitaryBlock<f64>;
pub type UnitaryBlock32 = UnitaryBlock<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
