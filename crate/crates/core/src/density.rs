//! Pure and mixed training density matrices and their probability-density
//! estimators.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{embed, unit_tolerance, FourierParams, QuantumFeature};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::{dot, Scalar};

/// Eigenvalues below this are treated as numerical noise and set to zero.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Pure-state model: the normalized sum of training states.
#[derive(Debug, Clone, PartialEq)]
pub struct PureModel<T> {
    phi: QuantumFeature<T>,
}

impl<T: Scalar> PureModel<T> {
    pub fn new(phi: QuantumFeature<T>) -> Self {
        PureModel { phi }
    }

    pub fn phi(&self) -> &QuantumFeature<T> {
        &self.phi
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }
}

/// Mixed-state model: `rho = (1/N) sum_i psi_i psi_i^T` with its spectral
/// decomposition `rho = V diag(lambda) V^T`, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedModel<T> {
    rho: Matrix<T>,
    eigenvectors: Matrix<T>,
    eigenvalues: Vec<T>,
}

impl<T: Scalar> MixedModel<T> {
    /// Builds a model from a density matrix, diagonalizing it.
    pub fn from_density_matrix(rho: Matrix<T>) -> Result<Self> {
        let d = rho.rows();
        if d == 0 || rho.cols() != d {
            return Err(Error::invalid("density matrix must be square and nonempty"));
        }
        let tol = unit_tolerance::<T>();
        if rho.max_asymmetry() > tol {
            return Err(Error::invalid("density matrix is not symmetric"));
        }
        if (rho.trace() - T::one()).abs() > tol {
            return Err(Error::invalid(format!(
                "density matrix trace is {}, expected 1",
                rho.trace()
            )));
        }
        let eig = symmetric_eigen(&rho)?;
        let floor = T::lit(EIGENVALUE_FLOOR);
        let clamped: Vec<T> = eig
            .eigenvalues
            .iter()
            .map(|&l| if l < floor { T::zero() } else { l })
            .collect();
        let total: T = clamped.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::DegenerateModel("all eigenvalues vanish".into()));
        }
        Ok(MixedModel {
            rho,
            eigenvectors: eig.eigenvectors,
            eigenvalues: clamped.into_iter().map(|l| l / total).collect(),
        })
    }

    /// Reassembles a model from stored parts, checking its invariants.
    pub fn from_parts(rho: Matrix<T>, eigenvectors: Matrix<T>, eigenvalues: Vec<T>) -> Result<Self> {
        let d = rho.rows();
        if rho.cols() != d || eigenvectors.rows() != d || eigenvectors.cols() != d {
            return Err(Error::invalid("mixed model matrices must all be d x d"));
        }
        if eigenvalues.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: eigenvalues.len(),
            });
        }
        let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
        if eigenvalues.iter().any(|&l| l < T::zero()) {
            return Err(Error::invalid("eigenvalues must be non-negative"));
        }
        let sum: T = eigenvalues.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::invalid("eigenvalues must sum to 1"));
        }
        let model = MixedModel {
            rho,
            eigenvectors,
            eigenvalues,
        };
        if model.reconstruction().distance(&model.rho) > tol {
            return Err(Error::invalid("eigenpairs do not reconstruct rho"));
        }
        Ok(model)
    }

    pub fn rho(&self) -> &Matrix<T> {
        &self.rho
    }

    /// Eigenvectors as columns.
    pub fn eigenvectors(&self) -> &Matrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruction(&self) -> Matrix<T> {
        let d = self.dim();
        let v = &self.eigenvectors;
        Matrix::from_fn(d, d, |r, c| {
            (0..d).map(|k| v[(r, k)] * self.eigenvalues[k] * v[(c, k)]).sum()
        })
    }

    /// `psi^T rho psi`, computed directly from the density matrix.
    pub fn expectation_direct(&self, psi: &QuantumFeature<T>) -> Result<T> {
        check_dim(self.dim(), psi)?;
        Ok(dot(psi.amplitudes(), &self.rho.matvec(psi.amplitudes())?))
    }

    /// `sum_i lambda_i <v_i|psi>^2`.
    pub fn expectation_spectral(&self, psi: &QuantumFeature<T>) -> Result<T> {
        check_dim(self.dim(), psi)?;
        let d = self.dim();
        let a = psi.amplitudes();
        let mut acc = T::zero();
        for k in 0..d {
            let lambda = self.eigenvalues[k];
            if lambda == T::zero() {
                continue;
            }
            let overlap: T = (0..d).map(|r| self.eigenvectors[(r, k)] * a[r]).sum();
            acc += lambda * overlap * overlap;
        }
        Ok(acc)
    }
}

fn check_dim<T: Scalar>(expected: usize, psi: &QuantumFeature<T>) -> Result<()> {
    if psi.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: psi.dim(),
        });
    }
    Ok(())
}

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityModel<T> {
    Pure(PureModel<T>),
    Mixed(MixedModel<T>),
}

impl<T: Scalar> DensityModel<T> {
    pub fn dim(&self) -> usize {
        match self {
            DensityModel::Pure(m) => m.dim(),
            DensityModel::Mixed(m) => m.dim(),
        }
    }

    pub fn estimate(&self, psi: &QuantumFeature<T>, cfg: &EstimatorConfig) -> Result<T> {
        match self {
            DensityModel::Pure(m) => estimate_pure(m, psi, cfg),
            DensityModel::Mixed(m) => estimate_mixed(m, psi, cfg),
        }
    }

    pub fn to_file(&self) -> DensityModelFile {
        match self {
            DensityModel::Pure(m) => DensityModelFile::Pure {
                dim: m.dim(),
                phi: m.phi.amplitudes().iter().map(|x| x.as_f64()).collect(),
            },
            DensityModel::Mixed(m) => DensityModelFile::Mixed {
                dim: m.dim(),
                rho: m.rho.as_slice().iter().map(|x| x.as_f64()).collect(),
                eigenvectors: m.eigenvectors.as_slice().iter().map(|x| x.as_f64()).collect(),
                eigenvalues: m.eigenvalues.iter().map(|x| x.as_f64()).collect(),
            },
        }
    }

    pub fn from_file(file: &DensityModelFile) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        match file {
            DensityModelFile::Pure { dim, phi } => {
                if phi.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        found: phi.len(),
                    });
                }
                Ok(DensityModel::Pure(PureModel::new(QuantumFeature::new(conv(phi))?)))
            }
            DensityModelFile::Mixed {
                dim,
                rho,
                eigenvectors,
                eigenvalues,
            } => Ok(DensityModel::Mixed(MixedModel::from_parts(
                Matrix::from_row_major(*dim, *dim, conv(rho))?,
                Matrix::from_row_major(*dim, *dim, conv(eigenvectors))?,
                conv(eigenvalues),
            )?)),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_file())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(&serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// On-disk form of a density model. All matrices are row-major `dim x dim`;
/// `eigenvectors` holds one eigenvector per column, matching `eigenvalues`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityModelFile {
    Pure {
        dim: usize,
        phi: Vec<f64>,
    },
    Mixed {
        dim: usize,
        rho: Vec<f64>,
        eigenvectors: Vec<f64>,
        eigenvalues: Vec<f64>,
    },
}

/// Evenly spaced 1-D evaluation grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Grid1d {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        let g = Grid1d { start, end, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !self.start.is_finite() || !self.end.is_finite() || !(self.end > self.start) {
            return Err(Error::invalid(format!(
                "grid needs finite start < end and at least 2 points, got [{}, {}] x {}",
                self.start, self.end, self.points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.end
                } else {
                    self.start + h * i as f64
                }
            })
            .collect()
    }
}

/// Trapezoidal integral of samples taken on `grid`.
pub fn trapezoid(values: &[f64], grid: &Grid1d) -> f64 {
    let h = grid.step();
    let inner: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    inner * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Normalization {
    None,
    NumericGrid(Grid1d),
}

/// How estimator outputs are scaled. `constant` is the multiplier applied to
/// the raw estimate; it stays 1 until calibrated with
/// [`normalize_numeric_1d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub normalization: Normalization,
    pub constant: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::unnormalized()
    }
}

impl EstimatorConfig {
    pub fn unnormalized() -> Self {
        EstimatorConfig {
            normalization: Normalization::None,
            constant: 1.0,
        }
    }

    pub fn numeric_grid(grid: Grid1d) -> Result<Self> {
        grid.validate()?;
        Ok(EstimatorConfig {
            normalization: Normalization::NumericGrid(grid),
            constant: 1.0,
        })
    }

    pub fn with_constant(self, constant: f64) -> Self {
        EstimatorConfig { constant, ..self }
    }
}

/// `phi = sum_i psi_i / |sum_i psi_i|`.
pub fn train_pure<T: Scalar>(features: &[QuantumFeature<T>]) -> Result<PureModel<T>> {
    let d = features
        .first()
        .ok_or_else(|| Error::invalid("cannot train on an empty feature list"))?
        .dim();
    let mut sum = vec![T::zero(); d];
    for psi in features {
        check_dim(d, psi)?;
        for (s, &a) in sum.iter_mut().zip(psi.amplitudes()) {
            *s += a;
        }
    }
    let phi = QuantumFeature::normalized(sum)
        .map_err(|_| Error::DegenerateModel("training states cancel to a zero vector".into()))?;
    Ok(PureModel::new(phi))
}

/// `rho = (1/N) sum_i psi_i psi_i^T`, diagonalized with Jacobi rotations.
/// Eigenvalues under [`EIGENVALUE_FLOOR`] are zeroed and the rest rescaled to
/// sum to one.
pub fn train_mixed<T: Scalar>(features: &[QuantumFeature<T>]) -> Result<MixedModel<T>> {
    let d = features
        .first()
        .ok_or_else(|| Error::invalid("cannot train on an empty feature list"))?
        .dim();
    let mut rho = Matrix::<T>::zeros(d, d);
    for psi in features {
        check_dim(d, psi)?;
        let a = psi.amplitudes();
        for r in 0..d {
            let ar = a[r];
            for (c, out) in rho.row_mut(r).iter_mut().enumerate().skip(r) {
                *out += ar * a[c];
            }
        }
    }
    let inv_n = T::one() / T::from_usize_exact(features.len());
    for r in 0..d {
        for c in r..d {
            let v = rho[(r, c)] * inv_n;
            rho[(r, c)] = v;
            rho[(c, r)] = v;
        }
    }
    MixedModel::from_density_matrix(rho)
}

/// `C * |<phi|psi>|`.
pub fn estimate_pure<T: Scalar>(model: &PureModel<T>, psi: &QuantumFeature<T>, cfg: &EstimatorConfig) -> Result<T> {
    Ok(T::lit(cfg.constant) * model.phi.dot(psi)?.abs())
}

/// `C * <psi|rho|psi>` via the spectral form `sum_i lambda_i <v_i|psi>^2`.
pub fn estimate_mixed<T: Scalar>(model: &MixedModel<T>, psi: &QuantumFeature<T>, cfg: &EstimatorConfig) -> Result<T> {
    Ok(T::lit(cfg.constant) * model.expectation_spectral(psi)?)
}

/// Normalizing constant making the 1-D estimator integrate to one over the
/// configured grid (trapezoidal rule). The constant in `cfg` is ignored.
pub fn normalize_numeric_1d<T: Scalar>(
    model: &DensityModel<T>,
    params: &FourierParams<T>,
    cfg: &EstimatorConfig,
) -> Result<T> {
    let grid = match cfg.normalization {
        Normalization::NumericGrid(g) => g,
        Normalization::None => {
            return Err(Error::invalid("numeric normalization needs a grid"));
        }
    };
    grid.validate()?;
    if params.dim_input() != 1 {
        return Err(Error::invalid(format!(
            "numeric normalization is 1-D only, params take {} inputs",
            params.dim_input()
        )));
    }
    let raw = EstimatorConfig::unnormalized();
    let values = grid
        .values()
        .into_iter()
        .map(|x| {
            let psi = embed(params, &[T::lit(x)])?;
            Ok(model.estimate(&psi, &raw)?.as_f64())
        })
        .collect::<Result<Vec<f64>>>()?;
    let integral = trapezoid(&values, &grid);
    if !(integral > 0.0) || !integral.is_finite() {
        return Err(Error::DegenerateModel(format!(
            "estimator integrates to {integral} over the grid"
        )));
    }
    Ok(T::lit(1.0 / integral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::sample_rff;

    fn state(v: &[f64]) -> QuantumFeature<f64> {
        QuantumFeature::normalized(v.to_vec()).unwrap()
    }

    #[test]
    fn pure_single_and_duplicate() {
        let psi = state(&[0.3, -0.4, 0.5]);
        for m in [
            train_pure(&[psi.clone()]).unwrap(),
            train_pure(&[psi.clone(), psi.clone()]).unwrap(),
        ] {
            for (a, b) in m.phi().amplitudes().iter().zip(psi.amplitudes()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_cancellation_is_degenerate() {
        let a = state(&[1.0, 0.0]);
        let b = state(&[-1.0, 0.0]);
        assert!(matches!(train_pure(&[a, b]), Err(Error::DegenerateModel(_))));
        assert!(train_pure::<f64>(&[]).is_err());
    }

    #[test]
    fn mixed_rank_one() {
        let psi = state(&[0.6, 0.0, -0.8]);
        let m = train_mixed(&[psi.clone()]).unwrap();
        assert!((m.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!(m.eigenvalues()[1..].iter().all(|&l| l == 0.0));
        let v0 = m.eigenvectors().column(0);
        let overlap: f64 = v0.iter().zip(psi.amplitudes()).map(|(a, b)| a * b).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-12);
        assert!((m.rho().trace() - 1.0).abs() < 1e-12);
        let cfg = EstimatorConfig::unnormalized();
        assert!((estimate_mixed(&m, &psi, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_eigenvector_estimate_is_eigenvalue() {
        let feats = vec![
            state(&[1.0, 0.2, 0.0, 0.1]),
            state(&[0.1, 1.0, 0.3, 0.0]),
            state(&[0.0, 0.4, 1.0, -0.2]),
        ];
        let m = train_mixed(&feats).unwrap();
        let cfg = EstimatorConfig::unnormalized().with_constant(2.5);
        for j in 0..4 {
            let v = QuantumFeature::new(m.eigenvectors().column(j)).unwrap();
            let est = estimate_mixed(&m, &v, &cfg).unwrap();
            assert!((est - 2.5 * m.eigenvalues()[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_orthogonal_and_self() {
        let m = PureModel::new(state(&[1.0, 0.0]));
        let cfg = EstimatorConfig::unnormalized().with_constant(3.0);
        assert_eq!(estimate_pure(&m, &state(&[0.0, 1.0]), &cfg).unwrap(), 0.0);
        assert_eq!(estimate_pure(&m, &state(&[1.0, 0.0]), &cfg).unwrap(), 3.0);
        assert!(matches!(
            estimate_pure(&m, &state(&[1.0, 0.0, 0.0]), &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1d::new(0.0, 1.0, 1).is_err());
        assert!(Grid1d::new(1.0, 1.0, 5).is_err());
        assert!(Grid1d::new(0.0, f64::INFINITY, 5).is_err());
        let g = Grid1d::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_estimator_normalizer() {
        // Zero weights and zero bias map every x to the same uniform state, so
        // both estimators are constant in x.
        let mut params = sample_rff::<f64>(1, 4, 1.0, 0).unwrap();
        params.weights = Matrix::zeros(4, 1);
        params.bias = vec![0.0, 0.3, 0.6, 0.9];
        let psi = embed(&params, &[0.0]).unwrap();
        let other = state(&[1.0, 0.5, 0.0, 0.2]);
        let grid = Grid1d::new(-2.0, 3.0, 41).unwrap();
        let cfg = EstimatorConfig::numeric_grid(grid).unwrap();
        let model = DensityModel::Mixed(train_mixed(&[psi.clone(), other]).unwrap());
        let c = model.estimate(&psi, &EstimatorConfig::unnormalized()).unwrap();
        let norm = normalize_numeric_1d(&model, &params, &cfg).unwrap();
        assert!((norm - 1.0 / (c * 5.0)).abs() < 1e-6);
    }

    #[test]
    fn normalized_estimator_integrates_to_one() {
        let params = sample_rff::<f64>(1, 8, 1.0, 4).unwrap();
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64) / 10.0 - 1.5]).collect();
        let feats = crate::features::embed_all(&params, &xs).unwrap();
        let grid = Grid1d::new(-5.0, 5.0, 250).unwrap();
        let cfg = EstimatorConfig::numeric_grid(grid).unwrap();
        for model in [
            DensityModel::Pure(train_pure(&feats).unwrap()),
            DensityModel::Mixed(train_mixed(&feats).unwrap()),
        ] {
            let c = normalize_numeric_1d(&model, &params, &cfg).unwrap();
            let cfg = cfg.with_constant(c);
            let vals: Vec<f64> = grid
                .values()
                .iter()
                .map(|&x| model.estimate(&embed(&params, &[x]).unwrap(), &cfg).unwrap())
                .collect();
            assert!((trapezoid(&vals, &grid) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn normalization_requires_grid_and_1d() {
        let params = sample_rff::<f64>(2, 4, 1.0, 0).unwrap();
        let psi = embed(&params, &[0.0, 0.0]).unwrap();
        let model = DensityModel::Pure(train_pure(&[psi]).unwrap());
        let grid = EstimatorConfig::numeric_grid(Grid1d::new(0.0, 1.0, 3).unwrap()).unwrap();
        assert!(normalize_numeric_1d(&model, &params, &grid).is_err());
        let p1 = sample_rff::<f64>(1, 4, 1.0, 0).unwrap();
        assert!(normalize_numeric_1d(&model, &p1, &EstimatorConfig::unnormalized()).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let params = sample_rff::<f64>(1, 5, 1.0, 4).unwrap();
        let xs: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 * 0.3]).collect();
        let feats = crate::features::embed_all(&params, &xs).unwrap();
        for model in [
            DensityModel::Pure(train_pure(&feats).unwrap()),
            DensityModel::Mixed(train_mixed(&feats).unwrap()),
        ] {
            let back = DensityModel::<f64>::from_file(&model.to_file()).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn from_parts_rejects_bad_spectrum() {
        let rho = Matrix::from_row_major(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let v = Matrix::identity(2);
        assert!(MixedModel::from_parts(rho.clone(), v.clone(), vec![0.7, 0.3]).is_err());
        assert!(MixedModel::from_parts(rho.clone(), v.clone(), vec![1.5, -0.5]).is_err());
        assert!(MixedModel::from_parts(rho, v, vec![0.5, 0.5]).is_ok());
    }
}
