#![allow(dead_code)]

use dmkde::pipeline::{Label, LabeledDataset};
use dmkde::QuantumFeature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> QuantumFeature<f64> {
    QuantumFeature::normalized(gaussian_vec(rng, dim)).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(1/N) sum_i psi_i psi_i^T`, accumulated entry by entry.
pub fn dense_rho(states: &[QuantumFeature<f64>]) -> Vec<Vec<f64>> {
    let d = states[0].dim();
    let n = states.len() as f64;
    let mut rho = vec![vec![0.0; d]; d];
    for s in states {
        let a = s.amplitudes();
        for i in 0..d {
            for j in 0..d {
                rho[i][j] += a[i] * a[j] / n;
            }
        }
    }
    rho
}

/// `psi^T rho psi` by explicit double sum.
pub fn quadratic_form(rho: &[Vec<f64>], psi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            acc += psi[i] * rho[i][j] * psi[j];
        }
    }
    acc
}

/// Labelled 2-D data: normals from N(0, I), outliers from N((3, 3), 0.5 I).
pub fn synthetic_dataset(seed: u64, normals: usize, outliers: usize) -> LabeledDataset {
    let mut r = rng(seed);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..normals {
        samples.push(gaussian_vec(&mut r, 2));
        labels.push(Label::Normal);
    }
    for _ in 0..outliers {
        let g = gaussian_vec(&mut r, 2);
        samples.push(vec![3.0 + 0.7 * g[0], 3.0 + 0.7 * g[1]]);
        labels.push(Label::Outlier);
    }
    LabeledDataset::new(samples, labels, None).unwrap()
}

/// AUC by comparing every (outlier, normal) pair: the outlier should have
/// the lower density; ties count one half. Returned as (numerator*2, pairs*2).
pub fn auc_pair_count(truth: &[Label], densities: &[f64]) -> (u64, u64) {
    let mut twice = 0u64;
    let mut pairs = 0u64;
    for (i, ti) in truth.iter().enumerate() {
        if *ti != Label::Outlier {
            continue;
        }
        for (j, tj) in truth.iter().enumerate() {
            if *tj != Label::Normal {
                continue;
            }
            pairs += 1;
            if densities[i] < densities[j] {
                twice += 2;
            } else if densities[i] == densities[j] {
                twice += 1;
            }
        }
    }
    (twice, 2 * pairs)
}
