mod common;

use common::*;
use dmkde::features::AffTrainConfig;
use dmkde::pipeline::{auc_from_densities, select_threshold, split_indices, Label, LabeledDataset, SplitSpec};
use dmkde::qsim::{
    amplitude_encode, apply_unitary_first_half, cnot_cascade, complete_unitary_real, prob_zero_first_half,
    run_mixed_circuit, sample_shots,
};
use dmkde::{embed, sample_rff, train_aff, train_mixed, CircuitState, DensityModel, EstimatorConfig};
use num_complex::Complex;
use proptest::prelude::*;

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, len)
}

fn state_from(mut v: Vec<f64>, num_qubits: usize) -> CircuitState<f64> {
    // Keeps the vector away from zero.
    v[0] += 1.0;
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let amps = v.iter().map(|x| Complex::new(x / n, 0.0)).collect();
    let s = CircuitState::from_amplitudes(amps).unwrap();
    assert_eq!(s.num_qubits(), num_qubits);
    s
}

fn nonzero_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn embedding_is_unit_norm(x in finite_vec(3), d in 1usize..40, seed in any::<u64>(), g in 1e-4f64..10.0) {
        let params = sample_rff(3, d, g, seed).unwrap();
        let psi = embed(&params, &x).unwrap();
        let norm: f64 = psi.amplitudes().iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_expectation_matches_mean_overlap(seed in any::<u64>(), d in 2usize..12, n in 1usize..20) {
        let mut r = rng(seed);
        let train: Vec<_> = (0..n).map(|_| random_state(&mut r, d)).collect();
        let psi = random_state(&mut r, d);
        let model = train_mixed(&train).unwrap();
        let mean_overlap: f64 = train.iter().map(|t| dot(t.amplitudes(), psi.amplitudes()).powi(2)).sum::<f64>() / n as f64;
        let spectral = model.expectation_spectral(&psi).unwrap();
        let direct = model.expectation_direct(&psi).unwrap();
        prop_assert!((spectral - mean_overlap).abs() < 1e-9);
        prop_assert!((direct - mean_overlap).abs() < 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&spectral));
        let est = DensityModel::Mixed(model).estimate(&psi, &EstimatorConfig::unnormalized()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&est));
    }

    #[test]
    fn cascade_is_an_involution(n in 1usize..4, v in nonzero_vec(64)) {
        let len = 1 << (2 * n);
        let s = state_from(v[..len].to_vec(), 2 * n);
        let twice = cnot_cascade(&cnot_cascade(&s).unwrap()).unwrap();
        for (a, b) in twice.amplitudes().iter().zip(s.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn cascade_maps_basis_to_xor(n in 1usize..4, i in 0usize..8, j in 0usize..8) {
        let half = 1 << n;
        let (i, j) = (i % half, j % half);
        let s = CircuitState::<f64>::basis(2 * n, i + (j << n)).unwrap();
        let out = cnot_cascade(&s).unwrap();
        prop_assert_eq!(out.amplitudes()[(i ^ j) + (j << n)], Complex::new(1.0, 0.0));
    }

    #[test]
    fn first_half_unitary_matches_kronecker(n in 1usize..4, v in nonzero_vec(64), phi in nonzero_vec(8)) {
        let half = 1 << n;
        let phi = &phi[..half];
        let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let phi: Vec<f64> = phi.iter().map(|x| x / norm).collect();
        let state = state_from(v[..half * half].to_vec(), 2 * n);
        let u = complete_unitary_real(&phi, n).unwrap();
        let out = apply_unitary_first_half(&state, &u).unwrap();
        // Dense (I (x) U) with the first register on the low bits.
        let dim = half * half;
        let mut full = vec![Complex::new(0.0, 0.0); dim * dim];
        for hi in 0..half {
            for r in 0..half {
                for c in 0..half {
                    full[(r + (hi << n)) * dim + c + (hi << n)] = u.get(r, c);
                }
            }
        }
        for row in 0..dim {
            let expect: Complex<f64> = (0..dim).map(|c| full[row * dim + c] * state.amplitudes()[c]).sum();
            prop_assert!((out.amplitudes()[row] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn prob_zero_matches_enumeration(n in 1usize..4, v in nonzero_vec(64)) {
        let half = 1 << n;
        let s = state_from(v[..half * half].to_vec(), 2 * n);
        let mut expect = 0.0;
        for idx in 0..half * half {
            if idx % half == 0 {
                expect += s.amplitudes()[idx].norm_sqr();
            }
        }
        prop_assert!((prob_zero_first_half(&s).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn threshold_counts(values in prop::collection::vec(0.0f64..1.0, 2..200), rate in 0.01f64..0.99) {
        let t = select_threshold(&values, rate).unwrap();
        let below = values.iter().filter(|&&v| v < t).count();
        let at_most = values.iter().filter(|&&v| v <= t).count();
        let pos = (rate * (values.len() - 1) as f64).floor() as usize;
        prop_assert!(below <= pos + 1);
        prop_assert!(at_most >= pos + 1);
    }

    #[test]
    fn auc_equals_pair_counting(
        raw in prop::collection::vec((0u8..6, any::<bool>()), 2..60),
    ) {
        let truth: Vec<Label> = raw.iter().map(|&(_, o)| if o { Label::Outlier } else { Label::Normal }).collect();
        prop_assume!(truth.contains(&Label::Outlier) && truth.contains(&Label::Normal));
        let dens: Vec<f64> = raw.iter().map(|&(v, _)| v as f64 / 5.0).collect();
        let (num, den) = auc_pair_count(&truth, &dens);
        prop_assert_eq!(auc_from_densities(&truth, &dens).unwrap(), num as f64 / den as f64);
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps(
        raw in prop::collection::vec((0.0f64..3.0, any::<bool>()), 2..60),
    ) {
        let truth: Vec<Label> = raw.iter().map(|&(_, o)| if o { Label::Outlier } else { Label::Normal }).collect();
        prop_assume!(truth.contains(&Label::Outlier) && truth.contains(&Label::Normal));
        let dens: Vec<f64> = raw.iter().map(|&(v, _)| v).collect();
        let mapped: Vec<f64> = dens.iter().map(|v| v.exp() + v * v * v).collect();
        prop_assert_eq!(auc_from_densities(&truth, &dens).unwrap(), auc_from_densities(&truth, &mapped).unwrap());
    }

    #[test]
    fn split_partitions_cover_and_keep_fractions(normals in 20usize..300, outliers in 5usize..40, seed in any::<u64>()) {
        let labels: Vec<Label> = (0..normals + outliers).map(|i| if i < normals { Label::Normal } else { Label::Outlier }).collect();
        let samples = (0..labels.len()).map(|i| vec![i as f64]).collect();
        let ds = LabeledDataset::new(samples, labels, None).unwrap();
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let idx = split_indices(&ds, &spec).unwrap();
        let mut all: Vec<usize> = idx.train.iter().chain(&idx.val).chain(&idx.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        let n = ds.len() as f64;
        prop_assert!((idx.train.len() as f64 - 0.6 * n).abs() <= 2.0);
        prop_assert!((idx.val.len() as f64 - 0.2 * n).abs() <= 2.0);
        let out_train = idx.train.iter().filter(|&&i| i >= normals).count() as f64;
        prop_assert!((out_train - 0.6 * outliers as f64).abs() <= 1.0);
    }
}

#[test]
fn shot_noise_scales_with_inverse_sqrt_shots() {
    let probs = [0.3, 0.7];
    let spread = |shots: u64| {
        let est: Vec<f64> = (0..400)
            .map(|s| sample_shots(&probs, shots, &mut rng(s)).unwrap().frequency(0))
            .collect();
        let m = est.iter().sum::<f64>() / est.len() as f64;
        (est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / est.len() as f64).sqrt()
    };
    let (a, b) = (spread(256), spread(4096));
    let ratio = a / b;
    assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    let theory = (0.3f64 * 0.7 / 4096.0).sqrt();
    assert!((b / theory - 1.0).abs() < 0.15, "{b} vs {theory}");
}

#[test]
fn mixed_circuit_shots_are_reproducible() {
    let mut r = rng(5);
    let train: Vec<_> = (0..6).map(|_| random_state(&mut r, 5)).collect();
    let model = train_mixed(&train).unwrap();
    let psi = random_state(&mut r, 5);
    let a = run_mixed_circuit(&model, &psi, 1000, 9).unwrap();
    let b = run_mixed_circuit(&model, &psi, 1000, 9).unwrap();
    assert_eq!(a, b);
    assert!(amplitude_encode(psi.amplitudes(), 3).is_ok());
}

#[test]
fn aff_training_halves_loss_on_one_dimensional_mixture() {
    let mut r = rng(11);
    let samples: Vec<Vec<f64>> = (0..400)
        .map(|i| {
            let g: f64 = gaussian_vec(&mut r, 1)[0];
            vec![if i % 2 == 0 { -2.0 + g } else { 2.0 + g }]
        })
        .collect();
    let cfg = AffTrainConfig {
        dim_features: 8,
        gamma: 1.0,
        gamma_s: 0.5,
        epochs: 30,
        learning_rate: 0.01,
        ..AffTrainConfig::default()
    };
    let trained = train_aff(&samples, &cfg).unwrap();
    assert!(
        trained.best_loss() <= 0.5 * trained.initial_loss(),
        "{} -> {}",
        trained.initial_loss(),
        trained.best_loss()
    );
}

#[test]
fn single_and_double_precision_agree() {
    let p64 = sample_rff::<f64>(3, 16, 0.5, 4).unwrap();
    let p32 = sample_rff::<f32>(3, 16, 0.5, 4).unwrap();
    let x64 = [0.3, -1.2, 0.7];
    let x32 = [0.3f32, -1.2, 0.7];
    let a = embed(&p64, &x64).unwrap();
    let b = embed(&p32, &x32).unwrap();
    for (u, v) in a.amplitudes().iter().zip(b.amplitudes()) {
        assert!((u - *v as f64).abs() < 1e-4);
    }
}

#[test]
fn models_are_shareable_across_threads() {
    fn check<T: Send + Sync>() {}
    check::<DensityModel<f64>>();
    check::<dmkde::FourierParams<f32>>();
    check::<CircuitState<f64>>();
}
