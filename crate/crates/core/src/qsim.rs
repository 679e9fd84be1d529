//! Dense statevector simulation of the two expectation-value circuits.
//!
//! Basis index convention: for an `m`-qubit register, basis state `|i>` has
//! qubit `k` set iff bit `k` of `i` is set (qubit `k` carries weight `2^k`).
//! Qubit 0 is the top wire. In a `2n`-qubit register the "first half" is
//! qubits `0..n` (the low bits of the index) and the second half is qubits
//! `n..2n`, so index `i + (j << n)` is `|i>_n (x) |j>_n`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::density::{MixedModel, PureModel};
use crate::error::{Error, Result};
use crate::features::QuantumFeature;
use crate::rng::{rng_for_item, Stream};
use crate::scalar::Scalar;

/// Largest register the simulator accepts (two 12-qubit halves).
pub const MAX_QUBITS: usize = 24;

/// Normalized complex amplitudes over `2^num_qubits` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitState<T> {
    amplitudes: Vec<Complex<T>>,
    num_qubits: usize,
}

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "{n} qubits exceeds the simulator limit of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl<T: Scalar> CircuitState<T> {
    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Ok(CircuitState { amplitudes, num_qubits })
    }

    /// Wraps amplitudes whose squared magnitudes sum to 1.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "statevector length {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_qubits(num_qubits)?;
        let state = CircuitState { amplitudes, num_qubits };
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if (state.norm_sqr() - T::one()).abs() > tol {
            return Err(Error::invalid(format!(
                "statevector has squared norm {}, expected 1",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Outcome probabilities `|a_i|^2`.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self (x) high`: `self` occupies the low qubits, `high` the qubits above.
    pub fn tensor(&self, high: &CircuitState<T>) -> Result<Self> {
        check_qubits(self.num_qubits + high.num_qubits)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * high.amplitudes.len());
        for h in &high.amplitudes {
            for l in &self.amplitudes {
                amplitudes.push(l * h);
            }
        }
        Ok(CircuitState {
            amplitudes,
            num_qubits: self.num_qubits + high.num_qubits,
        })
    }

    fn half(&self) -> Result<usize> {
        if self.num_qubits % 2 != 0 {
            return Err(Error::invalid(format!(
                "expected an even qubit count, got {}",
                self.num_qubits
            )));
        }
        Ok(self.num_qubits / 2)
    }

    /// Probability distribution of measuring only the first `n` qubits of a
    /// `2n`-qubit register.
    pub fn first_half_marginal(&self) -> Result<Vec<T>> {
        let n = self.half()?;
        let low = 1usize << n;
        let mut marginal = vec![T::zero(); low];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            marginal[idx & (low - 1)] += a.norm_sqr();
        }
        Ok(marginal)
    }
}

/// Square unitary acting on `num_qubits` qubits, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryBlock<T> {
    matrix: Vec<Complex<T>>,
    num_qubits: usize,
}

impl<T: Scalar> UnitaryBlock<T> {
    pub fn identity(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut matrix = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        Ok(UnitaryBlock { matrix, num_qubits })
    }

    /// Wraps a row-major `2^n x 2^n` matrix, checking `U U^dagger = I`.
    pub fn new(matrix: Vec<Complex<T>>, num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.len(),
            });
        }
        let block = UnitaryBlock { matrix, num_qubits };
        let dev = unitarity_defect(&block.matrix, dim);
        if dev > T::lit(1e-8).max(T::epsilon() * T::lit(1e3)) {
            return Err(Error::invalid(format!("matrix is not unitary (defect {dev})")));
        }
        Ok(block)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.matrix[row * self.dim() + col]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.matrix
    }

    pub fn column(&self, col: usize) -> Vec<Complex<T>> {
        (0..self.dim()).map(|r| self.get(r, col)).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut matrix = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                matrix.push(self.matrix[c * dim + r].conj());
            }
        }
        UnitaryBlock {
            matrix,
            num_qubits: self.num_qubits,
        }
    }

    /// Max-entry deviation of `U U^dagger` from the identity.
    pub fn unitarity_defect(&self) -> T {
        unitarity_defect(&self.matrix, self.dim())
    }

    fn apply_to(&self, block: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
        let dim = self.dim();
        scratch.clear();
        for r in 0..dim {
            let row = &self.matrix[r * dim..(r + 1) * dim];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (u, a) in row.iter().zip(block.iter()) {
                acc += u * a;
            }
            scratch.push(acc);
        }
        block.copy_from_slice(scratch);
    }
}

fn unitarity_defect<T: Scalar>(m: &[Complex<T>], dim: usize) -> T {
    let mut worst = T::zero();
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..dim {
                acc += m[r * dim + k] * m[c * dim + k].conj();
            }
            let target = if r == c { T::one() } else { T::zero() };
            worst = worst.max((acc - Complex::new(target, T::zero())).norm());
        }
    }
    worst
}

/// Smallest `n` with `2^n >= dim`.
pub fn qubits_for(dim: usize) -> usize {
    dim.next_power_of_two().trailing_zeros() as usize
}

fn real_to_complex<T: Scalar>(v: &[T]) -> Vec<Complex<T>> {
    v.iter().map(|&x| Complex::new(x, T::zero())).collect()
}

/// Amplitude-encodes a real unit vector into `num_qubits` qubits.
pub fn amplitude_encode<T: Scalar>(v: &[T], num_qubits: usize) -> Result<CircuitState<T>> {
    amplitude_encode_complex(&real_to_complex(v), num_qubits)
}

/// Amplitude-encodes a complex unit vector, zero-padding to `2^num_qubits`.
/// Inputs within `1e-6` of unit norm are rescaled to unit norm.
pub fn amplitude_encode_complex<T: Scalar>(v: &[Complex<T>], num_qubits: usize) -> Result<CircuitState<T>> {
    check_qubits(num_qubits)?;
    let dim = 1usize << num_qubits;
    if v.len() > dim {
        return Err(Error::invalid(format!(
            "vector of length {} does not fit in {num_qubits} qubits",
            v.len()
        )));
    }
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        return Err(Error::invalid("cannot amplitude-encode a zero vector"));
    }
    if (norm - T::one()).abs() > T::lit(1e-6) {
        return Err(Error::invalid(format!(
            "amplitude encoding needs a unit vector, norm is {norm}"
        )));
    }
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
    for (out, a) in amplitudes.iter_mut().zip(v) {
        *out = a / norm;
    }
    Ok(CircuitState { amplitudes, num_qubits })
}

/// Unitary on `num_qubits` qubits whose first column is `phi` (zero-padded),
/// so that `U |0> = |phi>`.
///
/// Built from the Householder reflection taking `e_0` to `-phi'`, where
/// `phi'` is `phi` with the phase of its first entry removed; the first
/// column is then rotated back by that phase (and sign).
pub fn complete_unitary<T: Scalar>(phi: &[Complex<T>], num_qubits: usize) -> Result<UnitaryBlock<T>> {
    let target = amplitude_encode_complex(phi, num_qubits)?.amplitudes;
    let dim = target.len();
    let zero = Complex::new(T::zero(), T::zero());

    let first = target[0];
    let phase = if first.norm() > T::zero() {
        first / first.norm()
    } else {
        Complex::new(T::one(), T::zero())
    };
    // phi' = conj(phase) * phi has a real, non-negative first entry.
    let mut u: Vec<Complex<T>> = target.iter().map(|a| phase.conj() * a).collect();
    u[0] += Complex::new(T::one(), T::zero());
    let u_norm_sqr: T = u.iter().map(|a| a.norm_sqr()).sum();

    // H = I - 2 u u^dagger / |u|^2, then U = H diag(-phase, 1, ..., 1).
    let mut matrix = vec![zero; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut h = -(u[r] * u[c].conj()) * T::lit(2.0) / u_norm_sqr;
            if r == c {
                h += Complex::new(T::one(), T::zero());
            }
            matrix[r * dim + c] = if c == 0 { -(h * phase) } else { h };
        }
    }
    Ok(UnitaryBlock { matrix, num_qubits })
}

/// Real-vector convenience wrapper for [`complete_unitary`].
pub fn complete_unitary_real<T: Scalar>(phi: &[T], num_qubits: usize) -> Result<UnitaryBlock<T>> {
    complete_unitary(&real_to_complex(phi), num_qubits)
}

/// Places a `dim x dim` unitary (row-major) in the top-left block of a
/// `2^n x 2^n` matrix, with the identity on the remaining `2^n - dim` basis
/// states. `n` must be minimal: `2^(n-1) < dim <= 2^n`.
pub fn embed_block_unitary<T: Scalar>(vdag: &[Complex<T>], dim: usize, num_qubits: usize) -> Result<UnitaryBlock<T>> {
    check_qubits(num_qubits)?;
    if vdag.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: vdag.len(),
        });
    }
    let full = 1usize << num_qubits;
    let lower = full >> 1;
    if dim == 0 || dim <= lower || dim > full {
        return Err(Error::invalid(format!(
            "block of size {dim} needs {} qubits, not {num_qubits}",
            qubits_for(dim.max(1))
        )));
    }
    let defect = unitarity_defect(vdag, dim);
    if defect > T::lit(1e-8).max(T::epsilon() * T::lit(1e3)) {
        return Err(Error::invalid(format!("block is not unitary (defect {defect})")));
    }
    let mut matrix = vec![Complex::new(T::zero(), T::zero()); full * full];
    for r in 0..dim {
        matrix[r * full..r * full + dim].copy_from_slice(&vdag[r * dim..(r + 1) * dim]);
    }
    for i in dim..full {
        matrix[i * full + i] = Complex::new(T::one(), T::zero());
    }
    Ok(UnitaryBlock { matrix, num_qubits })
}

/// Applies `u` to the lowest `u.num_qubits()` qubits of `state`.
pub fn apply_unitary_low<T: Scalar>(state: &CircuitState<T>, u: &UnitaryBlock<T>) -> Result<CircuitState<T>> {
    if u.num_qubits() > state.num_qubits {
        return Err(Error::invalid(format!(
            "{}-qubit unitary on a {}-qubit register",
            u.num_qubits(),
            state.num_qubits
        )));
    }
    let mut out = state.clone();
    let mut scratch = Vec::with_capacity(u.dim());
    for block in out.amplitudes.chunks_mut(u.dim()) {
        u.apply_to(block, &mut scratch);
    }
    Ok(out)
}

/// Applies `U (x) I` to a `2n`-qubit register, `U` acting on qubits `0..n`.
pub fn apply_unitary_first_half<T: Scalar>(state: &CircuitState<T>, u: &UnitaryBlock<T>) -> Result<CircuitState<T>> {
    if state.num_qubits != 2 * u.num_qubits() {
        return Err(Error::invalid(format!(
            "expected a {}-qubit register for a {}-qubit block, got {}",
            2 * u.num_qubits(),
            u.num_qubits(),
            state.num_qubits
        )));
    }
    apply_unitary_low(state, u)
}

/// Single CNOT gate.
pub fn apply_cnot<T: Scalar>(state: &CircuitState<T>, control: usize, target: usize) -> Result<CircuitState<T>> {
    if control == target || control >= state.num_qubits || target >= state.num_qubits {
        return Err(Error::invalid(format!(
            "invalid CNOT control {control}, target {target} on {} qubits",
            state.num_qubits
        )));
    }
    let mut out = state.clone();
    let (cbit, tbit) = (1usize << control, 1usize << target);
    for idx in 0..out.amplitudes.len() {
        if idx & cbit != 0 && idx & tbit == 0 {
            out.amplitudes.swap(idx, idx | tbit);
        }
    }
    Ok(out)
}

/// CNOTs with control `i + n` and target `i` for `i in 0..n`, mapping
/// `|i>_n |j>_n` to `|i xor j>_n |j>_n`.
pub fn cnot_cascade<T: Scalar>(state: &CircuitState<T>) -> Result<CircuitState<T>> {
    let n = state.half()?;
    let mut out = state.clone();
    for i in 0..n {
        out = apply_cnot(&out, i + n, i)?;
    }
    Ok(out)
}

/// Probability that the first `n` qubits of a `2n`-qubit register read `|0>_n`.
pub fn prob_zero_first_half<T: Scalar>(state: &CircuitState<T>) -> Result<T> {
    let n = state.half()?;
    Ok(state.amplitudes.iter().step_by(1 << n).map(|a| a.norm_sqr()).sum())
}

/// Measurement counts from repeated shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotResult {
    pub counts: BTreeMap<usize, u64>,
    pub shots: u64,
}

impl ShotResult {
    pub fn count(&self, outcome: usize) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn frequency(&self, outcome: usize) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        self.count(outcome) as f64 / self.shots as f64
    }
}

/// Draws `shots` outcomes from `probabilities` by inverse-CDF sampling.
pub fn sample_shots<T: Scalar, R: Rng + ?Sized>(probabilities: &[T], shots: u64, rng: &mut R) -> Result<ShotResult> {
    if probabilities.is_empty() || probabilities.iter().any(|p| !(p.as_f64() >= 0.0)) {
        return Err(Error::invalid("probabilities must be non-negative"));
    }
    let mut cdf = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p.as_f64();
        cdf.push(acc);
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(Error::invalid("probabilities sum to zero"));
    }
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let outcome = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *counts.entry(outcome).or_insert(0) += 1;
    }
    Ok(ShotResult { counts, shots })
}

/// Outcome of one circuit evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRun<T> {
    /// Exact probability of reading `|0>_n` on the measured register.
    pub exact_prob: T,
    /// `count(0) / shots`, present when shots were requested.
    pub shot_estimate: Option<f64>,
    pub shots: Option<ShotResult>,
}

fn finish_run<T: Scalar>(exact_prob: T, distribution: &[T], shots: u64, seed: u64) -> Result<CircuitRun<T>> {
    if shots == 0 {
        return Ok(CircuitRun {
            exact_prob,
            shot_estimate: None,
            shots: None,
        });
    }
    let mut rng = rng_for_item(seed, Stream::Shots, 0);
    let result = sample_shots(distribution, shots, &mut rng)?;
    Ok(CircuitRun {
        exact_prob,
        shot_estimate: Some(result.frequency(0)),
        shots: Some(result),
    })
}

/// Overlap circuit for a pure model: prepare `|psi>_n`, apply `U^dagger`
/// with `U|0> = |phi>`, measure. `P(|0>_n) = |<phi|psi>|^2`.
pub fn run_pure_circuit<T: Scalar>(
    model: &PureModel<T>,
    psi: &QuantumFeature<T>,
    shots: u64,
    seed: u64,
) -> Result<CircuitRun<T>> {
    if psi.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: psi.dim(),
        });
    }
    let n = qubits_for(model.dim());
    let state = amplitude_encode(psi.amplitudes(), n)?;
    let u_dag = complete_unitary_real(model.phi().amplitudes(), n)?.adjoint();
    let out = apply_unitary_low(&state, &u_dag)?;
    let probs = out.probabilities();
    finish_run(probs[0], &probs, shots, seed)
}

/// Spectral expectation circuit for a mixed model on `2n` qubits:
/// `|psi>_n (x) |sqrt(lambda)>_n`, then the block unitary holding `V^T` on the
/// first half, then the CNOT cascade. `P(|0>_n) = <psi|rho|psi>`.
pub fn run_mixed_circuit<T: Scalar>(
    model: &MixedModel<T>,
    psi: &QuantumFeature<T>,
    shots: u64,
    seed: u64,
) -> Result<CircuitRun<T>> {
    let d = model.dim();
    if psi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi.dim(),
        });
    }
    let n = qubits_for(d);
    let sqrt_lambda: Vec<T> = model.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let state = amplitude_encode(psi.amplitudes(), n)?.tensor(&amplitude_encode(&sqrt_lambda, n)?)?;

    let v = model.eigenvectors();
    let mut vdag = Vec::with_capacity(d * d);
    for r in 0..d {
        for c in 0..d {
            vdag.push(Complex::new(v[(c, r)], T::zero()));
        }
    }
    let u_dag = embed_block_unitary(&vdag, d, n)?;
    let state = apply_unitary_first_half(&state, &u_dag)?;
    let state = cnot_cascade(&state)?;
    let exact = prob_zero_first_half(&state)?;
    let marginal = state.first_half_marginal()?;
    finish_run(exact, &marginal, shots, seed)
}

/// Runs one circuit per test state in parallel. Sample `i` draws its shots
/// from its own generator keyed by `(seed, i)`, so results do not depend on
/// scheduling.
pub fn run_circuits<T, F>(psis: &[QuantumFeature<T>], shots: u64, seed: u64, run: F) -> Result<Vec<CircuitRun<T>>>
where
    T: Scalar,
    F: Fn(&QuantumFeature<T>, u64, u64) -> Result<CircuitRun<T>> + Sync,
{
    psis.par_iter()
        .enumerate()
        .map(|(i, psi)| run(psi, shots, item_seed(seed, i as u64)))
        .collect()
}

fn item_seed(seed: u64, index: u64) -> u64 {
    rng_for_item(seed, Stream::Shots, index).random()
}

/// One step of a circuit, for debugging dumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOp {
    AmplitudeEncode {
        label: &'static str,
        qubits: (usize, usize),
        len: usize,
    },
    Unitary {
        label: &'static str,
        qubits: (usize, usize),
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Measure {
        qubits: (usize, usize),
    },
}

impl fmt::Display for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceOp::AmplitudeEncode { label, qubits, len } => {
                write!(f, "encode {label} q[{}..{}] len={len}", qubits.0, qubits.1)
            }
            TraceOp::Unitary { label, qubits } => {
                write!(f, "unitary {label} q[{}..{}]", qubits.0, qubits.1)
            }
            TraceOp::Cnot { control, target } => write!(f, "cnot c={control} t={target}"),
            TraceOp::Measure { qubits } => write!(f, "measure q[{}..{}]", qubits.0, qubits.1),
        }
    }
}

/// Operation list of a circuit. The text format (one op per line) is for
/// humans and may change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitTrace {
    pub num_qubits: usize,
    pub ops: Vec<TraceOp>,
}

impl fmt::Display for CircuitTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

pub fn pure_circuit_trace(dim: usize) -> CircuitTrace {
    let n = qubits_for(dim);
    CircuitTrace {
        num_qubits: n,
        ops: vec![
            TraceOp::AmplitudeEncode {
                label: "psi",
                qubits: (0, n),
                len: dim,
            },
            TraceOp::Unitary {
                label: "U_phi^dagger",
                qubits: (0, n),
            },
            TraceOp::Measure { qubits: (0, n) },
        ],
    }
}

pub fn mixed_circuit_trace(dim: usize) -> CircuitTrace {
    let n = qubits_for(dim);
    let mut ops = vec![
        TraceOp::AmplitudeEncode {
            label: "psi",
            qubits: (0, n),
            len: dim,
        },
        TraceOp::AmplitudeEncode {
            label: "sqrt_lambda",
            qubits: (n, 2 * n),
            len: dim,
        },
        TraceOp::Unitary {
            label: "V^dagger (+) I",
            qubits: (0, n),
        },
    ];
    ops.extend((0..n).map(|i| TraceOp::Cnot {
        control: i + n,
        target: i,
    }));
    ops.push(TraceOp::Measure { qubits: (0, n) });
    CircuitTrace { num_qubits: 2 * n, ops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{train_mixed, train_pure};
    use rand::SeedableRng;

    type C = Complex<f64>;

    fn c(re: f64) -> C {
        Complex::new(re, 0.0)
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(qubits_for(1), 0);
        assert_eq!(qubits_for(2), 1);
        assert_eq!(qubits_for(3), 2);
        assert_eq!(qubits_for(4), 2);
        assert_eq!(qubits_for(5), 3);
        assert_eq!(qubits_for(16), 4);
    }

    #[test]
    fn encode_basis_vectors() {
        let mut e0 = vec![0.0; 16];
        e0[0] = 1.0;
        assert_eq!(amplitude_encode(&e0, 4).unwrap(), CircuitState::basis(4, 0).unwrap());
        let mut e5 = vec![0.0; 16];
        e5[5] = 1.0;
        let s = amplitude_encode(&e5, 4).unwrap();
        // |5>_4: qubits 0 and 2 set.
        assert_eq!(s, CircuitState::basis(4, 0b0101).unwrap());
    }

    #[test]
    fn encode_pads_and_validates() {
        let v = [0.6, 0.0, 0.8];
        let s = amplitude_encode(&v, 2).unwrap();
        assert_eq!(s.amplitudes()[3], c(0.0));
        assert!(amplitude_encode(&v, 1).is_err());
        assert!(amplitude_encode(&[0.0, 0.0], 1).is_err());
        assert!(amplitude_encode(&[0.6, 0.7], 1).is_err());
        let nearly = [0.6f64 + 1e-8, 0.8];
        let s = amplitude_encode(&nearly, 1).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complete_unitary_of_e0_is_identity() {
        let u = complete_unitary_real(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(u, UnitaryBlock::identity(2).unwrap());
    }

    #[test]
    fn complete_unitary_complex_first_column() {
        let phi = vec![
            Complex::new(0.0, 0.6),
            Complex::new(0.48, 0.0),
            Complex::new(0.0, -0.64),
        ];
        let u = complete_unitary(&phi, 2).unwrap();
        let col = u.column(0);
        for (i, want) in phi.iter().chain(std::iter::once(&c(0.0))).enumerate() {
            assert!((col[i] - want).norm() < 1e-12);
        }
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn block_embedding() {
        let id3: Vec<C> = (0..9).map(|k| c(if k % 4 == 0 { 1.0 } else { 0.0 })).collect();
        assert_eq!(
            embed_block_unitary(&id3, 3, 2).unwrap(),
            UnitaryBlock::identity(2).unwrap()
        );
        assert!(embed_block_unitary(&id3, 3, 3).is_err());
        assert!(embed_block_unitary(&id3, 3, 1).is_err());
        let not_unitary: Vec<C> = (0..9).map(|k| c(k as f64)).collect();
        assert!(embed_block_unitary(&not_unitary, 3, 2).is_err());
    }

    #[test]
    fn full_block_is_unchanged() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = vec![c(h), c(h), c(h), c(-h)];
        let u = embed_block_unitary(&m, 2, 1).unwrap();
        assert_eq!(u.as_slice(), m.as_slice());
    }

    #[test]
    fn first_half_needs_matching_register() {
        let s = CircuitState::<f64>::basis(3, 0).unwrap();
        let u = UnitaryBlock::identity(1).unwrap();
        assert!(apply_unitary_first_half(&s, &u).is_err());
        assert!(cnot_cascade(&s).is_err());
        assert!(prob_zero_first_half(&s).is_err());
    }

    #[test]
    fn cascade_on_basis_states() {
        let n = 2;
        for i in 0..4 {
            for j in 0..4 {
                let s = CircuitState::<f64>::basis(2 * n, i + (j << n)).unwrap();
                let out = cnot_cascade(&s).unwrap();
                let want = CircuitState::basis(2 * n, (i ^ j) + (j << n)).unwrap();
                assert_eq!(out, want);
                let p0 = prob_zero_first_half(&out).unwrap();
                assert_eq!(p0, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn cnot_rejects_bad_wires() {
        let s = CircuitState::<f64>::basis(2, 0).unwrap();
        assert!(apply_cnot(&s, 0, 0).is_err());
        assert!(apply_cnot(&s, 0, 2).is_err());
    }

    #[test]
    fn shot_sampling_respects_support() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let r = sample_shots(&[0.0, 0.25, 0.0, 0.75], 4000, &mut rng).unwrap();
        assert_eq!(r.counts.values().sum::<u64>(), 4000);
        assert_eq!(r.count(0) + r.count(2), 0);
        assert!((r.frequency(1) - 0.25).abs() < 0.03);
        assert!(sample_shots::<f64, _>(&[0.0, 0.0], 10, &mut rng).is_err());
    }

    #[test]
    fn pure_and_mixed_self_overlap() {
        let psi = QuantumFeature::normalized(vec![0.2f64, -0.5, 0.1, 0.7, 0.3]).unwrap();
        let pure = train_pure(&[psi.clone()]).unwrap();
        let run = run_pure_circuit(&pure, &psi, 0, 0).unwrap();
        assert!((run.exact_prob - 1.0).abs() < 1e-12);
        assert!(run.shot_estimate.is_none());
        let mixed = train_mixed(&[psi.clone()]).unwrap();
        let run = run_mixed_circuit(&mixed, &psi, 100, 3).unwrap();
        assert!((run.exact_prob - 1.0).abs() < 1e-12);
        assert_eq!(run.shot_estimate, Some(1.0));
    }

    #[test]
    fn shot_runs_are_seeded() {
        let psi = QuantumFeature::normalized(vec![0.2, -0.5, 0.1, 0.7]).unwrap();
        let phi = QuantumFeature::normalized(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let model = train_pure(&[phi]).unwrap();
        let a = run_pure_circuit(&model, &psi, 1000, 9).unwrap();
        let b = run_pure_circuit(&model, &psi, 1000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn traces_list_every_gate() {
        let t = mixed_circuit_trace(5);
        assert_eq!(t.num_qubits, 6);
        let text = t.to_string();
        assert!(text.contains("cnot c=3 t=0") && text.contains("cnot c=5 t=2"));
        assert_eq!(pure_circuit_trace(4).ops.len(), 3);
    }
}
