//! Test-only oracles. Everything here builds the data covariance
//! `C = β⁻¹I + Σ Φ_i A_i Φ_iᵀ` densely and works from it, independently of the
//! solver's maintained statistics.

#![allow(dead_code)]

use bsbl::bsbl_fm::SolverState;
use bsbl::dictionary::{dct_dictionary, effective_operator};
use bsbl::sensing::SparseBinaryMatrix;
use bsbl::signal_model::BlockPartition;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    let scale = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
}

/// AR(1) sequence with unit marginal variance.
pub fn ar1_sequence(rng: &mut ChaCha8Rng, len: usize, r: f64) -> Vec<f64> {
    let innov = (1.0 - r * r).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut prev: f64 = rng.sample(StandardNormal);
    out.push(prev);
    for _ in 1..len {
        prev = r * prev + innov * rng.sample::<f64, _>(StandardNormal);
        out.push(prev);
    }
    out
}

/// Block-sparse vector with `active` distinct blocks (chosen at random)
/// filled with AR(`r`) samples. Returns the vector and the sorted block ids.
pub fn block_sparse(
    rng: &mut ChaCha8Rng,
    partition: &BlockPartition,
    active: usize,
    r: f64,
) -> (Vec<f64>, Vec<usize>) {
    let mut ids = rand::seq::index::sample(rng, partition.len(), active).into_vec();
    ids.sort_unstable();
    let mut x = vec![0.0; partition.n()];
    for &b in &ids {
        let range = partition.range(b);
        let vals = ar1_sequence(rng, range.len(), r);
        x[range].copy_from_slice(&vals);
    }
    (x, ids)
}

/// Sparse binary `Φ` composed with the orthonormal DCT.
pub fn dct_operator(m: usize, n: usize, k: usize, seed: u64) -> (SparseBinaryMatrix, DMatrix<f64>) {
    let phi = SparseBinaryMatrix::generate(m, n, k, seed).unwrap();
    let d = dct_dictionary(n).unwrap();
    let op = effective_operator(&phi, &d).unwrap();
    (phi, op)
}

pub fn covariance(
    op: &DMatrix<f64>,
    beta_inv: f64,
    partition: &BlockPartition,
    priors: &[(usize, DMatrix<f64>)],
) -> DMatrix<f64> {
    let m = op.nrows();
    let mut c = DMatrix::identity(m, m) * beta_inv;
    for (block, a) in priors {
        let r = partition.range(*block);
        let phi_i = op.columns(r.start, r.len());
        c += phi_i * a * phi_i.transpose();
    }
    c
}

pub fn state_priors(state: &SolverState) -> Vec<(usize, DMatrix<f64>)> {
    state
        .blocks()
        .iter()
        .filter(|b| b.active)
        .map(|b| (b.index, b.a.clone()))
        .collect()
}

/// `log|C| + yᵀC⁻¹y`.
pub fn dense_cost(c: &DMatrix<f64>, y: &[f64]) -> f64 {
    let chol = c.clone().cholesky().expect("C is SPD");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let y = DVector::from_column_slice(y);
    logdet + y.dot(&chol.solve(&y))
}

pub fn state_cost_oracle(state: &SolverState, op: &DMatrix<f64>, y: &[f64]) -> f64 {
    let c = covariance(op, state.config().beta_inv, state.partition(), &state_priors(state));
    dense_cost(&c, y)
}

/// `(Φ_iᵀC⁻¹Φ_i, Φ_iᵀC⁻¹y)` for an explicit covariance.
pub fn block_stats(
    c: &DMatrix<f64>,
    op: &DMatrix<f64>,
    y: &[f64],
    partition: &BlockPartition,
    block: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let c_inv = c.clone().try_inverse().expect("C invertible");
    let r = partition.range(block);
    let phi_i = op.columns(r.start, r.len()).into_owned();
    let y = DVector::from_column_slice(y);
    (phi_i.transpose() * &c_inv * &phi_i, phi_i.transpose() * &c_inv * y)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn max_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.abs().max().max(b.abs().max()).max(1e-300);
    (a - b).abs().max() / scale
}

pub fn max_rel_err_v(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.amax().max(b.amax()).max(1e-300);
    (a - b).amax() / scale
}
