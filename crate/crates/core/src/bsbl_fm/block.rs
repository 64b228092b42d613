//! Per-block kernels of the fast marginalized update.
//!
//! With `C₋ᵢ` the data covariance without block `i`, the cost splits as
//! `ℒ = ℒ(−i) + ℒ(i)` where
//!
//! ```text
//! ℒ(i) = log|I + A·s| − qᵀ(A⁻¹ + s)⁻¹q,   s = Φᵢᵀ C₋ᵢ⁻¹ Φᵢ,   q = Φᵢᵀ C₋ᵢ⁻¹ y
//! ```
//!
//! Everything here works on one block's `d × d` quantities and is independent
//! of the solver state.

use nalgebra::{DMatrix, DVector};

use super::config::CorrelationModel;
use crate::linalg::{chol_logdet, cholesky, is_zero, psd_factor, symmetrize};
use crate::{Error, Result};

/// Maps the statistics measured against the full `C` to the ones measured
/// against `C₋ᵢ`: `s = (I − S·A)⁻¹S`, `q = (I − S·A)⁻¹Q`.
pub fn exclude_block(
    big_s: &DMatrix<f64>,
    big_q: &DVector<f64>,
    a: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if is_zero(a) {
        return Ok((big_s.clone(), big_q.clone()));
    }
    let d = a.nrows();
    let lu = (DMatrix::identity(d, d) - big_s * a).lu();
    let mut s = lu
        .solve(big_s)
        .ok_or_else(|| Error::degenerate(None, "I - S·A is singular"))?;
    let q = lu
        .solve(big_q)
        .ok_or_else(|| Error::degenerate(None, "I - S·A is singular"))?;
    symmetrize(&mut s);
    Ok((s, q))
}

/// Stationary point of `ℒ(i)`: `s⁻¹(qqᵀ − s)s⁻¹`, symmetrized.
pub fn candidate_update(s: &DMatrix<f64>, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let chol = cholesky(s).ok_or_else(|| Error::degenerate(None, "s is not positive definite"))?;
    let s_inv_q = chol.solve(q);
    let mut a = &s_inv_q * s_inv_q.transpose() - chol.inverse();
    symmetrize(&mut a);
    if a.iter().all(|v| v.is_finite()) {
        Ok(a)
    } else {
        Err(Error::degenerate(None, "candidate has non-finite entries"))
    }
}

/// Splits `A = γ·B` with `γ = ‖A‖_F` and `‖B‖_F = 1`. A zero matrix maps
/// to `γ = 0` and the normalized identity.
pub fn factorize(a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let gamma = a.norm();
    if gamma > 0.0 && gamma.is_finite() {
        (gamma, a / gamma)
    } else {
        (0.0, normalized_identity(a.nrows()))
    }
}

pub fn normalized_identity(d: usize) -> DMatrix<f64> {
    DMatrix::identity(d, d) / (d as f64).sqrt()
}

/// Symmetric Toeplitz matrix with first row `[1, r, …, r^{d−1}]`.
pub fn ar1_toeplitz(r: f64, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| r.powi(i.abs_diff(j) as i32))
}

/// Replaces a raw structure estimate by the model's structure matrix,
/// scaled to unit Frobenius norm. `shared_r` is clamped into `[−r_clamp, r_clamp]`.
pub fn regularize(
    b_raw: &DMatrix<f64>,
    model: CorrelationModel,
    shared_r: f64,
    r_clamp: f64,
) -> DMatrix<f64> {
    let d = b_raw.nrows();
    match model {
        CorrelationModel::Sim => normalized_identity(d),
        CorrelationModel::Ar1 => {
            let r = clamp_r(shared_r, r_clamp);
            let t = ar1_toeplitz(r, d);
            let norm = t.norm();
            t / norm
        }
    }
}

fn clamp_r(r: f64, r_clamp: f64) -> f64 {
    if r.is_nan() {
        0.0
    } else {
        r.clamp(-r_clamp, r_clamp)
    }
}

/// Lag-one correlation of a structure estimate: mean of the first
/// super-diagonal over mean of the main diagonal. `None` when the diagonal
/// mean is not positive.
pub fn block_r(b: &DMatrix<f64>) -> Option<f64> {
    let d = b.nrows();
    let diag = b.diagonal().mean();
    if !(diag > 0.0) {
        return None;
    }
    if d < 2 {
        return Some(0.0);
    }
    let sup = (0..d - 1).map(|i| b[(i, i + 1)]).sum::<f64>() / (d - 1) as f64;
    Some(sup / diag)
}

/// Shared AR coefficient: the average of the clamped per-block estimates.
/// Matrices with a non-positive diagonal mean carry no usable estimate and
/// are skipped; with nothing left the result is 0.
pub fn estimate_r<'a>(bs: impl IntoIterator<Item = &'a DMatrix<f64>>, r_clamp: f64) -> f64 {
    let (sum, count) = bs
        .into_iter()
        .filter_map(block_r)
        .fold((0.0, 0usize), |(s, c), r| (s + clamp_r(r, r_clamp), c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// `ℒ(i)` for a PSD `A`, in the inverse-free form. With `A = L·Lᵀ`:
/// `log|I + Lᵀ s L| − (Lᵀq)ᵀ(I + Lᵀ s L)⁻¹(Lᵀq)`. `ℒ(0) = 0` exactly.
pub fn block_cost(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DVector<f64>) -> Result<f64> {
    if is_zero(a) {
        return Ok(0.0);
    }
    let l = psd_factor(a).ok_or_else(|| Error::degenerate(None, "A is not positive semidefinite"))?;
    let d = a.nrows();
    let mut m = DMatrix::identity(d, d) + l.tr_mul(&(s * &l));
    symmetrize(&mut m);
    let chol = cholesky(&m).ok_or_else(|| Error::degenerate(None, "I + A·s is not positive definite"))?;
    let w = l.tr_mul(q);
    let quad = w.dot(&chol.solve(&w));
    let cost = chol_logdet(&chol) - quad;
    if cost.is_finite() {
        Ok(cost)
    } else {
        Err(Error::degenerate(None, "block cost is not finite"))
    }
}
