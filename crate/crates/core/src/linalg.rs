use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v == 0.0)
}

pub(crate) fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if !m.iter().all(|v| v.is_finite()) {
        return None;
    }
    m.clone().cholesky()
}

pub(crate) fn chol_logdet(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `L` with `A = L·Lᵀ` for symmetric PSD `A`. Cholesky when `A` is definite,
/// otherwise `V·sqrt(max(λ, 0))` from the eigendecomposition.
pub(crate) fn psd_factor(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(c) = cholesky(a) {
        return Some(c.l());
    }
    if !a.iter().all(|v| v.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.min() < -1e-10 * scale {
        return None;
    }
    let mut l = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        l.column_mut(j).scale_mut(root);
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_factor_handles_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = psd_factor(&a).unwrap();
        assert!((&l * l.transpose() - &a).abs().max() < 1e-12);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_factor(&neg).is_none());
    }
}
