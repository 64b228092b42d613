//! Synthesis dictionaries `x = Dθ` and the effective operator `Φ·D`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::sensing::SparseBinaryMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryKind {
    /// Orthonormal DCT-II synthesis basis.
    Dct,
    /// Identity; recovery happens directly in the time domain.
    Identity,
}

/// Square orthonormal synthesis matrix whose columns are the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    kind: DictionaryKind,
    matrix: DMatrix<f64>,
}

impl Dictionary {
    pub fn new(kind: DictionaryKind, n: usize) -> Result<Self> {
        match kind {
            DictionaryKind::Dct => dct_dictionary(n),
            DictionaryKind::Identity => {
                if n == 0 {
                    return Err(Error::InvalidParameter("dictionary dimension must be >= 1".into()));
                }
                Ok(Dictionary {
                    kind,
                    matrix: DMatrix::identity(n, n),
                })
            }
        }
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `x = Dθ`.
    pub fn synthesize(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.matrix * theta
    }

    /// `θ = Dᵀx`.
    pub fn analyze(&self, x: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(x)
    }
}

/// Orthonormal inverse DCT-II: column `k` is
/// `c_k · cos(π(2j + 1)k / 2n)` over `j`, with `c_0 = √(1/n)` and `c_k = √(2/n)`.
pub fn dct_dictionary(n: usize) -> Result<Dictionary> {
    if n == 0 {
        return Err(Error::InvalidParameter("dictionary dimension must be >= 1".into()));
    }
    let nf = n as f64;
    let matrix = DMatrix::from_fn(n, n, |j, k| {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        scale * (PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    });
    Ok(Dictionary {
        kind: DictionaryKind::Dct,
        matrix,
    })
}

/// Dense `Φ·D`. Row `r` is the sum of the rows of `D` whose column in `Φ`
/// has a one at row `r`.
pub fn effective_operator(phi: &SparseBinaryMatrix, dict: &Dictionary) -> Result<DMatrix<f64>> {
    if phi.n() != dict.n() {
        return Err(Error::Dimension {
            context: "effective_operator",
            expected: phi.n(),
            actual: dict.n(),
        });
    }
    let d = dict.matrix();
    let mut op = DMatrix::zeros(phi.m(), d.ncols());
    for (i, rows) in phi.columns().iter().enumerate() {
        for &r in rows {
            let mut target = op.row_mut(r);
            target += d.row(i);
        }
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_one_is_identity() {
        let d = dct_dictionary(1).unwrap();
        assert_eq!(d.matrix(), &DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn dc_atom_is_constant() {
        let d = dct_dictionary(8).unwrap();
        let mut theta = DVector::zeros(8);
        theta[0] = 1.0;
        let x = d.synthesize(&theta);
        for v in x.iter() {
            assert!((v - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn orthonormal() {
        for n in [2, 8, 33, 128] {
            let d = dct_dictionary(n).unwrap();
            let gram = d.matrix().tr_mul(d.matrix());
            let err = (&gram - DMatrix::identity(n, n)).abs().max();
            assert!(err < 1e-10, "n={n} err={err}");
        }
        let d = dct_dictionary(8).unwrap();
        let theta = DVector::from_fn(8, |i, _| (i as f64 * 1.3).cos() - 0.2);
        let x = d.synthesize(&theta);
        assert!((x.norm() - theta.norm()).abs() < 1e-12);
        assert!((d.analyze(&x) - &theta).abs().max() < 1e-10);
    }

    #[test]
    fn identity_like_phi_returns_dictionary() {
        let cols = (0..6).map(|i| vec![i]).collect();
        let phi = SparseBinaryMatrix::from_columns(6, cols).unwrap();
        let d = dct_dictionary(6).unwrap();
        assert_eq!(&effective_operator(&phi, &d).unwrap(), d.matrix());
    }

    #[test]
    fn identity_dictionary_returns_dense_phi() {
        let phi = SparseBinaryMatrix::generate(8, 16, 2, 4).unwrap();
        let d = Dictionary::new(DictionaryKind::Identity, 16).unwrap();
        assert_eq!(effective_operator(&phi, &d).unwrap(), phi.to_dense());
    }

    #[test]
    fn matches_dense_product() {
        let phi = SparseBinaryMatrix::generate(8, 16, 2, 77).unwrap();
        let d = dct_dictionary(16).unwrap();
        let op = effective_operator(&phi, &d).unwrap();
        let want = phi.to_dense() * d.matrix();
        assert!((&op - &want).abs().max() < 1e-14);
        // Both evaluation orders of Φ·D·θ agree.
        let theta = DVector::from_fn(16, |i, _| ((i * i) as f64 * 0.11).sin());
        let via_op = &op * &theta;
        let via_stream = phi.encode_stream(d.synthesize(&theta).as_slice()).unwrap();
        for (a, b) in via_op.iter().zip(&via_stream) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let phi = SparseBinaryMatrix::generate(8, 16, 2, 4).unwrap();
        let d = dct_dictionary(15).unwrap();
        assert!(effective_operator(&phi, &d).is_err());
    }
}
