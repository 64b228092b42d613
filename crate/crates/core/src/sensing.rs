//! Sparse binary sensing matrices and the on-the-fly encoder.
//!
//! A matrix is fully determined by `(m, n, k, seed)`: each column holds `k`
//! ones at distinct rows drawn uniformly without replacement. The receiver
//! regenerates `Φ` from those four numbers, so matrices are never shipped.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// `m × n` binary matrix with exactly `k` ones per column, stored as row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    /// `cols[i]` holds the sorted rows of the ones in column `i`.
    cols: Vec<Vec<usize>>,
}

impl SparseBinaryMatrix {
    /// Draws a matrix from a ChaCha8 stream seeded with `seed`.
    pub fn generate(m: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > m {
            return Err(Error::InvalidParameter(format!(
                "ones per column k={k} must satisfy 1 <= k <= m={m}"
            )));
        }
        if m >= n {
            return Err(Error::InvalidParameter(format!(
                "sensing matrix must be compressive (m={m} < n={n})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..n)
            .map(|_| {
                let mut rows = index::sample(&mut rng, m, k).into_vec();
                rows.sort_unstable();
                rows
            })
            .collect();
        Ok(SparseBinaryMatrix { m, n, k, seed, cols })
    }

    /// Builds a matrix from explicit column supports. Used for hand-made
    /// operators in tests and for square identity-like layouts, so `m < n`
    /// is not enforced here.
    pub fn from_columns(m: usize, cols: Vec<Vec<usize>>) -> Result<Self> {
        let k = cols.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::InvalidParameter("columns must be non-empty".into()));
        }
        let mut sorted = Vec::with_capacity(cols.len());
        for (i, mut rows) in cols.into_iter().enumerate() {
            rows.sort_unstable();
            if rows.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "column {i} has {} ones, expected {k}",
                    rows.len()
                )));
            }
            if rows.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!("column {i} repeats a row")));
            }
            if rows.last().is_some_and(|&r| r >= m) {
                return Err(Error::InvalidParameter(format!("column {i} has a row >= m={m}")));
            }
            sorted.push(rows);
        }
        Ok(SparseBinaryMatrix {
            m,
            n: sorted.len(),
            k,
            seed: 0,
            cols: sorted,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.cols[i]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.m, self.n);
        for (j, rows) in self.cols.iter().enumerate() {
            for &r in rows {
                dense[(r, j)] = 1.0;
            }
        }
        dense
    }

    /// Streaming encoder: `y ← 0`, then for each sample `x_i` in order add it
    /// into the `k` rows flagged in column `i`. Only additions are performed.
    pub fn encode_stream(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                context: "encode_stream",
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.m];
        for (rows, &xi) in self.cols.iter().zip(x) {
            for &r in rows {
                y[r] += xi;
            }
        }
        Ok(y)
    }

    /// Encodes one packet into a [`Measurement`] tagged with its sequence number.
    pub fn encode(&self, x: &[f64], packet_index: usize) -> Result<Measurement> {
        Ok(Measurement {
            values: self.encode_stream(x)?,
            packet_index,
        })
    }
}

/// Compressed measurements `y = Φx` of one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub values: Vec<f64>,
    pub packet_index: usize,
}

/// `CR = (n − m) / n`.
pub fn compression_ratio(n: usize, m: usize) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "measurement count m={m} must satisfy 0 < m <= n={n}"
        )));
    }
    Ok((n - m) as f64 / n as f64)
}

/// Measurement count for a requested compression ratio, `round(n·(1 − cr))`.
/// The achieved ratio is [`compression_ratio`] of the result.
pub fn measurements_for_cr(n: usize, cr: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&cr) {
        return Err(Error::InvalidParameter(format!("compression ratio {cr} not in [0, 1)")));
    }
    let m = (n as f64 * (1.0 - cr)).round() as usize;
    if m == 0 {
        return Err(Error::InvalidParameter(format!(
            "compression ratio {cr} leaves no measurements for n={n}"
        )));
    }
    Ok(m.min(n))
}
