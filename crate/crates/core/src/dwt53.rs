//! Integer CDF 5/3 lifting wavelet compressor with threshold testing.
//!
//! Index mapping: the predict step targets the odd 0-based positions
//! `x[2i+1]` (even positions in 1-based numbering), the update step the even
//! 0-based positions `x[2i]`. For each stage:
//!
//! ```text
//! h[i] = x[2i+1] + ⌊−(x[2i] + x[2i+2]) / 2⌋
//! l[i] = x[2i]   + ⌊(h[i−1] + h[i]) / 4 + 1/2⌋
//! ```
//!
//! Boundaries use whole-sample symmetric extension: `x[n] = x[n−2]` and
//! `h[−1] = h[0]`. Both steps are integer-exact, so the inverse undoes them
//! bit for bit.

use crate::{Error, Result};

/// Multi-stage decomposition. `bands[0]` is the coarsest low band, followed
/// by the high bands from the deepest stage to the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftingCoefficients {
    stages: usize,
    bands: Vec<Vec<i64>>,
}

impl LiftingCoefficients {
    pub fn new(stages: usize, bands: Vec<Vec<i64>>) -> Result<Self> {
        let c = LiftingCoefficients { stages, bands };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.bands.len() != self.stages + 1 {
            return Err(Error::Format(format!(
                "{} stages need {} bands, found {}",
                self.stages,
                self.stages + 1,
                self.bands.len()
            )));
        }
        let base = self.bands[0].len();
        if base == 0 {
            return Err(Error::Format("empty low band".into()));
        }
        for (j, band) in self.bands.iter().enumerate().skip(1) {
            let want = base << (j - 1);
            if band.len() != want {
                return Err(Error::Format(format!(
                    "band {j} has {} coefficients, expected {want}",
                    band.len()
                )));
            }
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn bands(&self) -> &[Vec<i64>] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn band_sizes(&self) -> Vec<usize> {
        self.bands.iter().map(Vec::len).collect()
    }

    /// Band-major flattening; locations in a [`ThresholdedStream`] index this.
    pub fn flatten(&self) -> Vec<i64> {
        self.bands.concat()
    }

    /// Inverse of [`flatten`](Self::flatten) for a signal of length `n`.
    pub fn from_flat(n: usize, stages: usize, flat: &[i64]) -> Result<Self> {
        check_shape(n, stages)?;
        if flat.len() != n {
            return Err(Error::Dimension {
                context: "flattened coefficients",
                expected: n,
                actual: flat.len(),
            });
        }
        let sizes = band_sizes(n, stages);
        let mut bands = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for size in sizes {
            bands.push(flat[off..off + size].to_vec());
            off += size;
        }
        LiftingCoefficients::new(stages, bands)
    }
}

/// Band sizes of an `n`-sample signal after `stages` stages.
pub fn band_sizes(n: usize, stages: usize) -> Vec<usize> {
    let base = n >> stages;
    std::iter::once(base)
        .chain((0..stages).map(|s| base << s))
        .collect()
}

fn check_shape(n: usize, stages: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("signal must be non-empty".into()));
    }
    if stages >= usize::BITS as usize || !n.is_multiple_of(1usize << stages) {
        return Err(Error::InvalidParameter(format!(
            "length {n} is not divisible by 2^{stages}"
        )));
    }
    Ok(())
}

/// One analysis stage: `(low, high)`, each of half the input length.
pub fn forward_stage(x: &[i64]) -> Result<(Vec<i64>, Vec<i64>)> {
    let n = x.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "lifting stage needs an even length >= 2, got {n}"
        )));
    }
    let half = n / 2;
    let even = |j: usize| if j < n { x[j] } else { x[n - 2] };
    let high: Vec<i64> = (0..half)
        .map(|i| x[2 * i + 1] + (-(even(2 * i) + even(2 * i + 2))).div_euclid(2))
        .collect();
    let low = (0..half)
        .map(|i| {
            let prev = high[i.saturating_sub(1)];
            x[2 * i] + (prev + high[i] + 2).div_euclid(4)
        })
        .collect();
    Ok((low, high))
}

/// Exact inverse of [`forward_stage`].
pub fn inverse_stage(low: &[i64], high: &[i64]) -> Result<Vec<i64>> {
    if low.len() != high.len() || low.is_empty() {
        return Err(Error::Format(format!(
            "band lengths {} and {} do not form a stage",
            low.len(),
            high.len()
        )));
    }
    let half = low.len();
    let n = 2 * half;
    let mut x = vec![0i64; n];
    for i in 0..half {
        let prev = high[i.saturating_sub(1)];
        x[2 * i] = low[i] - (prev + high[i] + 2).div_euclid(4);
    }
    for i in 0..half {
        let right = if 2 * i + 2 < n { x[2 * i + 2] } else { x[n - 2] };
        x[2 * i + 1] = high[i] - (-(x[2 * i] + right)).div_euclid(2);
    }
    Ok(x)
}

/// Applies [`forward_stage`] `stages` times, each time to the low band.
pub fn forward(x: &[i64], stages: usize) -> Result<LiftingCoefficients> {
    check_shape(x.len(), stages)?;
    let mut highs = Vec::with_capacity(stages);
    let mut low = x.to_vec();
    for _ in 0..stages {
        let (l, h) = forward_stage(&low)?;
        highs.push(h);
        low = l;
    }
    let mut bands = Vec::with_capacity(stages + 1);
    bands.push(low);
    bands.extend(highs.into_iter().rev());
    LiftingCoefficients::new(stages, bands)
}

pub fn inverse(coeffs: &LiftingCoefficients) -> Result<Vec<i64>> {
    coeffs.validate()?;
    let mut low = coeffs.bands[0].clone();
    for high in &coeffs.bands[1..] {
        low = inverse_stage(&low, high)?;
    }
    Ok(low)
}

/// Coefficients that survived threshold testing, with their band-major locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdedStream {
    pub n: usize,
    pub stages: usize,
    /// Threshold exponent `T`: survivors satisfy `|v| ≥ 2^T`.
    pub t: u32,
    pub locations: Vec<usize>,
    pub values: Vec<i64>,
}

fn survives(v: i64, t: u32) -> bool {
    t < 64 && (v.unsigned_abs() >> t) != 0
}

/// Keeps the coefficients whose magnitude needs more than `T` bits,
/// i.e. `⌊|v| / 2^T⌋ ≥ 1`.
pub fn threshold_compress(coeffs: &LiftingCoefficients, t: u32) -> ThresholdedStream {
    let (locations, values) = coeffs
        .flatten()
        .into_iter()
        .enumerate()
        .filter(|&(_, v)| survives(v, t))
        .unzip();
    ThresholdedStream {
        n: coeffs.len(),
        stages: coeffs.stages,
        t,
        locations,
        values,
    }
}

impl ThresholdedStream {
    /// Re-expands to a full coefficient set with zeros at discarded positions.
    pub fn expand(&self) -> Result<LiftingCoefficients> {
        if self.locations.len() != self.values.len() {
            return Err(Error::Format("locations and values differ in length".into()));
        }
        if self.locations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("locations are not strictly increasing".into()));
        }
        let mut flat = vec![0i64; self.n];
        for (&loc, &v) in self.locations.iter().zip(&self.values) {
            *flat
                .get_mut(loc)
                .ok_or_else(|| Error::Format(format!("location {loc} outside 0..{}", self.n)))? = v;
        }
        LiftingCoefficients::from_flat(self.n, self.stages, &flat)
    }

    pub fn reconstruct(&self) -> Result<Vec<i64>> {
        inverse(&self.expand()?)
    }
}

/// Forward transform followed by threshold testing.
pub fn compress(x: &[i64], stages: usize, t: u32) -> Result<ThresholdedStream> {
    Ok(threshold_compress(&forward(x, stages)?, t))
}
