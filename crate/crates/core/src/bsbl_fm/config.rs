use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Noise variance used in noiseless experiments.
pub const NOISELESS_BETA_INV: f64 = 1e-6;
/// Default convergence threshold on the cost change of an applied step.
pub const DEFAULT_ETA: f64 = 1e-5;
pub const DEFAULT_R_CLAMP: f64 = 0.99;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Intra-block correlation model imposed on each `B_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorrelationModel {
    /// `B_i = I`, i.e. BSBL-FM(0).
    #[serde(rename = "SIM", alias = "sim", alias = "0")]
    Sim,
    /// Toeplitz AR(1) with one coefficient shared by all blocks, i.e. BSBL-FM(1).
    #[serde(rename = "AR1", alias = "ar1", alias = "1")]
    Ar1,
}

impl CorrelationModel {
    pub fn label(self) -> &'static str {
        match self {
            CorrelationModel::Sim => "BSBL-FM(0)",
            CorrelationModel::Ar1 => "BSBL-FM(1)",
        }
    }
}

/// How the maintained `S`, `Q` statistics are refreshed after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RefreshMode {
    /// Rank-`d_i` Woodbury update.
    #[default]
    Incremental,
    /// Rebuild from the active-set posterior every step (debugging aid).
    FromScratch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Noise variance `β⁻¹`; fixed for the whole run.
    pub beta_inv: f64,
    pub eta: f64,
    pub model: CorrelationModel,
    pub max_iter: usize,
    /// Bound on `|r|` for the AR(1) model.
    pub r_clamp: f64,
    pub refresh: RefreshMode,
    /// Overrides the estimated shared AR coefficient.
    pub fixed_r: Option<f64>,
}

impl SolverConfig {
    pub fn noiseless(model: CorrelationModel) -> Self {
        SolverConfig {
            beta_inv: NOISELESS_BETA_INV,
            eta: DEFAULT_ETA,
            model,
            max_iter: DEFAULT_MAX_ITER,
            r_clamp: DEFAULT_R_CLAMP,
            refresh: RefreshMode::Incremental,
            fixed_r: None,
        }
    }

    /// `β⁻¹ = 0.01·‖y‖²`.
    pub fn noisy(model: CorrelationModel, y: &[f64]) -> Self {
        SolverConfig {
            beta_inv: noisy_beta_inv(y),
            ..SolverConfig::noiseless(model)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_inv > 0.0 && self.beta_inv.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta_inv must be positive and finite, got {}",
                self.beta_inv
            )));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.r_clamp > 0.0 && self.r_clamp < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "r_clamp must lie in (0, 1), got {}",
                self.r_clamp
            )));
        }
        if self.fixed_r.is_some_and(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("fixed_r must be finite".into()));
        }
        Ok(())
    }
}

pub fn noisy_beta_inv(y: &[f64]) -> f64 {
    0.01 * y.iter().map(|v| v * v).sum::<f64>()
}
