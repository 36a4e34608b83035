//! Channel model: user count, interference power gains and power budgets.
//!
//! Receiver `k < K` sees `Y_k = X_k + Z_k`. Receiver `K` sees
//! `Y_K = X_K + sum_i sqrt(a_i) X_i + Z_K`. Gains are stored as the power
//! gains `a_i`, never as amplitudes. All rates are bits per real channel use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rejection reasons for a [`ChannelConfig`]. Each carries enough to build a
/// JSON pointer to the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("K = {k} is not supported, need K >= 3")]
    KTooSmall { k: usize },
    #[error("{field} has length {found}, expected {expected}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("power P_{} = {value} must be positive and finite", index + 1)]
    NonPositivePower { index: usize, value: f64 },
    #[error("gain a_{} = {value} must be nonnegative and finite", index + 1)]
    NegativeGain { index: usize, value: f64 },
}

impl ValidationError {
    /// JSON pointer into the config document.
    pub fn pointer(&self) -> String {
        match self {
            ValidationError::KTooSmall { .. } => "/K".to_string(),
            ValidationError::DimensionMismatch { field, .. } => format!("/{field}"),
            ValidationError::NonPositivePower { index, .. } => format!("/powers/{index}"),
            ValidationError::NegativeGain { index, .. } => format!("/gains/{index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("capacity argument {0} is negative")]
pub struct NegativeArgument(pub f64);

/// A validated channel instance.
///
/// `gains[i]` is `a_{i+1}` and `powers[k]` is `P_{k+1}`; the last power
/// belongs to user `K`, whose receiver is the eavesdropper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    #[serde(rename = "K")]
    k: usize,
    gains: Vec<f64>,
    powers: Vec<f64>,
}

impl ChannelConfig {
    pub fn new(k: usize, gains: Vec<f64>, powers: Vec<f64>) -> Result<Self, ValidationError> {
        let config = ChannelConfig { k, gains, powers };
        validate(&config)?;
        Ok(config)
    }

    /// Builds without validation. Callers must run [`validate`] before
    /// handing the value to any other module.
    pub fn new_unchecked(k: usize, gains: Vec<f64>, powers: Vec<f64>) -> Self {
        ChannelConfig { k, gains, powers }
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Power budget of the interfered user `K`.
    pub fn victim_power(&self) -> f64 {
        self.powers[self.k - 1]
    }

    /// Same gains, every user at power `p`.
    pub fn with_common_power(&self, p: f64) -> Result<Self, ValidationError> {
        ChannelConfig::new(self.k, self.gains.clone(), vec![p; self.k])
    }

    /// Same gains, every power multiplied by `s`.
    pub fn scaled_powers(&self, s: f64) -> Result<Self, ValidationError> {
        ChannelConfig::new(
            self.k,
            self.gains.clone(),
            self.powers.iter().map(|p| p * s).collect(),
        )
    }
}

/// Accepts iff `K >= 3`, the list lengths match and every gain is `>= 0`
/// and every power `> 0` (both finite).
pub fn validate(config: &ChannelConfig) -> Result<(), ValidationError> {
    if config.k < 3 {
        return Err(ValidationError::KTooSmall { k: config.k });
    }
    if config.gains.len() != config.k - 1 {
        return Err(ValidationError::DimensionMismatch {
            field: "gains",
            expected: config.k - 1,
            found: config.gains.len(),
        });
    }
    if config.powers.len() != config.k {
        return Err(ValidationError::DimensionMismatch {
            field: "powers",
            expected: config.k,
            found: config.powers.len(),
        });
    }
    if let Some((index, &value)) = config
        .gains
        .iter()
        .enumerate()
        .find(|(_, g)| !(g.is_finite() && **g >= 0.0))
    {
        return Err(ValidationError::NegativeGain { index, value });
    }
    if let Some((index, &value)) = config
        .powers
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.is_finite() && **p > 0.0))
    {
        return Err(ValidationError::NonPositivePower { index, value });
    }
    Ok(())
}

/// Gaussian capacity `C(x) = 1/2 log2(1 + x)`.
pub fn cap(x: f64) -> Result<f64, NegativeArgument> {
    if x < 0.0 || x.is_nan() {
        return Err(NegativeArgument(x));
    }
    Ok(half_log2_1p(x))
}

pub(crate) fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / std::f64::consts::LN_2
}

/// `max{0, 1/2 log2 x}`, with `x <= 0` mapping to 0.
pub(crate) fn pos_half_log2(x: f64) -> f64 {
    if x > 1.0 {
        0.5 * x.log2()
    } else {
        0.0
    }
}

/// `c = max{1, a_1, ..., a_{K-1}}`.
pub fn max_gain_c(config: &ChannelConfig) -> f64 {
    config.gains.iter().copied().fold(1.0, f64::max)
}

/// Additive white Gaussian noise per real dimension. Zero variance is the
/// noiseless limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoiseSpec {
    variance: f64,
}

impl GaussianNoiseSpec {
    pub fn new(variance: f64) -> Option<Self> {
        (variance.is_finite() && variance >= 0.0).then_some(GaussianNoiseSpec { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

impl Default for GaussianNoiseSpec {
    fn default() -> Self {
        GaussianNoiseSpec { variance: 1.0 }
    }
}
