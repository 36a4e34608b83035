//! Secrecy sum-rate bounds.
//!
//! The achievable rate is the closed form
//!
//! ```text
//! sum_k max{0, 1/2 log2 P_k} - max{0, 1/2 log2(a_ib P_ib / max{1, a_it})} - f(K)
//! ```
//!
//! with `ib = argmax a_i P_i`, `it = argmin a_i` over interferers, and the
//! converse is `sum_i C(P_i) - C(sum a_i P_i / ((K-1) c))`. The per-layer
//! accounting in [`layer_rate_caps`] and [`layer_sum_contributions`] is the
//! finer quantity that the closed form lower-bounds.

mod dof;

pub use dof::{dof_sweep, geometric_powers, DoFEstimate, SweepPoint};

use serde::Serialize;
use thiserror::Error;

use crate::layering::LayerPlan;
use crate::model::{half_log2_1p, max_gain_c, pos_half_log2, ChannelConfig};

/// Slack used by every bound inequality check.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("K = {0} is not supported, need K >= 3")]
    KTooSmall(usize),
    #[error("sweep has {0} points, need at least 3")]
    DegenerateSweep(usize),
    #[error(transparent)]
    Validation(#[from] crate::model::ValidationError),
}

/// `f(K) = (2K-1)((K-1)/2 + (K+1)/2 log2 K) + 1/2 log2 K`.
pub fn f_of_k(k: usize) -> Result<f64, BoundsError> {
    if k < 3 {
        return Err(BoundsError::KTooSmall(k));
    }
    Ok(f_unchecked(k))
}

fn f_unchecked(k: usize) -> f64 {
    let kf = k as f64;
    let l = kf.log2();
    (2.0 * kf - 1.0) * ((kf - 1.0) / 2.0 + (kf + 1.0) / 2.0 * l) + 0.5 * l
}

/// Index of the interferer with the largest received power `a_i P_i`.
/// Ties go to the lowest index.
pub fn strongest_interferer(config: &ChannelConfig) -> usize {
    let mut best = 0;
    for i in 1..config.gains().len() {
        if config.gains()[i] * config.powers()[i] > config.gains()[best] * config.powers()[best] {
            best = i;
        }
    }
    best
}

/// Index of the interferer with the smallest gain. Ties go to the lowest
/// index.
pub fn weakest_gain(config: &ChannelConfig) -> usize {
    let mut best = 0;
    for i in 1..config.gains().len() {
        if config.gains()[i] < config.gains()[best] {
            best = i;
        }
    }
    best
}

/// Achievable secrecy sum rate, unclamped. Can be negative.
pub fn lower_bound(config: &ChannelConfig) -> f64 {
    let direct: f64 = config.powers().iter().map(|&p| pos_half_log2(p)).sum();
    let ib = strongest_interferer(config);
    let it = weakest_gain(config);
    let reach = config.gains()[ib] * config.powers()[ib];
    // All-zero gains: reach is 0 and the penalty vanishes.
    let penalty = pos_half_log2(reach / config.gains()[it].max(1.0));
    direct - penalty - f_unchecked(config.users())
}

/// Converse bound on the secrecy sum rate.
pub fn upper_bound(config: &ChannelConfig) -> f64 {
    let k = config.users();
    let total: f64 = config.powers().iter().map(|&p| half_log2_1p(p)).sum();
    let interference: f64 = config
        .gains()
        .iter()
        .zip(config.powers())
        .map(|(a, p)| a * p)
        .sum();
    total - half_log2_1p(interference / ((k - 1) as f64 * max_gain_c(config)))
}

/// True when every interference gain is strictly below 1.
pub fn is_weak_interference(config: &ChannelConfig) -> bool {
    config.gains().iter().all(|&a| a < 1.0)
}

/// True when all interferers share one gain and one power.
pub fn is_symmetric(config: &ChannelConfig) -> bool {
    let g = config.gains();
    let p = &config.powers()[..config.users() - 1];
    g.iter().all(|&a| a == g[0]) && p.iter().all(|&x| x == p[0])
}

/// Constant-gap budget for weak interference: `K/2 + log2(K-1) + f(K)`.
pub fn weak_interference_budget(k: usize) -> f64 {
    k as f64 / 2.0 + ((k - 1) as f64).log2() + f_unchecked(k)
}

/// Constant-gap budget for symmetric interferers: `K/2 + f(K)`.
pub fn symmetric_budget(k: usize) -> f64 {
    k as f64 / 2.0 + f_unchecked(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub lower_raw: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "fK")]
    pub f_k: f64,
    /// `upper - lower_raw`.
    pub gap: f64,
    pub case1: bool,
    pub case2: bool,
    /// Tightest applicable budget, absent outside both cases.
    pub gap_budget: Option<f64>,
}

impl BoundsReport {
    /// False only when a budget applies and the gap exceeds it, or the
    /// clamped lower bound exceeds the upper bound.
    pub fn holds(&self) -> bool {
        let ordered = self.lower <= self.upper + BOUND_TOL;
        let within = self.gap_budget.is_none_or(|b| self.gap <= b + BOUND_TOL);
        ordered && within
    }
}

/// Evaluates both bounds and classifies the constant-gap cases. When both
/// cases apply the smaller (symmetric) budget is reported.
pub fn gap_report(config: &ChannelConfig) -> BoundsReport {
    let k = config.users();
    let lower_raw = lower_bound(config);
    let upper = upper_bound(config);
    let case1 = is_weak_interference(config);
    let case2 = is_symmetric(config);
    let gap_budget = match (case1, case2) {
        (_, true) => Some(symmetric_budget(k)),
        (true, false) => Some(weak_interference_budget(k)),
        _ => None,
    };
    BoundsReport {
        lower_raw,
        lower: lower_raw.max(0.0),
        upper,
        f_k: f_unchecked(k),
        gap: upper - lower_raw,
        case1,
        case2,
        gap_budget,
    }
}

/// Decodability caps for one finite layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerCap {
    pub layer: usize,
    /// Cap at receiver `K`: `max{0, 1/2 log2(width / (K floor))}`.
    pub victim_cap: f64,
    /// Cap at receivers `k < K`: `max{0, 1/2 log2(width / floor)}`.
    pub direct_cap: f64,
    /// Operating rate `R_m`, the binding (receiver `K`) cap.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRateCaps {
    pub layers: Vec<LayerCap>,
}

impl LayerRateCaps {
    pub fn get(&self, layer: usize) -> Option<&LayerCap> {
        layer.checked_sub(1).and_then(|i| self.layers.get(i))
    }
}

pub fn layer_rate_caps(plan: &LayerPlan) -> LayerRateCaps {
    let k = plan.users() as f64;
    let layers = plan
        .intervals()
        .iter()
        .map(|iv| {
            let victim_cap = pos_half_log2(iv.width() / (k * iv.floor));
            LayerCap {
                layer: iv.index,
                victim_cap,
                direct_cap: pos_half_log2(iv.width() / iv.floor),
                rate: victim_cap,
            }
        })
        .collect();
    LayerRateCaps { layers }
}

/// Who carries information on a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerMode {
    /// Interferers send confidential lattice points; user `K` jams with a
    /// random point.
    Confidential,
    /// Interferers send the zero point; receiver `K` decodes user `K`.
    Direct,
    /// Nobody carries information.
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerContribution {
    pub layer: usize,
    pub mode: LayerMode,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerContributions {
    /// Layer 0: `sum_{k in U'_0} C(P_{k,0}) - 1/2 log2 K`, or 0 when no
    /// interferer uses layer 0.
    pub layer0: f64,
    pub layers: Vec<LayerContribution>,
    pub total: f64,
}

impl LayerContributions {
    pub fn mode(&self, layer: usize) -> LayerMode {
        layer
            .checked_sub(1)
            .and_then(|i| self.layers.get(i))
            .map_or(LayerMode::Idle, |c| c.mode)
    }
}

/// Per-layer secrecy sum-rate accounting with the better of the two modes
/// chosen independently on each finite layer.
///
/// Confidential mode yields `|U'_m| R_m - log2 K`; direct mode yields `R_m`
/// and needs user `K` on the layer. Ties go to direct mode.
pub fn layer_sum_contributions(plan: &LayerPlan, caps: &LayerRateCaps) -> LayerContributions {
    let k = plan.users() as f64;
    let log_k = k.log2();

    let weak_users = plan.active_tx(0);
    let layer0 = if weak_users.is_empty() {
        0.0
    } else {
        weak_users
            .iter()
            .map(|&u| half_log2_1p(plan.alloc(u, 0)))
            .sum::<f64>()
            - 0.5 * log_k
    };

    let layers: Vec<LayerContribution> = caps
        .layers
        .iter()
        .map(|cap| {
            let senders = plan.active_tx(cap.layer).len();
            let confidential = (senders > 0).then_some(senders as f64 * cap.rate - log_k);
            let direct = plan.victim_active(cap.layer).then_some(cap.rate);
            let (mode, value) = match (confidential, direct) {
                (Some(c), Some(d)) if c > d => (LayerMode::Confidential, c),
                (_, Some(d)) => (LayerMode::Direct, d),
                (Some(c), None) => (LayerMode::Confidential, c),
                (None, None) => (LayerMode::Idle, 0.0),
            };
            LayerContribution {
                layer: cap.layer,
                mode,
                value,
            }
        })
        .collect();

    let total = layer0 + layers.iter().map(|c| c.value).sum::<f64>();
    LayerContributions {
        layer0,
        layers,
        total,
    }
}
