//! Monte Carlo simulation of the layered lattice scheme.
//!
//! Every finite layer with a positive operating rate carries one nested
//! lattice codebook, scaled per user so that all active users arrive at
//! receiver `K` on the same lattice. Receiver `K` peels layers top-down,
//! decoding the modulo sum of the aligned points; receiver `k < K` peels its
//! own layers, including its private layer-0 code.

mod decode;
mod receivers;

pub use decode::{mod_channel_decode_trial, mod_channel_error_rate, LatticeCode, MAX_CODEBOOK};
pub use receivers::{simulate_receiver_k, simulate_receiver_victim, victim_trace, LayerTrace};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{layer_rate_caps, layer_sum_contributions, LayerMode};
use crate::exec::Exec;
use crate::lattice::{LatticeError, NestedLatticePair};
use crate::layering::LayerPlan;
use crate::model::{pos_half_log2, ChannelConfig, GaussianNoiseSpec};
use crate::rng::{stream_id, stream_rng};

pub const DEFAULT_MARGIN: f64 = 1.0;

const TAG_DITHER: u8 = 0x20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("user {user} is not active on any layer")]
    UserInactive { user: usize },
    #[error("margin {0} must be finite and non-negative")]
    InvalidMargin(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Knobs shared by every simulation entry point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Bits per dimension kept below each decodability cap.
    pub margin: f64,
    pub trials: u64,
    pub seed: u64,
    pub shards: usize,
    /// Lattice dimension `N`.
    pub dim: usize,
    pub noise: GaussianNoiseSpec,
    pub exec: Exec,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            margin: DEFAULT_MARGIN,
            trials: 10_000,
            seed: crate::rng::DEFAULT_SEED,
            shards: 8,
            dim: 1,
            noise: GaussianNoiseSpec::default(),
            exec: Exec::Parallel,
        }
    }
}

/// One finite layer of the coded scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedLayerConfig {
    pub layer: usize,
    pub mode: LayerMode,
    pub width: f64,
    /// Receiver-`K` cap `R_m` in bits per dimension.
    pub cap: f64,
    pub margin: f64,
    /// `None` when `2^(cap - margin) < 2`: the layer is silent.
    pub pair: Option<NestedLatticePair>,
    /// Per-user codes, `None` for users off this layer.
    pub codes: Vec<Option<LatticeCode>>,
}

impl CodedLayerConfig {
    /// Bits per dimension actually used.
    pub fn rate(&self) -> f64 {
        self.pair.map_or(0.0, |p| p.rate())
    }

    /// Fine-lattice step at receiver `K`, `sqrt(a_k) * amplitude_k` for any
    /// active user.
    pub fn victim_step(&self) -> f64 {
        self.pair
            .map_or(0.0, |p| (self.width / p.max_dithered_power()).sqrt())
    }

    pub fn is_active(&self) -> bool {
        self.pair.is_some()
    }

    /// True when user `k` sends an information point rather than the zero
    /// point. Only meaningful for users with a code on this layer.
    pub fn carries_message(&self, k: usize, users: usize) -> bool {
        match self.mode {
            LayerMode::Confidential => true,
            LayerMode::Direct => k + 1 == users,
            LayerMode::Idle => false,
        }
    }
}

/// Private layer-0 code of a weak interferer, decoded only by its own
/// receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCode {
    pub user: usize,
    pub cap: f64,
    pub code: LatticeCode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedScheme {
    pub users: usize,
    pub dim: usize,
    pub margin: f64,
    /// Index `m - 1` holds layer `m`.
    pub layers: Vec<CodedLayerConfig>,
    /// Per user, `None` when the user has no usable layer-0 code.
    pub base: Vec<Option<BaseCode>>,
}

impl CodedScheme {
    pub fn layer(&self, m: usize) -> Option<&CodedLayerConfig> {
        m.checked_sub(1).and_then(|i| self.layers.get(i))
    }
}

/// Largest `q` with `q <= 2^bits` and `q^dim <= MAX_CODEBOOK`, or `None`
/// below 2.
fn nesting_ratio(bits: f64, dim: usize) -> Option<u32> {
    if !bits.is_finite() || bits < 1.0 {
        return None;
    }
    let by_rate = bits.exp2().floor().min(u32::MAX as f64) as u32;
    let mut by_size = (MAX_CODEBOOK as f64).powf(1.0 / dim as f64).floor() as u32;
    while (by_size as u128 + 1).pow(dim as u32) <= MAX_CODEBOOK {
        by_size += 1;
    }
    while (by_size as u128).pow(dim as u32) > MAX_CODEBOOK {
        by_size -= 1;
    }
    let q = by_rate.min(by_size);
    (q >= 2).then_some(q)
}

fn random_dither(pair: &NestedLatticePair, rng: &mut crate::rng::SimRng) -> Vec<f64> {
    let q = pair.q() as f64;
    (0..pair.dim())
        .map(|_| q * (0.5 - rng.random::<f64>()))
        .collect()
}

/// Chooses every layer's codebook from the plan, its rate caps and the
/// per-layer modes. Dithers are drawn from `seed` and fixed for the run.
pub fn build_scheme(
    plan: &LayerPlan,
    margin: f64,
    dim: usize,
    seed: u64,
) -> Result<CodedScheme, SimError> {
    if !margin.is_finite() || margin < 0.0 {
        return Err(SimError::InvalidMargin(margin));
    }
    NestedLatticePair::new(dim, 2)?;
    let users = plan.users();
    let caps = layer_rate_caps(plan);
    let modes = layer_sum_contributions(plan, &caps);
    let mut rng = stream_rng(seed, stream_id(TAG_DITHER, 0, 0));

    let layers = caps
        .layers
        .iter()
        .map(|cap| {
            let m = cap.layer;
            let mode = modes.mode(m);
            let width = plan.interval(m).map_or(0.0, |iv| iv.width());
            let pair = match mode {
                LayerMode::Idle => None,
                _ => nesting_ratio(cap.rate - margin, dim)
                    .map(|q| NestedLatticePair::new(dim, q))
                    .transpose()?,
            };
            let codes = (0..users)
                .map(|k| {
                    let p = plan.alloc(k, m);
                    match pair {
                        Some(pair) if p > 0.0 => Some(LatticeCode::with_power(
                            pair,
                            p,
                            random_dither(&pair, &mut rng),
                        )),
                        _ => None,
                    }
                })
                .collect();
            Ok(CodedLayerConfig {
                layer: m,
                mode,
                width,
                cap: cap.rate,
                margin,
                pair,
                codes,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let base = (0..users)
        .map(|k| {
            let p = plan.alloc(k, 0);
            if k + 1 == users || p <= 0.0 {
                return Ok(None);
            }
            let cap = pos_half_log2(p);
            Ok(match nesting_ratio(cap - margin, dim) {
                Some(q) => {
                    let pair = NestedLatticePair::new(dim, q)?;
                    Some(BaseCode {
                        user: k,
                        cap,
                        code: LatticeCode::with_power(pair, p, random_dither(&pair, &mut rng)),
                    })
                }
                None => None,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    Ok(CodedScheme {
        users,
        dim,
        margin,
        layers,
        base,
    })
}

/// Per-layer decoding statistics at one receiver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStats {
    pub layer: usize,
    pub q: u32,
    pub errors: u64,
    /// Trials in which the true lower-layer residue left the coarse cell.
    pub wraps: u64,
    pub trials: u64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverStats {
    /// 1-based receiver id.
    pub receiver: usize,
    pub trials: u64,
    pub block_errors: u64,
    pub block_error_rate: f64,
    /// Decoded layers, top-down.
    pub layers: Vec<LayerStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub mode: LayerMode,
    pub cap: f64,
    pub rate: f64,
    pub q: u32,
    /// 1-based ids of the users sending on the layer.
    pub users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserPower {
    pub user: usize,
    pub budget: f64,
    pub allocated: f64,
    /// Mean squared transmit amplitude per dimension over all trials.
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub seed: u64,
    pub trials: u64,
    pub shards: usize,
    pub margin: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub noise_variance: f64,
    pub layers: Vec<LayerSummary>,
    pub receivers: Vec<ReceiverStats>,
    pub power: Vec<UserPower>,
}

impl SimResult {
    pub fn max_block_error_rate(&self) -> f64 {
        self.receivers
            .iter()
            .map(|r| r.block_error_rate)
            .fold(0.0, f64::max)
    }

    pub fn receiver(&self, id: usize) -> Option<&ReceiverStats> {
        self.receivers.iter().find(|r| r.receiver == id)
    }
}

fn layer_summaries(scheme: &CodedScheme) -> Vec<LayerSummary> {
    let mut out: Vec<LayerSummary> = scheme
        .layers
        .iter()
        .rev()
        .map(|l| LayerSummary {
            layer: l.layer,
            mode: l.mode,
            cap: l.cap,
            rate: l.rate(),
            q: l.pair.map_or(0, |p| p.q()),
            users: l
                .codes
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_some())
                .map(|(k, _)| k + 1)
                .collect(),
        })
        .collect();
    for b in scheme.base.iter().flatten() {
        out.push(LayerSummary {
            layer: 0,
            mode: LayerMode::Confidential,
            cap: b.cap,
            rate: b.code.pair.rate(),
            q: b.code.pair.q(),
            users: vec![b.user + 1],
        });
    }
    out
}

/// Builds the plan and the coded scheme for `config` and runs every
/// receiver. Receivers `k < K` with no layer are left out.
pub fn end_to_end_report(config: &ChannelConfig, opts: &SimOptions) -> Result<SimResult, SimError> {
    let plan = LayerPlan::new(config);
    let scheme = build_scheme(&plan, opts.margin, opts.dim, opts.seed)?;
    let users = plan.users();

    let mut receivers = Vec::with_capacity(users);
    let (victim, sq) = simulate_receiver_victim(&plan, &scheme, opts);
    for k in 0..users - 1 {
        match simulate_receiver_k(&plan, &scheme, k, opts) {
            Ok(stats) => receivers.push(stats),
            Err(SimError::UserInactive { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    receivers.push(victim);

    let denom = (opts.trials * opts.dim as u64).max(1) as f64;
    let power = (0..users)
        .map(|k| UserPower {
            user: k + 1,
            budget: plan.powers()[k],
            allocated: plan.total_power(k),
            empirical: sq[k] / denom,
        })
        .collect();

    Ok(SimResult {
        seed: opts.seed,
        trials: opts.trials,
        shards: opts.shards.max(1),
        margin: opts.margin,
        dim: opts.dim,
        noise_variance: opts.noise.variance(),
        layers: layer_summaries(&scheme),
        receivers,
        power,
    })
}
