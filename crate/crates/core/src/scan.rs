//! Randomized property scans over channel configurations.
//!
//! Trial `i` of a scan draws its configuration from its own generator stream
//! `(seed, i)`, so a scan's output is fixed by `(seed, trials)` whatever the
//! execution strategy.

use rand::Rng;
use serde::Serialize;

use crate::bounds::{
    gap_report, layer_rate_caps, layer_sum_contributions, lower_bound, symmetric_budget,
    weak_interference_budget, BOUND_TOL,
};
use crate::exec::Exec;
use crate::layering::{check_alignment, LayerPlan};
use crate::model::ChannelConfig;
use crate::rng::{stream_id, stream_rng, SimRng};

const TAG_CONFIG: u8 = 0x10;
const TAG_CASE1: u8 = 0x11;
const TAG_CASE2: u8 = 0x12;

/// Log-uniform sampling ranges for random configurations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSampler {
    pub users: Vec<usize>,
    pub gain_range: (f64, f64),
    pub power_range: (f64, f64),
}

impl Default for ConfigSampler {
    fn default() -> Self {
        ConfigSampler {
            users: vec![3, 4, 5],
            gain_range: (1e-2, 1e2),
            power_range: (1e-1, 1e4),
        }
    }
}

fn log_uniform(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    let (a, b) = (lo.log10(), hi.log10());
    10f64.powf(rng.random_range(a..=b))
}

impl ConfigSampler {
    pub fn sample(&self, rng: &mut SimRng) -> ChannelConfig {
        let k = self.users[rng.random_range(0..self.users.len())];
        let gains = (0..k - 1)
            .map(|_| log_uniform(rng, self.gain_range))
            .collect();
        let powers = (0..k).map(|_| log_uniform(rng, self.power_range)).collect();
        ChannelConfig::new(k, gains, powers).expect("sampler ranges are positive")
    }

    pub fn trial(&self, seed: u64, index: u64) -> ChannelConfig {
        self.sample(&mut stream_rng(seed, stream_id(TAG_CONFIG, 0, index)))
    }
}

/// The two constant-gap regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapCase {
    /// Every `a_i < 1`.
    WeakInterference,
    /// `a_i = a` and `P_i = P` for every interferer.
    Symmetric,
}

impl GapCase {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(GapCase::WeakInterference),
            2 => Some(GapCase::Symmetric),
            _ => None,
        }
    }

    pub fn budget(self, k: usize) -> f64 {
        match self {
            GapCase::WeakInterference => weak_interference_budget(k),
            GapCase::Symmetric => symmetric_budget(k),
        }
    }

    /// Draws a configuration inside the regime. Weak gains are uniform on
    /// `[0, 1)`, the symmetric gain is log-uniform on `[1e-2, 1e2]`, powers
    /// are log-uniform on `[1e-1, 1e4]`.
    pub fn trial(self, k: usize, seed: u64, index: u64) -> ChannelConfig {
        let powers = (1e-1, 1e4);
        match self {
            GapCase::WeakInterference => {
                let mut rng = stream_rng(seed, stream_id(TAG_CASE1, k as u64, index));
                let gains = (0..k - 1).map(|_| rng.random_range(0.0..1.0)).collect();
                let p = (0..k).map(|_| log_uniform(&mut rng, powers)).collect();
                ChannelConfig::new(k, gains, p)
            }
            GapCase::Symmetric => {
                let mut rng = stream_rng(seed, stream_id(TAG_CASE2, k as u64, index));
                let a = log_uniform(&mut rng, (1e-2, 1e2));
                let p = log_uniform(&mut rng, powers);
                let pk = log_uniform(&mut rng, powers);
                let mut p_all = vec![p; k - 1];
                p_all.push(pk);
                ChannelConfig::new(k, vec![a; k - 1], p_all)
            }
        }
        .expect("case sampler ranges are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapScanReport {
    pub case: GapCase,
    #[serde(rename = "K")]
    pub users: usize,
    pub trials: u64,
    pub seed: u64,
    pub worst_gap: f64,
    pub budget: f64,
    pub violations: u64,
    /// Configuration attaining `worst_gap`.
    pub worst_config: Option<ChannelConfig>,
}

/// Worst `upper - lower_raw` over `trials` random configurations of `case`.
pub fn gap_scan(case: GapCase, k: usize, trials: u64, seed: u64, exec: Exec) -> GapScanReport {
    let budget = case.budget(k);
    let gaps = exec.map(trials as usize, |i| {
        let c = case.trial(k, seed, i as u64);
        let r = gap_report(&c);
        (r.gap, c)
    });
    let violations = gaps.iter().filter(|(g, _)| *g > budget + BOUND_TOL).count() as u64;
    let worst = gaps.into_iter().max_by(|a, b| a.0.total_cmp(&b.0));
    GapScanReport {
        case,
        users: k,
        trials,
        seed,
        worst_gap: worst.as_ref().map_or(f64::NEG_INFINITY, |w| w.0),
        budget,
        violations,
        worst_config: worst.map(|w| w.1),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PropertyScanReport {
    pub trials: u64,
    pub violations: u64,
    /// Largest amount by which the checked inequality was exceeded; negative
    /// when it held everywhere.
    pub max_excess: f64,
}

impl PropertyScanReport {
    fn from_excess(excess: &[f64]) -> Self {
        PropertyScanReport {
            trials: excess.len() as u64,
            violations: excess.iter().filter(|&&e| e > BOUND_TOL).count() as u64,
            max_excess: excess.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Checks `max{0, lower_raw} <= upper` on random configurations.
pub fn ordering_scan(
    sampler: &ConfigSampler,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> PropertyScanReport {
    let excess = exec.map(trials as usize, |i| {
        let r = gap_report(&sampler.trial(seed, i as u64));
        r.lower - r.upper
    });
    PropertyScanReport::from_excess(&excess)
}

/// Checks that the per-layer accounting never falls below the closed-form
/// lower bound.
pub fn accounting_scan(
    sampler: &ConfigSampler,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> PropertyScanReport {
    let excess = exec.map(trials as usize, |i| {
        let c = sampler.trial(seed, i as u64);
        let plan = LayerPlan::new(&c);
        let total = layer_sum_contributions(&plan, &layer_rate_caps(&plan)).total;
        lower_bound(&c) - total
    });
    PropertyScanReport::from_excess(&excess)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LayeringScanReport {
    pub trials: u64,
    pub infeasible: u64,
    pub misaligned: u64,
    pub too_many_layers: u64,
    pub max_violation: f64,
    pub max_layers_over_bound: i64,
}

/// Feasibility, alignment and `M <= 2K - 1` on random configurations.
pub fn layering_scan(
    sampler: &ConfigSampler,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> LayeringScanReport {
    let rows = exec.map(trials as usize, |i| {
        let c = sampler.trial(seed, i as u64);
        let plan = LayerPlan::new(&c);
        let r = check_alignment(&plan);
        let over = plan.top_layer() as i64 - (2 * c.users() as i64 - 1);
        (r.feasible, r.aligned, r.max_violation, over)
    });
    LayeringScanReport {
        trials,
        infeasible: rows.iter().filter(|r| !r.0).count() as u64,
        misaligned: rows.iter().filter(|r| !r.1).count() as u64,
        too_many_layers: rows.iter().filter(|r| r.3 > 0).count() as u64,
        max_violation: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        max_layers_over_bound: rows.iter().map(|r| r.3).max().unwrap_or(i64::MIN),
    }
}
