//! High-SNR slope of the bounds along a common-power sweep.

use serde::Serialize;

use super::{lower_bound, upper_bound, BoundsError};
use crate::model::ChannelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "half_log2P")]
    pub half_log2_p: f64,
    /// Clamped lower bound.
    pub lower: f64,
    pub upper: f64,
    /// `upper - lower_raw`.
    pub gap: f64,
    #[serde(skip)]
    pub lower_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoFEstimate {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of the unclamped lower bound against
    /// `1/2 log2 P` over the fit window.
    pub lower_slope: f64,
    pub upper_slope: f64,
    /// Number of trailing points used in the fit.
    pub fit_points: usize,
}

/// `base^e` for `e = exp_min, exp_min + step, ..., <= exp_max`.
pub fn geometric_powers(base: f64, exp_min: f64, exp_max: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || exp_max < exp_min {
        return Vec::new();
    }
    let n = ((exp_max - exp_min) / step + 1e-9).floor() as usize + 1;
    (0..n)
        .map(|i| base.powf(exp_min + i as f64 * step))
        .collect()
}

/// Evaluates both bounds with every user at power `P` for each `P` in
/// `powers` and fits slopes over the top decade (`P >= P_max / 10`). When the
/// top decade holds fewer than 3 points the last 3 points are used.
pub fn dof_sweep(base: &ChannelConfig, powers: &[f64]) -> Result<DoFEstimate, BoundsError> {
    if powers.len() < 3 {
        return Err(BoundsError::DegenerateSweep(powers.len()));
    }
    let mut points = Vec::with_capacity(powers.len());
    for &p in powers {
        let c = base.with_common_power(p)?;
        let lower_raw = lower_bound(&c);
        let upper = upper_bound(&c);
        points.push(SweepPoint {
            p,
            half_log2_p: 0.5 * p.log2(),
            lower: lower_raw.max(0.0),
            upper,
            gap: upper - lower_raw,
            lower_raw,
        });
    }
    let p_max = powers.iter().copied().fold(f64::MIN, f64::max);
    let mut window: Vec<&SweepPoint> = points.iter().filter(|pt| pt.p >= p_max / 10.0).collect();
    if window.len() < 3 {
        let mut sorted: Vec<&SweepPoint> = points.iter().collect();
        sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
        window = sorted[sorted.len() - 3..].to_vec();
    }
    let xs: Vec<f64> = window.iter().map(|pt| pt.half_log2_p).collect();
    let lower_slope = ols_slope(
        &xs,
        &window.iter().map(|pt| pt.lower_raw).collect::<Vec<_>>(),
    );
    let upper_slope = ols_slope(&xs, &window.iter().map(|pt| pt.upper).collect::<Vec<_>>());
    let fit_points = window.len();
    Ok(DoFEstimate {
        points,
        lower_slope,
        upper_slope,
        fit_points,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
