//! Layer delimiters and the per-user, per-layer power split.
//!
//! Candidate delimiters are `a_i P_i` and `a_i` for every interferer, kept
//! only when greater than 1, plus `P_K` and 1. Sorted and deduplicated they
//! cut the power axis into finite layers `[floor, ceiling]`; layer 0 is the
//! sentinel `(-inf, 1]`. Interferer `k` puts `width / a_k` on every layer
//! inside `[a_k, a_k P_k]` so that each active user arrives at receiver `K`
//! with exactly the layer width. User `K` puts `width` on every layer below
//! `P_K`.
//!
//! Users are 0-based here: index `K-1` is user `K`.

use serde::Serialize;

use crate::model::ChannelConfig;

/// Relative tolerance for the alignment identity `a_k P_{k,m} = width(m)`.
pub const ALIGNMENT_TOL: f64 = 1e-9;

/// One finite layer `[floor, ceiling]`, `m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerInterval {
    pub index: usize,
    pub floor: f64,
    pub ceiling: f64,
}

impl LayerInterval {
    pub fn width(&self) -> f64 {
        self.ceiling - self.floor
    }
}

/// Delimiters, intervals and the power matrix for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan {
    users: usize,
    gains: Vec<f64>,
    powers: Vec<f64>,
    delimiters: Vec<f64>,
    intervals: Vec<LayerInterval>,
    /// `alloc[k][m]`, `m` in `0..=M`.
    alloc: Vec<Vec<f64>>,
    /// `active[m]`: users with nonzero power on layer `m`.
    active: Vec<Vec<usize>>,
}

/// Sorted delimiter list `q_0 = 1 < q_1 < ...` and the finite layers between
/// consecutive entries.
pub fn compute_delimiters(config: &ChannelConfig) -> (Vec<f64>, Vec<LayerInterval>) {
    let mut q: Vec<f64> = config
        .gains()
        .iter()
        .zip(config.powers())
        .flat_map(|(&a, &p)| [a * p, a])
        .filter(|&v| v > 1.0)
        .collect();
    // P_K only matters above 1; at or below 1 it coincides with the sentinel.
    if config.victim_power() > 1.0 {
        q.push(config.victim_power());
    }
    q.push(1.0);
    q.sort_by(f64::total_cmp);
    q.dedup();
    let intervals = q
        .windows(2)
        .enumerate()
        .map(|(i, w)| LayerInterval {
            index: i + 1,
            floor: w[0],
            ceiling: w[1],
        })
        .collect();
    (q, intervals)
}

/// Applies the allocation rules to the intervals of [`compute_delimiters`].
pub fn allocate_power(config: &ChannelConfig, intervals: &[LayerInterval]) -> LayerPlan {
    let users = config.users();
    let layers = intervals.len() + 1;
    let mut alloc = vec![vec![0.0; layers]; users];

    for (k, (&a, &p)) in config.gains().iter().zip(config.powers()).enumerate() {
        if a == 0.0 {
            continue;
        }
        // Capped at P_k: when a_k P_k < 1 the uncapped 1/a_k - 1 can exceed
        // the budget.
        alloc[k][0] = (1.0 / a - 1.0).max(0.0).min(p);
        let reach = a * p;
        for iv in intervals {
            if reach >= iv.ceiling && iv.floor >= a {
                alloc[k][iv.index] = iv.width() / a;
            }
        }
    }
    let victim = users - 1;
    let pk = config.victim_power();
    for iv in intervals {
        if pk >= iv.ceiling {
            alloc[victim][iv.index] = iv.width();
        }
    }

    let active = (0..layers)
        .map(|m| (0..users).filter(|&k| alloc[k][m] > 0.0).collect())
        .collect();

    LayerPlan {
        users,
        gains: config.gains().to_vec(),
        powers: config.powers().to_vec(),
        delimiters: compute_delimiters(config).0,
        intervals: intervals.to_vec(),
        alloc,
        active,
    }
}

impl LayerPlan {
    pub fn new(config: &ChannelConfig) -> Self {
        let (_, intervals) = compute_delimiters(config);
        allocate_power(config, &intervals)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn delimiters(&self) -> &[f64] {
        &self.delimiters
    }

    /// Highest layer index `M`; layers run `0..=M`.
    pub fn top_layer(&self) -> usize {
        self.intervals.len()
    }

    /// Finite layers, `intervals()[m - 1]` is layer `m`.
    pub fn intervals(&self) -> &[LayerInterval] {
        &self.intervals
    }

    pub fn interval(&self, m: usize) -> Option<&LayerInterval> {
        m.checked_sub(1).and_then(|i| self.intervals.get(i))
    }

    pub fn alloc(&self, user: usize, layer: usize) -> f64 {
        self.alloc[user][layer]
    }

    pub fn alloc_matrix(&self) -> &[Vec<f64>] {
        &self.alloc
    }

    /// `U_m`.
    pub fn active(&self, layer: usize) -> &[usize] {
        &self.active[layer]
    }

    /// `U'_m = U_m` without user `K`.
    pub fn active_tx(&self, layer: usize) -> Vec<usize> {
        self.active[layer]
            .iter()
            .copied()
            .filter(|&k| k + 1 < self.users)
            .collect()
    }

    pub fn victim_active(&self, layer: usize) -> bool {
        self.active[layer].contains(&(self.users - 1))
    }

    /// `B_k`, ascending.
    pub fn layers_of_user(&self, user: usize) -> Vec<usize> {
        (0..=self.top_layer())
            .filter(|&m| self.alloc[user][m] > 0.0)
            .collect()
    }

    /// Received amplitude gain of `user` at receiver `K` (`a_K = 1`).
    pub fn gain_at_victim(&self, user: usize) -> f64 {
        if user + 1 == self.users {
            1.0
        } else {
            self.gains[user]
        }
    }

    pub fn total_power(&self, user: usize) -> f64 {
        self.alloc[user].iter().sum()
    }

    /// Copy with one matrix entry replaced. Active sets are recomputed.
    pub fn with_alloc(&self, user: usize, layer: usize, value: f64) -> Self {
        let mut plan = self.clone();
        plan.alloc[user][layer] = value;
        plan.active = (0..=plan.top_layer())
            .map(|m| {
                (0..plan.users)
                    .filter(|&k| plan.alloc[k][m] > 0.0)
                    .collect()
            })
            .collect();
        plan
    }

    pub fn to_json(&self) -> LayerPlanJson {
        LayerPlanJson {
            q: self.delimiters.clone(),
            alloc: self.alloc.clone(),
            active: self
                .active
                .iter()
                .map(|set| set.iter().map(|k| k + 1).collect())
                .collect(),
        }
    }

    /// Fixed-width text table: one row per user, one column per layer.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("delimiters: {:?}\n", self.delimiters));
        out.push_str(&format!("{:>6}", "user"));
        for m in 0..=self.top_layer() {
            let head = match self.interval(m) {
                None => "(-inf,1]".to_string(),
                Some(iv) => format!("[{},{}]", fmt_short(iv.floor), fmt_short(iv.ceiling)),
            };
            out.push_str(&format!(" {head:>16}"));
        }
        out.push_str(&format!(" {:>12}\n", "total"));
        for k in 0..self.users {
            out.push_str(&format!("{:>6}", k + 1));
            for m in 0..=self.top_layer() {
                out.push_str(&format!(" {:>16}", fmt_short(self.alloc[k][m])));
            }
            out.push_str(&format!(" {:>12}\n", fmt_short(self.total_power(k))));
        }
        out
    }
}

fn fmt_short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Wire form of a plan; user ids are 1-based.
#[derive(Debug, Clone, Serialize)]
pub struct LayerPlanJson {
    pub q: Vec<f64>,
    pub alloc: Vec<Vec<f64>>,
    pub active: Vec<Vec<usize>>,
}

/// Outcome of [`check_alignment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub aligned: bool,
    pub feasible: bool,
    /// Largest `|a_k P_{k,m} - width(m)|` over active users on finite layers.
    pub max_violation: f64,
    /// `(user, layer)` of `max_violation`, 0-based user.
    pub worst: Option<(usize, usize)>,
    /// Smallest `P_k - sum_m P_{k,m}` over users.
    pub min_power_slack: f64,
}

/// Checks `a_k P_{k,m} = width(m)` for every active user on every finite
/// layer and `sum_m P_{k,m} <= P_k` for every user.
pub fn check_alignment(plan: &LayerPlan) -> AlignmentReport {
    let mut max_violation = 0.0;
    let mut worst = None;
    let mut aligned = true;
    for iv in plan.intervals() {
        for &k in plan.active(iv.index) {
            let received = plan.gain_at_victim(k) * plan.alloc(k, iv.index);
            let v = (received - iv.width()).abs();
            if v > ALIGNMENT_TOL * iv.width().max(1.0) {
                aligned = false;
            }
            if v > max_violation {
                max_violation = v;
                worst = Some((k, iv.index));
            }
        }
    }
    let min_power_slack = (0..plan.users())
        .map(|k| plan.powers()[k] - plan.total_power(k))
        .fold(f64::INFINITY, f64::min);
    let feasible =
        (0..plan.users()).all(|k| plan.total_power(k) <= plan.powers()[k] * (1.0 + ALIGNMENT_TOL));
    AlignmentReport {
        aligned,
        feasible,
        max_violation,
        worst,
        min_power_slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn worked() -> ChannelConfig {
        ChannelConfig::new(3, vec![4.0, 9.0], vec![4.0, 2.0, 20.0]).unwrap()
    }

    #[test]
    fn worked_delimiters() {
        let (q, iv) = compute_delimiters(&worked());
        assert_eq!(q, vec![1.0, 4.0, 9.0, 16.0, 18.0, 20.0]);
        let pairs: Vec<_> = iv.iter().map(|i| (i.floor, i.ceiling)).collect();
        assert_eq!(
            pairs,
            vec![
                (1.0, 4.0),
                (4.0, 9.0),
                (9.0, 16.0),
                (16.0, 18.0),
                (18.0, 20.0)
            ]
        );
        assert_eq!(iv[0].index, 1);
    }

    #[test]
    fn all_candidates_below_one() {
        let c = ChannelConfig::new(3, vec![0.5, 0.5], vec![1.0, 1.0, 1.0]).unwrap();
        let (q, iv) = compute_delimiters(&c);
        assert_eq!(q, vec![1.0]);
        assert!(iv.is_empty());
    }

    #[test]
    fn zero_gains_leave_victim_pair() {
        let c = ChannelConfig::new(3, vec![0.0, 0.0], vec![1.0, 1.0, 8.0]).unwrap();
        let (q, _) = compute_delimiters(&c);
        assert_eq!(q, vec![1.0, 8.0]);
        let plan = LayerPlan::new(&c);
        assert!(plan.layers_of_user(0).is_empty());
        assert!(plan.layers_of_user(1).is_empty());
        assert_eq!(plan.layers_of_user(2), vec![1]);
    }

    #[test]
    fn worked_allocation() {
        let plan = LayerPlan::new(&worked());
        let u1: Vec<f64> = (0..=5).map(|m| plan.alloc(0, m)).collect();
        assert_eq!(u1, vec![0.0, 0.0, 1.25, 1.75, 0.0, 0.0]);
        assert_eq!(plan.total_power(0), 3.0);
        let u3: Vec<f64> = (0..=5).map(|m| plan.alloc(2, m)).collect();
        assert_eq!(u3, vec![0.0, 3.0, 5.0, 7.0, 2.0, 2.0]);
        assert_eq!(plan.total_power(2), 19.0);
        assert_abs_diff_eq!(plan.alloc(1, 3), 7.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(plan.alloc(1, 4), 2.0 / 9.0, epsilon = 1e-15);
        assert_eq!(plan.active(3), &[0, 1, 2]);
        assert_eq!(plan.active_tx(2), vec![0]);
        assert_eq!(plan.top_layer(), 5);
    }

    #[test]
    fn worked_alignment() {
        let r = check_alignment(&LayerPlan::new(&worked()));
        assert!(r.aligned && r.feasible);
        assert!(r.max_violation < 1e-12);
    }

    #[test]
    fn perturbation_is_reported() {
        let plan = LayerPlan::new(&worked());
        let bumped = plan.with_alloc(0, 2, plan.alloc(0, 2) + 0.1);
        let r = check_alignment(&bumped);
        assert!(!r.aligned);
        assert_abs_diff_eq!(r.max_violation, 0.4, epsilon = 1e-12);
        assert_eq!(r.worst, Some((0, 2)));
    }

    #[test]
    fn empty_plan_is_vacuously_aligned() {
        let c = ChannelConfig::new(3, vec![0.5, 0.5], vec![1.0, 1.0, 1.0]).unwrap();
        let r = check_alignment(&LayerPlan::new(&c));
        assert!(r.aligned);
        assert_eq!(r.worst, None);
    }

    #[test]
    fn weak_tiny_user_is_capped() {
        let c = ChannelConfig::new(3, vec![0.01, 0.5], vec![1.0, 4.0, 2.0]).unwrap();
        let plan = LayerPlan::new(&c);
        assert_eq!(plan.alloc(0, 0), 1.0);
        assert_abs_diff_eq!(plan.alloc(1, 0), 1.0, epsilon = 1e-15);
        assert!(check_alignment(&plan).feasible);
    }

    #[test]
    fn victim_below_one_gets_nothing() {
        let c = ChannelConfig::new(3, vec![4.0, 2.0], vec![4.0, 4.0, 0.5]).unwrap();
        let plan = LayerPlan::new(&c);
        assert!(plan.layers_of_user(2).is_empty());
        assert_eq!(plan.delimiters()[0], 1.0);
    }

    #[test]
    fn json_uses_one_based_ids() {
        let j = LayerPlan::new(&worked()).to_json();
        assert_eq!(j.active[3], vec![1, 2, 3]);
        assert_eq!(j.active[0], Vec::<usize>::new());
    }
}
