//! Successive decoders at receiver `K` and at receivers `k < K`.

use serde::Serialize;

use super::decode::gaussian;
use super::{
    CodedLayerConfig, CodedScheme, LatticeCode, LayerStats, ReceiverStats, SimError, SimOptions,
};
use crate::lattice::mod_centered;
use crate::layering::LayerPlan;
use crate::rng::{shard_sizes, stream_id, stream_rng, SimRng};

const TAG_RX: u8 = 0x40;

#[derive(Default, Clone)]
struct Tally {
    errors: Vec<u64>,
    wraps: Vec<u64>,
    blocks: u64,
    power: Vec<f64>,
}

impl Tally {
    fn new(layers: usize, users: usize) -> Self {
        Tally {
            errors: vec![0; layers],
            wraps: vec![0; layers],
            blocks: 0,
            power: vec![0.0; users],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.errors.iter_mut().zip(other.errors) {
            *a += b;
        }
        for (a, b) in self.wraps.iter_mut().zip(other.wraps) {
            *a += b;
        }
        self.blocks += other.blocks;
        for (a, b) in self.power.iter_mut().zip(other.power) {
            *a += b;
        }
        self
    }
}

fn in_cell(x: &[f64], q: f64) -> bool {
    x.iter().all(|&v| v > -q / 2.0 && v <= q / 2.0)
}

fn add_into(acc: &mut [f64], v: &[f64], scale: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += scale * b;
    }
}

fn draw(code: &LatticeCode, message: bool, rng: &mut SimRng) -> Vec<i64> {
    if message {
        code.random_point(rng)
    } else {
        vec![0; code.pair.dim()]
    }
}

/// One peeling step: strips the dither, decodes the nearest point modulo the
/// coarse lattice and returns `(estimate, residual)` in channel units.
fn peel(
    y: &[f64],
    step: f64,
    dither: &[f64],
    q: u32,
    pair: &crate::lattice::NestedLatticePair,
) -> (Vec<i64>, Vec<f64>) {
    let qf = q as f64;
    let v: Vec<f64> = y
        .iter()
        .zip(dither)
        .map(|(&yi, &d)| mod_centered(yi / step - d, qf))
        .collect();
    let est = pair.decode_nearest(&v);
    let residual = v
        .iter()
        .zip(&est)
        .map(|(&vi, &e)| step * mod_centered(vi - e as f64, qf))
        .collect();
    (est, residual)
}

/// State of one layer at receiver `K` during a single trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerTrace {
    pub layer: usize,
    /// Receiver input before this layer is peeled.
    pub received: Vec<f64>,
    /// True aligned signal of this layer and everything below, plus noise.
    pub expected: Vec<f64>,
    /// Decoder estimate of the modulo sum of the aligned points.
    pub estimate: Vec<i64>,
    pub truth: Vec<i64>,
    /// Residual handed to the next layer.
    pub residual: Vec<f64>,
    /// True signal below this layer plus noise.
    pub lower: Vec<f64>,
}

fn active_layers(scheme: &CodedScheme) -> Vec<&CodedLayerConfig> {
    scheme
        .layers
        .iter()
        .rev()
        .filter(|l| l.is_active())
        .collect()
}

fn victim_trial(
    plan: &LayerPlan,
    scheme: &CodedScheme,
    noise_std: f64,
    rng: &mut SimRng,
    tally: &mut Tally,
    mut trace: Option<&mut Vec<LayerTrace>>,
) {
    let users = scheme.users;
    let dim = scheme.dim;
    let layers = active_layers(scheme);

    // Received contribution of each decoded layer, top-down order.
    let mut rx_layers = vec![vec![0.0; dim]; layers.len()];
    let mut truths = Vec::with_capacity(layers.len());
    let mut tx = vec![vec![0.0; dim]; users];

    for (slot, l) in layers.iter().enumerate().rev() {
        let pair = l.pair.expect("active layer");
        let mut sum = vec![0i64; dim];
        for (k, code) in l.codes.iter().enumerate() {
            let Some(code) = code else { continue };
            let t = draw(code, l.carries_message(k, users), rng);
            let x = code.transmit(&t);
            add_into(&mut tx[k], &x, 1.0);
            add_into(&mut rx_layers[slot], &x, plan.gain_at_victim(k).sqrt());
            for (s, v) in sum.iter_mut().zip(&t) {
                *s += v;
            }
        }
        truths.push(pair.mod_coarse_int(&sum));
    }
    truths.reverse();

    let mut floor = vec![0.0; dim];
    for b in scheme.base.iter().flatten() {
        let t = b.code.random_point(rng);
        let x = b.code.transmit(&t);
        add_into(&mut tx[b.user], &x, 1.0);
        add_into(&mut floor, &x, plan.gain_at_victim(b.user).sqrt());
    }
    if noise_std > 0.0 {
        for v in floor.iter_mut() {
            *v += noise_std * gaussian(rng);
        }
    }

    // lower[slot]: everything strictly below layer `slot`.
    let mut lower = vec![floor; layers.len()];
    for slot in (0..layers.len().saturating_sub(1)).rev() {
        let below = lower[slot + 1].clone();
        lower[slot] = below;
        let rx = rx_layers[slot + 1].clone();
        add_into(&mut lower[slot], &rx, 1.0);
    }

    let mut y: Vec<f64> = match layers.first() {
        Some(_) => {
            let mut y = lower[0].clone();
            add_into(&mut y, &rx_layers[0], 1.0);
            y
        }
        None => lower.first().cloned().unwrap_or_default(),
    };

    let mut failed = false;
    for (slot, l) in layers.iter().enumerate() {
        let pair = l.pair.expect("active layer");
        let step = l.victim_step();
        let mut dither = vec![0.0; dim];
        for code in l.codes.iter().flatten() {
            add_into(&mut dither, &code.dither, 1.0);
        }
        let (est, residual) = peel(&y, step, &dither, pair.q(), &pair);
        let scaled: Vec<f64> = lower[slot].iter().map(|v| v / step).collect();
        if !in_cell(&scaled, pair.q() as f64) {
            tally.wraps[slot] += 1;
        }
        if est != truths[slot] {
            failed = true;
        }
        if failed {
            tally.errors[slot] += 1;
        }
        if let Some(tr) = trace.as_deref_mut() {
            let mut expected = lower[slot].clone();
            add_into(&mut expected, &rx_layers[slot], 1.0);
            tr.push(LayerTrace {
                layer: l.layer,
                received: y.clone(),
                expected,
                estimate: est,
                truth: truths[slot].clone(),
                residual: residual.clone(),
                lower: lower[slot].clone(),
            });
        }
        y = residual;
    }
    if failed {
        tally.blocks += 1;
    }
    for (p, x) in tally.power.iter_mut().zip(&tx) {
        *p += x.iter().map(|v| v * v).sum::<f64>();
    }
}

fn stats(receiver: usize, trials: u64, layer_ids: &[(usize, u32)], tally: Tally) -> ReceiverStats {
    let rate = |n: u64| {
        if trials == 0 {
            0.0
        } else {
            n as f64 / trials as f64
        }
    };
    ReceiverStats {
        receiver,
        trials,
        block_errors: tally.blocks,
        block_error_rate: rate(tally.blocks),
        layers: layer_ids
            .iter()
            .zip(tally.errors.iter().zip(&tally.wraps))
            .map(|(&(layer, q), (&errors, &wraps))| LayerStats {
                layer,
                q,
                errors,
                wraps,
                trials,
                error_rate: rate(errors),
            })
            .collect(),
    }
}

/// Receiver `K`: every active layer, top-down, decoding the modulo sum of
/// the aligned points. Also returns each user's summed squared transmit
/// amplitude over all trials and dimensions.
pub fn simulate_receiver_victim(
    plan: &LayerPlan,
    scheme: &CodedScheme,
    opts: &SimOptions,
) -> (ReceiverStats, Vec<f64>) {
    let layers = active_layers(scheme);
    let ids: Vec<(usize, u32)> = layers
        .iter()
        .map(|l| (l.layer, l.pair.map_or(0, |p| p.q())))
        .collect();
    let sizes = shard_sizes(opts.trials, opts.shards);
    let noise_std = opts.noise.std_dev();
    let users = scheme.users;
    let receiver = users as u64;
    let tally = opts
        .exec
        .map(sizes.len(), |s| {
            let mut rng = stream_rng(opts.seed, stream_id(TAG_RX, receiver, s as u64));
            let mut t = Tally::new(ids.len(), users);
            for _ in 0..sizes[s] {
                victim_trial(plan, scheme, noise_std, &mut rng, &mut t, None);
            }
            t
        })
        .into_iter()
        .fold(Tally::new(ids.len(), users), Tally::merge);
    let power = tally.power.clone();
    (stats(users, opts.trials, &ids, tally), power)
}

/// Runs one receiver-`K` trial and records every peeling step.
pub fn victim_trace(
    plan: &LayerPlan,
    scheme: &CodedScheme,
    noise_variance: f64,
    seed: u64,
) -> Vec<LayerTrace> {
    let mut rng = stream_rng(seed, stream_id(TAG_RX, 0, 0));
    let mut tally = Tally::new(active_layers(scheme).len(), scheme.users);
    let mut trace = Vec::new();
    victim_trial(
        plan,
        scheme,
        noise_variance.max(0.0).sqrt(),
        &mut rng,
        &mut tally,
        Some(&mut trace),
    );
    trace
}

/// Codes of `user` in decoding order: active finite layers top-down, then
/// its layer-0 code.
fn own_codes(scheme: &CodedScheme, user: usize) -> Vec<(usize, &LatticeCode, bool)> {
    let mut out: Vec<(usize, &LatticeCode, bool)> = scheme
        .layers
        .iter()
        .rev()
        .filter_map(|l| {
            l.codes[user]
                .as_ref()
                .map(|c| (l.layer, c, l.carries_message(user, scheme.users)))
        })
        .collect();
    if let Some(b) = &scheme.base[user] {
        out.push((0, &b.code, true));
    }
    out
}

/// Receiver `k < K` (0-based `user`): sees only its own transmitter and
/// decodes each of its layers top-down, ending at layer 0 when it has a
/// layer-0 code.
pub fn simulate_receiver_k(
    plan: &LayerPlan,
    scheme: &CodedScheme,
    user: usize,
    opts: &SimOptions,
) -> Result<ReceiverStats, SimError> {
    if user + 1 >= scheme.users || plan.layers_of_user(user).is_empty() {
        return Err(SimError::UserInactive { user: user + 1 });
    }
    let codes = own_codes(scheme, user);
    let ids: Vec<(usize, u32)> = codes.iter().map(|(m, c, _)| (*m, c.pair.q())).collect();
    let sizes = shard_sizes(opts.trials, opts.shards);
    let noise_std = opts.noise.std_dev();
    let dim = scheme.dim;

    let tally = opts
        .exec
        .map(sizes.len(), |s| {
            let mut rng = stream_rng(opts.seed, stream_id(TAG_RX, user as u64 + 1, s as u64));
            let mut tally = Tally::new(codes.len(), 0);
            for _ in 0..sizes[s] {
                let mut sent = Vec::with_capacity(codes.len());
                let mut signals = Vec::with_capacity(codes.len());
                for (_, code, message) in &codes {
                    let t = draw(code, *message, &mut rng);
                    signals.push(code.transmit(&t));
                    sent.push(t);
                }
                let mut lower = vec![vec![0.0; dim]; codes.len()];
                let mut floor = vec![0.0; dim];
                if noise_std > 0.0 {
                    for v in floor.iter_mut() {
                        *v = noise_std * gaussian(&mut rng);
                    }
                }
                let mut acc = floor;
                for i in (0..codes.len()).rev() {
                    lower[i] = acc.clone();
                    add_into(&mut acc, &signals[i], 1.0);
                }
                let mut y = acc;
                let mut failed = false;
                for (i, (_, code, _)) in codes.iter().enumerate() {
                    let pair = code.pair;
                    let (est, residual) = peel(&y, code.amplitude, &code.dither, pair.q(), &pair);
                    let scaled: Vec<f64> = lower[i].iter().map(|v| v / code.amplitude).collect();
                    if !in_cell(&scaled, pair.q() as f64) {
                        tally.wraps[i] += 1;
                    }
                    if est != sent[i] {
                        failed = true;
                    }
                    if failed {
                        tally.errors[i] += 1;
                    }
                    y = residual;
                }
                if failed {
                    tally.blocks += 1;
                }
            }
            tally
        })
        .into_iter()
        .fold(Tally::new(codes.len(), 0), Tally::merge);
    Ok(stats(user + 1, opts.trials, &ids, tally))
}
