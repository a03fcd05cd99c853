use std::time::Instant;

use crate::accounting::laplace_threshold;
use crate::engine::{dense_to_histogram, parallel_noise_threshold};
use crate::error::Result;
use crate::mechanisms::{preprocess_user, BufferedThreshold, NoiseKind};
use crate::rng::{Domain, StreamKey, StreamRng};
use crate::types::{ApproxDpParams, Dataset, GwTruncation, ItemId, MechanismConfig, ReleaseResult};

/// A user's distinct items in greedy order: frequency descending, then item
/// order. At most `delta0` are kept, chosen by `truncation`.
pub fn gw_candidates(items: &[ItemId], delta0: usize, truncation: GwTruncation, rng: &mut StreamRng) -> Vec<ItemId> {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    let mut freq: Vec<(ItemId, usize)> = Vec::new();
    for id in sorted {
        match freq.last_mut() {
            Some((last, n)) if *last == id => *n += 1,
            _ => freq.push((id, 1)),
        }
    }
    if truncation == GwTruncation::Uniform && freq.len() > delta0 {
        let distinct: Vec<ItemId> = freq.iter().map(|&(id, _)| id).collect();
        let mut keep = preprocess_user(&distinct, delta0, rng, false);
        keep.sort_unstable();
        freq.retain(|(id, _)| keep.binary_search(id).is_ok());
    }
    freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    freq.truncate(delta0);
    freq.into_iter().map(|(id, _)| id).collect()
}

/// One user's greedy pass with unit ℓ₁ budget.
///
/// Walks `candidates` in order; every item still below `t_star` receives
/// min(1, T* − H[u], remaining budget). Stops when the budget is spent or
/// the candidates run out. Returns the ℓ₁ mass added.
pub fn gw_user_update(hist: &mut [f64], candidates: &[ItemId], t_star: f64) -> f64 {
    let mut budget = 1.0f64;
    for id in candidates {
        if budget <= 0.0 {
            break;
        }
        let h = hist[id.index()];
        if h >= t_star {
            continue;
        }
        let add = 1.0f64.min(t_star - h).min(budget);
        hist[id.index()] = h + add;
        budget -= add;
    }
    1.0 - budget
}

/// Greedy updates Without sampling (GW), with Laplace noise.
///
/// Duplicates in user lists are kept and drive the greedy order. Like DPSU
/// this is a single sequential pass over users and ignores `cfg.workers`.
pub fn gw_greedy(d: &Dataset, dp: ApproxDpParams, cfg: &MechanismConfig) -> Result<ReleaseResult> {
    cfg.validate()?;
    let dp = ApproxDpParams::new(dp.epsilon, dp.delta_dp)?;
    let start = Instant::now();
    let scale = 1.0 / dp.epsilon;
    let base = laplace_threshold(dp, cfg.delta0)?;
    let buffer = cfg.buffer.unwrap_or(scale * std::f64::consts::LN_2);
    let t_star = BufferedThreshold::new(base, buffer)?.value();

    let trunc = StreamKey::new(cfg.seed, Domain::GwTruncate, 0);
    let mut hist = vec![0.0f64; d.vocab().len()];
    for user in d.users() {
        let mut rng = trunc.rng(user.user_id.0);
        let candidates = gw_candidates(&user.items, cfg.delta0, cfg.gw_truncation, &mut rng);
        let spent = gw_user_update(&mut hist, &candidates, t_star);
        debug_assert!(spent <= 1.0 + 1e-12, "GW user spent {spent} > 1");
    }
    let h = dense_to_histogram(&hist);
    let noise = StreamKey::new(cfg.seed, Domain::GwNoise, 0);
    let released = parallel_noise_threshold(&h, NoiseKind::Laplace { scale }, base.value, &noise, 1);
    Ok(ReleaseResult {
        per_iteration_counts: vec![released.len()],
        released,
        elapsed_ms: start.elapsed().as_millis() as u64,
        engine_stages: 0,
    })
}
