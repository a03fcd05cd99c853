use std::time::Instant;

use crate::accounting::{gaussian_sigma, release_threshold};
use crate::engine::{dense_to_histogram, parallel_noise_threshold};
use crate::error::Result;
use crate::mechanisms::{preprocess_user, BufferedThreshold, NoiseKind};
use crate::rng::{Domain, StreamKey};
use crate::types::{Dataset, ItemId, MechanismConfig, PrivacyBudget, ReleaseResult, UserRecord};

/// One user's policy-Gaussian step.
///
/// The gap vector gᵤ = max(0, T* − H[u]) over the user's items is added to
/// the histogram after scaling by 1 / max(1, ‖g‖₂). Returns the ℓ₂ norm of
/// the update actually applied, which is at most 1.
pub fn policy_update(hist: &mut [f64], items: &[ItemId], t_star: f64) -> f64 {
    let sq: f64 = items
        .iter()
        .map(|id| (t_star - hist[id.index()]).max(0.0).powi(2))
        .sum();
    if sq == 0.0 {
        return 0.0;
    }
    let norm = sq.sqrt();
    let scale = 1.0 / norm.max(1.0);
    for id in items {
        let gap = (t_star - hist[id.index()]).max(0.0);
        hist[id.index()] += gap * scale;
    }
    norm * scale
}

pub(crate) fn default_buffer(sigma: f64, cfg: &MechanismConfig) -> f64 {
    cfg.buffer.unwrap_or(sigma)
}

/// Builds the DPSU histogram sequentially, in dataset order.
pub(crate) fn dpsu_histogram(
    users: &[UserRecord],
    vocab_len: usize,
    t_star: f64,
    cfg: &MechanismConfig,
    iteration: u64,
) -> Vec<f64> {
    let trunc = StreamKey::new(cfg.seed, Domain::DpsuTruncate, iteration);
    let mut hist = vec![0.0f64; vocab_len];
    for user in users {
        let mut rng = trunc.rng(user.user_id.0);
        let kept = preprocess_user(&user.items, cfg.delta0, &mut rng, true);
        let applied = policy_update(&mut hist, &kept, t_star);
        debug_assert!(applied <= 1.0 + 1e-12, "DPSU update norm {applied} > 1");
    }
    hist
}

/// One DPSU pass; returns released ids.
pub(crate) fn dpsu_round(
    users: &[UserRecord],
    vocab_len: usize,
    budget: PrivacyBudget,
    cfg: &MechanismConfig,
    iteration: u64,
) -> Result<Vec<ItemId>> {
    budget.require_mechanism_ready()?;
    let sigma = gaussian_sigma(budget, 1.0)?.sigma;
    let base = release_threshold(budget, cfg.delta0)?;
    let t_star = BufferedThreshold::new(base, default_buffer(sigma, cfg))?.value();
    let dense = dpsu_histogram(users, vocab_len, t_star, cfg, iteration);
    let hist = dense_to_histogram(&dense);
    let noise = StreamKey::new(cfg.seed, Domain::DpsuNoise, iteration);
    Ok(parallel_noise_threshold(&hist, NoiseKind::Gaussian { sigma }, base.value, &noise, 1))
}

/// Policy Gaussian (DPSU).
///
/// Users are processed strictly one after another; each update depends on
/// the histogram left by all earlier users, so this runs on a single thread
/// regardless of `cfg.workers`. The whole histogram has ℓ₂ sensitivity 1,
/// and the Weighted Gaussian noise and threshold apply unchanged.
pub fn dpsu_policy_gaussian(d: &Dataset, budget: PrivacyBudget, cfg: &MechanismConfig) -> Result<ReleaseResult> {
    cfg.validate()?;
    let start = Instant::now();
    let released = dpsu_round(d.users(), d.vocab().len(), budget, cfg, 0)?;
    Ok(ReleaseResult {
        per_iteration_counts: vec![released.len()],
        released,
        elapsed_ms: start.elapsed().as_millis() as u64,
        engine_stages: 0,
    })
}
