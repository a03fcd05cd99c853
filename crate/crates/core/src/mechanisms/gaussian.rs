use std::time::Instant;

use crate::accounting::{gaussian_sigma, release_threshold, split_budget, Threshold};
use crate::engine::{Engine, Preprocess};
use crate::error::Result;
use crate::mechanisms::NoiseKind;
use crate::rng::{Domain, StreamKey};
use crate::types::{Dataset, ItemId, MechanismConfig, PrivacyBudget, ReleaseResult, UserRecord};

/// What one DP-SIPS round did.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub budget: PrivacyBudget,
    pub threshold: Threshold,
    pub released: usize,
    pub support_size: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

fn inv_sqrt(k: usize) -> f64 {
    1.0 / (k as f64).sqrt()
}

/// One Weighted Gaussian pass over `users`.
fn gaussian_round(
    engine: &mut Engine,
    users: &[UserRecord],
    vocab_len: usize,
    budget: PrivacyBudget,
    cfg: &MechanismConfig,
    iteration: u64,
) -> Result<(Vec<ItemId>, IterationRecord)> {
    budget.require_mechanism_ready()?;
    let sigma = gaussian_sigma(budget, 1.0)?.sigma;
    let threshold = release_threshold(budget, cfg.delta0)?;
    let prep = Preprocess {
        delta0: cfg.delta0,
        dedup: true,
        stream: StreamKey::new(cfg.seed, Domain::GaussianTruncate, iteration),
    };
    let hist = engine.histogram(users, vocab_len, &prep, inv_sqrt);
    let noise_stream = StreamKey::new(cfg.seed, Domain::GaussianNoise, iteration);
    let released = engine.noise_threshold(&hist, NoiseKind::Gaussian { sigma }, threshold.value, &noise_stream);
    let record = IterationRecord {
        budget,
        threshold,
        released: released.len(),
        support_size: hist.support_size(),
    };
    Ok((released, record))
}

/// Weighted Gaussian: every user's ≤ Δ₀ distinct items get weight 1/√|W̄|,
/// Gaussian noise of variance 1/(2ρ) is added, and items at or above the
/// Δ₀-calibrated threshold are released. Satisfies δ-approximate ρ-zCDP.
pub fn weighted_gaussian(d: &Dataset, budget: PrivacyBudget, cfg: &MechanismConfig) -> Result<ReleaseResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut engine = Engine::new(cfg.workers);
    let (released, _) = gaussian_round(&mut engine, d.users(), d.vocab().len(), budget, cfg, 0)?;
    Ok(ReleaseResult {
        per_iteration_counts: vec![released.len()],
        released,
        elapsed_ms: start.elapsed().as_millis() as u64,
        engine_stages: engine.stages().map_reduce_rounds,
    })
}

/// DP-SIPS: `cfg.iterations` rounds of Weighted Gaussian on geometrically
/// growing budget shares, removing each round's releases from every user
/// before the next. Users are re-truncated every round.
///
/// With one iteration this is exactly [`weighted_gaussian`] for the same
/// seed.
pub fn dp_sips(d: &Dataset, budget: PrivacyBudget, cfg: &MechanismConfig) -> Result<(ReleaseResult, IterationTrace)> {
    cfg.validate()?;
    budget.require_mechanism_ready()?;
    let start = Instant::now();
    let parts = split_budget(budget, cfg.iterations, cfg.ratio)?;
    let vocab_len = d.vocab().len();
    let mut engine = Engine::new(cfg.workers);
    let mut users = d.users().to_vec();
    let mut released = Vec::new();
    let mut trace = IterationTrace::default();
    let last = parts.len() - 1;

    for (i, part) in parts.into_iter().enumerate() {
        let (found, record) = gaussian_round(&mut engine, &users, vocab_len, part, cfg, i as u64)?;
        if i != last {
            engine.remove_released(&mut users, &found, vocab_len);
        }
        trace.records.push(record);
        released.extend(found);
    }

    released.sort_unstable();
    debug_assert!(
        released.windows(2).all(|w| w[0] != w[1]),
        "DP-SIPS rounds must release disjoint sets"
    );
    let result = ReleaseResult {
        per_iteration_counts: trace.records.iter().map(|r| r.released).collect(),
        released,
        elapsed_ms: start.elapsed().as_millis() as u64,
        engine_stages: engine.stages().map_reduce_rounds,
    };
    Ok((result, trace))
}
