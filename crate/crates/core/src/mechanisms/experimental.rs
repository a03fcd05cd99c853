//! Iterated DPSU: DPSU rounds on a SIPS-style budget split with removal of
//! released items between rounds. Kept only to reproduce the observation
//! that iterating does not help DPSU; not a supported mechanism.

use std::time::Instant;

use crate::accounting::split_budget;
use crate::engine::parallel_remove;
use crate::error::Result;
use crate::mechanisms::dpsu::dpsu_round;
use crate::types::{Dataset, MechanismConfig, PrivacyBudget, ReleaseResult};

pub fn iterated_dpsu(d: &Dataset, budget: PrivacyBudget, cfg: &MechanismConfig) -> Result<ReleaseResult> {
    cfg.validate()?;
    budget.require_mechanism_ready()?;
    let start = Instant::now();
    let vocab_len = d.vocab().len();
    let mut users = d.users().to_vec();
    let mut released = Vec::new();
    let mut counts = Vec::new();
    for (i, part) in split_budget(budget, cfg.iterations, cfg.ratio)?.into_iter().enumerate() {
        let found = dpsu_round(&users, vocab_len, part, cfg, i as u64)?;
        let mut mask = vec![false; vocab_len];
        for id in &found {
            mask[id.index()] = true;
        }
        parallel_remove(&mut users, &mask, 1);
        counts.push(found.len());
        released.extend(found);
    }
    released.sort_unstable();
    Ok(ReleaseResult {
        released,
        per_iteration_counts: counts,
        elapsed_ms: start.elapsed().as_millis() as u64,
        engine_stages: 0,
    })
}
