use std::collections::HashSet;

use crate::rng::StreamRng;
use crate::types::ItemId;

const LINEAR_DEDUP_MAX: usize = 32;

/// Deduplicates (optionally, keeping first occurrences) and then keeps a
/// uniformly random subset of at most `delta0` items.
///
/// Subsetting is a partial Fisher–Yates shuffle driven by `rng`; no draws
/// are made when the list already fits.
pub fn preprocess_user(items: &[ItemId], delta0: usize, rng: &mut StreamRng, dedup: bool) -> Vec<ItemId> {
    let mut kept: Vec<ItemId> = if !dedup {
        items.to_vec()
    } else if items.len() <= LINEAR_DEDUP_MAX {
        let mut out = Vec::with_capacity(items.len());
        for &id in items {
            if !out.contains(&id) {
                out.push(id);
            }
        }
        out
    } else {
        let mut seen = HashSet::with_capacity(items.len());
        items.iter().copied().filter(|id| seen.insert(*id)).collect()
    };
    if kept.len() > delta0 {
        let n = kept.len();
        for i in 0..delta0 {
            let j = i + rng.below((n - i) as u64) as usize;
            kept.swap(i, j);
        }
        kept.truncate(delta0);
    }
    kept
}
