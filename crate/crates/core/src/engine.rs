//! Data-parallel histogram building, noising and thresholding.
//!
//! Results are identical for every worker count. Per-user truncation and
//! per-item noise come from counter-based streams keyed by user and item id,
//! and histogram weights are accumulated in 64.64 fixed point, so local
//! histograms merge exactly in any order.
//!
//! The engine also keeps a logical count of MapReduce rounds: building a
//! histogram is two rounds (shuffle by user to truncate, shuffle by item to
//! count, noise and threshold) and removing released items is one join
//! round. It does not simulate a network.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::mechanisms::{preprocess_user, sample_noise, NoiseKind};
use crate::rng::StreamKey;
use crate::types::{ItemId, UserRecord, WeightedHistogram};

/// Environment variable consulted by [`default_workers`].
pub const WORKERS_ENV: &str = "PARTSEL_WORKERS";

/// Worker count from `PARTSEL_WORKERS`, else the hardware parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Partition of `0..len` into contiguous chunks processed by a worker pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkPlan {
    chunks: Vec<Range<usize>>,
    workers: usize,
}

impl ChunkPlan {
    /// Chunks of ⌈len / (4·workers)⌉ elements.
    pub fn new(len: usize, workers: usize) -> Self {
        let workers = workers.max(1);
        let size = len.div_ceil(4 * workers).max(1);
        Self::with_chunk_size(len, workers, size)
    }

    pub fn with_chunk_size(len: usize, workers: usize, size: usize) -> Self {
        let size = size.max(1);
        let chunks = (0..len)
            .step_by(size)
            .map(|start| start..(start + size).min(len))
            .collect();
        ChunkPlan {
            chunks,
            workers: workers.max(1),
        }
    }

    pub fn chunks(&self) -> &[Range<usize>] {
        &self.chunks
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `task` on every chunk, handing each worker its own state from
    /// `init`, and returns the per-worker states.
    pub(crate) fn run<S, I, F>(&self, init: I, task: F) -> Vec<S>
    where
        S: Send,
        I: Fn() -> S + Sync,
        F: Fn(&mut S, usize, Range<usize>) + Sync,
    {
        let workers = self.workers.min(self.chunks.len()).max(1);
        if workers == 1 {
            let mut state = init();
            for (i, c) in self.chunks.iter().enumerate() {
                task(&mut state, i, c.clone());
            }
            return vec![state];
        }
        let next = AtomicUsize::new(0);
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut state = init();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(c) = self.chunks.get(i) else { break };
                            task(&mut state, i, c.clone());
                        }
                        state
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("engine worker panicked"))
                .collect()
        })
    }
}

/// Logical MapReduce bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageCounter {
    pub shuffles: u32,
    pub map_reduce_rounds: u32,
}

impl StageCounter {
    pub fn record_histogram(&mut self) {
        self.shuffles += 2;
        self.map_reduce_rounds += 2;
    }

    pub fn record_removal_join(&mut self) {
        self.shuffles += 1;
        self.map_reduce_rounds += 1;
    }
}

/// Rounds used by an `iterations`-round DP-SIPS run: 3(I − 1) + 2.
pub fn stage_count(iterations: usize) -> u32 {
    assert!(iterations >= 1, "iterations must be >= 1");
    3 * (iterations as u32 - 1) + 2
}

/// How each user's list is cut down before contributing.
#[derive(Clone, Copy, Debug)]
pub struct Preprocess {
    pub delta0: usize,
    pub dedup: bool,
    /// Per-user truncation streams, keyed by user id.
    pub stream: StreamKey,
}

const FIXED_SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[inline]
fn to_fixed(w: f64) -> u128 {
    debug_assert!(w.is_finite() && (0.0..1e15).contains(&w));
    (w * FIXED_SCALE) as u128
}

fn merge_into(dst: &mut [u128], src: &[u128]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

/// Pairwise tree reduction of dense fixed-point histograms.
fn tree_merge(mut parts: Vec<Vec<u128>>) -> Vec<u128> {
    while parts.len() > 1 {
        let mut iter = parts.into_iter();
        let mut pairs = Vec::new();
        let mut odd = None;
        loop {
            match (iter.next(), iter.next()) {
                (Some(a), Some(b)) => pairs.push((a, b)),
                (Some(a), None) => {
                    odd = Some(a);
                    break;
                }
                _ => break,
            }
        }
        let mut merged: Vec<Vec<u128>> = if pairs.len() == 1 {
            let (mut a, b) = pairs.pop().unwrap();
            merge_into(&mut a, &b);
            vec![a]
        } else {
            thread::scope(|s| {
                let hs: Vec<_> = pairs
                    .into_iter()
                    .map(|(mut a, b)| {
                        s.spawn(move || {
                            merge_into(&mut a, &b);
                            a
                        })
                    })
                    .collect();
                hs.into_iter().map(|h| h.join().unwrap()).collect()
            })
        };
        merged.extend(odd);
        parts = merged;
    }
    parts.pop().unwrap_or_default()
}

/// Builds the weighted histogram of `users` in parallel.
///
/// Each user's list goes through [`preprocess_user`] with a stream keyed by
/// their id; every kept item then receives `weight_fn(kept_len)`. Weights
/// are summed exactly in fixed point, so the result does not depend on
/// `workers` and equals the correctly rounded sum of the f64 weights.
pub fn parallel_histogram<W>(
    users: &[UserRecord],
    vocab_len: usize,
    prep: &Preprocess,
    weight_fn: W,
    workers: usize,
) -> WeightedHistogram
where
    W: Fn(usize) -> f64 + Sync,
{
    let plan = ChunkPlan::new(users.len(), workers);
    let locals = plan.run(
        || vec![0u128; vocab_len],
        |local, _, range| {
            for user in &users[range] {
                let mut rng = prep.stream.rng(user.user_id.0);
                let kept = preprocess_user(&user.items, prep.delta0, &mut rng, prep.dedup);
                if kept.is_empty() {
                    continue;
                }
                let w = to_fixed(weight_fn(kept.len()));
                for id in kept {
                    local[id.index()] += w;
                }
            }
        },
    );
    dense_fixed_to_histogram(&tree_merge(locals))
}

fn dense_fixed_to_histogram(dense: &[u128]) -> WeightedHistogram {
    let entries = dense
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .map(|(i, &v)| (ItemId(i as u32), v as f64 / FIXED_SCALE))
        .collect();
    WeightedHistogram::from_sorted(entries)
}

/// Dense f64 histogram (from a sequential mechanism) to sparse form.
pub(crate) fn dense_to_histogram(dense: &[f64]) -> WeightedHistogram {
    let entries = dense
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (ItemId(i as u32), v))
        .collect();
    WeightedHistogram::from_sorted(entries)
}

/// Adds one noise draw per support item and keeps items at or above
/// `threshold`. Noise for item `u` comes from `stream.rng(u)`.
pub fn parallel_noise_threshold(
    h: &WeightedHistogram,
    kind: NoiseKind,
    threshold: f64,
    stream: &StreamKey,
    workers: usize,
) -> Vec<ItemId> {
    assert!(threshold.is_finite(), "threshold must be finite");
    let entries = h.entries();
    let plan = ChunkPlan::new(entries.len(), workers);
    let outputs = plan.run(Vec::new, |out: &mut Vec<(usize, Vec<ItemId>)>, idx, range| {
        let kept = entries[range]
            .iter()
            .filter(|&&(id, w)| {
                let mut rng = stream.rng(id.0 as u64);
                w + sample_noise(kind, &mut rng) >= threshold
            })
            .map(|&(id, _)| id)
            .collect();
        out.push((idx, kept));
    });
    let mut parts: Vec<(usize, Vec<ItemId>)> = outputs.into_iter().flatten().collect();
    parts.sort_unstable_by_key(|(i, _)| *i);
    parts.into_iter().flat_map(|(_, v)| v).collect()
}

/// Deletes every occurrence of a masked item from every user's list,
/// keeping the order and multiplicity of the rest.
pub fn parallel_remove(users: &mut [UserRecord], remove: &[bool], workers: usize) {
    if users.is_empty() {
        return;
    }
    let per = users.len().div_ceil(workers.max(1));
    if workers <= 1 {
        for u in users.iter_mut() {
            u.items.retain(|id| !remove[id.index()]);
        }
        return;
    }
    let slices = Mutex::new(users.chunks_mut(per).collect::<Vec<_>>());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let Some(slice) = slices.lock().unwrap().pop() else { break };
                for u in slice.iter_mut() {
                    u.items.retain(|id| !remove[id.index()]);
                }
            });
        }
    });
}

/// A worker pool configuration plus its running stage count.
#[derive(Clone, Debug)]
pub struct Engine {
    workers: usize,
    stages: StageCounter,
}

impl Engine {
    pub fn new(workers: usize) -> Self {
        Engine {
            workers: workers.max(1),
            stages: StageCounter::default(),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn stages(&self) -> StageCounter {
        self.stages
    }

    /// Histogram plus noisy thresholding: one shuffle by user, one by item.
    pub fn histogram<W>(
        &mut self,
        users: &[UserRecord],
        vocab_len: usize,
        prep: &Preprocess,
        weight_fn: W,
    ) -> WeightedHistogram
    where
        W: Fn(usize) -> f64 + Sync,
    {
        self.stages.record_histogram();
        parallel_histogram(users, vocab_len, prep, weight_fn, self.workers)
    }

    pub fn noise_threshold(
        &self,
        h: &WeightedHistogram,
        kind: NoiseKind,
        threshold: f64,
        stream: &StreamKey,
    ) -> Vec<ItemId> {
        parallel_noise_threshold(h, kind, threshold, stream, self.workers)
    }

    /// The join that drops released items from the data.
    pub fn remove_released(&mut self, users: &mut [UserRecord], released: &[ItemId], vocab_len: usize) {
        self.stages.record_removal_join();
        let mut mask = vec![false; vocab_len];
        for id in released {
            mask[id.index()] = true;
        }
        parallel_remove(users, &mask, self.workers);
    }
}
