use std::io::{self, Write};
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Pareto, Zeta};

use crate::engine::ChunkPlan;
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamKey, StreamRng};
use crate::types::{Dataset, DatasetBuilder, Item, UserId, DEFAULT_SEED};

/// Skewed synthetic corpus: Pareto list lengths, zeta-distributed items.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub num_users: usize,
    pub pareto_scale: f64,
    pub pareto_shape: f64,
    pub zeta_param: f64,
    pub seed: u64,
    /// Optional cap on list length. The Pareto tail is unbounded, so a single
    /// user can otherwise hold billions of items. `None` keeps the exact law.
    pub max_list_len: Option<usize>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_users: 0,
            pareto_scale: 10.0,
            pareto_shape: 1.16,
            zeta_param: 1.1,
            seed: DEFAULT_SEED,
            max_list_len: None,
        }
    }
}

impl SyntheticSpec {
    pub fn with_users(num_users: usize, seed: u64) -> Self {
        SyntheticSpec {
            num_users,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pareto_scale > 0.0 && self.pareto_scale.is_finite()) {
            return Err(Error::invalid(format!("pareto_scale must be positive, got {}", self.pareto_scale)));
        }
        if !(self.pareto_shape > 1.0 && self.pareto_shape.is_finite()) {
            return Err(Error::invalid(format!("pareto_shape must exceed 1, got {}", self.pareto_shape)));
        }
        if !(self.zeta_param > 1.0 && self.zeta_param.is_finite()) {
            return Err(Error::invalid(format!("zeta_param must exceed 1, got {}", self.zeta_param)));
        }
        if self.max_list_len == Some(0) {
            return Err(Error::invalid("max_list_len must be positive"));
        }
        Ok(())
    }

    /// Analytic mean of the continuous Pareto length law.
    pub fn mean_length(&self) -> f64 {
        self.pareto_scale * self.pareto_shape / (self.pareto_shape - 1.0)
    }
}

/// Maps a zeta draw onto `u64` injectively and monotonically.
///
/// Draws below 2⁶³ are exact integers; larger ones (about 1% at s = 1.1)
/// keep their f64 bit pattern with the top bit set, so they land above
/// every small id and stay ordered among themselves.
fn zeta_to_id(x: f64) -> u64 {
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    if x < TWO_63 {
        x as u64
    } else {
        x.to_bits() | (1 << 63)
    }
}

/// One draw k ≥ 1 with P(k) ∝ k^(−s) (Devroye's rejection method).
pub fn zeta_sample<R: Rng + ?Sized>(s: f64, rng: &mut R) -> Result<u64> {
    let z = Zeta::new(s).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(zeta_to_id(z.sample(rng)))
}

/// Pre-validated samplers shared by every user.
#[derive(Clone, Copy)]
struct Sampler {
    lengths: Pareto<f64>,
    items: Zeta<f64>,
    cap: usize,
    key: StreamKey,
}

impl Sampler {
    fn new(spec: &SyntheticSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Sampler {
            lengths: Pareto::new(spec.pareto_scale, spec.pareto_shape).map_err(|e| Error::invalid(e.to_string()))?,
            items: Zeta::new(spec.zeta_param).map_err(|e| Error::invalid(e.to_string()))?,
            cap: spec.max_list_len.unwrap_or(usize::MAX),
            key: StreamKey::new(spec.seed, Domain::Synthetic, 0),
        })
    }

    fn length(&self, rng: &mut StreamRng) -> usize {
        let l = self.lengths.sample(rng).floor();
        if l >= self.cap as f64 {
            self.cap
        } else {
            l as usize
        }
    }

    /// User `index`'s list; depends only on the seed and the index.
    fn user(&self, index: usize, out: &mut Vec<u64>) {
        let mut rng = self.key.rng(index as u64);
        let len = self.length(&mut rng);
        out.clear();
        out.reserve(len);
        out.extend((0..len).map(|_| zeta_to_id(self.items.sample(&mut rng))));
    }
}

/// Pareto list length for one draw, floored. Exposed for distribution tests.
pub fn pareto_length<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<usize> {
    spec.validate()?;
    let p = Pareto::new(spec.pareto_scale, spec.pareto_shape).map_err(|e| Error::invalid(e.to_string()))?;
    let l = p.sample(rng).floor();
    let cap = spec.max_list_len.unwrap_or(usize::MAX);
    Ok(if l >= cap as f64 { cap } else { l as usize })
}

const BLOCK_USERS: usize = 1024;

/// Generates users `range` in parallel and returns blocks in index order.
fn generate_blocks<T, F>(sampler: &Sampler, range: Range<usize>, workers: usize, render: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &[u64], &mut T) + Sync,
    T: Default,
{
    let plan = ChunkPlan::with_chunk_size(range.len(), workers, BLOCK_USERS);
    let per_worker = plan.run(Vec::new, |done: &mut Vec<(usize, T)>, chunk, users| {
        let mut block = T::default();
        let mut buf = Vec::new();
        for i in users {
            let index = range.start + i;
            sampler.user(index, &mut buf);
            render(index, &buf, &mut block);
        }
        done.push((chunk, block));
    });
    let mut all: Vec<(usize, T)> = per_worker.into_iter().flatten().collect();
    all.sort_unstable_by_key(|(chunk, _)| *chunk);
    all.into_iter().map(|(_, b)| b).collect()
}

/// Materializes the corpus in memory. User i gets `UserId(i)`.
pub fn generate_synthetic(spec: &SyntheticSpec, workers: usize) -> Result<Dataset> {
    let sampler = Sampler::new(spec)?;
    let blocks: Vec<Vec<Vec<u64>>> = generate_blocks(&sampler, 0..spec.num_users, workers, |_, items, block: &mut Vec<Vec<u64>>| {
        block.push(items.to_vec());
    });
    let mut builder = DatasetBuilder::default();
    for list in blocks.into_iter().flatten() {
        let user = builder.add_user(UserId(builder.num_users() as u64))?;
        for v in list {
            builder.push_item(user, Item::Id(v));
        }
    }
    Ok(builder.finish())
}

/// Streams the corpus in user-lines format without holding it in memory.
///
/// Output is byte-identical to writing [`generate_synthetic`]'s dataset, for
/// any worker count. Returns the number of observations written.
pub fn write_synthetic<W: Write>(spec: &SyntheticSpec, mut w: W, workers: usize) -> Result<u64> {
    let sampler = Sampler::new(spec)?;
    let window = BLOCK_USERS * 4 * workers.max(1);
    let mut written = 0u64;
    let mut start = 0;
    let io = |e: io::Error| Error::Io {
        path: "<synthetic output>".into(),
        source: e,
    };
    while start < spec.num_users {
        let end = (start + window).min(spec.num_users);
        let blocks = generate_blocks(&sampler, start..end, workers, |_, items, block: &mut (String, u64)| {
            use std::fmt::Write as _;
            for (j, v) in items.iter().enumerate() {
                if j > 0 {
                    block.0.push(' ');
                }
                let _ = write!(block.0, "{v}");
            }
            block.0.push('\n');
            block.1 += items.len() as u64;
        });
        for (text, n) in blocks {
            w.write_all(text.as_bytes()).map_err(io)?;
            written += n;
        }
        start = end;
    }
    w.flush().map_err(io)?;
    Ok(written)
}
