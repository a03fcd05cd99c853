//! Domain types shared by every module.
//!
//! Items are interned into a [`Vocabulary`] sorted by [`Item`] order, so an
//! [`ItemId`] compares exactly like the item it names and does not depend on
//! the order in which users were ingested.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// An opaque token from the item universe.
///
/// Numeric ids sort before text tokens; within a kind the natural order
/// applies.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    Id(u64),
    Text(Box<str>),
}

impl Item {
    /// Parses a whitespace-free token.
    ///
    /// Canonical decimal integers (no sign, no leading zeros) become
    /// [`Item::Id`]; anything else is kept verbatim as text. The mapping is
    /// injective, so `"007"` and `"7"` stay distinct.
    pub fn parse_token(token: &str) -> Item {
        let canonical = !token.is_empty()
            && token.bytes().all(|b| b.is_ascii_digit())
            && (token == "0" || !token.starts_with('0'));
        if canonical {
            if let Ok(v) = token.parse::<u64>() {
                return Item::Id(v);
            }
        }
        Item::Text(token.into())
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Id(v) => write!(f, "{v}"),
            Item::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Item {
    fn from(s: &str) -> Self {
        Item::Text(s.into())
    }
}

impl From<u64> for Item {
    fn from(v: u64) -> Self {
        Item::Id(v)
    }
}

/// Dense index into a [`Vocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserId(pub u64);

/// Sorted, deduplicated item table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    items: Vec<Item>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: ItemId) -> &Item {
        &self.items[id.index()]
    }

    pub fn lookup(&self, item: &Item) -> Option<ItemId> {
        self.items
            .binary_search(item)
            .ok()
            .map(|i| ItemId(i as u32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, &Item)> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, it)| (ItemId(i as u32), it))
    }
}

/// One user's contribution: an ordered list of items, duplicates allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: UserId,
    pub items: Vec<ItemId>,
}

/// An ordered collection of users over a shared vocabulary.
///
/// Immutable once built; cloning is cheap for the vocabulary (shared) but
/// copies the user lists.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    vocab: Arc<Vocabulary>,
    users: Vec<UserRecord>,
}

impl Dataset {
    /// Builds a dataset from raw user lists, interning every item.
    ///
    /// Fails with [`Error::DuplicateUser`] when two users share an id.
    pub fn from_users<I, L>(users: I) -> Result<Dataset>
    where
        I: IntoIterator<Item = (UserId, L)>,
        L: IntoIterator<Item = Item>,
    {
        let mut b = DatasetBuilder::default();
        for (user_id, items) in users {
            let idx = b.add_user(user_id)?;
            for item in items {
                b.push_item(idx, item);
            }
        }
        Ok(b.finish())
    }

    /// Users numbered `0..n` in iteration order.
    pub fn from_lists<I, L>(lists: I) -> Dataset
    where
        I: IntoIterator<Item = L>,
        L: IntoIterator<Item = Item>,
    {
        Dataset::from_users(
            lists
                .into_iter()
                .enumerate()
                .map(|(i, l)| (UserId(i as u64), l)),
        )
        .expect("sequential user ids are unique")
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_observations(&self) -> usize {
        self.users.iter().map(|u| u.items.len()).sum()
    }

    /// The first `n` users, sharing this dataset's vocabulary.
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            vocab: Arc::clone(&self.vocab),
            users: self.users[..n.min(self.users.len())].to_vec(),
        }
    }

    pub fn resolve(&self, ids: &[ItemId]) -> Vec<Item> {
        ids.iter().map(|&id| self.vocab.item(id).clone()).collect()
    }
}

/// Incremental dataset construction with streaming interning.
///
/// Items get provisional ids in first-seen order; [`DatasetBuilder::finish`]
/// sorts the vocabulary and rewrites every list.
#[derive(Debug, Default)]
pub struct DatasetBuilder {
    numeric: HashMap<u64, u32>,
    text: HashMap<Box<str>, u32>,
    items: Vec<Item>,
    users: Vec<UserRecord>,
    user_ids: HashSet<UserId>,
}

impl DatasetBuilder {
    /// Appends an empty user and returns its position.
    pub fn add_user(&mut self, user_id: UserId) -> Result<usize> {
        if !self.user_ids.insert(user_id) {
            return Err(Error::DuplicateUser(user_id.0));
        }
        self.users.push(UserRecord {
            user_id,
            items: Vec::new(),
        });
        Ok(self.users.len() - 1)
    }

    pub fn push_item(&mut self, user: usize, item: Item) {
        let next = self.items.len() as u32;
        let id = match &item {
            Item::Id(v) => *self.numeric.entry(*v).or_insert(next),
            Item::Text(t) => match self.text.get(t) {
                Some(&id) => id,
                None => {
                    self.text.insert(t.clone(), next);
                    next
                }
            },
        };
        if id == next {
            self.items.push(item);
        }
        self.users[user].items.push(ItemId(id));
    }

    /// Like [`push_item`](Self::push_item) on [`Item::parse_token`], without
    /// allocating for tokens already seen.
    pub fn push_token(&mut self, user: usize, token: &str) {
        if let Some(&id) = self.text.get(token) {
            self.users[user].items.push(ItemId(id));
            return;
        }
        self.push_item(user, Item::parse_token(token));
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn finish(self) -> Dataset {
        let DatasetBuilder {
            items, mut users, ..
        } = self;
        let mut order: Vec<u32> = (0..items.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| items[a as usize].cmp(&items[b as usize]));
        let mut remap = vec![0u32; items.len()];
        for (sorted, &provisional) in order.iter().enumerate() {
            remap[provisional as usize] = sorted as u32;
        }
        for rec in &mut users {
            for id in &mut rec.items {
                *id = ItemId(remap[id.index()]);
            }
        }
        let mut slots: Vec<Option<Item>> = items.into_iter().map(Some).collect();
        let sorted = order
            .iter()
            .map(|&p| slots[p as usize].take().expect("each item moved once"))
            .collect();
        Dataset {
            vocab: Arc::new(Vocabulary { items: sorted }),
            users,
        }
    }
}

/// Exact union of all items held by any user, as sorted ids.
pub fn dataset_support(d: &Dataset) -> Vec<ItemId> {
    let mut present = vec![false; d.vocab().len()];
    for user in d.users() {
        for id in &user.items {
            present[id.index()] = true;
        }
    }
    present
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| ItemId(i as u32))
        .collect()
}

/// Sparse item → weight map; only strictly positive weights are stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedHistogram {
    entries: Vec<(ItemId, f64)>,
}

impl WeightedHistogram {
    /// Builds from arbitrary entries: sorts by id and drops non-positive
    /// weights. Ids must be unique.
    pub fn from_entries(mut entries: Vec<(ItemId, f64)>) -> Self {
        entries.retain(|&(_, w)| w > 0.0);
        entries.sort_unstable_by_key(|&(id, _)| id);
        debug_assert!(entries.windows(2).all(|w| w[0].0 != w[1].0));
        WeightedHistogram { entries }
    }

    pub(crate) fn from_sorted(entries: Vec<(ItemId, f64)>) -> Self {
        WeightedHistogram { entries }
    }

    pub fn get(&self, id: ItemId) -> f64 {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[(ItemId, f64)] {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// δ-approximate ρ-zCDP parameters.
///
/// Accepts ρ ≥ 0 and δ ∈ [0, 1] so that accounting identities (pure zCDP,
/// total failure) can be expressed; mechanisms additionally require ρ > 0
/// and δ < 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrivacyBudget {
    pub rho: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(rho: f64, delta: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::invalid(format!("rho must be finite and >= 0, got {rho}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(PrivacyBudget { rho, delta })
    }

    pub(crate) fn require_mechanism_ready(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::invalid(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// (ε, δ)-DP parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxDpParams {
    pub epsilon: f64,
    pub delta_dp: f64,
}

impl ApproxDpParams {
    pub fn new(epsilon: f64, delta_dp: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(delta_dp > 0.0 && delta_dp < 1.0) {
            return Err(Error::invalid(format!(
                "delta_dp must lie in (0, 1), got {delta_dp}"
            )));
        }
        Ok(ApproxDpParams { epsilon, delta_dp })
    }
}

/// How GW cuts a user's distinct items down to Δ₀.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GwTruncation {
    /// Keep the Δ₀ most frequent items (ties by item order).
    #[default]
    TopFrequency,
    /// Uniformly sample Δ₀ distinct items.
    Uniform,
}

/// Largest contribution bound accepted; the threshold scan is linear in it.
pub const MAX_DELTA0: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct MechanismConfig {
    pub delta0: usize,
    pub iterations: usize,
    pub ratio: f64,
    pub seed: u64,
    /// Engine worker threads; at least 1.
    pub workers: usize,
    /// Overrides the default T* − T margin for DPSU and GW.
    pub buffer: Option<f64>,
    pub gw_truncation: GwTruncation,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            delta0: 100,
            iterations: 3,
            ratio: 1.0 / 3.0,
            seed: DEFAULT_SEED,
            workers: crate::engine::default_workers(),
            buffer: None,
            gw_truncation: GwTruncation::TopFrequency,
        }
    }
}

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EED_2023;

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta0 == 0 || self.delta0 > MAX_DELTA0 {
            return Err(Error::invalid(format!(
                "delta0 must lie in [1, {MAX_DELTA0}], got {}",
                self.delta0
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(Error::invalid(format!("ratio must be > 0, got {}", self.ratio)));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be >= 1"));
        }
        if let Some(b) = self.buffer {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid(format!("buffer must be >= 0, got {b}")));
            }
        }
        Ok(())
    }

    /// Non-fatal configuration concerns worth showing to an operator.
    pub fn warnings(&self, d: &Dataset, delta: f64) -> Vec<String> {
        let mut out = Vec::new();
        let longest = d.users().iter().map(|u| u.items.len()).max().unwrap_or(0);
        if self.delta0 > longest && delta > 0.5 {
            out.push(format!(
                "delta0 = {} exceeds every user's list length ({longest}) while delta = {delta} > 0.5; \
                 the threshold is valid but utility is not meaningful in this regime",
                self.delta0
            ));
        }
        out
    }
}

/// Output of a partition-selection mechanism.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReleaseResult {
    /// Released items, sorted.
    pub released: Vec<ItemId>,
    pub per_iteration_counts: Vec<usize>,
    pub elapsed_ms: u64,
    /// Logical MapReduce rounds used; 0 for the sequential mechanisms.
    pub engine_stages: u32,
}

impl ReleaseResult {
    pub fn count(&self) -> usize {
        self.released.len()
    }
}
