//! Stream-set combinatorics: user subsets, per-user collections, maximum
//! non-overlapping collections and the descending-cardinality decoding rule.
//!
//! Users are 0-based internally and printed 1-based, e.g. the stream intended
//! for users 0 and 2 displays as `{1,3}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

pub mod sea;

pub use sea::{sea_reduce, SeaMode};

/// Largest supported user count; streams are 16-bit masks.
pub const MAX_USERS: usize = 16;

/// A nonempty subset of users, stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId(u16);

impl StreamId {
    pub fn from_mask(mask: u16) -> Result<Self> {
        if mask == 0 {
            return Err(invalid("a stream must contain at least one user"));
        }
        Ok(Self(mask))
    }

    pub fn from_users(users: &[usize]) -> Result<Self> {
        let mut mask = 0u16;
        for &u in users {
            if u >= MAX_USERS {
                return Err(Error::TooManyUsers { k: u + 1, max: MAX_USERS });
            }
            mask |= 1 << u;
        }
        Self::from_mask(mask)
    }

    pub fn singleton(user: usize) -> Self {
        Self(1 << user)
    }

    /// The stream intended for all of `[K]`.
    pub fn full(k: usize) -> Self {
        Self(((1u32 << k) - 1) as u16)
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn cardinality(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, user: usize) -> bool {
        self.0 & (1 << user) != 0
    }

    pub fn overlaps(self, other: StreamId) -> bool {
        self.0 & other.0 != 0
    }

    pub fn users(self) -> impl Iterator<Item = usize> {
        (0..MAX_USERS).filter(move |&u| self.0 & (1 << u) != 0)
    }

    pub fn is_subset_of(self, k: usize) -> bool {
        (self.0 as u32) >> k == 0
    }
}

/// Canonical order: by cardinality, then by bitmask.
impl Ord for StreamId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.cardinality(), self.0).cmp(&(other.cardinality(), other.0))
    }
}

impl PartialOrd for StreamId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let users: Vec<String> = self.users().map(|u| (u + 1).to_string()).collect();
        write!(f, "{{{}}}", users.join(","))
    }
}

impl FromStr for StreamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| invalid(format!("stream `{s}` must look like {{1,3}}")))?;
        let users = inner
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(u) if u >= 1 => Ok(u - 1),
                _ => Err(invalid(format!("bad user index in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_users(&users)
    }
}

/// A duplicate-free set of streams kept in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamCollection {
    streams: Vec<StreamId>,
}

impl StreamCollection {
    pub fn new(streams: impl IntoIterator<Item = StreamId>) -> Self {
        let set: BTreeSet<StreamId> = streams.into_iter().collect();
        Self { streams: set.into_iter().collect() }
    }

    pub fn singletons(k: usize) -> Self {
        Self::new((0..k).map(StreamId::singleton))
    }

    /// Private streams plus the stream common to all users.
    pub fn one_layer(k: usize) -> Self {
        Self::new((0..k).map(StreamId::singleton).chain(std::iter::once(StreamId::full(k))))
    }

    pub fn streams(&self) -> &[StreamId] {
        &self.streams
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn contains(&self, s: StreamId) -> bool {
        self.streams.binary_search(&s).is_ok()
    }

    pub fn index_of(&self, s: StreamId) -> Option<usize> {
        self.streams.binary_search(&s).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = StreamId> + '_ {
        self.streams.iter().copied()
    }

    /// Layer view `S_c`: the streams of cardinality `c`.
    pub fn layer(&self, c: usize) -> Vec<StreamId> {
        self.iter().filter(|s| s.cardinality() == c).collect()
    }

    /// `K^(k) ∩ S`: streams of this collection intended for `user`.
    pub fn for_user(&self, user: usize) -> Vec<StreamId> {
        self.iter().filter(|s| s.contains(user)).collect()
    }

    pub fn max_user(&self) -> Option<usize> {
        self.iter().map(|s| 15 - s.mask().leading_zeros() as usize).max()
    }
}

impl fmt::Display for StreamCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

fn check_users(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("user count must be positive"));
    }
    if k > MAX_USERS {
        return Err(Error::TooManyUsers { k, max: MAX_USERS });
    }
    Ok(())
}

/// All `2^K − 1` nonempty subsets of `[K]` in canonical order.
pub fn enumerate_streams(k: usize) -> Result<StreamCollection> {
    check_users(k)?;
    Ok(StreamCollection::new((1..(1u32 << k)).map(|m| StreamId(m as u16))))
}

/// `K^(k)`: the `2^(K−1)` subsets of `[K]` containing `user` (0-based).
pub fn user_collection(k: usize, user: usize) -> Result<StreamCollection> {
    check_users(k)?;
    if user >= k {
        return Err(invalid(format!("user {user} outside [0, {k})")));
    }
    Ok(StreamCollection::new(
        (1..(1u32 << k)).filter(|m| m & (1 << user) != 0).map(|m| StreamId(m as u16)),
    ))
}

/// Per-user decoding orders: `orders[k]` lists the active streams containing `k`
/// in the order user `k` decodes them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodingOrder {
    orders: Vec<Vec<StreamId>>,
}

impl DecodingOrder {
    /// Validates that each list is a permutation of the active streams containing that user.
    pub fn new(orders: Vec<Vec<StreamId>>, active: &StreamCollection) -> Result<Self> {
        for (k, list) in orders.iter().enumerate() {
            let mut sorted = list.clone();
            sorted.sort();
            if sorted != active.for_user(k) {
                return Err(invalid(format!("order of user {} is not a permutation of its active streams", k + 1)));
            }
        }
        if let Some(mu) = active.max_user() {
            if mu >= orders.len() {
                return Err(invalid("decoding order missing users of the active collection"));
            }
        }
        Ok(Self { orders })
    }

    /// Descending-cardinality order for a collection where every user sees
    /// at most one stream per layer.
    pub fn descending(active: &StreamCollection, k: usize) -> Result<Self> {
        let orders = (0..k).map(|u| decoding_order(active, u)).collect::<Result<Vec<_>>>()?;
        Ok(Self { orders })
    }

    pub fn users(&self) -> usize {
        self.orders.len()
    }

    pub fn of(&self, user: usize) -> &[StreamId] {
        &self.orders[user]
    }

    pub fn position(&self, user: usize, s: StreamId) -> Option<usize> {
        self.orders[user].iter().position(|&x| x == s)
    }
}

impl fmt::Display for DecodingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, o) in self.orders.iter().enumerate() {
            let parts: Vec<String> = o.iter().map(|s| s.to_string()).collect();
            write!(f, "{}user {}: {}", if k > 0 { "; " } else { "" }, k + 1, parts.join(" -> "))?;
        }
        Ok(())
    }
}

/// Streams of `collection` containing `user`, by strictly descending cardinality.
pub fn decoding_order(collection: &StreamCollection, user: usize) -> Result<Vec<StreamId>> {
    let mut mine = collection.for_user(user);
    mine.sort_by(|a, b| b.cardinality().cmp(&a.cardinality()).then(a.mask().cmp(&b.mask())));
    if mine.windows(2).any(|w| w[0].cardinality() == w[1].cardinality()) {
        return Err(invalid(format!(
            "user {} sees two streams of equal cardinality; collection overlaps within a layer",
            user + 1
        )));
    }
    Ok(mine)
}

/// All maximal pairwise-disjoint sub-collections of one layer, each sorted,
/// in lexicographic order. An empty layer yields the single empty choice.
pub fn layer_maximal_sets(layer: &[StreamId]) -> Vec<Vec<StreamId>> {
    let mut layer = layer.to_vec();
    layer.sort();
    layer.dedup();
    if layer.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let all: Vec<usize> = (0..layer.len()).collect();
    bron_kerbosch(&layer, &mut Vec::new(), all, Vec::new(), &mut out);
    let mut sets: Vec<Vec<StreamId>> = out
        .into_iter()
        .map(|ix| {
            let mut v: Vec<StreamId> = ix.into_iter().map(|i| layer[i]).collect();
            v.sort();
            v
        })
        .collect();
    sets.sort();
    sets
}

/// Maximal cliques of the disjointness graph, with pivoting.
fn bron_kerbosch(layer: &[StreamId], chosen: &mut Vec<usize>, cand: Vec<usize>, excluded: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cand.is_empty() && excluded.is_empty() {
        out.push(chosen.clone());
        return;
    }
    let disjoint = |a: usize, b: usize| !layer[a].overlaps(layer[b]);
    let pivot = cand
        .iter()
        .chain(excluded.iter())
        .copied()
        .max_by_key(|&u| cand.iter().filter(|&&v| disjoint(u, v)).count())
        .expect("nonempty");
    let branch: Vec<usize> = cand.iter().copied().filter(|&v| !disjoint(pivot, v)).collect();
    let mut cand = cand;
    let mut excluded = excluded;
    for v in branch {
        chosen.push(v);
        let c2 = cand.iter().copied().filter(|&u| u != v && disjoint(u, v)).collect();
        let x2 = excluded.iter().copied().filter(|&u| disjoint(u, v)).collect();
        bron_kerbosch(layer, chosen, c2, x2, out);
        chosen.pop();
        cand.retain(|&u| u != v);
        excluded.push(v);
    }
}

/// Per-layer choices `𝒰_c` and their cross product `𝒰`.
#[derive(Clone, Debug)]
pub struct NonOverlapping {
    /// `layers[c-1]` holds the `D_c` maximal choices for layer `c`.
    pub layers: Vec<Vec<Vec<StreamId>>>,
    pub collections: Vec<StreamCollection>,
}

impl NonOverlapping {
    pub fn layer_counts(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.len()).collect()
    }
}

/// Enumerates every sub-collection whose layers are maximum non-overlapping.
pub fn max_nonoverlapping_collections(collection: &StreamCollection) -> Result<NonOverlapping> {
    if collection.is_empty() {
        return Err(invalid("stream collection is empty"));
    }
    let top = collection.iter().map(|s| s.cardinality()).max().unwrap_or(0);
    let layers: Vec<Vec<Vec<StreamId>>> = (1..=top).map(|c| layer_maximal_sets(&collection.layer(c))).collect();
    let mut collections = vec![Vec::<StreamId>::new()];
    for choices in &layers {
        let mut next = Vec::with_capacity(collections.len() * choices.len());
        for prefix in &collections {
            for choice in choices {
                let mut v = prefix.clone();
                v.extend_from_slice(choice);
                next.push(v);
            }
        }
        collections = next;
    }
    Ok(NonOverlapping { layers, collections: collections.into_iter().map(StreamCollection::new).collect() })
}

/// Upper bound `C(K, K/2)^(N/2)` on the number of selected collections.
pub fn collection_count_bound(k: usize, n_sea: usize) -> f64 {
    let half = k / 2;
    let binom = (0..half).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
    binom.powf(n_sea as f64 / 2.0)
}
