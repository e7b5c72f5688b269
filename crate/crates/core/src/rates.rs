//! Rate expressions for a fixed set of stream covariances: unicast SINR
//! rates, joint-decoding region constraints, successive-decoding stream
//! rates, their robust (imperfect-CSIT) variants, and achieved-rate
//! extraction.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_part, min_eigenvalue, quad_form, trace_re, CMatrix};
use crate::optimizer::layout::RateVars;
use crate::optimizer::{solve_convex, ConstraintBuilder, ConstraintKind, ConstraintTag, ConvexSubproblem, Sense, SolverSettings};
use crate::streams::{DecodingOrder, StreamCollection, StreamId};

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const PSD_TOLERANCE: f64 = 1e-8;

/// One Hermitian PSD covariance per active stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecoderSet {
    antennas: usize,
    #[serde(with = "cov_serde")]
    covs: BTreeMap<StreamId, CMatrix>,
}

impl PrecoderSet {
    pub fn new(antennas: usize) -> Self {
        Self { antennas, covs: BTreeMap::new() }
    }

    pub fn zeros(collection: &StreamCollection, antennas: usize) -> Self {
        let mut p = Self::new(antennas);
        for s in collection.iter() {
            p.covs.insert(s, CMatrix::zeros(antennas, antennas));
        }
        p
    }

    /// Inserts `q` after checking shape, Hermitian symmetry and PSD-ness.
    pub fn insert(&mut self, stream: StreamId, q: CMatrix) -> Result<()> {
        if q.nrows() != self.antennas || q.ncols() != self.antennas {
            return Err(invalid(format!("covariance for {stream} is {}x{}, expected {m}x{m}", q.nrows(), q.ncols(), m = self.antennas)));
        }
        if q.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid(format!("covariance for {stream} has non-finite entries")));
        }
        let asym = (&q - q.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOLERANCE * (1.0 + q.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
            return Err(invalid(format!("covariance for {stream} is not Hermitian (asymmetry {asym:e})")));
        }
        let q = hermitian_part(&q);
        let min_eig = min_eigenvalue(&q);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::NotPsd { min_eig });
        }
        self.covs.insert(stream, q);
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, stream: StreamId, q: CMatrix) {
        self.covs.insert(stream, q);
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn get(&self, stream: StreamId) -> Option<&CMatrix> {
        self.covs.get(&stream)
    }

    pub fn streams(&self) -> StreamCollection {
        StreamCollection::new(self.covs.keys().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (StreamId, &CMatrix)> {
        self.covs.iter().map(|(s, q)| (*s, q))
    }

    pub fn total_power(&self) -> f64 {
        self.covs.values().map(trace_re).sum()
    }

    pub fn stream_power(&self, stream: StreamId) -> f64 {
        self.covs.get(&stream).map(trace_re).unwrap_or(0.0)
    }

    /// Same covariances scaled by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let f = Complex64::new(factor, 0.0);
        Self { antennas: self.antennas, covs: self.covs.iter().map(|(s, q)| (*s, q * f)).collect() }
    }

    /// Covariances for `collection`, zero for streams not present here.
    pub fn restricted_to(&self, collection: &StreamCollection) -> Self {
        let mut out = Self::zeros(collection, self.antennas);
        for s in collection.iter() {
            if let Some(q) = self.covs.get(&s) {
                out.covs.insert(s, q.clone());
            }
        }
        out
    }
}

mod cov_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        stream: String,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    }

    pub fn serialize<S: Serializer>(covs: &BTreeMap<StreamId, CMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = covs
            .iter()
            .map(|(k, q)| Entry {
                stream: k.to_string(),
                re: (0..q.nrows()).map(|i| (0..q.ncols()).map(|j| q[(i, j)].re).collect()).collect(),
                im: (0..q.nrows()).map(|i| (0..q.ncols()).map(|j| q[(i, j)].im).collect()).collect(),
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<StreamId, CMatrix>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for e in entries {
            let id: StreamId = e.stream.parse().map_err(serde::de::Error::custom)?;
            let m = e.re.len();
            let q = CMatrix::from_fn(m, m, |i, j| Complex64::new(e.re[i][j], e.im[i][j]));
            out.insert(id, q);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "SR")]
    SumRate,
    #[serde(rename = "WSR")]
    WeightedSumRate,
    #[serde(rename = "WUR")]
    WorstUserRate,
    #[serde(rename = "PM")]
    PowerMin,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::SumRate => "SR",
            Metric::WeightedSumRate => "WSR",
            Metric::WorstUserRate => "WUR",
            Metric::PowerMin => "PM",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub metric: Metric,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub targets: Vec<f64>,
}

impl UtilitySpec {
    pub fn sum_rate() -> Self {
        Self { metric: Metric::SumRate, weights: Vec::new(), targets: Vec::new() }
    }

    pub fn weighted_sum_rate(weights: Vec<f64>) -> Self {
        Self { metric: Metric::WeightedSumRate, weights, targets: Vec::new() }
    }

    pub fn worst_user_rate() -> Self {
        Self { metric: Metric::WorstUserRate, weights: Vec::new(), targets: Vec::new() }
    }

    pub fn power_min(targets: Vec<f64>) -> Self {
        Self { metric: Metric::PowerMin, weights: Vec::new(), targets }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let check = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != k {
                return Err(invalid(format!("{what} has {} entries for {k} users", v.len())));
            }
            if v.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(invalid(format!("{what} must be finite and nonnegative")));
            }
            Ok(())
        };
        match self.metric {
            Metric::WeightedSumRate => check(&self.weights, "weights"),
            Metric::PowerMin => check(&self.targets, "targets"),
            _ => Ok(()),
        }
    }

    /// Utility of the given per-user rates (total power for PM is supplied separately).
    pub fn evaluate(&self, user_rates: &[f64]) -> f64 {
        match self.metric {
            Metric::SumRate => user_rates.iter().sum(),
            Metric::WeightedSumRate => user_rates.iter().zip(&self.weights).map(|(r, w)| r * w).sum(),
            Metric::WorstUserRate => user_rates.iter().copied().fold(f64::INFINITY, f64::min),
            Metric::PowerMin => f64::NAN,
        }
    }

    /// Whether rate variables are per-user splits rather than aggregated stream rates.
    pub fn uses_splits(&self) -> bool {
        self.metric != Metric::SumRate
    }
}

/// CSIT error variance used to regularize interference terms.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RobustContext {
    pub sigma2: f64,
}

impl RobustContext {
    pub fn nominal() -> Self {
        Self { sigma2: 0.0 }
    }

    pub fn new(sigma2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(invalid(format!("error variance {sigma2} must be finite and nonnegative")));
        }
        Ok(Self { sigma2 })
    }

    pub fn is_robust(&self) -> bool {
        self.sigma2 > 0.0
    }
}

/// Aggregated stream rates, per-user splits, and per-user totals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateAllocation {
    pub stream_rates: BTreeMap<StreamId, f64>,
    /// `(stream, user) → R^(user)_stream`, users 0-based.
    pub splits: BTreeMap<(StreamId, usize), f64>,
    pub user_rates: Vec<f64>,
}

impl RateAllocation {
    /// Builds the allocation from splits, aggregating stream and user rates.
    pub fn from_splits(streams: &StreamCollection, users: usize, splits: BTreeMap<(StreamId, usize), f64>) -> Self {
        let mut stream_rates: BTreeMap<StreamId, f64> = streams.iter().map(|s| (s, 0.0)).collect();
        let mut user_rates = vec![0.0; users];
        for (&(s, k), &r) in &splits {
            *stream_rates.entry(s).or_default() += r;
            user_rates[k] += r;
        }
        Self { stream_rates, splits, user_rates }
    }

    /// Splits every aggregated rate equally among the stream's users.
    pub fn from_stream_rates_equal_split(users: usize, stream_rates: &BTreeMap<StreamId, f64>) -> Self {
        let mut splits = BTreeMap::new();
        for (&s, &r) in stream_rates {
            let share = r / s.cardinality() as f64;
            for k in s.users() {
                splits.insert((s, k), share);
            }
        }
        let streams = StreamCollection::new(stream_rates.keys().copied());
        Self::from_splits(&streams, users, splits)
    }

    pub fn sum_rate(&self) -> f64 {
        self.user_rates.iter().sum()
    }
}

/// Received power `ĥᴴQĥ` and, for the regularizer, `tr Q`.
fn gains(h: &crate::linalg::CVector, q: &CMatrix) -> (f64, f64) {
    (quad_form(h, q).max(0.0), trace_re(q).max(0.0))
}

fn check_user(channels: &ChannelSet, k: usize) -> Result<()> {
    if k >= channels.users() {
        return Err(invalid(format!("user index {k} out of range for {} users", channels.users())));
    }
    Ok(())
}

/// `log2(1 + h_kᴴQ_k h_k / (1 + Σ_{i≠k} h_kᴴQ_i h_k))` over singleton streams.
pub fn unicast_rate(channels: &ChannelSet, q: &PrecoderSet, k: usize) -> Result<f64> {
    check_user(channels, k)?;
    let h = channels.user(k);
    let mut signal = None;
    let mut interference = 0.0;
    for i in 0..channels.users() {
        let qi = q.get(StreamId::singleton(i)).ok_or_else(|| invalid(format!("missing private stream for user {}", i + 1)))?;
        let g = quad_form(&h, qi).max(0.0);
        if i == k {
            signal = Some(g);
        } else {
            interference += g;
        }
    }
    if let Some((s, _)) = q.iter().find(|(s, _)| s.cardinality() > 1) {
        return Err(invalid(format!("unicast rate requires singleton streams only, found {s}")));
    }
    Ok((1.0 + signal.unwrap_or(0.0) / (1.0 + interference)).log2())
}

/// Interference-plus-noise seen by user `k` from streams not containing `k`.
fn external_interference(channels: &ChannelSet, q: &PrecoderSet, k: usize, robust: RobustContext) -> f64 {
    let h = channels.user(k);
    q.iter()
        .filter(|(s, _)| !s.contains(k))
        .map(|(_, qs)| {
            let (g, tr) = gains(&h, qs);
            g + robust.sigma2 * tr
        })
        .sum()
}

/// Right-hand side of the joint-decoding constraint of user `k` for `subset`.
pub fn jd_rhs(channels: &ChannelSet, q: &PrecoderSet, k: usize, subset: &[StreamId], robust: RobustContext) -> Result<f64> {
    check_user(channels, k)?;
    if subset.is_empty() {
        return Err(invalid("joint-decoding subset must be nonempty"));
    }
    let h = channels.user(k);
    let mut desired = 0.0;
    for &s in subset {
        if !s.contains(k) {
            return Err(invalid(format!("stream {s} is not intended for user {}", k + 1)));
        }
        if let Some(qs) = q.get(s) {
            desired += gains(&h, qs).0;
        }
    }
    let noise = 1.0 + external_interference(channels, q, k, robust);
    Ok((1.0 + desired / noise).log2())
}

/// Rate at which user `k` decodes the `n`-th stream (0-based) of its order,
/// treating later streams as noise.
pub fn sd_stream_rate(channels: &ChannelSet, q: &PrecoderSet, order: &DecodingOrder, k: usize, n: usize, robust: RobustContext) -> Result<f64> {
    check_user(channels, k)?;
    let seq = order.of(k);
    if n >= seq.len() {
        return Err(invalid(format!("decoding round {n} out of range for user {} ({} streams)", k + 1, seq.len())));
    }
    let h = channels.user(k);
    let mut noise = 1.0 + external_interference(channels, q, k, robust);
    for s in &seq[n + 1..] {
        if let Some(qs) = q.get(*s) {
            let (g, tr) = gains(&h, qs);
            noise += g + robust.sigma2 * tr;
        }
    }
    let signal = q.get(seq[n]).map(|qs| gains(&h, qs).0).unwrap_or(0.0);
    Ok((1.0 + signal / noise).log2())
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecodingMode {
    Joint,
    Successive(DecodingOrder),
}

/// Largest per-user stream count for which the joint-decoding region is enumerated.
pub const MAX_JOINT_STREAMS_PER_USER: usize = 16;

/// Every nonempty subset of the streams containing `k`, as index lists into
/// `mine` (bitmask order).
pub(crate) fn user_subsets(mine: &[StreamId]) -> Result<impl Iterator<Item = (u64, Vec<StreamId>)> + '_> {
    if mine.len() > MAX_JOINT_STREAMS_PER_USER {
        return Err(invalid(format!("{} streams per user exceed the joint-decoding limit {MAX_JOINT_STREAMS_PER_USER}", mine.len())));
    }
    let count = 1u64 << mine.len();
    Ok((1..count).map(move |mask| {
        let members = mine.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| *s).collect();
        (mask, members)
    }))
}

/// Rates achieved by `q` under `mode`, and the resulting utility.
///
/// Successive decoding: each stream's rate is the minimum over its users of
/// their decode rates. Joint decoding: a linear program over the region.
pub fn achievable_rates(channels: &ChannelSet, q: &PrecoderSet, mode: &DecodingMode, utility: &UtilitySpec, robust: RobustContext) -> Result<(RateAllocation, f64)> {
    let k = channels.users();
    if utility.metric == Metric::PowerMin {
        return Err(invalid("achieved-rate extraction is defined for rate utilities only"));
    }
    utility.validate(k)?;
    let streams = q.streams();
    if let Some(s) = streams.iter().find(|s| !s.is_subset_of(k)) {
        return Err(invalid(format!("stream {s} refers to users beyond {k}")));
    }
    // each entry: (streams in the constraint, capacity)
    let mut caps: Vec<(Vec<StreamId>, f64)> = Vec::new();
    match mode {
        DecodingMode::Successive(order) => {
            let mut rate: BTreeMap<StreamId, f64> = BTreeMap::new();
            for user in 0..k {
                let seq = order.of(user);
                let mine = streams.for_user(user);
                if mine.len() != seq.len() || mine.iter().any(|s| !seq.contains(s)) {
                    return Err(invalid(format!("decoding order of user {} does not cover its active streams", user + 1)));
                }
                for n in 0..seq.len() {
                    let r = sd_stream_rate(channels, q, order, user, n, robust)?;
                    let e = rate.entry(seq[n]).or_insert(f64::INFINITY);
                    *e = e.min(r);
                }
            }
            if utility.metric == Metric::SumRate {
                let alloc = RateAllocation::from_stream_rates_equal_split(k, &rate);
                let u = utility.evaluate(&alloc.user_rates);
                return Ok((alloc, u));
            }
            if utility.metric == Metric::WeightedSumRate {
                let mut splits = BTreeMap::new();
                for (&s, &r) in &rate {
                    let best = s.users().fold(None, |acc: Option<usize>, u| match acc {
                        Some(b) if utility.weights[b] >= utility.weights[u] => Some(b),
                        _ => Some(u),
                    });
                    for u in s.users() {
                        splits.insert((s, u), if Some(u) == best { r } else { 0.0 });
                    }
                }
                let alloc = RateAllocation::from_splits(&streams, k, splits);
                let u = utility.evaluate(&alloc.user_rates);
                return Ok((alloc, u));
            }
            for (s, r) in rate {
                caps.push((vec![s], r));
            }
        }
        DecodingMode::Joint => {
            for user in 0..k {
                let mine = streams.for_user(user);
                for (_, subset) in user_subsets(&mine)? {
                    let r = jd_rhs(channels, q, user, &subset, robust)?;
                    caps.push((subset, r));
                }
            }
        }
    }
    solve_rate_lp(&streams, k, utility, &caps)
}

/// Maximizes the utility over rates subject to `Σ_{K∈S} R_K ≤ cap_S`.
fn solve_rate_lp(streams: &StreamCollection, k: usize, utility: &UtilitySpec, caps: &[(Vec<StreamId>, f64)]) -> Result<(RateAllocation, f64)> {
    let mut sub = ConvexSubproblem::new(Sense::Maximize);
    let vars = RateVars::add(&mut sub, streams, k, utility)?;
    vars.set_objective(&mut sub, utility);
    for (subset, cap) in caps {
        let mut b = ConstraintBuilder::new();
        for s in subset {
            for (i, c) in vars.stream_sum(*s) {
                b.lin(i, c);
            }
        }
        b.constant(-cap);
        sub.constraints.push(b.build(ConstraintKind::LinearInequality, ConstraintTag::Other));
    }
    vars.add_slack_constraints(&mut sub);
    let mut x = vec![0.0; sub.n];
    let cap_list: Vec<(Vec<StreamId>, f64)> = caps.to_vec();
    vars.initial_rates(&mut x, &cap_list);
    let settings = SolverSettings { tolerance: 1e-10, ..SolverSettings::default() };
    let out = solve_convex(&sub, Some(&x), &settings)?;
    let alloc = vars.extract(&out.x, streams, k);
    let u = utility.evaluate(&alloc.user_rates);
    Ok((alloc, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{outer, CVector};

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| Complex64::new(a, b)))
    }

    fn unit_channels() -> ChannelSet {
        ChannelSet::from_columns(&[cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(0.0, 0.0), (1.0, 0.0)])]).unwrap()
    }

    #[test]
    fn matched_single_user_beam() {
        let h = cv(&[(0.6, -0.2), (1.1, 0.4)]);
        let ch = ChannelSet::from_columns(&[h.clone()]).unwrap();
        let p = 5.0;
        let mut q = PrecoderSet::new(2);
        q.insert(StreamId::singleton(0), outer(&h) * Complex64::new(p / h.norm_squared(), 0.0)).unwrap();
        let want = (1.0 + p * h.norm_squared()).log2();
        assert!((unicast_rate(&ch, &q, 0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_covariances_give_zero_rate() {
        let ch = unit_channels();
        let q = PrecoderSet::zeros(&StreamCollection::singletons(2), 2);
        assert_eq!(unicast_rate(&ch, &q, 0).unwrap(), 0.0);
        assert_eq!(unicast_rate(&ch, &q, 1).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_users_get_half_power_rate() {
        let ch = unit_channels();
        let p = 8.0;
        let mut q = PrecoderSet::new(2);
        for k in 0..2 {
            q.insert(StreamId::singleton(k), outer(&ch.user(k)) * Complex64::new(p / 2.0, 0.0)).unwrap();
        }
        for k in 0..2 {
            assert!((unicast_rate(&ch, &q, k).unwrap() - (1.0 + p / 2.0).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn unicast_rejects_missing_or_common_streams() {
        let ch = unit_channels();
        let q = PrecoderSet::zeros(&StreamCollection::new([StreamId::singleton(0)]), 2);
        assert!(unicast_rate(&ch, &q, 0).is_err());
        let q = PrecoderSet::zeros(&StreamCollection::one_layer(2), 2);
        assert!(unicast_rate(&ch, &q, 0).is_err());
    }

    #[test]
    fn insert_validates_covariances() {
        let mut q = PrecoderSet::new(2);
        let bad = CMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert!(matches!(q.insert(StreamId::singleton(0), bad), Err(Error::NotPsd { .. })));
        let asym = CMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(q.insert(StreamId::singleton(0), asym).is_err());
        assert!(q.insert(StreamId::singleton(0), CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn jd_single_stream_without_interferers() {
        let ch = unit_channels();
        let mut q = PrecoderSet::new(2);
        q.insert(StreamId::singleton(0), outer(&ch.user(0)) * Complex64::new(3.0, 0.0)).unwrap();
        let r = jd_rhs(&ch, &q, 0, &[StreamId::singleton(0)], RobustContext::nominal()).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert!(jd_rhs(&ch, &q, 1, &[StreamId::singleton(0)], RobustContext::nominal()).is_err());
    }

    #[test]
    fn single_user_utility_any_mode() {
        let h = cv(&[(0.3, 0.1), (-0.7, 0.9)]);
        let ch = ChannelSet::from_columns(&[h.clone()]).unwrap();
        let mut q = PrecoderSet::new(2);
        let qm = CMatrix::from_row_slice(2, 2, &[Complex64::new(2.0, 0.0), Complex64::new(0.3, 0.4), Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.0)]);
        q.insert(StreamId::singleton(0), qm.clone()).unwrap();
        let want = (1.0 + quad_form(&h, &qm)).log2();
        let (_, u) = achievable_rates(&ch, &q, &DecodingMode::Joint, &UtilitySpec::sum_rate(), RobustContext::nominal()).unwrap();
        assert!((u - want).abs() < 1e-8, "{u} vs {want}");
        let order = DecodingOrder::descending(&q.streams(), 1).unwrap();
        let (_, u) = achievable_rates(&ch, &q, &DecodingMode::Successive(order), &UtilitySpec::sum_rate(), RobustContext::nominal()).unwrap();
        assert!((u - want).abs() < 1e-12);
    }

    #[test]
    fn precoder_set_round_trips_through_json() {
        let mut q = PrecoderSet::new(2);
        let qm = CMatrix::from_row_slice(2, 2, &[Complex64::new(2.0, 0.0), Complex64::new(0.3, 0.4), Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.0)]);
        q.insert(StreamId::from_users(&[0, 1]).unwrap(), qm).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        let back: PrecoderSet = serde_json::from_str(&s).unwrap();
        assert_eq!(q, back);
    }
}
