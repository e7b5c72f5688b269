//! Searches on top of the outer loop: every decoding order, selected stream
//! collections, and power minimization under rate targets.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::cccp::{cccp, improves, CccpResult, CccpSettings};
use super::init::InitMode;
use super::subproblem::DesignProblem;
use crate::channel::ChannelSet;
use crate::error::{invalid, Error, Result};
use crate::parallel;
use crate::rates::{DecodingMode, Metric, RobustContext, UtilitySpec};
use crate::streams::sea::beam_scores;
use crate::streams::{enumerate_streams, max_nonoverlapping_collections, sea_reduce, DecodingOrder, SeaMode, StreamCollection};

/// Largest user count searched over all decoding orders without an override.
pub const EXHAUSTIVE_MAX_USERS: usize = 3;

/// Every per-user order tuple over the full collection, canonical order:
/// user 1's permutation varies slowest.
pub fn all_decoding_orders(k: usize) -> Result<Vec<DecodingOrder>> {
    let all = enumerate_streams(k)?;
    let per_user: Vec<Vec<Vec<_>>> = (0..k).map(|u| all.for_user(u).into_iter().permutations(1 << (k - 1)).collect()).collect();
    per_user.into_iter().multi_cartesian_product().map(|orders| DecodingOrder::new(orders, &all)).collect()
}

/// Maximizes the utility under successive decoding by running the outer loop
/// for every decoding order on the full collection.
pub fn exhaustive_sd(channels: &ChannelSet, budget: f64, utility: &UtilitySpec, robust: RobustContext, settings: &CccpSettings, override_guard: bool) -> Result<CccpResult> {
    let k = channels.users();
    if k > EXHAUSTIVE_MAX_USERS && !override_guard {
        return Err(invalid(format!("exhaustive order search is limited to {EXHAUSTIVE_MAX_USERS} users (got {k})")));
    }
    if utility.metric == Metric::PowerMin {
        return Err(invalid("order search maximizes a rate utility"));
    }
    let all = enumerate_streams(k)?;
    let orders = all_decoding_orders(k)?;
    let settings = resolve_unicast_start(channels, budget, utility, robust, settings)?;
    let results = parallel::map(settings.execution, orders, |order| {
        let problem = DesignProblem::new(channels.clone(), all.clone(), DecodingMode::Successive(order), utility.clone(), budget, robust)?;
        cccp(&problem, &settings)
    });
    best_of(utility.metric, results)
}

/// Settings for stream selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSettings {
    pub n_sea: usize,
    #[serde(default)]
    pub sea_mode: SeaMode,
    /// Evaluate only this many selected collections, those with the largest
    /// total beam score. `None` evaluates all of them.
    #[serde(default)]
    pub max_collections: Option<usize>,
}

impl SelectionSettings {
    pub fn new(n_sea: usize) -> Self {
        Self { n_sea, sea_mode: SeaMode::PowerRank, max_collections: None }
    }
}

/// The collections evaluated by [`selected_sd`], in evaluation order.
pub fn selected_collections(channels: &ChannelSet, budget: f64, selection: &SelectionSettings) -> Result<Vec<StreamCollection>> {
    let reduced = sea_reduce(channels, budget, selection.n_sea, selection.sea_mode)?;
    let mut collections = max_nonoverlapping_collections(&reduced)?.collections;
    if let Some(limit) = selection.max_collections {
        if collections.len() > limit {
            let streams = reduced.streams().to_vec();
            let scores = beam_scores(channels, budget, &streams)?;
            let score = |c: &StreamCollection| -> f64 { c.iter().map(|s| scores[reduced.index_of(s).expect("selected from reduced")]).sum() };
            let mut ranked: Vec<(f64, StreamCollection)> = collections.into_iter().map(|c| (score(&c), c)).collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
            collections = ranked.into_iter().take(limit.max(1)).map(|(_, c)| c).collect();
        }
    }
    Ok(collections)
}

/// Stream selection: eliminate streams, enumerate the maximum non-overlapping
/// collections, and optimize each under its descending-cardinality order.
pub fn selected_sd(channels: &ChannelSet, budget: f64, utility: &UtilitySpec, selection: &SelectionSettings, robust: RobustContext, settings: &CccpSettings) -> Result<CccpResult> {
    if utility.metric == Metric::PowerMin {
        return Err(invalid("stream selection maximizes a rate utility"));
    }
    let k = channels.users();
    let collections = selected_collections(channels, budget, selection)?;
    let settings = resolve_unicast_start(channels, budget, utility, robust, settings)?;
    let results = parallel::map(settings.execution, collections, |collection| {
        let order = DecodingOrder::descending(&collection, k)?;
        let problem = DesignProblem::new(channels.clone(), collection, DecodingMode::Successive(order), utility.clone(), budget, robust)?;
        cccp(&problem, &settings)
    });
    best_of(utility.metric, results)
}

/// Runs the unicast problem once and replaces the unicast warm-start mode by
/// the resulting explicit start, so that candidates do not repeat it.
fn resolve_unicast_start(channels: &ChannelSet, budget: f64, utility: &UtilitySpec, robust: RobustContext, settings: &CccpSettings) -> Result<CccpSettings> {
    let mut out = settings.clone();
    if !settings.starts.contains(&InitMode::UnicastWarmStart) {
        return Ok(out);
    }
    let k = channels.users();
    let problem = DesignProblem::new(channels.clone(), StreamCollection::singletons(k), DecodingMode::Joint, utility.clone(), budget, robust)?;
    let inner = CccpSettings { starts: settings.starts.iter().copied().filter(|m| *m != InitMode::UnicastWarmStart && *m != InitMode::Explicit).collect(), explicit_starts: Vec::new(), ..settings.clone() };
    let inner = if inner.starts.is_empty() { inner.with_starts(vec![InitMode::ScaledIdentity]) } else { inner };
    let uni = cccp(&problem, &inner)?;
    out.starts.retain(|m| *m != InitMode::UnicastWarmStart);
    Ok(out.with_explicit(uni.precoders))
}

/// Best candidate by strict improvement in candidate order; all run traces
/// are kept. Fails only when every candidate fails.
fn best_of(metric: Metric, results: Vec<Result<CccpResult>>) -> Result<CccpResult> {
    let mut best: Option<CccpResult> = None;
    let mut runs = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(res) => {
                runs.extend(res.runs.iter().cloned());
                if best.as_ref().map_or(true, |b| improves(metric, res.objective, b.objective)) {
                    best = Some(res);
                }
            }
            Err(Error::Timeout) => return Err(Error::Timeout),
            Err(e) => {
                log::debug!("candidate failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| first_err.unwrap_or_else(|| Error::Numerical("no candidate to evaluate".into())))?;
    best.runs = runs;
    Ok(best)
}

/// Default power cap for power minimization.
pub const DEFAULT_POWER_CAP: f64 = 1e7;

/// Minimizes total power subject to per-user rate targets under joint
/// decoding, with `tr(Q) ≤ cap`.
pub fn minimize_power(targets: &[f64], channels: &ChannelSet, active: &StreamCollection, robust: RobustContext, cap: f64, settings: &CccpSettings) -> Result<CccpResult> {
    let k = channels.users();
    if targets.len() != k {
        return Err(invalid(format!("{} rate targets for {k} users", targets.len())));
    }
    let problem = DesignProblem::new(channels.clone(), active.clone(), DecodingMode::Joint, UtilitySpec::power_min(targets.to_vec()), cap, robust)?;
    let mut settings = settings.clone();
    settings.starts.retain(|m| *m != InitMode::UnicastWarmStart);
    if settings.starts.is_empty() {
        settings.starts.push(InitMode::ScaledIdentity);
    }
    cccp(&problem, &settings)
}
