//! Stream elimination: shrink the candidate streams to a budget while keeping
//! every private stream.

use serde::{Deserialize, Serialize};

use super::{enumerate_streams, StreamCollection, StreamId};
use crate::channel::ChannelSet;
use crate::error::{invalid, Result};
use crate::optimizer::init::{mmse_heuristic, regularized_inverse, stream_beam};
use crate::optimizer::ipm::{solve_convex, SolverSettings};
use crate::optimizer::subproblem::{build_subproblem, DesignProblem};
use crate::rates::{DecodingMode, RobustContext, UtilitySpec};

/// Largest user count accepted by [`SeaMode::GreedyReopt`].
pub const GREEDY_MAX_USERS: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeaMode {
    /// Rank common streams by the gain of their regularized-inverse beam.
    #[default]
    PowerRank,
    /// Repeatedly drop the common stream whose removal costs the least
    /// one-step sum rate.
    GreedyReopt,
}

/// Beam gain `Σ_{k∈K} |h_kᴴ v_K|²` of every stream under unit-norm
/// regularized-inverse beams.
pub fn beam_scores(channels: &ChannelSet, budget: f64, streams: &[StreamId]) -> Result<Vec<f64>> {
    let w = regularized_inverse(channels, channels.users() as f64 / budget)?;
    Ok(streams
        .iter()
        .map(|&s| {
            let v = stream_beam(channels, &w, s);
            s.users().map(|u| channels.user(u).dotc(&v).norm_sqr()).sum()
        })
        .collect())
}

/// Reduces the `2^K − 1` streams to at most `n_sea`, always keeping the `K`
/// singletons. With power ranking the all-user stream is also kept whenever
/// the budget leaves room for it.
pub fn sea_reduce(channels: &ChannelSet, budget: f64, n_sea: usize, mode: SeaMode) -> Result<StreamCollection> {
    let k = channels.users();
    if n_sea < k {
        return Err(invalid(format!("stream budget {n_sea} is below the user count {k}")));
    }
    if !(budget > 0.0) {
        return Err(invalid("power budget must be positive"));
    }
    let all = enumerate_streams(k)?;
    if n_sea >= all.len() {
        return Ok(all);
    }
    match mode {
        SeaMode::PowerRank => power_rank(channels, budget, n_sea, &all),
        SeaMode::GreedyReopt => greedy_reopt(channels, budget, n_sea, all),
    }
}

fn power_rank(channels: &ChannelSet, budget: f64, n_sea: usize, all: &StreamCollection) -> Result<StreamCollection> {
    let k = channels.users();
    let full = StreamId::full(k);
    let mut keep: Vec<StreamId> = all.iter().filter(|s| s.cardinality() == 1).collect();
    if k > 1 && n_sea > k {
        keep.push(full);
    }
    let candidates: Vec<StreamId> = all.iter().filter(|s| s.cardinality() > 1 && *s != full).collect();
    let scores = beam_scores(channels, budget, &candidates)?;
    let mut ranked: Vec<(StreamId, f64)> = candidates.into_iter().zip(scores).collect();
    // stable on ties: canonical order decides
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let room = n_sea.saturating_sub(keep.len());
    keep.extend(ranked.into_iter().take(room).map(|(s, _)| s));
    Ok(StreamCollection::new(keep))
}

/// One linearize-and-solve step of the JD sum-rate problem from the MMSE start.
fn one_step_sum_rate(channels: &ChannelSet, budget: f64, active: &StreamCollection) -> Result<f64> {
    let problem = DesignProblem::new(channels.clone(), active.clone(), DecodingMode::Joint, UtilitySpec::sum_rate(), budget, RobustContext::nominal())?;
    let q0 = crate::optimizer::init::shrink_into_budget(&mmse_heuristic(channels, active, budget)?, budget);
    let built = build_subproblem(&problem, &q0)?;
    let x0 = built.start_point(&q0);
    Ok(solve_convex(&built.sub, Some(&x0), &SolverSettings::default())?.objective)
}

fn greedy_reopt(channels: &ChannelSet, budget: f64, n_sea: usize, all: StreamCollection) -> Result<StreamCollection> {
    let k = channels.users();
    if k > GREEDY_MAX_USERS {
        return Err(invalid(format!("greedy elimination supports at most {GREEDY_MAX_USERS} users, got {k}")));
    }
    let mut current: Vec<StreamId> = all.streams().to_vec();
    while current.len() > n_sea {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in current.iter().enumerate() {
            if s.cardinality() == 1 {
                continue;
            }
            let trial: Vec<StreamId> = current.iter().copied().filter(|t| t != s).collect();
            let value = one_step_sum_rate(channels, budget, &StreamCollection::new(trial))?;
            if best.map_or(true, |(_, b)| value > b) {
                best = Some((i, value));
            }
        }
        let (i, _) = best.expect("a common stream remains while above budget");
        current.remove(i);
    }
    Ok(StreamCollection::new(current))
}
