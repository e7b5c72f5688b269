//! Rate variables shared by the achieved-rate LP and the CCCP subproblems:
//! aggregated `R_K` for sum rate, per-user splits `R^(k)_K` otherwise, and
//! the worst-user slack `y`.

use std::collections::BTreeMap;

use super::problem::{ConstraintBuilder, ConstraintKind, ConstraintTag, ConvexSubproblem, ScalarRole};
use crate::error::Result;
use crate::rates::{Metric, RateAllocation, UtilitySpec};
use crate::streams::{StreamCollection, StreamId};

/// Rates may dip this far below zero inside the barrier; reported rates are clamped.
pub const RATE_FLOOR: f64 = 1e-9;
/// Lower bound of the worst-user slack.
const SLACK_FLOOR: f64 = -1.0;

#[derive(Clone, Debug)]
pub struct RateVars {
    pub stream_vars: BTreeMap<StreamId, usize>,
    pub split_vars: BTreeMap<(StreamId, usize), usize>,
    pub slack: Option<usize>,
    users: usize,
}

impl RateVars {
    pub fn add(sub: &mut ConvexSubproblem, streams: &StreamCollection, users: usize, utility: &UtilitySpec) -> Result<Self> {
        utility.validate(users)?;
        let mut out = Self { stream_vars: BTreeMap::new(), split_vars: BTreeMap::new(), slack: None, users };
        if utility.uses_splits() {
            for s in streams.iter() {
                for k in s.users() {
                    let i = sub.add_scalar(ScalarRole::SplitRate { stream: s, user: k }, -RATE_FLOOR);
                    out.split_vars.insert((s, k), i);
                }
            }
        } else {
            for s in streams.iter() {
                let i = sub.add_scalar(ScalarRole::StreamRate(s), -RATE_FLOOR);
                out.stream_vars.insert(s, i);
            }
        }
        if utility.metric == Metric::WorstUserRate {
            out.slack = Some(sub.add_scalar(ScalarRole::Slack, SLACK_FLOOR));
        }
        Ok(out)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Variables (with unit coefficients) whose sum is `R_K`.
    pub fn stream_sum(&self, s: StreamId) -> Vec<(usize, f64)> {
        if let Some(&i) = self.stream_vars.get(&s) {
            return vec![(i, 1.0)];
        }
        s.users().filter_map(|k| self.split_vars.get(&(s, k)).map(|&i| (i, 1.0))).collect()
    }

    /// Variables whose sum is user `k`'s rate (split layouts only).
    pub fn user_sum(&self, k: usize) -> Vec<(usize, f64)> {
        self.split_vars.iter().filter(|((_, u), _)| *u == k).map(|(_, &i)| (i, 1.0)).collect()
    }

    /// Sets the rate part of the objective; power minimization leaves it untouched.
    pub fn set_objective(&self, sub: &mut ConvexSubproblem, utility: &UtilitySpec) {
        match utility.metric {
            Metric::SumRate => {
                for &i in self.stream_vars.values() {
                    sub.objective[i] = 1.0;
                }
            }
            Metric::WeightedSumRate => {
                for (&(_, k), &i) in &self.split_vars {
                    sub.objective[i] = utility.weights[k];
                }
            }
            Metric::WorstUserRate => {
                if let Some(y) = self.slack {
                    sub.objective[y] = 1.0;
                }
            }
            Metric::PowerMin => {}
        }
    }

    /// `y ≤ Σ_K R^(k)_K` for every user.
    pub fn add_slack_constraints(&self, sub: &mut ConvexSubproblem) {
        let Some(y) = self.slack else { return };
        for k in 0..self.users {
            let mut b = ConstraintBuilder::new();
            b.lin(y, 1.0);
            for (i, c) in self.user_sum(k) {
                b.lin(i, -c);
            }
            sub.constraints.push(b.build(ConstraintKind::LinearInequality, ConstraintTag::WorstUserSlack { user: k }));
        }
    }

    /// `r_k ≤ Σ_K R^(k)_K` for every user.
    pub fn add_target_constraints(&self, sub: &mut ConvexSubproblem, targets: &[f64]) {
        for (k, &r) in targets.iter().enumerate() {
            let mut b = ConstraintBuilder::new();
            b.constant(r);
            for (i, c) in self.user_sum(k) {
                b.lin(i, -c);
            }
            sub.constraints.push(b.build(ConstraintKind::LinearInequality, ConstraintTag::RateTarget { user: k }));
        }
    }

    /// Writes rates that satisfy every `Σ_{K∈S} R_K < cap_S` strictly, given
    /// nonnegative caps: half of each stream's tightest equal share.
    pub fn initial_rates(&self, x: &mut [f64], caps: &[(Vec<StreamId>, f64)]) {
        let mut share: BTreeMap<StreamId, f64> = BTreeMap::new();
        for (subset, cap) in caps {
            let per = cap / subset.len() as f64;
            for s in subset {
                let e = share.entry(*s).or_insert(f64::INFINITY);
                *e = e.min(per);
            }
        }
        let start = |s: StreamId| {
            let v = share.get(&s).copied().unwrap_or(0.0);
            let v = if v.is_finite() { v.max(0.0) } else { 0.0 };
            0.5 * v - 0.5 * RATE_FLOOR
        };
        for (&s, &i) in &self.stream_vars {
            x[i] = start(s);
        }
        for (&(s, _), &i) in &self.split_vars {
            x[i] = start(s) / s.cardinality() as f64;
        }
        if let Some(y) = self.slack {
            let worst = (0..self.users)
                .map(|k| self.user_sum(k).iter().map(|(i, _)| x[*i]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            x[y] = if worst.is_finite() { worst - 0.5 } else { -0.5 };
        }
    }

    /// Stacked rate variables (for the outer-loop step norm).
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = self.stream_vars.values().map(|&i| x[i]).collect();
        v.extend(self.split_vars.values().map(|&i| x[i]));
        if let Some(y) = self.slack {
            v.push(x[y]);
        }
        v
    }

    /// Reported allocation with rates clamped at zero.
    pub fn extract(&self, x: &[f64], streams: &StreamCollection, users: usize) -> RateAllocation {
        if self.split_vars.is_empty() {
            let rates: BTreeMap<StreamId, f64> = streams.iter().map(|s| (s, self.stream_vars.get(&s).map_or(0.0, |&i| x[i].max(0.0)))).collect();
            return RateAllocation::from_stream_rates_equal_split(users, &rates);
        }
        let splits = self.split_vars.iter().map(|(&key, &i)| (key, x[i].max(0.0))).collect();
        RateAllocation::from_splits(streams, users, splits)
    }
}
