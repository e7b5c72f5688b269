//! Linearized convex subproblems of the rate-splitting design problems.
//!
//! Every rate constraint is a difference of two concave log terms. The
//! subtracted term is replaced by its tangent at the previous covariances,
//! which over-estimates it, so every subproblem solution is feasible for the
//! original problem.

use std::collections::BTreeMap;

use super::layout::RateVars;
use super::problem::{ConstraintBuilder, ConstraintKind, ConstraintTag, ConvexSubproblem, Sense};
use crate::channel::ChannelSet;
use crate::error::{invalid, Result};
use crate::linalg::{herm_dim, herm_to_vec, quad_form_coef, CVector};
use crate::rates::{user_subsets, DecodingMode, Metric, PrecoderSet, RobustContext, UtilitySpec};
use crate::streams::{DecodingOrder, StreamCollection, StreamId};

const LN2: f64 = std::f64::consts::LN_2;

/// `L(Q) = constant + Σ_K coef_K · vec(Q_K)` in Hermitian coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub terms: BTreeMap<StreamId, Vec<f64>>,
}

impl AffineForm {
    pub fn evaluate(&self, q: &PrecoderSet) -> f64 {
        let mut v = self.constant;
        for (s, coef) in &self.terms {
            if let Some(qs) = q.get(*s) {
                let mut x = vec![0.0; coef.len()];
                herm_to_vec(qs, &mut x);
                v += coef.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        v
    }
}

/// Per-user coefficient vectors: `desired = coef(ĥĥᴴ)` and
/// `interfering = coef(ĥĥᴴ + σ²I)`.
#[derive(Clone, Debug)]
struct UserCoefs {
    desired: Vec<f64>,
    interfering: Vec<f64>,
}

fn user_coefs(h: &CVector, robust: RobustContext) -> UserCoefs {
    let d = herm_dim(h.len());
    let mut desired = vec![0.0; d];
    let mut interfering = vec![0.0; d];
    quad_form_coef(h, 0.0, &mut desired);
    quad_form_coef(h, robust.sigma2, &mut interfering);
    UserCoefs { desired, interfering }
}

fn dot_cov(coef: &[f64], q: Option<&crate::linalg::CMatrix>) -> f64 {
    match q {
        Some(q) => {
            let mut x = vec![0.0; coef.len()];
            herm_to_vec(q, &mut x);
            coef.iter().zip(&x).map(|(a, b)| a * b).sum()
        }
        None => 0.0,
    }
}

/// Tangent of `log2(1 + Σ_{K∈noise} (ĥᴴQ_Kĥ + σ² tr Q_K))` at `q_prev`.
fn linearize_noise(coefs: &UserCoefs, noise: &[StreamId], q_prev: &PrecoderSet) -> AffineForm {
    let s_prev: f64 = noise.iter().map(|s| dot_cov(&coefs.interfering, q_prev.get(*s))).sum::<f64>().max(0.0);
    let slope = 1.0 / ((1.0 + s_prev) * LN2);
    let mut form = AffineForm { constant: (1.0 + s_prev).log2() - slope * s_prev, terms: BTreeMap::new() };
    for s in noise {
        form.terms.insert(*s, coefs.interfering.iter().map(|c| c * slope).collect());
    }
    form
}

/// Streams of `active` not intended for user `k`.
fn external(active: &StreamCollection, k: usize) -> Vec<StreamId> {
    active.iter().filter(|s| !s.contains(k)).collect()
}

/// First-order expansion at `q_prev` of user `k`'s joint-decoding concave
/// term `log2(1 + Σ_{K∌k} (ĥᴴQ_Kĥ + σ² tr Q_K))`.
pub fn linearize_concave_jd(channels: &ChannelSet, k: usize, q_prev: &PrecoderSet, active: &StreamCollection, robust: RobustContext) -> Result<AffineForm> {
    if k >= channels.users() {
        return Err(invalid(format!("user index {k} out of range")));
    }
    let coefs = user_coefs(&channels.user(k), robust);
    Ok(linearize_noise(&coefs, &external(active, k), q_prev))
}

/// Same for the successive-decoding round `n` of user `k`: external streams
/// plus the streams decoded after round `n`.
pub fn linearize_concave_sd(channels: &ChannelSet, k: usize, n: usize, order: &DecodingOrder, q_prev: &PrecoderSet, robust: RobustContext) -> Result<AffineForm> {
    if k >= channels.users() || k >= order.users() || n >= order.of(k).len() {
        return Err(invalid(format!("decoding round {n} of user {k} out of range")));
    }
    let coefs = user_coefs(&channels.user(k), robust);
    let active = q_prev.streams();
    let mut noise = external(&active, k);
    noise.extend_from_slice(&order.of(k)[n + 1..]);
    Ok(linearize_noise(&coefs, &noise, q_prev))
}

/// The original (nonconvex) design problem.
#[derive(Clone, Debug)]
pub struct DesignProblem {
    /// Channel used for optimization (the estimate under imperfect CSIT).
    pub channels: ChannelSet,
    pub active: StreamCollection,
    pub mode: DecodingMode,
    pub utility: UtilitySpec,
    /// Power budget for rate metrics; power cap for power minimization.
    pub budget: f64,
    pub robust: RobustContext,
}

impl DesignProblem {
    pub fn new(channels: ChannelSet, active: StreamCollection, mode: DecodingMode, utility: UtilitySpec, budget: f64, robust: RobustContext) -> Result<Self> {
        let k = channels.users();
        if active.is_empty() {
            return Err(invalid("active stream collection is empty"));
        }
        if let Some(s) = active.iter().find(|s| !s.is_subset_of(k)) {
            return Err(invalid(format!("stream {s} refers to users beyond {k}")));
        }
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(invalid(format!("power budget {budget} must be positive and finite")));
        }
        utility.validate(k)?;
        if let DecodingMode::Successive(order) = &mode {
            if order.users() != k {
                return Err(invalid("decoding order user count differs from the channel"));
            }
            for u in 0..k {
                let mut seq = order.of(u).to_vec();
                seq.sort();
                if seq != active.for_user(u) {
                    return Err(invalid(format!("decoding order of user {} does not match the active streams", u + 1)));
                }
            }
        }
        Ok(Self { channels, active, mode, utility, budget, robust })
    }

    pub fn users(&self) -> usize {
        self.channels.users()
    }

    pub fn antennas(&self) -> usize {
        self.channels.antennas()
    }
}

/// A subproblem together with the variable maps needed to read it back.
#[derive(Clone, Debug)]
pub struct BuiltSubproblem {
    pub sub: ConvexSubproblem,
    pub vars: RateVars,
    pub blocks: BTreeMap<StreamId, usize>,
}

impl BuiltSubproblem {
    /// Covariances stored in `x`.
    pub fn precoders(&self, x: &[f64], antennas: usize) -> PrecoderSet {
        let mut p = PrecoderSet::new(antennas);
        for (&s, &b) in &self.blocks {
            let blk = &self.sub.blocks[b];
            p.insert_unchecked(s, crate::linalg::vec_to_herm(&x[blk.range()], antennas));
        }
        p
    }

    /// Point with blocks at `q` and rates strictly inside the rate constraints.
    pub fn start_point(&self, q: &PrecoderSet) -> Vec<f64> {
        let mut x = vec![0.0; self.sub.n];
        for (&s, &b) in &self.blocks {
            let blk = &self.sub.blocks[b];
            if let Some(qs) = q.get(s) {
                herm_to_vec(qs, &mut x[blk.range()]);
            }
        }
        // with rates at zero, minus each rate constraint's value is its capacity
        let mut caps = Vec::new();
        for c in &self.sub.constraints {
            let subset = match c.tag {
                ConstraintTag::JointRate { .. } | ConstraintTag::SuccessiveRate { .. } => self.constraint_streams(c),
                _ => continue,
            };
            caps.push((subset, -c.value(&x)));
        }
        self.vars.initial_rates(&mut x, &caps);
        x
    }

    fn constraint_streams(&self, c: &super::problem::Constraint) -> Vec<StreamId> {
        let mut out = Vec::new();
        for (&s, _) in &self.blocks {
            let sum = self.vars.stream_sum(s);
            if sum.iter().any(|(i, _)| c.idx.binary_search(i).map(|p| c.lin[p] != 0.0).unwrap_or(false)) {
                out.push(s);
            }
        }
        out
    }
}

/// Assembles the convex subproblem linearized at `q_prev`.
pub fn build_subproblem(problem: &DesignProblem, q_prev: &PrecoderSet) -> Result<BuiltSubproblem> {
    let k = problem.users();
    let m = problem.antennas();
    let sense = if problem.utility.metric == Metric::PowerMin { Sense::Minimize } else { Sense::Maximize };
    let mut sub = ConvexSubproblem::new(sense);
    let mut blocks = BTreeMap::new();
    for s in problem.active.iter() {
        blocks.insert(s, sub.add_block(Some(s), m));
    }
    let vars = RateVars::add(&mut sub, &problem.active, k, &problem.utility)?;
    vars.set_objective(&mut sub, &problem.utility);
    if problem.utility.metric == Metric::PowerMin {
        for b in &sub.blocks {
            for i in 0..b.dim {
                sub.objective[b.offset + i] = 1.0;
            }
        }
    }
    let offset = |s: StreamId| sub.blocks[blocks[&s]].offset;
    let offsets: BTreeMap<StreamId, usize> = problem.active.iter().map(|s| (s, offset(s))).collect();

    let mut constraints = Vec::new();
    for user in 0..k {
        let coefs = user_coefs(&problem.channels.user(user), problem.robust);
        let mine = problem.active.for_user(user);
        match &problem.mode {
            DecodingMode::Joint => {
                let ext = external(&problem.active, user);
                let tangent = linearize_noise(&coefs, &ext, q_prev);
                for (mask, subset) in user_subsets(&mine)? {
                    let mut b = ConstraintBuilder::new();
                    for s in &subset {
                        for (i, c) in vars.stream_sum(*s) {
                            b.lin(i, c);
                        }
                        b.log_slice(offsets[s], &coefs.desired);
                    }
                    for s in &ext {
                        b.log_slice(offsets[s], &coefs.interfering);
                    }
                    add_tangent(&mut b, &tangent, &offsets);
                    constraints.push(b.build(ConstraintKind::LogAffineInequality, ConstraintTag::JointRate { user, subset: mask }));
                }
            }
            DecodingMode::Successive(order) => {
                let seq = order.of(user);
                let ext = external(&problem.active, user);
                for n in 0..seq.len() {
                    let mut noise = ext.clone();
                    noise.extend_from_slice(&seq[n + 1..]);
                    let tangent = linearize_noise(&coefs, &noise, q_prev);
                    let mut b = ConstraintBuilder::new();
                    for (i, c) in vars.stream_sum(seq[n]) {
                        b.lin(i, c);
                    }
                    b.log_slice(offsets[&seq[n]], &coefs.desired);
                    for s in &noise {
                        b.log_slice(offsets[s], &coefs.interfering);
                    }
                    add_tangent(&mut b, &tangent, &offsets);
                    constraints.push(b.build(ConstraintKind::LogAffineInequality, ConstraintTag::SuccessiveRate { user, round: n }));
                }
            }
        }
    }
    sub.constraints = constraints;
    super::ipm::add_trace_budget(&mut sub, problem.budget, ConstraintTag::PowerBudget);
    vars.add_slack_constraints(&mut sub);
    if problem.utility.metric == Metric::PowerMin {
        vars.add_target_constraints(&mut sub, &problem.utility.targets);
    }
    Ok(BuiltSubproblem { sub, vars, blocks })
}

fn add_tangent(b: &mut ConstraintBuilder, tangent: &AffineForm, offsets: &BTreeMap<StreamId, usize>) {
    b.constant(tangent.constant);
    for (s, coef) in &tangent.terms {
        b.lin_slice(offsets[s], coef, 1.0);
    }
}

/// Number of rate constraints of a subproblem.
pub fn rate_constraint_count(sub: &ConvexSubproblem) -> usize {
    sub.count_constraints(|c| c.is_rate())
}
