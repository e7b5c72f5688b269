//! Concave-convex outer loop: linearize, solve, repeat until the stacked
//! variable step falls below the tolerance.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::init::{mmse_heuristic, sanitize, scaled_identity, InitMode};
use super::ipm::{minimize_violation, strictly_feasible, SolverSettings};
use super::subproblem::{build_subproblem, DesignProblem};
use crate::error::{Error, Result};
use crate::linalg::frobenius_diff;
use crate::parallel::{self, Execution};
use crate::rates::{jd_rhs, sd_stream_rate, user_subsets, DecodingMode, Metric, PrecoderSet, RateAllocation};
use crate::streams::{DecodingOrder, StreamCollection};

#[derive(Clone, Debug)]
pub struct CccpSettings {
    /// Outer tolerance on the step norm `‖x(i) − x(i−1)‖₂`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// One outer run per entry; `Explicit` entries use `explicit_starts`.
    pub starts: Vec<InitMode>,
    pub explicit_starts: Vec<PrecoderSet>,
    pub solver: SolverSettings,
    pub execution: Execution,
    pub deadline: Option<Instant>,
}

impl Default for CccpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 100,
            starts: vec![InitMode::ScaledIdentity, InitMode::MmseHeuristic, InitMode::UnicastWarmStart],
            explicit_starts: Vec::new(),
            solver: SolverSettings::default(),
            execution: Execution::default(),
            deadline: None,
        }
    }
}

impl CccpSettings {
    pub fn with_starts(mut self, starts: Vec<InitMode>) -> Self {
        self.starts = starts;
        self
    }

    /// Adds an explicit start and makes sure it is used.
    pub fn with_explicit(mut self, q: PrecoderSet) -> Self {
        self.explicit_starts.push(q);
        if !self.starts.contains(&InitMode::Explicit) {
            self.starts.push(InitMode::Explicit);
        }
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self.solver.deadline = deadline;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CccpStatus {
    Converged,
    MaxIterations,
    InfeasibleSubproblem,
}

/// Record of one outer run from one start.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub start: String,
    pub objectives: Vec<f64>,
    pub step_norms: Vec<f64>,
    /// Largest original-constraint value over all accepted iterates.
    pub max_violation: f64,
    pub status: CccpStatus,
}

#[derive(Clone, Debug)]
pub struct CccpResult {
    pub precoders: PrecoderSet,
    pub rates: RateAllocation,
    /// Worst-user slack `y` for the WUR metric.
    pub slack: Option<f64>,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub status: CccpStatus,
    pub start: String,
    pub collection: StreamCollection,
    pub order: Option<DecodingOrder>,
    /// Every run performed on the way to this result (all starts, and for
    /// search modes all candidates).
    pub runs: Vec<RunTrace>,
}

impl CccpResult {
    pub fn max_violation(&self) -> f64 {
        self.runs.iter().map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Total outer iterations across all recorded runs.
    pub fn total_iterations(&self) -> usize {
        self.runs.iter().map(|r| r.objectives.len()).sum()
    }
}

/// Whether `a` beats `b` strictly under the problem's sense.
pub(crate) fn improves(metric: Metric, a: f64, b: f64) -> bool {
    if metric == Metric::PowerMin {
        a < b
    } else {
        a > b
    }
}

/// Largest value of the original constraints at `(q, rates)`: rate region,
/// power budget, and for power minimization the rate targets.
pub fn original_violation(problem: &DesignProblem, q: &PrecoderSet, rates: &RateAllocation) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let k = problem.users();
    match &problem.mode {
        DecodingMode::Joint => {
            for user in 0..k {
                let mine = problem.active.for_user(user);
                for (_, subset) in user_subsets(&mine)? {
                    let lhs: f64 = subset.iter().map(|s| rates.stream_rates.get(s).copied().unwrap_or(0.0)).sum();
                    worst = worst.max(lhs - jd_rhs(&problem.channels, q, user, &subset, problem.robust)?);
                }
            }
        }
        DecodingMode::Successive(order) => {
            for user in 0..k {
                for (n, s) in order.of(user).iter().enumerate() {
                    let lhs = rates.stream_rates.get(s).copied().unwrap_or(0.0);
                    worst = worst.max(lhs - sd_stream_rate(&problem.channels, q, order, user, n, problem.robust)?);
                }
            }
        }
    }
    if problem.utility.metric == Metric::PowerMin {
        for (u, r) in problem.utility.targets.iter().enumerate() {
            worst = worst.max(r - rates.user_rates[u]);
        }
    }
    worst = worst.max(q.total_power() - problem.budget);
    Ok(worst)
}

fn stacked_distance(q_a: &PrecoderSet, r_a: &[f64], q_b: &PrecoderSet, r_b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (s, a) in q_a.iter() {
        if let Some(b) = q_b.get(s) {
            acc += frobenius_diff(a, b).powi(2);
        }
    }
    acc += r_a.iter().zip(r_b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    acc.sqrt()
}

struct SingleRun {
    precoders: PrecoderSet,
    rates: RateAllocation,
    slack: Option<f64>,
    trace: RunTrace,
}

fn check_deadline(deadline: Option<Instant>) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() > d => Err(Error::Timeout),
        _ => Ok(()),
    }
}

/// Makes the first subproblem strictly feasible for power minimization by
/// re-linearizing at the phase-I minimizers until the common slack is negative.
fn restore_feasibility(problem: &DesignProblem, mut q: PrecoderSet, settings: &CccpSettings) -> Result<PrecoderSet> {
    let mut last = f64::INFINITY;
    for _ in 0..settings.max_iterations {
        check_deadline(settings.deadline)?;
        let built = build_subproblem(problem, &q)?;
        let x0 = built.start_point(&q);
        if strictly_feasible(&built.sub, &x0, settings.solver.psd_shift) {
            return Ok(q);
        }
        let (x, s) = minimize_violation(&built.sub, &x0, &settings.solver)?;
        q = sanitize(&built.precoders(&x, problem.antennas()), problem.budget);
        if s < 0.0 {
            return Ok(q);
        }
        if s > last - 1e-9 {
            return Err(Error::Infeasible(format!("rate targets unreachable within power {} (residual {s:e})", problem.budget)));
        }
        last = s;
    }
    Err(Error::Infeasible("feasibility search did not terminate".into()))
}

fn run_from(problem: &DesignProblem, q0: PrecoderSet, label: String, settings: &CccpSettings) -> Result<SingleRun> {
    let metric = problem.utility.metric;
    let k = problem.users();
    let m = problem.antennas();
    let mut q = if metric == Metric::PowerMin {
        restore_feasibility(problem, sanitize(&q0, problem.budget), settings)?
    } else {
        sanitize(&q0, problem.budget)
    };
    let mut objectives = Vec::new();
    let mut steps = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    let mut status = CccpStatus::MaxIterations;
    let mut best: Option<(PrecoderSet, RateAllocation, Option<f64>)> = None;
    let mut prev_rates: Option<Vec<f64>> = None;
    for it in 0..settings.max_iterations {
        check_deadline(settings.deadline)?;
        let built = build_subproblem(problem, &q)?;
        let x0 = built.start_point(&q);
        let out = match super::ipm::solve_convex(&built.sub, Some(&x0), &settings.solver) {
            Ok(o) => o,
            Err(e @ (Error::Infeasible(_) | Error::Numerical(_))) => {
                if it == 0 {
                    return Err(e);
                }
                log::debug!("{label}: subproblem {it} failed ({e}); keeping the previous iterate");
                status = CccpStatus::InfeasibleSubproblem;
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(&last) = objectives.last() {
            if improves(metric, last, out.objective) {
                // no improvement at solver precision: the previous iterate stands
                status = CccpStatus::Converged;
                break;
            }
        }
        let q_new = sanitize(&built.precoders(&out.x, m), problem.budget);
        let rates = built.vars.extract(&out.x, &problem.active, k);
        let rate_vec = built.vars.values(&out.x);
        let prev_r = prev_rates.unwrap_or_else(|| built.vars.values(&x0));
        let step = stacked_distance(&q_new, &rate_vec, &q, &prev_r);
        max_violation = max_violation.max(original_violation(problem, &q_new, &rates)?);
        objectives.push(out.objective);
        steps.push(step);
        let slack = built.vars.slack.map(|i| out.x[i]);
        best = Some((q_new.clone(), rates, slack));
        q = q_new;
        prev_rates = Some(rate_vec);
        if step <= settings.tolerance {
            status = CccpStatus::Converged;
            break;
        }
    }
    let (precoders, rates, slack) = best.ok_or_else(|| Error::Numerical("no outer iteration completed".into()))?;
    Ok(SingleRun { precoders, rates, slack, trace: RunTrace { start: label, objectives, step_norms: steps, max_violation, status } })
}

/// Resolves the configured starts into concrete covariances for `problem`.
pub fn start_points(problem: &DesignProblem, settings: &CccpSettings) -> Result<Vec<(String, PrecoderSet)>> {
    let m = problem.antennas();
    let mut out = Vec::new();
    let mut explicit_used = false;
    for mode in &settings.starts {
        match mode {
            InitMode::ScaledIdentity => out.push(("scaled-identity".to_string(), scaled_identity(&problem.active, m, problem.budget))),
            InitMode::MmseHeuristic => out.push(("mmse-heuristic".to_string(), mmse_heuristic(&problem.channels, &problem.active, problem.budget)?)),
            InitMode::UnicastWarmStart => {
                let singles = StreamCollection::singletons(problem.users());
                if problem.active == singles || problem.utility.metric == Metric::PowerMin || !singles.iter().all(|s| problem.active.contains(s)) {
                    continue;
                }
                let uni = unicast_problem(problem)?;
                let inner = CccpSettings { starts: vec![InitMode::ScaledIdentity, InitMode::MmseHeuristic], explicit_starts: Vec::new(), ..settings.clone() };
                let res = cccp(&uni, &inner)?;
                out.push(("unicast-warm-start".to_string(), res.precoders.restricted_to(&problem.active)));
            }
            InitMode::Explicit => {
                if explicit_used {
                    continue;
                }
                explicit_used = true;
                for (i, q) in settings.explicit_starts.iter().enumerate() {
                    out.push((format!("explicit-{i}"), q.restricted_to(&problem.active)));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no usable start configured".into()));
    }
    Ok(out)
}

fn unicast_problem(problem: &DesignProblem) -> Result<DesignProblem> {
    let singles = StreamCollection::singletons(problem.users());
    DesignProblem::new(problem.channels.clone(), singles, DecodingMode::Joint, problem.utility.clone(), problem.budget, problem.robust)
}

/// Runs the outer loop from every configured start and keeps the best
/// (first in start order on exact ties).
pub fn cccp(problem: &DesignProblem, settings: &CccpSettings) -> Result<CccpResult> {
    let starts = start_points(problem, settings)?;
    let runs = parallel::map(settings.execution, starts, |(label, q)| run_from(problem, q, label, settings));
    let metric = problem.utility.metric;
    let mut best: Option<SingleRun> = None;
    let mut traces = Vec::new();
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(run) => {
                traces.push(run.trace.clone());
                let better = match &best {
                    None => true,
                    Some(b) => improves(metric, *run.trace.objectives.last().unwrap(), *b.trace.objectives.last().unwrap()),
                };
                if better {
                    best = Some(run);
                }
            }
            Err(Error::Timeout) => return Err(Error::Timeout),
            Err(e) => {
                log::debug!("start failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or_else(|| Error::Numerical("no start produced a result".into())));
    };
    let order = match &problem.mode {
        DecodingMode::Successive(o) => Some(o.clone()),
        DecodingMode::Joint => None,
    };
    Ok(CccpResult {
        objective: *best.trace.objectives.last().unwrap(),
        trace: best.trace.objectives.clone(),
        iterations: best.trace.objectives.len(),
        status: best.trace.status,
        start: best.trace.start.clone(),
        precoders: best.precoders,
        rates: best.rates,
        slack: best.slack,
        collection: problem.active.clone(),
        order,
        runs: traces,
    })
}
