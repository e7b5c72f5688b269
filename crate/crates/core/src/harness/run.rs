//! Monte-Carlo experiment engine.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use super::config::{ExperimentConfig, Scheme, SchemeSpec};
use crate::baselines::{one_layer_rs, sum_capacity, unicast_scheme, zf_scheme, BaselineResult};
use crate::channel::{apply_csit_error, draw_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::optimizer::{cccp, exhaustive_sd, minimize_power, selected_sd, CccpResult, CccpSettings, DesignProblem, InitMode, RunTrace};
use crate::parallel::{self, Execution};
use crate::rates::{achievable_rates, DecodingMode, Metric, PrecoderSet, RobustContext, UtilitySpec};
use crate::rng::mix_seed;
use crate::streams::{enumerate_streams, StreamCollection, StreamId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Timeout,
    Error,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::Timeout => "timeout",
            RowStatus::Error => "error",
        })
    }
}

/// One (trial, grid point, scheme) outcome.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub config_hash: String,
    pub trial: usize,
    pub seed: u64,
    pub scheme: SchemeSpec,
    pub p_db: f64,
    pub sigma2: f64,
    pub metric: Metric,
    /// Utility achieved on the true channel (total power for power minimization).
    pub utility: f64,
    pub rates_user: Vec<f64>,
    pub streams: Vec<StreamId>,
    pub rates_stream: Vec<f64>,
    pub iters: usize,
    pub ms: u64,
    pub status: RowStatus,
    pub message: Option<String>,
    pub precoders: Option<PrecoderSet>,
    pub mode: Option<DecodingMode>,
    /// Outer-loop traces behind this row, for contract checks.
    pub runs: Vec<RunTrace>,
}

impl TrialRecord {
    fn sort_key(&self, config: &ExperimentConfig) -> (usize, usize, usize, usize) {
        let pos = |v: &[f64], x: f64| v.iter().position(|y| *y == x).unwrap_or(usize::MAX);
        let scheme = config.schemes.iter().position(|s| *s == self.scheme).unwrap_or(usize::MAX);
        (self.trial, pos(&config.sigma2, self.sigma2), pos(&config.p_db, self.p_db), scheme)
    }
}

/// Mean and standard deviation over the ok rows of one grid point and scheme.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub p_db: f64,
    pub sigma2: f64,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub elapsed: Duration,
}

impl ExperimentOutput {
    pub fn all_ok(&self) -> bool {
        self.records.iter().all(|r| r.status == RowStatus::Ok)
    }

    /// Mean utility of `scheme` at a grid point, over ok rows.
    pub fn mean(&self, scheme: &str, p_db: f64, sigma2: f64) -> Option<f64> {
        self.summary.iter().find(|s| s.scheme == scheme && s.p_db == p_db && s.sigma2 == sigma2).map(|s| s.mean)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for trials (`None`: the global pool).
    pub jobs: Option<usize>,
    pub execution: Execution,
}

/// Seed of trial `t`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    mix_seed(base, trial as u64)
}

/// Channels `(truth, estimate)` of one trial at one error variance.
pub fn trial_channels(config: &ExperimentConfig, seed: u64, sigma2: f64) -> Result<(ChannelSet, ChannelSet)> {
    if sigma2 > 0.0 {
        let split = apply_csit_error(config.users, config.antennas, sigma2, seed)?;
        Ok((split.truth, split.estimate))
    } else {
        let h = draw_channels(&config.channel, config.users, config.antennas, seed)?;
        Ok((h.clone(), h))
    }
}

pub fn power_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Decoding mode under which a scheme's precoders are evaluated.
pub fn evaluation_mode(result: &CccpResult) -> DecodingMode {
    match &result.order {
        Some(o) => DecodingMode::Successive(o.clone()),
        None => DecodingMode::Joint,
    }
}

struct Outcome {
    utility: f64,
    rates_user: Vec<f64>,
    stream_rates: BTreeMap<StreamId, f64>,
    iters: usize,
    precoders: Option<PrecoderSet>,
    mode: Option<DecodingMode>,
    runs: Vec<RunTrace>,
}

/// Richest solution so far along unicast → one-layer RS, per regularization variant.
#[derive(Default)]
struct Chain {
    unicast: Option<PrecoderSet>,
    one_layer: Option<PrecoderSet>,
}

impl Chain {
    fn start_for(&self, scheme: Scheme) -> Option<&PrecoderSet> {
        match scheme {
            Scheme::OneLayerRs => self.unicast.as_ref(),
            Scheme::RsJd | Scheme::RsSdExhaustive | Scheme::RsSdSelected => self.one_layer.as_ref().or(self.unicast.as_ref()),
            _ => None,
        }
    }
}

/// Replaces the unicast warm start by an explicit chain start.
fn with_chain_start(mut s: CccpSettings, start: Option<&PrecoderSet>) -> CccpSettings {
    if let Some(q) = start {
        s.starts.retain(|m| *m != InitMode::UnicastWarmStart);
        s = s.with_explicit(q.clone());
    }
    s
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    truth: &'a ChannelSet,
    estimate: &'a ChannelSet,
    budget: f64,
    robust: RobustContext,
    utility: UtilitySpec,
    settings: CccpSettings,
}

fn evaluate_on_truth(ctx: &Context, res: CccpResult) -> Result<Outcome> {
    let mode = evaluation_mode(&res);
    let (alloc, utility) = achievable_rates(ctx.truth, &res.precoders, &mode, &ctx.utility, RobustContext::nominal())?;
    Ok(Outcome {
        utility,
        rates_user: alloc.user_rates,
        stream_rates: alloc.stream_rates,
        iters: res.iterations,
        precoders: Some(res.precoders.clone()),
        mode: Some(mode),
        runs: res.runs,
    })
}

fn baseline_outcome(ctx: &Context, b: BaselineResult) -> Result<Outcome> {
    match b.cccp {
        Some(res) => evaluate_on_truth(ctx, res),
        None => {
            let Some(q) = b.precoders else {
                return Ok(Outcome { utility: b.sum_rate, rates_user: b.user_rates, stream_rates: b.stream_rates, iters: b.iterations, precoders: None, mode: None, runs: Vec::new() });
            };
            let (alloc, utility) = achievable_rates(ctx.truth, &q, &DecodingMode::Joint, &ctx.utility, RobustContext::nominal())?;
            Ok(Outcome { utility, rates_user: alloc.user_rates, stream_rates: alloc.stream_rates, iters: b.iterations, precoders: Some(q), mode: Some(DecodingMode::Joint), runs: Vec::new() })
        }
    }
}

fn evaluate(ctx: &Context, scheme: Scheme, start: Option<&PrecoderSet>) -> Result<Outcome> {
    let metric = ctx.utility.metric;
    if metric != Metric::SumRate && matches!(scheme, Scheme::Capacity | Scheme::Zf | Scheme::Unicast | Scheme::OneLayerRs) {
        return Err(Error::InvalidInput(format!("{} is defined for the sum-rate metric only", scheme.tag())));
    }
    if metric == Metric::PowerMin && scheme != Scheme::RsJd {
        return Err(Error::InvalidInput("power minimization is available for rs-jd only".into()));
    }
    let settings = with_chain_start(ctx.settings.clone(), start);
    match scheme {
        Scheme::Capacity => baseline_outcome(ctx, sum_capacity(ctx.truth, ctx.budget)?),
        Scheme::Zf => baseline_outcome(ctx, zf_scheme(ctx.estimate, ctx.budget)?),
        Scheme::Unicast => baseline_outcome(ctx, unicast_scheme(ctx.estimate, ctx.budget, ctx.robust, &settings)?),
        Scheme::OneLayerRs => baseline_outcome(ctx, one_layer_rs(ctx.estimate, ctx.budget, ctx.robust, &settings)?),
        Scheme::RsJd => {
            let all = enumerate_streams(ctx.config.users)?;
            if metric == Metric::PowerMin {
                let res = minimize_power(&ctx.utility.targets, ctx.estimate, &all, ctx.robust, ctx.budget, &settings)?;
                let power = res.precoders.total_power();
                let mut out = Outcome {
                    utility: power,
                    rates_user: res.rates.user_rates.clone(),
                    stream_rates: res.rates.stream_rates.clone(),
                    iters: res.iterations,
                    precoders: Some(res.precoders.clone()),
                    mode: Some(DecodingMode::Joint),
                    runs: res.runs,
                };
                if ctx.robust.is_robust() {
                    let (alloc, _) = achievable_rates(ctx.truth, out.precoders.as_ref().expect("set"), &DecodingMode::Joint, &UtilitySpec::sum_rate(), RobustContext::nominal())?;
                    out.rates_user = alloc.user_rates;
                    out.stream_rates = alloc.stream_rates;
                }
                return Ok(out);
            }
            let problem = DesignProblem::new(ctx.estimate.clone(), all, DecodingMode::Joint, ctx.utility.clone(), ctx.budget, ctx.robust)?;
            evaluate_on_truth(ctx, cccp(&problem, &settings)?)
        }
        Scheme::RsSdExhaustive => evaluate_on_truth(ctx, exhaustive_sd(ctx.estimate, ctx.budget, &ctx.utility, ctx.robust, &settings, false)?),
        Scheme::RsSdSelected => evaluate_on_truth(ctx, selected_sd(ctx.estimate, ctx.budget, &ctx.utility, &ctx.config.selection(), ctx.robust, &settings)?),
    }
}

/// Evaluation order inside one grid point: poorer schemes first, so the
/// chain can feed richer ones.
fn chain_rank(s: &SchemeSpec) -> usize {
    Scheme::ALL.iter().position(|c| *c == s.scheme).unwrap_or(0)
}

fn run_grid_point(config: &ExperimentConfig, hash: &str, trial: usize, seed: u64, sigma2: f64, p_db: f64, execution: Execution) -> Vec<TrialRecord> {
    let mut specs = config.schemes.clone();
    specs.sort_by_key(chain_rank);
    let channels = trial_channels(config, seed, sigma2).map_err(|e| e.to_string());
    let mut chains: BTreeMap<bool, Chain> = BTreeMap::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let started = Instant::now();
        let deadline = started + config.timeout();
        let result = channels.as_ref().map_err(|m| Error::Numerical(m.clone())).and_then(|(truth, estimate)| {
            let robust = if spec.regularized { RobustContext::new(sigma2)? } else { RobustContext::nominal() };
            let ctx = Context {
                config,
                truth,
                estimate,
                budget: power_from_db(p_db),
                robust,
                utility: config.utility(),
                settings: config.cccp_settings(execution).with_deadline(Some(deadline)),
            };
            let chain = chains.entry(spec.regularized).or_default();
            let start = if config.warm_start_chain { chain.start_for(spec.scheme).cloned() } else { None };
            evaluate(&ctx, spec.scheme, start.as_ref())
        });
        let ms = started.elapsed().as_millis() as u64;
        let mut rec = TrialRecord {
            config_hash: hash.to_string(),
            trial,
            seed,
            scheme: spec,
            p_db,
            sigma2,
            metric: config.metric,
            utility: f64::NAN,
            rates_user: Vec::new(),
            streams: Vec::new(),
            rates_stream: Vec::new(),
            iters: 0,
            ms,
            status: RowStatus::Ok,
            message: None,
            precoders: None,
            mode: None,
            runs: Vec::new(),
        };
        match result {
            Ok(o) => {
                if config.metric == Metric::SumRate {
                    let chain = chains.entry(spec.regularized).or_default();
                    match spec.scheme {
                        Scheme::Unicast => chain.unicast = o.precoders.clone(),
                        Scheme::OneLayerRs => chain.one_layer = o.precoders.clone(),
                        _ => {}
                    }
                }
                rec.utility = o.utility;
                rec.rates_user = o.rates_user;
                rec.streams = o.stream_rates.keys().copied().collect();
                rec.rates_stream = o.stream_rates.values().copied().collect();
                rec.iters = o.iters;
                rec.precoders = o.precoders;
                rec.mode = o.mode;
                rec.runs = o.runs;
            }
            Err(Error::Timeout) => {
                log::warn!("trial {trial} {spec} at {p_db} dB, sigma2 {sigma2}: timed out after {ms} ms");
                rec.status = RowStatus::Timeout;
                rec.message = Some("timeout".into());
            }
            Err(e) => {
                log::warn!("trial {trial} {spec} at {p_db} dB, sigma2 {sigma2}: {e}");
                rec.status = RowStatus::Error;
                rec.message = Some(e.to_string());
            }
        }
        out.push(rec);
    }
    out
}

/// Runs every trial at every grid point for every scheme.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentOutput> {
    config.validate()?;
    let started = Instant::now();
    let hash = config.hash();
    let trials: Vec<usize> = (0..config.trials).collect();
    let execution = options.execution;
    let per_trial = parallel::with_threads(options.jobs, || {
        parallel::map(execution, trials, |t| {
            let seed = trial_seed(config.seed, t);
            let mut rows = Vec::new();
            for &sigma2 in &config.sigma2 {
                for &p_db in &config.p_db {
                    rows.extend(run_grid_point(config, &hash, t, seed, sigma2, p_db, execution));
                }
            }
            log::info!("{}: trial {} of {} done", config.name, t + 1, config.trials);
            rows
        })
    });
    let mut records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    records.sort_by_key(|r| r.sort_key(config));
    let summary = summarize(config, &records);
    Ok(ExperimentOutput { config: config.clone(), config_hash: hash, records, summary, elapsed: started.elapsed() })
}

pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &sigma2 in &config.sigma2 {
        for &p_db in &config.p_db {
            for spec in &config.schemes {
                let vals: Vec<f64> = records
                    .iter()
                    .filter(|r| r.scheme == *spec && r.p_db == p_db && r.sigma2 == sigma2 && r.status == RowStatus::Ok)
                    .map(|r| r.utility)
                    .collect();
                let n = vals.len();
                let mean = if n > 0 { vals.iter().sum::<f64>() / n as f64 } else { f64::NAN };
                let std = if n > 1 { (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
                out.push(SummaryRow { scheme: spec.to_string(), p_db, sigma2, count: n, mean, std });
            }
        }
    }
    out
}

/// Mean achieved rate with and without the regularizer at one error variance.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RegularizationGain {
    pub sigma2: f64,
    pub regularized: f64,
    pub unregularized: f64,
    pub ratio: f64,
}

/// Runs the first optimized scheme of `config` with and without the
/// regularizer and reports the per-variance mean ratio.
pub fn compare_regularization(config: &ExperimentConfig, options: &RunOptions) -> Result<(Vec<RegularizationGain>, ExperimentOutput)> {
    let scheme = config.schemes.iter().map(|s| s.scheme).find(|s| s.is_optimized()).unwrap_or(Scheme::RsSdSelected);
    let mut cfg = config.clone();
    cfg.schemes = vec![SchemeSpec::new(scheme), SchemeSpec::unregularized(scheme)];
    let out = run_experiment(&cfg, options)?;
    let mean_of = |spec: SchemeSpec, sigma2: f64| -> f64 {
        let v: Vec<f64> = out.records.iter().filter(|r| r.scheme == spec && r.sigma2 == sigma2 && r.status == RowStatus::Ok).map(|r| r.utility).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let gains = cfg
        .sigma2
        .iter()
        .map(|&s| {
            let reg = mean_of(cfg.schemes[0], s);
            let noreg = mean_of(cfg.schemes[1], s);
            RegularizationGain { sigma2: s, regularized: reg, unregularized: noreg, ratio: reg / noreg }
        })
        .collect();
    Ok((gains, out))
}

/// Streams used by a row, as a collection.
pub fn row_collection(rec: &TrialRecord) -> StreamCollection {
    StreamCollection::new(rec.streams.iter().copied())
}
