//! Reference schemes: sum capacity, zero forcing, unicast and one-layer rate
//! splitting.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::{log2_det_hpd, outer, CMatrix};
use crate::optimizer::{cccp, CccpResult, CccpSettings, DesignProblem};
use crate::rates::{DecodingMode, PrecoderSet, RobustContext, UtilitySpec};
use crate::streams::{DecodingOrder, StreamCollection, StreamId};

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub scheme: String,
    pub sum_rate: f64,
    pub user_rates: Vec<f64>,
    pub stream_rates: BTreeMap<StreamId, f64>,
    /// Per-user powers (dual MAC powers for capacity, `p_k` for ZF).
    pub powers: Option<Vec<f64>>,
    pub precoders: Option<PrecoderSet>,
    pub iterations: usize,
    /// Full optimizer output for the CCCP-based schemes.
    pub cccp: Option<CccpResult>,
}

impl BaselineResult {
    fn from_cccp(scheme: &str, res: CccpResult) -> Self {
        Self {
            scheme: scheme.to_string(),
            sum_rate: res.objective,
            user_rates: res.rates.user_rates.clone(),
            stream_rates: res.rates.stream_rates.clone(),
            powers: None,
            precoders: Some(res.precoders.clone()),
            iterations: res.total_iterations(),
            cccp: Some(res),
        }
    }
}

/// `log2 det(I + Σ_k p_k h_k h_kᴴ)`.
pub fn dual_mac_rate(channels: &ChannelSet, p: &[f64]) -> f64 {
    let m = channels.antennas();
    let mut a = CMatrix::identity(m, m);
    for (k, &pk) in p.iter().enumerate() {
        a += outer(&channels.user(k)) * Complex64::new(pk.max(0.0), 0.0);
    }
    log2_det_hpd(&a).unwrap_or(f64::NEG_INFINITY)
}

/// Gradient of [`dual_mac_rate`]: `h_kᴴ (I + Σ p_j h_j h_jᴴ)⁻¹ h_k / ln 2`.
fn dual_mac_gradient(channels: &ChannelSet, p: &[f64]) -> Vec<f64> {
    let m = channels.antennas();
    let mut a = CMatrix::identity(m, m);
    for (k, &pk) in p.iter().enumerate() {
        a += outer(&channels.user(k)) * Complex64::new(pk.max(0.0), 0.0);
    }
    let inv = a.try_inverse().expect("identity plus PSD is invertible");
    (0..channels.users())
        .map(|k| {
            let h = channels.user(k);
            h.dotc(&(&inv * &h)).re / std::f64::consts::LN_2
        })
        .collect()
}

/// Euclidean projection onto `{p ≥ 0, Σ p = total}`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - total) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

const CAPACITY_GAP: f64 = 1e-9;
const CAPACITY_MAX_ITERATIONS: usize = 100_000;

/// Broadcast sum capacity through the dual multiple-access problem
/// `max_{Σp ≤ P, p ≥ 0} log2 det(I + Σ p_k h_k h_kᴴ)`, solved by projected
/// gradient ascent until the Frank-Wolfe gap is below `1e−9`.
pub fn sum_capacity(channels: &ChannelSet, budget: f64) -> Result<BaselineResult> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(invalid("power budget must be positive and finite"));
    }
    let k = channels.users();
    let mut p = vec![budget / k as f64; k];
    let mut f = dual_mac_rate(channels, &p);
    let mut step = budget;
    let mut iterations = 0;
    for it in 0..CAPACITY_MAX_ITERATIONS {
        iterations = it + 1;
        let g = dual_mac_gradient(channels, &p);
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let fw_gap = gmax * budget - g.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
        if fw_gap <= CAPACITY_GAP {
            break;
        }
        step *= 2.0;
        let mut accepted = false;
        while step > 1e-30 * budget {
            let trial: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let trial = project_simplex(&trial, budget);
            let ft = dual_mac_rate(channels, &trial);
            let moved: f64 = trial.iter().zip(&p).zip(&g).map(|((t, a), b)| (t - a) * b).sum();
            if ft >= f + 0.5 * moved {
                accepted = ft > f;
                p = trial;
                f = ft;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no ascent left at working precision
            break;
        }
    }
    // successive-cancellation split of the sum rate in user order
    let mut user_rates = Vec::with_capacity(k);
    let mut prev = 0.0;
    for u in 0..k {
        let mut partial = vec![0.0; k];
        partial[..=u].copy_from_slice(&p[..=u]);
        let cur = dual_mac_rate(channels, &partial);
        user_rates.push((cur - prev).max(0.0));
        prev = cur;
    }
    let stream_rates = user_rates.iter().enumerate().map(|(u, r)| (StreamId::singleton(u), *r)).collect();
    Ok(BaselineResult { scheme: "capacity".into(), sum_rate: f, user_rates, stream_rates, powers: Some(p), precoders: None, iterations, cccp: None })
}

/// Relative eigenvalue threshold below which `HᴴH` counts as singular.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Water-filling `max Σ log2(1 + p_k)` subject to `Σ w_k p_k ≤ P`:
/// `p_k = max(0, μ/w_k − 1)` with `Σ max(0, μ − w_k) = P`.
pub fn weighted_water_filling(weights: &[f64], budget: f64) -> Vec<f64> {
    let mut w: Vec<f64> = weights.to_vec();
    w.sort_by(|a, b| a.total_cmp(b));
    let mut mu = 0.0;
    let mut cum = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        cum += wi;
        let candidate = (budget + cum) / (i + 1) as f64;
        if candidate > wi {
            mu = candidate;
        } else {
            break;
        }
    }
    weights.iter().map(|&wk| (mu / wk - 1.0).max(0.0)).collect()
}

/// Zero forcing with the pseudo-inverse precoder and water-filled powers.
pub fn zf_scheme(channels: &ChannelSet, budget: f64) -> Result<BaselineResult> {
    let k = channels.users();
    let m = channels.antennas();
    if k > m {
        return Err(Error::RankDeficient);
    }
    let h = channels.matrix();
    let gram = h.adjoint() * h;
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= RANK_TOLERANCE * max {
        return Err(Error::RankDeficient);
    }
    let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
    let weights: Vec<f64> = (0..k).map(|i| inv[(i, i)].re).collect();
    let p = weighted_water_filling(&weights, budget);
    let v = h * inv;
    let mut q = PrecoderSet::new(m);
    for (i, &pi) in p.iter().enumerate() {
        let col = v.column(i).into_owned();
        q.insert_unchecked(StreamId::singleton(i), outer(&col) * Complex64::new(pi, 0.0));
    }
    let user_rates: Vec<f64> = p.iter().map(|pi| (1.0 + pi).log2()).collect();
    let stream_rates = user_rates.iter().enumerate().map(|(u, r)| (StreamId::singleton(u), *r)).collect();
    Ok(BaselineResult { scheme: "zf".into(), sum_rate: user_rates.iter().sum(), user_rates, stream_rates, powers: Some(p), precoders: Some(q), iterations: 0, cccp: None })
}

/// Sum-rate CCCP over private streams only (interference treated as noise).
pub fn unicast_scheme(channels: &ChannelSet, budget: f64, robust: RobustContext, settings: &CccpSettings) -> Result<BaselineResult> {
    let k = channels.users();
    let problem = DesignProblem::new(channels.clone(), StreamCollection::singletons(k), DecodingMode::Joint, UtilitySpec::sum_rate(), budget, robust)?;
    Ok(BaselineResult::from_cccp("unicast", cccp(&problem, settings)?))
}

/// Sum-rate CCCP over the private streams plus one all-user common stream,
/// decoded first by every user.
pub fn one_layer_rs(channels: &ChannelSet, budget: f64, robust: RobustContext, settings: &CccpSettings) -> Result<BaselineResult> {
    let k = channels.users();
    let active = StreamCollection::one_layer(k);
    let order = DecodingOrder::descending(&active, k)?;
    let problem = DesignProblem::new(channels.clone(), active, DecodingMode::Successive(order), UtilitySpec::sum_rate(), budget, robust)?;
    Ok(BaselineResult::from_cccp("one-layer-rs", cccp(&problem, settings)?))
}
