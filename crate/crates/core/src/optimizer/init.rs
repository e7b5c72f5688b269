//! Starting covariances for the outer loop.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{outer, trace_re, CMatrix, CVector};
use crate::rates::PrecoderSet;
use crate::streams::{StreamCollection, StreamId};

/// Fraction of the budget used by generated starts, keeping the budget slack.
pub const START_POWER_FRACTION: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    ScaledIdentity,
    MmseHeuristic,
    UnicastWarmStart,
    Explicit,
}

/// `Q_K = 0.99·P/(|S|·M)·I` for every active stream.
pub fn scaled_identity(active: &StreamCollection, antennas: usize, budget: f64) -> PrecoderSet {
    let level = START_POWER_FRACTION * budget / (active.len() as f64 * antennas as f64);
    let mut q = PrecoderSet::new(antennas);
    for s in active.iter() {
        q.insert_unchecked(s, CMatrix::identity(antennas, antennas) * Complex64::new(level, 0.0));
    }
    q
}

/// Columns of `H(HᴴH + αI)⁻¹`; column `k` nearly nulls every user but `k`.
pub fn regularized_inverse(channels: &ChannelSet, alpha: f64) -> Result<CMatrix> {
    let h = channels.matrix();
    let k = channels.users();
    let mut g = h.adjoint() * h;
    for i in 0..k {
        g[(i, i)] += Complex64::new(alpha, 0.0);
    }
    let inv = g.try_inverse().ok_or_else(|| Error::Numerical("regularized Gram matrix is singular".into()))?;
    Ok(h * inv)
}

/// Unit-norm beam for `stream`: the sum of the regularized-inverse columns of
/// its users, so that `h_iᴴ v ≈ const` for members and `≈ 0` for the others.
/// Falls back to the normalized sum of member channels when degenerate.
pub fn stream_beam(channels: &ChannelSet, w: &CMatrix, stream: StreamId) -> CVector {
    let m = channels.antennas();
    let mut v = CVector::zeros(m);
    for u in stream.users() {
        v += w.column(u);
    }
    let n = v.norm();
    if n > 1e-12 && n.is_finite() {
        return v / Complex64::new(n, 0.0);
    }
    let mut v = CVector::zeros(m);
    for u in stream.users() {
        v += channels.user(u);
    }
    let n = v.norm();
    if n > 1e-12 {
        v / Complex64::new(n, 0.0)
    } else {
        let mut e = CVector::zeros(m);
        e[0] = Complex64::new(1.0, 0.0);
        e
    }
}

/// Rank-one regularized-inverse beams with equal power on every active stream.
pub fn mmse_heuristic(channels: &ChannelSet, active: &StreamCollection, budget: f64) -> Result<PrecoderSet> {
    let alpha = channels.users() as f64 / budget;
    let w = regularized_inverse(channels, alpha)?;
    let p = START_POWER_FRACTION * budget / active.len() as f64;
    let mut q = PrecoderSet::new(channels.antennas());
    for s in active.iter() {
        let v = stream_beam(channels, &w, s);
        q.insert_unchecked(s, outer(&v) * Complex64::new(p, 0.0));
    }
    Ok(q)
}

/// Projects every covariance onto the PSD cone and scales the set into the
/// budget when it exceeds it.
pub fn sanitize(q: &PrecoderSet, budget: f64) -> PrecoderSet {
    let mut out = PrecoderSet::new(q.antennas());
    for (s, m) in q.iter() {
        out.insert_unchecked(s, crate::linalg::project_psd(m));
    }
    let total: f64 = out.iter().map(|(_, m)| trace_re(m)).sum();
    if total > budget {
        out = out.scaled(budget / total * (1.0 - 1e-12));
    }
    out
}

/// Scales `q` to at most `0.99·budget`.
pub fn shrink_into_budget(q: &PrecoderSet, budget: f64) -> PrecoderSet {
    let q = sanitize(q, budget);
    let total = q.total_power();
    if total > START_POWER_FRACTION * budget {
        q.scaled(START_POWER_FRACTION * budget / total)
    } else {
        q
    }
}

/// Real Gram matrix of unit beams, used by stream ranking.
pub fn beam_gains(channels: &ChannelSet, beams: &[(StreamId, CVector)]) -> DMatrix<f64> {
    let k = channels.users();
    DMatrix::from_fn(k, beams.len(), |u, j| channels.user(u).dotc(&beams[j].1).norm_sqr())
}
