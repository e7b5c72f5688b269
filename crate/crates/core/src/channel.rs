//! Channel realizations: i.i.d. Rayleigh, one-ring correlated groups and
//! imperfect-CSIT splits. Every draw is a pure function of its inputs and a
//! seed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{herm_eigen, CMatrix, CVector};
use crate::rng::{self, complex_normal};

/// Eigenvalues of a group covariance at or below this value are discarded.
pub const EIGEN_TRUNCATION: f64 = 1e-10;
/// Smallest eigenvalue tolerated before clipping a quadrature result to PSD.
pub const PSD_CLIP_TOLERANCE: f64 = 1e-8;

/// Channel vectors `h_k` stacked as the columns of an `M×K` matrix.
/// Noise is normalized to unit variance, so entries are amplitude gains.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    h: CMatrix,
    /// Group index of each user when drawn from a grouped scenario.
    pub groups: Option<Vec<usize>>,
}

impl ChannelSet {
    pub fn new(h: CMatrix) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(invalid("channel matrix must be at least 1x1"));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("channel matrix has non-finite entries"));
        }
        Ok(Self { h, groups: None })
    }

    /// Builds a channel set from per-user vectors of equal length.
    pub fn from_columns(cols: &[CVector]) -> Result<Self> {
        let m = cols.first().map(|c| c.len()).ok_or_else(|| invalid("no users"))?;
        if cols.iter().any(|c| c.len() != m) {
            return Err(invalid("channel vectors differ in length"));
        }
        Self::new(CMatrix::from_columns(cols))
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    /// `h_k` for a 0-based user index.
    pub fn user(&self, k: usize) -> CVector {
        self.h.column(k).into_owned()
    }

    pub fn norm_sqr(&self, k: usize) -> f64 {
        self.h.column(k).norm_squared()
    }
}

/// One cluster of the one-ring model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingGroup {
    /// Azimuth in radians.
    pub theta: f64,
    /// Angular spread in radians, `0 < Δ < π/2`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum GroupAssignment {
    /// `sizes[g]` users in group `g`, users assigned in index order.
    Fixed { sizes: Vec<usize> },
    /// Each user independently lands in any group with equal probability.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneRingScenario {
    pub groups: Vec<RingGroup>,
    /// Antenna spacing in carrier wavelengths.
    pub spacing: f64,
    pub assignment: GroupAssignment,
}

impl OneRingScenario {
    /// Groups with azimuths `θ_g = θ_0 + step·g` and a shared spread.
    pub fn evenly_spaced(count: usize, theta0: f64, step: f64, delta: f64, spacing: f64) -> Self {
        let groups = (0..count)
            .map(|g| RingGroup { theta: theta0 + step * g as f64, delta })
            .collect();
        Self { groups, spacing, assignment: GroupAssignment::Uniform }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.groups.is_empty() {
            return Err(invalid("one-ring scenario needs at least one group"));
        }
        for g in &self.groups {
            if !(g.delta > 0.0 && g.delta < PI / 2.0) || !g.theta.is_finite() {
                return Err(invalid(format!("group spread {} outside (0, π/2)", g.delta)));
            }
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(invalid("antenna spacing must be positive"));
        }
        if let GroupAssignment::Fixed { sizes } = &self.assignment {
            if sizes.len() != self.groups.len() || sizes.iter().sum::<usize>() != k {
                return Err(invalid("fixed group sizes must cover all users exactly"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ChannelScenario {
    Iid,
    OneRing(OneRingScenario),
}

/// Estimate/truth pair for imperfect CSIT.
#[derive(Clone, Debug)]
pub struct CsitSplit {
    pub truth: ChannelSet,
    pub estimate: ChannelSet,
    pub sigma2: f64,
}

// ---------------------------------------------------------------------------
// Quadrature

const GL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Lag values `r_d = (1/2Δ) ∫ exp(−j2πD d sin α) dα`, `d = 0..m`, over
/// `panels` equal panels.
fn ring_lags(theta: f64, delta: f64, spacing: f64, m: usize, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> Vec<Complex64> {
    let a = theta - delta;
    let width = 2.0 * delta / panels as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); m];
    for p in 0..panels {
        let lo = a + width * p as f64;
        for (xi, wi) in rule.0.iter().zip(&rule.1) {
            let alpha = lo + 0.5 * width * (xi + 1.0);
            let phase = -2.0 * PI * spacing * alpha.sin();
            for (d, slot) in acc.iter_mut().enumerate() {
                *slot += Complex64::from_polar(0.5 * width * wi, phase * d as f64);
            }
        }
    }
    acc.iter().map(|z| z / (2.0 * delta)).collect()
}

/// Toeplitz one-ring covariance `[R]_{m,p} = (1/2Δ) ∫_{θ−Δ}^{θ+Δ} exp(−j2πD(m−p) sin α) dα`.
pub fn one_ring_covariance(theta: f64, delta: f64, spacing: f64, m: usize) -> Result<CMatrix> {
    if !theta.is_finite() || !delta.is_finite() || !spacing.is_finite() {
        return Err(invalid("non-finite one-ring parameter"));
    }
    if delta <= 0.0 {
        return Err(invalid("angular spread must be positive"));
    }
    if m == 0 {
        return Err(invalid("antenna count must be positive"));
    }
    let rule = gauss_legendre(GL_ORDER);
    let mut panels = 1;
    let mut lags = ring_lags(theta, delta, spacing, m, panels, &rule);
    loop {
        panels *= 2;
        let refined = ring_lags(theta, delta, spacing, m, panels, &rule);
        let change = lags.iter().zip(&refined).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        lags = refined;
        if change < 1e-10 || panels >= 1 << 16 {
            break;
        }
    }
    let mut r = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            r[(i, j)] = if i >= j { lags[i - j] } else { lags[j - i].conj() };
        }
        r[(i, i)] = Complex64::new(1.0, 0.0);
    }
    let (vals, vecs) = herm_eigen(&r);
    let min_eig = vals[0];
    if min_eig < -PSD_CLIP_TOLERANCE {
        return Err(Error::NotPsd { min_eig });
    }
    if min_eig < 0.0 {
        let mut clipped = CMatrix::zeros(m, m);
        for (i, &v) in vals.iter().enumerate() {
            if v > 0.0 {
                let u = vecs.column(i);
                clipped += u * u.adjoint() * Complex64::new(v, 0.0);
            }
        }
        r = clipped;
    }
    Ok(r)
}

/// Precomputed square-root factors `U_g Λ_g^{1/2}` of each group covariance.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    m: usize,
    scenario: ChannelScenario,
    factors: Vec<CMatrix>,
}

impl ChannelSampler {
    pub fn new(scenario: &ChannelScenario, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("antenna count must be positive"));
        }
        let mut factors = Vec::new();
        if let ChannelScenario::OneRing(ring) = scenario {
            for (g, grp) in ring.groups.iter().enumerate() {
                let r = one_ring_covariance(grp.theta, grp.delta, ring.spacing, m)?;
                let (vals, vecs) = herm_eigen(&r);
                let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > EIGEN_TRUNCATION).collect();
                if keep.is_empty() {
                    return Err(Error::EmptyEigenbasis { group: g });
                }
                let mut f = CMatrix::zeros(m, keep.len());
                for (c, &i) in keep.iter().enumerate() {
                    let s = Complex64::new(vals[i].sqrt(), 0.0);
                    f.set_column(c, &(vecs.column(i) * s));
                }
                factors.push(f);
            }
        }
        Ok(Self { m, scenario: scenario.clone(), factors })
    }

    /// Covariance of group `g` reconstructed from the kept eigenpairs.
    pub fn group_covariance(&self, g: usize) -> Option<CMatrix> {
        self.factors.get(g).map(|f| f * f.adjoint())
    }

    pub fn draw(&self, k: usize, seed: u64) -> Result<ChannelSet> {
        if k == 0 {
            return Err(invalid("user count must be positive"));
        }
        let mut rng = rng::seeded(seed, rng::stream::CHANNEL);
        match &self.scenario {
            ChannelScenario::Iid => {
                let h = DMatrix::from_fn(self.m, k, |_, _| complex_normal(&mut rng, 1.0));
                ChannelSet::new(h)
            }
            ChannelScenario::OneRing(ring) => {
                ring.validate(k)?;
                let groups = assign_groups(ring, k, seed);
                let mut h = CMatrix::zeros(self.m, k);
                for (user, &g) in groups.iter().enumerate() {
                    let f = &self.factors[g];
                    let w = CVector::from_fn(f.ncols(), |_, _| complex_normal(&mut rng, 1.0));
                    h.set_column(user, &(f * w));
                }
                let mut set = ChannelSet::new(h)?;
                set.groups = Some(groups);
                Ok(set)
            }
        }
    }
}

fn assign_groups(ring: &OneRingScenario, k: usize, seed: u64) -> Vec<usize> {
    match &ring.assignment {
        GroupAssignment::Fixed { sizes } => {
            sizes.iter().enumerate().flat_map(|(g, &n)| std::iter::repeat(g).take(n)).collect()
        }
        GroupAssignment::Uniform => {
            let mut rng = rng::seeded(seed, rng::stream::GROUP_ASSIGNMENT);
            (0..k).map(|_| rng.gen_range(0..ring.groups.len())).collect()
        }
    }
}

/// Draws a channel set for `k` users and `m` antennas.
pub fn draw_channels(scenario: &ChannelScenario, k: usize, m: usize, seed: u64) -> Result<ChannelSet> {
    ChannelSampler::new(scenario, m)?.draw(k, seed)
}

/// Draws `Ĥ ~ CN(0, 1−σ²)` and `H̃ ~ CN(0, σ²)` entrywise from independent
/// streams and returns `H = Ĥ + H̃` alongside `Ĥ`.
pub fn apply_csit_error(k: usize, m: usize, sigma2: f64, seed: u64) -> Result<CsitSplit> {
    if !(0.0..=1.0).contains(&sigma2) {
        return Err(invalid(format!("error variance {sigma2} outside [0, 1]")));
    }
    if k == 0 || m == 0 {
        return Err(invalid("dimensions must be positive"));
    }
    let mut est_rng = rng::seeded(seed, rng::stream::CSIT_ESTIMATE);
    let mut err_rng = rng::seeded(seed, rng::stream::CSIT_ERROR);
    let est = DMatrix::from_fn(m, k, |_, _| complex_normal(&mut est_rng, 1.0 - sigma2));
    let err = DMatrix::from_fn(m, k, |_, _| complex_normal(&mut err_rng, sigma2));
    let truth = &est + err;
    Ok(CsitSplit { truth: ChannelSet::new(truth)?, estimate: ChannelSet::new(est)?, sigma2 })
}
