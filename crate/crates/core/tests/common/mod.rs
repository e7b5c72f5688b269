//! Helpers shared by the integration tests: random instances and
//! independent reference computations.
#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsprecode::channel::{draw_channels, ChannelScenario, ChannelSet};
use rsprecode::linalg::{CMatrix, CVector};
use rsprecode::rates::PrecoderSet;
use rsprecode::streams::StreamCollection;

#[allow(unused_imports)]
pub use rsprecode::selftest::{Check, Contract};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let (a, b): (f64, f64) = (rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn iid(k: usize, m: usize, seed: u64) -> ChannelSet {
    draw_channels(&ChannelScenario::Iid, k, m, seed).unwrap()
}

/// Random PSD matrix of rank up to `m` with trace `tr`.
pub fn random_psd<R: Rng>(rng: &mut R, m: usize, tr: f64) -> CMatrix {
    let rank = rng.gen_range(1..=m);
    let a = DMatrix::from_fn(m, rank, |_, _| cn(rng));
    let q = &a * a.adjoint();
    let t: f64 = (0..m).map(|i| q[(i, i)].re).sum();
    q * Complex64::new(tr / t, 0.0)
}

/// Random Hermitian direction with unit Frobenius norm.
pub fn random_hermitian<R: Rng>(rng: &mut R, m: usize) -> CMatrix {
    let a = DMatrix::from_fn(m, m, |_, _| cn(rng));
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let n = h.norm();
    h / Complex64::new(n, 0.0)
}

/// Random covariances on `collection` with total power `budget·u`, `u ∈ [0.2, 1]`.
pub fn random_precoders<R: Rng>(rng: &mut R, collection: &StreamCollection, m: usize, budget: f64) -> PrecoderSet {
    let shares: Vec<f64> = collection.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = shares.iter().sum();
    let scale = budget * rng.gen_range(0.2..1.0) / total;
    let mut q = PrecoderSet::new(m);
    for (s, w) in collection.iter().zip(&shares) {
        q.insert(s, random_psd(rng, m, w * scale)).unwrap();
    }
    q
}

/// `hᴴQh`, computed directly.
pub fn quad(h: &CVector, q: &CMatrix) -> f64 {
    (h.adjoint() * q * h)[(0, 0)].re
}

pub fn trace(q: &CMatrix) -> f64 {
    (0..q.nrows()).map(|i| q[(i, i)].re).sum()
}

/// Unit vector `e_i` of length `m`.
pub fn unit(m: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(m);
    v[i] = Complex64::new(1.0, 0.0);
    v
}

/// Prints the one-line verdict for an acceptance criterion.
pub fn verdict(id: &str, pass: bool, detail: &str) {
    println!("{}", Check::new(id, pass, detail));
}
