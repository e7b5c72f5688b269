//! Oracle comparisons over batches of random instances. Each returns the
//! worst discrepancy seen.

use rand::seq::SliceRandom;
use rand::Rng;

use super::oracle::{jd_grid_sum_rate_k2, noise_term, one_ring_entry, rate_rhs, true_rhs_monte_carlo};
use super::{iid, random_hermitian, random_precoders, rng};
use rsprecode::channel::one_ring_covariance;
use num_complex::Complex64;
use rsprecode::linalg::{herm_to_vec, CMatrix};
use rsprecode::optimizer::{linearize_concave_jd, linearize_concave_sd, AffineForm};
use rsprecode::rates::{achievable_rates, jd_rhs, sd_stream_rate, DecodingMode, RobustContext, UtilitySpec};
use rsprecode::streams::{enumerate_streams, DecodingOrder, StreamCollection, StreamId};

/// Random per-user permutations of each user's streams.
pub fn random_order<R: Rng>(rng: &mut R, active: &StreamCollection, k: usize) -> DecodingOrder {
    let orders = (0..k)
        .map(|u| {
            let mut mine = active.for_user(u);
            mine.shuffle(rng);
            mine
        })
        .collect();
    DecodingOrder::new(orders, active).unwrap()
}

/// Joint-decoding LP sum rate against the grid brute force, two users.
/// The grid floors three rates, so it can trail the LP by up to `3·step`.
pub fn jd_lp_vs_grid(instances: usize, seed: u64, step: f64) -> f64 {
    let mut r = rng(seed);
    let all = enumerate_streams(2).unwrap();
    let (s1, s2, s12) = (StreamId::singleton(0), StreamId::singleton(1), StreamId::full(2));
    let mut worst = 0.0f64;
    for i in 0..instances {
        let ch = iid(2, 2, seed.wrapping_mul(1000) + i as u64);
        let q = random_precoders(&mut r, &all, 2, 2.0);
        let (_, lp) = achievable_rates(&ch, &q, &DecodingMode::Joint, &UtilitySpec::sum_rate(), RobustContext::nominal()).unwrap();
        let (h1, h2) = (ch.user(0), ch.user(1));
        let grid = jd_grid_sum_rate_k2([&h1, &h2], q.get(s1).unwrap(), q.get(s2).unwrap(), q.get(s12).unwrap(), step);
        assert!(grid <= lp + 1e-9, "grid point {grid} beats the LP optimum {lp}");
        worst = worst.max(lp - grid);
    }
    worst
}

/// `Σ_K coef_K · vec(D_K)`: the derivative of an affine form along `dirs`.
fn along(form: &AffineForm, dirs: &[(StreamId, CMatrix)]) -> f64 {
    let mut total = 0.0;
    for (s, d) in dirs {
        if let Some(coef) = form.terms.get(s) {
            let mut x = vec![0.0; coef.len()];
            herm_to_vec(d, &mut x);
            total += coef.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    total
}

/// Directional derivatives of the tangent forms against central finite
/// differences (step 1e−5) of the concave terms; relative error.
pub fn linearization_vs_fd(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let k = 2 + i % 2;
        let m = 2 + (i / 2) % 2;
        let sigma2 = [0.0, 0.3, 0.9][i % 3];
        let robust = RobustContext::new(sigma2).unwrap();
        let ch = iid(k, m, seed.wrapping_mul(7919) + i as u64);
        let all = enumerate_streams(k).unwrap();
        let q = random_precoders(&mut r, &all, m, 10.0);
        let dirs: Vec<(StreamId, CMatrix)> = all.iter().map(|s| (s, random_hermitian(&mut r, m))).collect();
        let order = random_order(&mut r, &all, k);
        let eps = 1e-5;
        let shifted = |sign: f64, set: &[StreamId]| -> Vec<CMatrix> {
            set.iter()
                .map(|s| {
                    let d = &dirs.iter().find(|(t, _)| t == s).unwrap().1;
                    q.get(*s).unwrap() + d * Complex64::new(sign * eps, 0.0)
                })
                .collect()
        };
        for u in 0..k {
            let h = ch.user(u);
            let term = |v: Vec<CMatrix>| -> f64 { noise_term(&h, &v.iter().collect::<Vec<_>>(), sigma2) };
            let fd = |set: &[StreamId]| (term(shifted(1.0, set)) - term(shifted(-1.0, set))) / (2.0 * eps);
            let external: Vec<StreamId> = all.iter().filter(|s| !s.contains(u)).collect();

            let form = linearize_concave_jd(&ch, u, &q, &all, robust).unwrap();
            let (exact, approx) = (along(&form, &dirs), fd(&external));
            worst = worst.max((exact - approx).abs() / approx.abs().max(1e-3));

            for n in 0..order.of(u).len() {
                let mut noise = external.clone();
                noise.extend_from_slice(&order.of(u)[n + 1..]);
                let form = linearize_concave_sd(&ch, u, n, &order, &q, robust).unwrap();
                let (exact, approx) = (along(&form, &dirs), fd(&noise));
                worst = worst.max((exact - approx).abs() / approx.abs().max(1e-3));
            }
        }
    }
    worst
}

/// Library one-ring covariance against adaptive quadrature, entrywise.
pub fn one_ring_vs_quadrature(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let theta = r.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let delta = r.gen_range(0.005..1.5);
        let spacing = r.gen_range(0.25..2.0);
        let m = r.gen_range(1..=8);
        let cov = one_ring_covariance(theta, delta, spacing, m).unwrap();
        for a in 0..m {
            for b in 0..m {
                let want = one_ring_entry(theta, delta, spacing, a as i64 - b as i64);
                worst = worst.max((cov[(a, b)] - want).norm());
            }
        }
    }
    worst
}

/// Successive decoding of all of a user's streams telescopes to the joint
/// bound on the whole set: `Σ_n R_{k,n} = log2(1 + S/(1+I))`. With the
/// regularizer the sum stays below the joint bound instead (the undecoded
/// own streams also carry `σ² tr Q`); a violation of that counts as error.
pub fn sd_telescoping(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let k = 2 + i % 2;
        let m = 1 + i % 4;
        let sigma2 = [0.0, 0.5][i % 2];
        let robust = RobustContext::new(sigma2).unwrap();
        let ch = iid(k, m, seed.wrapping_mul(31) + i as u64);
        let all = enumerate_streams(k).unwrap();
        let budget = r.gen_range(1.0..1000.0);
        let q = random_precoders(&mut r, &all, m, budget);
        let order = random_order(&mut r, &all, k);
        for u in 0..k {
            let sum: f64 = (0..order.of(u).len()).map(|n| sd_stream_rate(&ch, &q, &order, u, n, robust).unwrap()).sum();
            let mine = all.for_user(u);
            let joint = jd_rhs(&ch, &q, u, &mine, robust).unwrap();
            let h = ch.user(u);
            let desired: Vec<&CMatrix> = mine.iter().map(|s| q.get(*s).unwrap()).collect();
            let noise: Vec<&CMatrix> = all.iter().filter(|s| !s.contains(u)).map(|s| q.get(s).unwrap()).collect();
            let direct = rate_rhs(&h, &desired, &noise, sigma2);
            if sigma2 == 0.0 {
                worst = worst.max((sum - joint).abs()).max((sum - direct).abs());
            } else {
                worst = worst.max(sum - joint).max((joint - direct).abs());
            }
        }
    }
    worst
}

/// Outcome of the robust-bound check: constraints checked, and the worst
/// `(robust − mean)/SE` seen (must stay below 3).
pub struct RobustCheck {
    pub constraints: usize,
    pub worst_z: f64,
}

/// For random `(Q, ĥ)`, the Monte-Carlo mean over the error of every true
/// joint-decoding right-hand side is compared with its regularized bound.
pub fn robust_bound(instances: usize, draws: usize, seed: u64) -> RobustCheck {
    let mut r = rng(seed);
    let mut out = RobustCheck { constraints: 0, worst_z: f64::NEG_INFINITY };
    for i in 0..instances {
        let k = 2;
        let m = 2 + i % 2;
        let all = enumerate_streams(k).unwrap();
        for sigma2 in [0.1, 0.5, 0.9] {
            let split = rsprecode::channel::apply_csit_error(k, m, sigma2, seed.wrapping_mul(17) + i as u64).unwrap();
            let est = split.estimate;
            let q = random_precoders(&mut r, &all, m, 100.0);
            let robust = RobustContext::new(sigma2).unwrap();
            for u in 0..k {
                let mine = all.for_user(u);
                let noise: Vec<&CMatrix> = all.iter().filter(|s| !s.contains(u)).map(|s| q.get(s).unwrap()).collect();
                for mask in 1..(1u32 << mine.len()) {
                    let subset: Vec<StreamId> = mine.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, s)| *s).collect();
                    let bound = jd_rhs(&est, &q, u, &subset, robust).unwrap();
                    let desired: Vec<&CMatrix> = subset.iter().map(|s| q.get(*s).unwrap()).collect();
                    let (mean, se) = true_rhs_monte_carlo(&mut r, &est.user(u), &desired, &noise, sigma2, draws);
                    out.constraints += 1;
                    out.worst_z = out.worst_z.max((bound - mean) / se.max(1e-300));
                }
            }
        }
    }
    out
}
