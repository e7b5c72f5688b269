//! Reference computations written independently of the library code.

use num_complex::Complex64;
use rand::Rng;

use super::{cn, quad, trace};
use rsprecode::linalg::{CMatrix, CVector};

/// Adaptive Simpson on a complex integrand.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    fn step(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64, whole: Complex64, tol: f64, depth: u32) -> Complex64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.norm() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `(1/2Δ) ∫_{θ−Δ}^{θ+Δ} exp(−j2πD·lag·sin α) dα`.
pub fn one_ring_entry(theta: f64, delta: f64, spacing: f64, lag: i64) -> Complex64 {
    let w = -2.0 * std::f64::consts::PI * spacing * lag as f64;
    let f = |a: f64| Complex64::from_polar(1.0, w * a.sin());
    adaptive_simpson(&f, theta - delta, theta + delta, 1e-13) / (2.0 * delta)
}

/// Joint-decoding sum rate for two users with streams {1}, {2}, {1,2},
/// maximized by brute force over a grid of `(R_1, R_2, R_12)` with spacing
/// `step`. For each grid value of `R_12` the largest grid values of `R_1` and
/// `R_2` satisfying the constraints are taken, which is the exhaustive grid
/// maximum because every constraint is monotone in each rate.
pub fn jd_grid_sum_rate_k2(h: [&CVector; 2], q1: &CMatrix, q2: &CMatrix, q12: &CMatrix, step: f64) -> f64 {
    let lg = |x: f64| (1.0 + x).log2();
    // per user: (private bound, common bound, joint bound)
    let bounds: Vec<(f64, f64, f64)> = (0..2)
        .map(|k| {
            let (own, other) = if k == 0 { (q1, q2) } else { (q2, q1) };
            let noise = 1.0 + quad(h[k], other);
            let p = quad(h[k], own);
            let c = quad(h[k], q12);
            (lg(p / noise), lg(c / noise), lg((p + c) / noise))
        })
        .collect();
    let grid = |x: f64| (x / step + 1e-12).floor().max(0.0);
    let common_max = grid(bounds[0].1.min(bounds[1].1)) as i64;
    let mut best = 0.0f64;
    for i in 0..=common_max {
        let rc = i as f64 * step;
        let mut total = rc;
        for b in &bounds {
            let cap = b.0.min(b.2 - rc);
            if cap < 0.0 {
                total = f64::NEG_INFINITY;
                break;
            }
            total += grid(cap) * step;
        }
        best = best.max(total);
    }
    best
}

/// `log2(1 + Σ_i (hᴴQ_i h + σ² tr Q_i))`, the concave term of a rate constraint.
pub fn noise_term(h: &CVector, noise: &[&CMatrix], sigma2: f64) -> f64 {
    let s: f64 = noise.iter().map(|q| quad(h, q) + sigma2 * trace(q)).sum();
    (1.0 + s).log2()
}

/// `log2(1 + Σ_desired hᴴQh / (1 + Σ_noise (hᴴQh + σ² tr Q)))`.
pub fn rate_rhs(h: &CVector, desired: &[&CMatrix], noise: &[&CMatrix], sigma2: f64) -> f64 {
    let d: f64 = desired.iter().map(|q| quad(h, q)).sum();
    let n: f64 = 1.0 + noise.iter().map(|q| quad(h, q) + sigma2 * trace(q)).sum::<f64>();
    (1.0 + d / n).log2()
}

/// Monte-Carlo mean and standard error of the nominal right-hand side when
/// the true channel is `ĥ + e`, `e ~ CN(0, σ²I)`.
pub fn true_rhs_monte_carlo<R: Rng>(rng: &mut R, h_est: &CVector, desired: &[&CMatrix], noise: &[&CMatrix], sigma2: f64, draws: usize) -> (f64, f64) {
    let m = h_est.len();
    let sd = sigma2.sqrt();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let h = CVector::from_fn(m, |_, _| cn(rng) * sd) + h_est;
        let v = rate_rhs(&h, desired, noise, 0.0);
        sum += v;
        sum_sq += v * v;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}
