mod common;

use std::f64::consts::PI;

use common::checks;
use common::oracle::{adaptive_simpson, jd_grid_sum_rate_k2, one_ring_entry};
use common::{unit, Contract};
use num_complex::Complex64;
use rsprecode::linalg::{outer, CMatrix};

#[test]
fn simpson_integrates_known_functions() {
    let v = adaptive_simpson(&|x: f64| Complex64::new(x.cos(), x.sin()), 0.0, PI, 1e-13);
    assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-11);
    // ∫ exp(-j w sin a) over a full period is 2π J0(w); J0(2.404825557695773) = 0
    let w = 2.404825557695773;
    let v = adaptive_simpson(&|a: f64| Complex64::from_polar(1.0, -w * a.sin()), -PI, PI, 1e-13);
    assert!(v.norm() < 1e-10, "{v}");
}

#[test]
fn ring_entry_small_spread_is_steering_phase() {
    let (theta, d) = (0.3f64, 0.5);
    let want = Complex64::from_polar(1.0, -2.0 * PI * d * 2.0 * theta.sin());
    assert!((one_ring_entry(theta, 1e-7, d, 2) - want).norm() < 1e-9);
}

#[test]
fn grid_oracle_on_decoupled_instance() {
    // orthogonal users, no common power: each user gets log2(1 + 3)
    let m = 2;
    let (h1, h2) = (unit(m, 0), unit(m, 1));
    let q1 = outer(&h1) * Complex64::new(3.0, 0.0);
    let q2 = outer(&h2) * Complex64::new(3.0, 0.0);
    let z = CMatrix::zeros(m, m);
    let v = jd_grid_sum_rate_k2([&h1, &h2], &q1, &q2, &z, 1e-3);
    assert!((v - 4.0).abs() < 1e-9, "{v}");
}

#[test]
fn jd_lp_matches_grid() {
    assert!(checks::jd_lp_vs_grid(10, 11, 1e-3) < 3e-3);
}

#[test]
fn linearizations_match_finite_differences() {
    assert!(checks::linearization_vs_fd(12, 12) < 1e-6);
}

#[test]
fn one_ring_matches_quadrature() {
    assert!(checks::one_ring_vs_quadrature(15, 13) < 1e-9);
}

#[test]
fn successive_rates_telescope() {
    assert!(checks::sd_telescoping(20, 14) < 1e-10);
}

#[test]
fn robust_bound_holds_on_a_few_instances() {
    let c = checks::robust_bound(3, 2000, 15);
    assert!(c.worst_z < 3.0, "worst z {}", c.worst_z);
}

#[test]
fn contract_tracker_flags_drops() {
    let trace = rsprecode::optimizer::RunTrace {
        start: "x".into(),
        objectives: vec![1.0, 2.0, 1.5],
        step_norms: vec![],
        max_violation: 0.0,
        status: rsprecode::optimizer::CccpStatus::Converged,
    };
    let mut c = Contract::default();
    c.add(std::slice::from_ref(&trace), false);
    assert!(!c.holds());
}
