mod common;

use common::{iid, unit};
use num_complex::Complex64;
use rsprecode::baselines::{one_layer_rs, sum_capacity, unicast_scheme, zf_scheme};
use rsprecode::channel::ChannelSet;
use rsprecode::linalg::CVector;
use rsprecode::optimizer::CccpSettings;
use rsprecode::rates::RobustContext;

fn nominal() -> RobustContext {
    RobustContext::nominal()
}

#[test]
fn identity_channel_capacity_is_symmetric_water_filling() {
    let ch = ChannelSet::from_columns(&[unit(3, 0), unit(3, 1), unit(3, 2)]).unwrap();
    let c = sum_capacity(&ch, 30.0).unwrap();
    assert!((c.sum_rate - 3.0 * 11f64.log2()).abs() < 1e-6);
}

#[test]
fn zf_is_capacity_achieving_on_orthonormal_columns() {
    let q = iid(3, 3, 1).matrix().clone().qr().q();
    let cols: Vec<CVector> = (0..3).map(|i| q.column(i).into_owned()).collect();
    let ch = ChannelSet::from_columns(&cols).unwrap();
    let (z, c) = (zf_scheme(&ch, 20.0).unwrap(), sum_capacity(&ch, 20.0).unwrap());
    assert!((z.sum_rate - c.sum_rate).abs() < 1e-5);
}

#[test]
fn zf_collapses_on_nearly_aligned_users() {
    let a = 1e-2f64;
    let h1 = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let h2 = CVector::from_vec(vec![Complex64::new(a.cos(), 0.0), Complex64::new(a.sin(), 0.0)]);
    let ch = ChannelSet::from_columns(&[h1, h2]).unwrap();
    let p = 1000.0;
    let (z, c) = (zf_scheme(&ch, p).unwrap(), sum_capacity(&ch, p).unwrap());
    assert!(z.sum_rate < 0.2 * c.sum_rate, "zf {} capacity {}", z.sum_rate, c.sum_rate);
}

#[test]
fn zf_never_beats_capacity() {
    for seed in 0..10 {
        let ch = iid(3, 3, seed);
        assert!(zf_scheme(&ch, 100.0).unwrap().sum_rate <= sum_capacity(&ch, 100.0).unwrap().sum_rate + 1e-9);
    }
}

#[test]
fn unicast_is_optimal_without_interference() {
    let ch = ChannelSet::from_columns(&[unit(2, 0) * Complex64::new(0.7, 0.0), unit(2, 1) * Complex64::new(1.3, 0.0)]).unwrap();
    let u = unicast_scheme(&ch, 10.0, nominal(), &CccpSettings::default()).unwrap();
    let c = sum_capacity(&ch, 10.0).unwrap();
    assert!((u.sum_rate - c.sum_rate).abs() < 1e-3);
}

#[test]
fn identical_users_share_one_common_stream() {
    let h = iid(1, 2, 6).user(0);
    let ch = ChannelSet::from_columns(&[h.clone(), h.clone()]).unwrap();
    let p = 100.0;
    let r = one_layer_rs(&ch, p, nominal(), &CccpSettings::default()).unwrap();
    let want = (1.0 + p * h.norm_squared()).log2();
    assert!((r.sum_rate - want).abs() < 1e-2, "{} vs {want}", r.sum_rate);
}

#[test]
fn one_layer_from_unicast_is_no_worse() {
    let ch = iid(3, 3, 7);
    let settings = CccpSettings::default();
    let u = unicast_scheme(&ch, 100.0, nominal(), &settings).unwrap();
    let start = u.precoders.as_ref().unwrap().restricted_to(&rsprecode::streams::StreamCollection::one_layer(3));
    let o = one_layer_rs(&ch, 100.0, nominal(), &settings.with_explicit(start)).unwrap();
    assert!(o.sum_rate >= u.sum_rate - 1e-6);
}

#[test]
fn baseline_powers_stay_within_budget() {
    let ch = iid(3, 3, 8);
    let z = zf_scheme(&ch, 50.0).unwrap();
    assert!(z.precoders.unwrap().total_power() <= 50.0 + 1e-8);
    let c = sum_capacity(&ch, 50.0).unwrap();
    assert!(c.powers.unwrap().iter().sum::<f64>() <= 50.0 + 1e-8);
    let u = unicast_scheme(&ch, 50.0, nominal(), &CccpSettings::default()).unwrap();
    assert!(u.precoders.unwrap().total_power() <= 50.0 + 1e-8);
}

#[test]
fn rank_deficient_channel_is_rejected() {
    let h = iid(1, 2, 2).user(0);
    let ch = ChannelSet::from_columns(&[h.clone(), h.clone() * Complex64::new(2.0, 0.0)]).unwrap();
    assert!(zf_scheme(&ch, 10.0).is_err());
}
