mod common;

use common::{iid, unit, Contract};
use rsprecode::channel::ChannelSet;
use rsprecode::optimizer::search::all_decoding_orders;
use rsprecode::optimizer::{cccp, exhaustive_sd, minimize_power, selected_sd, CccpSettings, DesignProblem, InitMode, SelectionSettings};
use rsprecode::parallel::Execution;
use rsprecode::rates::{DecodingMode, RobustContext, UtilitySpec};
use rsprecode::streams::{enumerate_streams, DecodingOrder, StreamCollection, StreamId};

fn orthogonal_pair() -> ChannelSet {
    ChannelSet::from_columns(&[unit(2, 0), unit(2, 1)]).unwrap()
}

fn jd(ch: &ChannelSet, utility: UtilitySpec, budget: f64) -> DesignProblem {
    let all = enumerate_streams(ch.users()).unwrap();
    DesignProblem::new(ch.clone(), all, DecodingMode::Joint, utility, budget, RobustContext::nominal()).unwrap()
}

#[test]
fn orthogonal_users_water_fill_and_leave_common_stream_empty() {
    let res = cccp(&jd(&orthogonal_pair(), UtilitySpec::sum_rate(), 100.0), &CccpSettings::default()).unwrap();
    assert!((res.objective - 2.0 * 51f64.log2()).abs() < 1e-3, "{}", res.objective);
    assert!(res.precoders.stream_power(StreamId::full(2)) <= 1e-4 * 100.0);
}

#[test]
fn single_user_order_search_matches_joint_decoding() {
    let ch = iid(1, 3, 5);
    let settings = CccpSettings::default();
    let joint = cccp(&jd(&ch, UtilitySpec::sum_rate(), 10.0), &settings).unwrap();
    let sd = exhaustive_sd(&ch, 10.0, &UtilitySpec::sum_rate(), RobustContext::nominal(), &settings, false).unwrap();
    assert!((joint.objective - sd.objective).abs() < 1e-4);
}

#[test]
fn order_search_keeps_the_best_order() {
    let ch = iid(2, 2, 9);
    let settings = CccpSettings::default().with_starts(vec![InitMode::ScaledIdentity, InitMode::MmseHeuristic]);
    let best = exhaustive_sd(&ch, 100.0, &UtilitySpec::sum_rate(), RobustContext::nominal(), &settings, false).unwrap();
    let all = enumerate_streams(2).unwrap();
    let orders = all_decoding_orders(2).unwrap();
    assert_eq!(orders.len(), 4);
    for order in orders {
        let p = DesignProblem::new(ch.clone(), all.clone(), DecodingMode::Successive(order), UtilitySpec::sum_rate(), 100.0, RobustContext::nominal()).unwrap();
        let single = cccp(&p, &settings).unwrap();
        assert!(best.objective >= single.objective - 1e-9);
    }
}

#[test]
fn selection_over_full_two_user_collection_is_the_descending_order_run() {
    let ch = iid(2, 2, 21);
    let settings = CccpSettings::default().with_starts(vec![InitMode::ScaledIdentity, InitMode::MmseHeuristic]);
    let sel = selected_sd(&ch, 100.0, &UtilitySpec::sum_rate(), &SelectionSettings::new(3), RobustContext::nominal(), &settings).unwrap();
    let all = enumerate_streams(2).unwrap();
    let order = DecodingOrder::descending(&all, 2).unwrap();
    let p = DesignProblem::new(ch, all, DecodingMode::Successive(order), UtilitySpec::sum_rate(), 100.0, RobustContext::nominal()).unwrap();
    let direct = cccp(&p, &settings).unwrap();
    assert!((sel.objective - direct.objective).abs() < 1e-4);
}

#[test]
fn selection_with_unicast_start_beats_unicast() {
    let ch = iid(3, 3, 4);
    let settings = CccpSettings::default();
    let uni = rsprecode::baselines::unicast_scheme(&ch, 100.0, RobustContext::nominal(), &settings).unwrap();
    let sel = selected_sd(&ch, 100.0, &UtilitySpec::sum_rate(), &SelectionSettings::new(7), RobustContext::nominal(), &settings).unwrap();
    assert!(sel.objective >= uni.sum_rate - 1e-6);
}

#[test]
fn zero_targets_need_no_power() {
    let ch = iid(2, 2, 3);
    let all = enumerate_streams(2).unwrap();
    let res = minimize_power(&[0.0, 0.0], &ch, &all, RobustContext::nominal(), 100.0, &CccpSettings::default()).unwrap();
    assert!(res.precoders.total_power() <= 1e-7, "{}", res.precoders.total_power());
}

#[test]
fn single_user_power_inverts_capacity() {
    let ch = iid(1, 2, 8);
    let all = enumerate_streams(1).unwrap();
    let r = 3.0;
    let res = minimize_power(&[r], &ch, &all, RobustContext::nominal(), 1e4, &CccpSettings::default()).unwrap();
    let want = (2f64.powf(r) - 1.0) / ch.norm_sqr(0);
    assert!((res.precoders.total_power() - want).abs() / want < 1e-5);
}

#[test]
fn every_metric_keeps_the_outer_loop_contract() {
    let ch = iid(2, 2, 30);
    let settings = CccpSettings::default();
    let mut contract = Contract::default();
    for utility in [UtilitySpec::sum_rate(), UtilitySpec::weighted_sum_rate(vec![1.0, 3.0]), UtilitySpec::worst_user_rate()] {
        let res = cccp(&jd(&ch, utility, 100.0), &settings).unwrap();
        contract.add(&res.runs, false);
    }
    let res = minimize_power(&[1.0, 2.0], &ch, &enumerate_streams(2).unwrap(), RobustContext::nominal(), 100.0, &settings).unwrap();
    contract.add(&res.runs, true);
    assert!(contract.holds(), "{}", contract.describe());
}

#[test]
fn worst_user_rate_balances_users() {
    let ch = iid(2, 2, 31);
    let res = cccp(&jd(&ch, UtilitySpec::worst_user_rate(), 100.0), &CccpSettings::default()).unwrap();
    let r = &res.rates.user_rates;
    assert!((r[0] - r[1]).abs() < 1e-3, "{r:?}");
    assert!((res.objective - r[0].min(r[1])).abs() < 1e-6);
}

#[test]
fn runs_are_reproducible_and_execution_independent() {
    let ch = iid(3, 3, 12);
    let p = jd(&ch, UtilitySpec::sum_rate(), 30.0);
    let mut s = CccpSettings::default();
    let a = cccp(&p, &s).unwrap();
    let b = cccp(&p, &s).unwrap();
    s.execution = Execution::Sequential;
    let c = cccp(&p, &s).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.trace, c.trace);
    assert_eq!(a.precoders, c.precoders);
}

#[test]
fn robust_design_respects_budget() {
    let ch = iid(2, 2, 40);
    let all = enumerate_streams(2).unwrap();
    let p = DesignProblem::new(ch, all, DecodingMode::Joint, UtilitySpec::sum_rate(), 50.0, RobustContext::new(0.5).unwrap()).unwrap();
    let res = cccp(&p, &CccpSettings::default()).unwrap();
    assert!(res.precoders.total_power() <= 50.0 + 1e-6);
    assert!(res.max_violation() <= 1e-6);
}

#[test]
fn one_layer_collection_order_is_common_first() {
    let active = StreamCollection::one_layer(3);
    let order = DecodingOrder::descending(&active, 3).unwrap();
    for u in 0..3 {
        assert_eq!(order.of(u), &[StreamId::full(3), StreamId::singleton(u)]);
    }
}
