//! Built-in experiment presets.

use std::f64::consts::PI;

use super::config::{CccpOverrides, ExperimentConfig, Scheme, SchemeSpec};
use crate::channel::{ChannelScenario, OneRingScenario};
use crate::error::{Error, Result};
use crate::rates::Metric;
use crate::streams::SeaMode;

pub const PRESETS: [&str; 6] = ["fig3", "fig4-disjoint", "fig4-overlap", "fig5", "fig6", "fig7"];

/// Antenna spacing in wavelengths used by the one-ring presets.
pub const PRESET_SPACING: f64 = 1.0;

const DEG: f64 = PI / 180.0;

fn schemes(list: &[Scheme]) -> Vec<SchemeSpec> {
    list.iter().map(|&s| SchemeSpec::new(s)).collect()
}

fn two_groups(theta0: f64, step: f64, delta: f64) -> ChannelScenario {
    ChannelScenario::OneRing(OneRingScenario::evenly_spaced(2, theta0, step, delta, PRESET_SPACING))
}

fn base(name: &str, users: usize, channel: ChannelScenario, list: &[Scheme]) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        schemes: schemes(list),
        users,
        antennas: users,
        channel,
        p_db: vec![30.0],
        sigma2: vec![0.0],
        trials: 50,
        seed: 1,
        metric: Metric::SumRate,
        weights: Vec::new(),
        targets: Vec::new(),
        n_sea: None,
        sea_mode: SeaMode::PowerRank,
        max_collections: None,
        warm_start_chain: true,
        timeout_s: 300.0,
        cccp: CccpOverrides::default(),
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use Scheme::*;
    let cfg = match name {
        "fig3" => {
            let mut c = base(name, 3, two_groups(-PI / 3.0, 15.0 * DEG, 5.0 * DEG), &[Capacity, RsJd, OneLayerRs, Unicast, Zf]);
            c.p_db = (0..=6).map(|i| 5.0 * i as f64).collect();
            c
        }
        "fig4-disjoint" => {
            let delta = 5.0 * DEG;
            let mut c = base(name, 4, two_groups(-PI / 3.0 + delta, 15.0 * DEG, delta), &[Capacity, RsSdSelected, OneLayerRs, Unicast]);
            c.n_sea = Some(15);
            c
        }
        "fig4-overlap" => {
            let mut c = base(name, 4, two_groups(-PI / 3.0, 10.0 * DEG, 15.0 * DEG), &[Capacity, RsSdSelected, OneLayerRs, Unicast]);
            c.n_sea = Some(15);
            c
        }
        "fig5" => {
            let mut c = base(name, 8, two_groups(-PI / 3.0, PI / 8.0, 20.0 * DEG), &[Capacity, RsSdSelected, OneLayerRs, Unicast]);
            c.n_sea = Some(38);
            c.trials = 5;
            c.timeout_s = 3600.0;
            c
        }
        "fig6" => {
            let mut c = base(name, 4, ChannelScenario::Iid, &[]);
            c.schemes = vec![SchemeSpec::new(RsSdSelected), SchemeSpec::unregularized(RsSdSelected)];
            c.sigma2 = (1..=9).map(|i| i as f64 / 10.0).collect();
            c.n_sea = Some(15);
            c
        }
        "fig7" => {
            let mut c = base(name, 4, ChannelScenario::Iid, &[RsSdSelected, Unicast]);
            c.sigma2 = (1..=9).map(|i| i as f64 / 10.0).collect();
            c.n_sea = Some(15);
            c
        }
        _ => return Err(Error::Config(format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")))),
    };
    Ok(cfg)
}
