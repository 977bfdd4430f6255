mod common;

use common::{inject_filtered, map_epochs, random_config, random_key, random_series, random_series_spanning, rng};
use gad_core::detector::{
    assess, detect, online_step, Criterion, DetectError, DetectionState, DetectorConfig, Phase,
};
use gad_core::model::{Epoch, RawSeries, SatelliteObservation};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn stream(series: &RawSeries, config: &DetectorConfig) -> DetectionState {
    let mut state = DetectionState::new(series.cadence_s()).unwrap();
    for e in series.epochs() {
        state = online_step(state, e, config).unwrap();
    }
    state
}

fn cn0_only(config: &mut DetectorConfig) {
    config.criteria.retain(|c| c.family().is_cn0());
    if config.criteria.is_empty() {
        config.criteria.push(Criterion::MaxCn0Below(30.0));
    }
}

proptest! {
    #[test]
    fn online_matches_batch(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_config(&mut r);
        let s = random_series(&mut r, 1, 140);
        let state = stream(&s, &config);
        match detect(&s, &config) {
            Ok(d) => prop_assert_eq!(state.phase(), Phase::Decided(u8::from(d))),
            Err(DetectError::SeriesTooShort { .. }) => {
                prop_assert!(!matches!(state.phase(), Phase::Decided(_)))
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn weaker_signals_never_clear_detection(seed in any::<u64>(), delta in 0.1f64..30.0) {
        let mut r = rng(seed);
        let mut config = random_config(&mut r);
        cn0_only(&mut config);
        let s = random_series_spanning(&mut r, config.required_span_s());
        let weaker = map_epochs(&s, |e| {
            e.observations()
                .iter()
                .map(|o| {
                    let mut o = *o;
                    if o.signal_present {
                        o.cn0_dbhz = (o.cn0_dbhz - delta).max(0.0);
                    }
                    o
                })
                .collect()
        });
        if detect(&s, &config).unwrap() {
            prop_assert!(detect(&weaker, &config).unwrap());
        }
    }

    #[test]
    fn filtered_observations_change_no_cn0_outcome(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut config = random_config(&mut r);
        cn0_only(&mut config);
        let s = random_series_spanning(&mut r, config.required_span_s());
        let noisy = inject_filtered(&mut r, &s, &config);
        prop_assert_eq!(assess(&s, &config).unwrap().outcomes, assess(&noisy, &config).unwrap().outcomes);
    }

    #[test]
    fn observation_order_is_irrelevant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_config(&mut r);
        let s = random_series_spanning(&mut r, config.required_span_s());
        let shuffled = map_epochs(&s, |e| {
            let mut obs = e.observations().to_vec();
            obs.shuffle(&mut r);
            obs
        });
        prop_assert_eq!(detect(&s, &config).unwrap(), detect(&shuffled, &config).unwrap());
    }

    #[test]
    fn new_satellites_only_break_distinct_sats_below(seed in any::<u64>(), t in 0u32..20) {
        let mut r = rng(seed);
        let mut config = random_config(&mut r);
        config.criteria = vec![Criterion::DistinctSatsBelow(t as f64)];
        let s = random_series_spanning(&mut r, config.required_span_s());
        let before = detect(&s, &config).unwrap();
        let key = random_key(&mut r);
        let grown = map_epochs(&s, |e| {
            let mut obs = e.observations().to_vec();
            if obs.iter().all(|o| o.key != key) {
                obs.push(SatelliteObservation::tracked(key, 30.0, 0.0, 45.0));
            }
            obs
        });
        let after = detect(&grown, &config).unwrap();
        prop_assert!(!after || before);
    }
}

#[test]
fn phases_move_forward() {
    let config = DetectorConfig::default();
    let mut state = DetectionState::new(1.0).unwrap();
    let mut seen = Vec::new();
    for i in 0..250 {
        state = online_step(state, &Epoch::empty(i as f64).unwrap(), &config).unwrap();
        seen.push(state.phase());
    }
    assert_eq!(seen[0], Phase::Initializing);
    assert_eq!(seen[99], Phase::Initializing);
    assert_eq!(seen[100], Phase::Measuring);
    assert_eq!(seen[198], Phase::Measuring);
    assert_eq!(seen[199], Phase::Decided(1));
    assert!(seen[199..].iter().all(|p| *p == Phase::Decided(1)));
}

#[test]
fn out_of_order_epochs_rejected() {
    let config = DetectorConfig::default();
    let state = online_step(DetectionState::new(1.0).unwrap(), &Epoch::empty(5.0).unwrap(), &config).unwrap();
    assert!(matches!(
        online_step(state, &Epoch::empty(5.0).unwrap(), &config),
        Err(DetectError::OutOfOrderEpoch { .. })
    ));
}
