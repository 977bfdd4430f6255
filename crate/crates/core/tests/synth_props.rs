mod common;

use std::collections::BTreeMap;

use common::{on_grid, rng};
use gad_core::detector::{detect, estimate_attenuation, AttenuationLevel, DetectorConfig};
use gad_core::ingest::write_gad_csv;
use gad_core::model::{ConstellationId, RawSeries, SatelliteKey};
use gad_core::stats::{distinct_satellites, time_to_first_fix, Window};
use gad_core::synth::{
    generate, preset, ChannelModel, Preset, ReceiverModel, SatTrack, ScenarioSpec,
};
use proptest::prelude::*;
use rand::{Rng, RngCore};

fn zenith_spec(peak: f64, attenuation_db: f64) -> ScenarioSpec {
    let key = SatelliteKey::new(ConstellationId::Gps, 1).unwrap();
    ScenarioSpec {
        duration_s: 300.0,
        cadence_s: 1.0,
        seed: 0,
        channel: ChannelModel {
            open_sky_peak_dbhz: peak,
            elevation_exponent: 1.0,
            attenuation_db,
            sky_visibility_fraction: 1.0,
            noise_std_dbhz: 0.0,
        },
        receiver: ReceiverModel::default(),
        tracks: vec![SatTrack {
            key,
            elevation_start_deg: 90.0,
            elevation_end_deg: 90.0,
            azimuth_start_deg: 0.0,
            azimuth_end_deg: 0.0,
        }],
    }
}

fn random_spec(rng: &mut impl RngCore) -> ScenarioSpec {
    let mut spec = Preset::OpenSky.spec(rng.next_u64());
    spec.duration_s = on_grid(rng, 10.0, 150.0, 1.0);
    spec.channel.attenuation_db = on_grid(rng, 0.0, 30.0, 10.0);
    spec.channel.sky_visibility_fraction = on_grid(rng, 0.1, 1.0, 100.0);
    spec.channel.noise_std_dbhz = on_grid(rng, 0.0, 3.0, 10.0);
    spec.receiver.fix_warmup_s = on_grid(rng, 0.0, 40.0, 1.0);
    spec
}

/// Replays the receiver rule: which satellites may be in the fix at each epoch.
fn check_receiver_rule(series: &RawSeries, receiver: &ReceiverModel) -> Result<(), String> {
    let mut since: BTreeMap<SatelliteKey, f64> = BTreeMap::new();
    for e in series.epochs() {
        let t = e.timestamp_s();
        let mut next = BTreeMap::new();
        for o in e.observations() {
            if o.signal_present && o.cn0_dbhz >= receiver.tracking_threshold_dbhz {
                next.insert(o.key, since.get(&o.key).copied().unwrap_or(t));
            }
        }
        since = next;
        let warmed: Vec<_> = since
            .iter()
            .filter(|(_, &s)| t - s >= receiver.fix_warmup_s)
            .map(|(k, _)| *k)
            .collect();
        for o in e.observations().iter().filter(|o| o.used_in_fix) {
            if warmed.len() < receiver.fix_min_satellites || !warmed.contains(&o.key) {
                return Err(format!("{} in fix at t={t} with {} warmed", o.key, warmed.len()));
            }
        }
    }
    Ok(())
}

#[test]
fn zenith_satellite_identity_channel() {
    let s = generate(&zenith_spec(38.0, 0.0)).unwrap();
    assert_eq!(s.len(), 300);
    for e in s.epochs() {
        let o = &e.observations()[0];
        assert!(o.signal_present);
        assert_eq!(o.cn0_dbhz, 38.0);
    }
    let s = generate(&zenith_spec(38.0, 16.0)).unwrap();
    assert!(s.epochs().iter().all(|e| e.observations()[0].cn0_dbhz == 22.0));
}

#[test]
fn sixteen_db_room_is_strong_attenuation() {
    let s = generate(&zenith_spec(38.0, 16.0)).unwrap();
    let est = estimate_attenuation(&s, &DetectorConfig::default(), 38.0).unwrap();
    assert_eq!(est.metric_dbhz, 22.0);
    assert_eq!(est.deficit_db, 16.0);
    assert_eq!(est.level, AttenuationLevel::Strong);
}

#[test]
fn open_sky_fixes_after_warmup_with_all_satellites() {
    let spec = preset(Preset::OpenSky);
    let s = generate(&spec).unwrap();
    assert_eq!(time_to_first_fix(&s), Some(spec.receiver.fix_warmup_s));
    assert!(s.epochs().iter().all(|e| e.satellite_count() == 8));
}

#[test]
fn presets_decide_as_labelled() {
    let config = DetectorConfig::default();
    for p in Preset::ALL {
        let s = generate(&preset(p)).unwrap();
        assert_eq!(detect(&s, &config).unwrap(), p.is_attenuating(), "{p}");
    }
}

#[test]
fn deep_indoor_hears_almost_nothing() {
    for seed in 0..10 {
        let s = generate(&Preset::DeepIndoor.spec(seed)).unwrap();
        assert!(distinct_satellites(&s, &Window::new(100.0, 100.0).unwrap()) <= 2);
        assert_eq!(time_to_first_fix(&s), None);
    }
}

#[test]
fn spec_toml_round_trip() {
    for p in Preset::ALL {
        let spec = p.spec(99);
        assert_eq!(ScenarioSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equal_specs_write_identical_files(seed in any::<u64>()) {
        let spec = random_spec(&mut rng(seed));
        prop_assert_eq!(write_gad_csv(&generate(&spec).unwrap()), write_gad_csv(&generate(&spec.clone()).unwrap()));
    }

    #[test]
    fn more_attenuation_never_helps(seed in any::<u64>(), extra in 0.1f64..20.0) {
        let spec = random_spec(&mut rng(seed));
        let mut worse = spec.clone();
        worse.channel.attenuation_db += extra;
        let (a, b) = (generate(&spec).unwrap(), generate(&worse).unwrap());
        prop_assert_eq!(a.len(), b.len());
        for (ea, eb) in a.epochs().iter().zip(b.epochs()) {
            prop_assert!(eb.satellite_count() <= ea.satellite_count());
            prop_assert!(eb.fix_count() <= ea.fix_count());
            let peak = |m: Option<f64>| m.unwrap_or(f64::NEG_INFINITY);
            prop_assert!(peak(eb.max_cn0()) <= peak(ea.max_cn0()));
        }
    }

    #[test]
    fn fixes_follow_the_receiver_rule(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut spec = random_spec(&mut r);
        spec.receiver.fix_min_satellites = r.random_range(4..7);
        let s = generate(&spec).unwrap();
        prop_assert!(check_receiver_rule(&s, &spec.receiver).is_ok());
    }

    #[test]
    fn no_value_above_peak_plus_four_sigma(seed in any::<u64>()) {
        let spec = random_spec(&mut rng(seed));
        let cap = spec.channel.open_sky_peak_dbhz + 4.0 * spec.channel.noise_std_dbhz;
        let s = generate(&spec).unwrap();
        for e in s.epochs() {
            for o in e.observations() {
                prop_assert!(o.cn0_dbhz <= cap);
            }
        }
    }
}
