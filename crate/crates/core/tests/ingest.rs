mod common;

use std::collections::BTreeMap;

use common::{random_recorded_series, rng};
use gad_core::ingest::{parse_gad_csv, parse_nmea, write_gad_csv, IngestError, GAD_CSV_HEADER};
use gad_core::model::ConstellationId;
use gad_core::synth::{generate, Preset};
use proptest::prelude::*;
use rand::seq::SliceRandom;

#[test]
fn synthetic_file_round_trips() {
    let mut spec = Preset::OpenSky.spec(3);
    spec.duration_s = 25.0;
    let series = generate(&spec).unwrap();
    let text = write_gad_csv(&series);
    assert_eq!(text.lines().count(), 201);
    let report = parse_gad_csv(&text).unwrap();
    assert_eq!(report.lines_total, 200);
    assert_eq!(report.lines_skipped, 0);
    assert_eq!(report.series, series);
}

/// One GGA + GSV + GSA cycle; checksums were computed with a separate script.
const NMEA_CYCLE: &str = "\
$GPGGA,101500.00,5230.000,N,01322.000,E,1,03,1.2,40.0,M,45.0,M,,*5A\r
$GPGSV,1,1,04,02,65,045,41,07,40,130,35,12,22,250,28,25,10,310,19*7D\r
$GPGSA,A,3,02,07,12,,,,,,,,,,1.9,1.2,1.5*3B\r
";

#[test]
fn nmea_cycle_fixture() {
    let report = parse_nmea(NMEA_CYCLE).unwrap();
    assert_eq!(report.lines_total, 3);
    assert_eq!(report.lines_skipped, 0);
    assert!(report.warnings.is_empty());
    let epochs = report.series.epochs();
    assert_eq!(epochs.len(), 1);
    let e = &epochs[0];
    assert_eq!(e.timestamp_s(), 0.0);
    assert_eq!(e.satellite_count(), 4);
    assert_eq!(e.fix_count(), 3);

    let expected = [
        (2, 65.0, 45.0, 41.0, true),
        (7, 40.0, 130.0, 35.0, true),
        (12, 22.0, 250.0, 28.0, true),
        (25, 10.0, 310.0, 19.0, false),
    ];
    for (obs, (svid, el, az, cn0, fix)) in e.observations().iter().zip(expected) {
        assert_eq!(obs.key.constellation(), ConstellationId::Gps);
        assert_eq!(obs.key.svid(), svid);
        assert_eq!((obs.elevation_deg, obs.azimuth_deg, obs.cn0_dbhz), (el, az, cn0));
        assert!(obs.signal_present);
        assert_eq!(obs.used_in_fix, fix);
    }
}

#[test]
fn corrupted_checksums_are_reported() {
    let corrupted = NMEA_CYCLE.replace("*7D", "*7E");
    let report = parse_nmea(&corrupted);
    // GSV lost: no satellite information at all
    assert!(matches!(report, Err(IngestError::EmptyInput { ref warnings }) if warnings.len() == 1));
}

fn nmea_sentence(payload: &str) -> String {
    format!("${payload}*{:02X}", payload.bytes().fold(0u8, |a, b| a ^ b))
}

proptest! {
    #[test]
    fn gad_csv_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_recorded_series(&mut r, 1, 40);
        let text = write_gad_csv(&s);
        let parsed = parse_gad_csv(&text).unwrap();
        prop_assert_eq!(&parsed.series, &s);
        prop_assert_eq!(write_gad_csv(&parsed.series), text);
    }

    #[test]
    fn gad_csv_tolerates_shuffles_within_an_epoch(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_recorded_series(&mut r, 1, 20);
        let text = write_gad_csv(&s);
        let mut groups: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        let mut order = Vec::new();
        for line in text.lines().skip(1) {
            let t = line.split(',').next().unwrap();
            let idx = match order.iter().position(|x| *x == t) {
                Some(i) => i,
                None => { order.push(t); order.len() - 1 }
            };
            groups.entry(idx).or_default().push(line);
        }
        let mut shuffled = vec![GAD_CSV_HEADER.to_owned()];
        for lines in groups.values_mut() {
            lines.shuffle(&mut r);
            shuffled.extend(lines.iter().map(|l| l.to_string()));
        }
        let parsed = parse_gad_csv(&shuffled.join("\n")).unwrap();
        prop_assert_eq!(parsed.series, s);
    }

    #[test]
    fn nmea_never_marks_fix_without_signal(
        sats in prop::collection::vec((1u32..40, 0u32..90, 0u32..360, prop::option::of(0u32..60)), 0..12),
        used in prop::collection::vec(1u32..40, 0..12),
    ) {
        let mut lines = vec![nmea_sentence("GPGGA,120000.00,,,,,1,04,,,,,,,")];
        let chunks: Vec<_> = sats.chunks(4).collect();
        let total = chunks.len().max(1);
        for (i, chunk) in chunks.iter().enumerate() {
            let mut p = format!("GPGSV,{total},{},{:02}", i + 1, sats.len());
            for (svid, el, az, snr) in chunk.iter() {
                let snr = snr.map(|v| v.to_string()).unwrap_or_default();
                p.push_str(&format!(",{svid:02},{el:02},{az:03},{snr}"));
            }
            lines.push(nmea_sentence(&p));
        }
        if sats.is_empty() {
            lines.push(nmea_sentence("GPGSV,1,1,00"));
        }
        let mut gsa = String::from("GPGSA,A,3");
        for i in 0..12 {
            gsa.push(',');
            if let Some(v) = used.get(i) {
                gsa.push_str(&format!("{v:02}"));
            }
        }
        gsa.push_str(",1.0,1.0,1.0");
        lines.push(nmea_sentence(&gsa));
        let report = parse_nmea(&lines.join("\n")).unwrap();
        for e in report.series.epochs() {
            for o in e.observations() {
                prop_assert!(!o.used_in_fix || o.signal_present);
            }
        }
    }

    #[test]
    fn parsers_are_total_on_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_gad_csv(&text);
        let _ = parse_nmea(&text);
    }
}

#[test]
fn multi_constellation_cycles() {
    let report = parse_nmea(include_str!("data/cycle.nmea")).unwrap();
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    let epochs = report.series.epochs();
    let times: Vec<f64> = epochs.iter().map(|e| e.timestamp_s()).collect();
    assert_eq!(times, [0.0, 1.0, 2.0]);
    for e in epochs {
        // GPS 2, 7, 12, 25 and GLONASS 70 tracked; GPS 30 and GLONASS 71 blank
        assert_eq!(e.observations().len(), 7);
        assert_eq!(e.satellite_count(), 5);
        assert_eq!(e.fix_count(), 3);
        let glonass = e.observations().iter().filter(|o| o.key.constellation() == ConstellationId::Glonass);
        assert_eq!(glonass.count(), 2);
    }
}
