mod common;

use chrono::{TimeZone, Utc};
use gridsense::signal::{
    minmax_scale_columns, reject_outlier_segments, segment_by_events, slice_windows, Class, Origin, Segment,
    SegmentPlan, WindowSpec,
};
use gridsense::synth::{generate, ScenarioConfig};
use gridsense::FeatureMatrix;
use proptest::prelude::*;

fn segment(values: &[f64], origin: Origin, event_index: usize) -> Segment {
    Segment {
        terminal_id: "T1".into(),
        label: origin.into(),
        start: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
        end: Utc.with_ymd_and_hms(2020, 1, 1, 0, 3, 0).unwrap(),
        event_index,
        rate_hz: values.len() as f64 / 180.0,
        va_m: values.to_vec(),
        ia_m: values.iter().map(|v| v * 0.1).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn covered_events_yield_five_normal_one_pre_one_post(n_events in 1usize..5, seed in any::<u64>(), rate in prop_oneof![Just(1.0), Just(2.0)]) {
        let cfg = ScenarioConfig { n_events, rate_hz: rate, seed, ..ScenarioConfig::default() };
        let s = generate(&cfg).unwrap();
        let segs = segment_by_events(&s.channels, &s.log, &SegmentPlan::default()).unwrap();
        prop_assert_eq!(segs.len(), 7 * n_events);
        for e in 0..n_events {
            let of_event: Vec<&Segment> = segs.iter().filter(|g| g.event_index == e).collect();
            let count = |c: Class| of_event.iter().filter(|g| g.label.class == c).count();
            prop_assert_eq!((count(Class::Nor), count(Class::Pre), count(Class::Post)), (5, 1, 1));
        }
        prop_assert_eq!(s.truth.len(), segs.len());
        for (t, g) in s.truth.iter().zip(&segs) {
            prop_assert_eq!(&t.segment_id, &g.id());
            prop_assert_eq!(t.class, g.label.class);
            prop_assert_eq!(t.start, g.start);
        }
    }

    #[test]
    fn identical_population_drops_nothing(n in 2usize..30, values in prop::collection::vec(-10.0f64..10.0, 64..200), k in 0.5f64..5.0) {
        let segs: Vec<Segment> = (0..n).map(|i| segment(&values, Origin::Normal(10), i)).collect();
        let (kept, dropped) = reject_outlier_segments(segs, k).unwrap();
        prop_assert_eq!(kept.len(), n);
        prop_assert!(dropped.is_empty());
    }

    #[test]
    fn rejection_partitions_its_input(rms in prop::collection::vec(0.5f64..5.0, 3..40), k in 1.0f64..4.0) {
        let segs: Vec<Segment> = rms.iter().enumerate().map(|(i, &r)| segment(&[r; 90], Origin::Pre, i)).collect();
        let (kept, dropped) = reject_outlier_segments(segs, k).unwrap();
        prop_assert_eq!(kept.len() + dropped.len(), rms.len());
        let min_dropped = dropped.iter().map(|d| d.segment.va_m[0]).fold(f64::INFINITY, f64::min);
        prop_assert!(kept.iter().all(|s| s.va_m[0] < min_dropped));
    }

    #[test]
    fn minmax_maps_fit_rows_into_unit_interval(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 2..40)) {
        let n = rows.len();
        let m = FeatureMatrix::new(
            (0..4).map(|j| format!("f{j}")).collect(),
            rows,
            vec![0; n],
            vec!["Nor".into()],
        ).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let (scaled, _) = minmax_scale_columns(&m, &all).unwrap();
        for j in 0..4 {
            let (lo, hi) = m.column(j).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if hi > lo {
                prop_assert!(scaled.column(j).all(|v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn smaller_windows_are_suffixes_of_larger(mut mults in prop::collection::btree_set(1usize..7, 1..4), seed in any::<u64>()) {
        // 30 s units at 4 Hz keep every window >= 64 samples
        let sizes: Vec<f64> = std::mem::take(&mut mults).into_iter().map(|m| 30.0 * m as f64).collect();
        let x = common::white_noise(seed, 720);
        let mut seg = segment(&x, Origin::Post, 0);
        seg.rate_hz = 4.0;
        let spec = WindowSpec { sizes_s: sizes.clone(), ..WindowSpec::default() };
        let set = slice_windows(&seg, &spec).unwrap();
        for a in &set.windows {
            prop_assert_eq!(a.va_m.len(), (a.size_s * 4.0) as usize);
            for b in &set.windows {
                if a.size_s <= b.size_s {
                    prop_assert!(b.va_m.ends_with(a.va_m));
                    prop_assert!(b.ia_m.ends_with(a.ia_m));
                }
            }
        }
    }
}
