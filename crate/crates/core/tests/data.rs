use dqrc::data::*;
use dqrc::error::ErrorCategory;
use proptest::prelude::*;
use std::io::Write;

const TABLE2: [f64; 6] = [4182.0, 3899.0, 3932.0, 3945.0, 3795.0, 3911.0];

#[test]
fn table2_rows_from_raw_values() {
    let ds = sliding_windows(&TABLE2, 4).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.windows[0], vec![4182.0, 3899.0, 3932.0, 3945.0]);
    assert_eq!(ds.targets[0], 3795.0);
    assert_eq!(ds.windows[1], vec![3899.0, 3932.0, 3945.0, 3795.0]);
    assert_eq!(ds.targets[1], 3911.0);

    let last = sliding_windows(&[5702.0, 5703.0, 5320.0, 4814.0, 4414.0], 4).unwrap();
    assert_eq!((last.windows[0].as_slice(), last.targets[0]), (&[5702.0, 5703.0, 5320.0, 4814.0][..], 4414.0));
}

#[test]
fn full_length_series_sample_count() {
    let values: Vec<f64> = (0..35_064).map(|i| (i % 97) as f64).collect();
    assert_eq!(sliding_windows(&values, 4).unwrap().len(), 35_060);
    let s = Series::new("load", values).unwrap();
    let d = make_windows(&s, 4, SplitSpec::default_for(35_060)).unwrap();
    assert_eq!(d.train.len() + d.val.len() + d.test.len(), 35_060);
}

#[test]
fn windows_reconstruct_the_series() {
    let s = synthesize_series(300, 4, &SynthComponents::default()).unwrap();
    let w = 5;
    let d = make_windows(&s, w, SplitSpec::new(200, 50, 45)).unwrap();
    let all: Vec<(&Vec<f64>, f64)> =
        [&d.train, &d.val, &d.test].iter().flat_map(|ds| ds.windows.iter().zip(ds.targets.iter().copied())).collect();
    assert_eq!(all.len(), 295);
    for (i, (win, target)) in all.iter().enumerate() {
        for (j, v) in win.iter().enumerate() {
            assert!((d.norm.denormalize(*v) - s.values[i + j]).abs() < 1e-9);
        }
        assert!((d.norm.denormalize(*target) - s.values[i + w]).abs() < 1e-9);
    }
    assert_eq!((d.train.offset, d.val.offset, d.test.offset), (0, 200, 250));
}

#[test]
fn normalization_uses_training_range_only() {
    let mut v: Vec<f64> = (0..20).map(|i| i as f64).collect();
    v.push(1000.0);
    let s = Series::new("x", v).unwrap();
    let d = make_windows(&s, 2, SplitSpec::new(10, 4, 5)).unwrap();
    assert_eq!((d.norm.min, d.norm.max), (0.0, 11.0));
    assert!(d.test.targets.last().unwrap() > &1.0);
}

#[test]
fn split_too_large_is_rejected() {
    let s = Series::new("x", (0..10).map(f64::from).collect()).unwrap();
    assert!(make_windows(&s, 4, SplitSpec::new(5, 1, 1)).is_err());
}

#[test]
fn synthetic_daily_structure() {
    let c = SynthComponents { noise_std: 0.0, trend: 0.0, ..Default::default() };
    let s = synthesize_series(24 * 7 * 4, 1, &c).unwrap();
    let x = &s.values;
    for t in 0..x.len() - 168 {
        assert!((x[t] - x[t + 168]).abs() < 1e-9);
    }
    let noisy = synthesize_series(2400, 1, &SynthComponents::default()).unwrap();
    let ac = |lag: usize| {
        let v = &noisy.values;
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let num: f64 = (0..v.len() - lag).map(|t| (v[t] - mean) * (v[t + lag] - mean)).sum();
        num / v.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
    };
    assert!(ac(24) > ac(13));
    assert_eq!(noisy, synthesize_series(2400, 1, &SynthComponents::default()).unwrap());
    assert_ne!(noisy, synthesize_series(2400, 2, &SynthComponents::default()).unwrap());
}

#[test]
fn csv_loading_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    std::fs::write(&good, "time,load\n0,1.5\n1,2.5\n2,3.5\n").unwrap();
    assert_eq!(load_series(&good, "load").unwrap().values, vec![1.5, 2.5, 3.5]);

    let blank = dir.path().join("blank.csv");
    std::fs::write(&blank, "load\n1\n\n2\n").unwrap();
    let e = load_series(&blank, "load").unwrap_err();
    assert!(e.to_string().contains("line 3"), "{e}");

    let bad = dir.path().join("bad.csv");
    let mut f = std::fs::File::create(&bad).unwrap();
    writeln!(f, "load\n1\nabc").unwrap();
    let e = load_series(&bad, "load").unwrap_err();
    assert!(e.to_string().contains("line 3"), "{e}");
    assert_eq!(e.category(), ErrorCategory::Data);

    assert!(load_series(&good, "missing").is_err());
    let missing = dir.path().join("nope.csv");
    let e = load_series(&missing, "load").unwrap_err();
    assert!(e.to_string().contains("nope.csv"));
}

#[test]
fn metric_values() {
    let m = compute_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((m.mae, m.rmse, m.r2), (0.0, 0.0, 1.0));
    let m = compute_metrics(&[0.0, 0.0], &[1.0, -1.0]).unwrap();
    assert_eq!((m.mae, m.rmse), (1.0, 1.0));
    assert!(!m.r2_defined);
}

proptest! {
    #[test]
    fn rmse_dominates_mae(pairs in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1..60)) {
        let (t, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = compute_metrics(&t, &p).unwrap();
        prop_assert!(m.rmse >= m.mae - 1e-12);
        prop_assert!(m.mae >= 0.0);
    }

    #[test]
    fn normalize_round_trip(x in -1e4..1e4f64, lo in -1e4..0.0f64, span in 1.0..1e4f64) {
        let hi = lo + span;
        let back = denormalize(normalize(x, lo, hi).unwrap(), lo, hi).unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(hi.abs()).max(1.0));
    }

    #[test]
    fn normalized_training_windows_lie_in_unit_interval(seed in 0u64..50, w in 1usize..8) {
        let s = synthesize_series(200, seed, &SynthComponents::default()).unwrap();
        let d = make_windows(&s, w, SplitSpec::default_for(200 - w)).unwrap();
        for v in d.train.windows.iter().flatten().chain(&d.train.targets) {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
        }
    }
}
