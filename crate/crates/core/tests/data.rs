use chrono::{Days, NaiveDate};
use fslstm_core::cells::ModelKind;
use fslstm_core::data::{
    build_samples, generate_synthetic, select_gauges, BoundingBox, DailyRow, DataError, DateRange,
    GaugeRecord, NormalizationStats, Split, SplitSpec, SyntheticSpec, WindowInputs, AUX_WIDTH,
    STATIC_ATTRIBUTES, STD_FLOOR, WINDOW,
};
use proptest::prelude::*;

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn row(date: NaiveDate, k: usize) -> DailyRow {
    let x = k as f64;
    DailyRow {
        date,
        precip: Some((x * 0.37).sin().abs() * 4.0),
        soil_moisture: Some(20.0 + (x * 0.11).cos()),
        tmin: Some(15.0 + (x * 0.05).sin()),
        tmean: Some(20.0 + (x * 0.05).sin()),
        tmax: Some(25.0 + (x * 0.05).sin()),
        streamflow: Some(1.0 + (x * 0.21).sin().abs()),
        quality: Some(true),
    }
}

fn attrs() -> Vec<f64> {
    (0..STATIC_ATTRIBUTES.len()).map(|i| i as f64).collect()
}

fn continuous(id: &str, start: NaiveDate, days: usize) -> GaugeRecord {
    let rows = (0..days)
        .map(|k| row(start + Days::new(k as u64), k))
        .collect();
    GaugeRecord::new(id, -22.0, -50.0, attrs(), rows).unwrap()
}

fn one_split(start: NaiveDate, days: usize) -> SplitSpec {
    let end = start + Days::new(days as u64 - 1);
    SplitSpec::new(
        DateRange::new(start, end).unwrap(),
        DateRange::new(ymd(1900, 1, 1), ymd(1900, 12, 31)).unwrap(),
        DateRange::new(ymd(1901, 1, 1), ymd(1901, 12, 31)).unwrap(),
    )
    .unwrap()
}

#[test]
fn well_formed_three_rows() {
    let r = continuous("g", ymd(2000, 1, 1), 3);
    assert_eq!(r.len(), 3);
    assert_eq!(r.start(), ymd(2000, 1, 1));
    assert_eq!(r.end(), ymd(2000, 1, 3));
}

#[test]
fn duplicated_date_is_named() {
    let d = ymd(2000, 1, 2);
    let rows = vec![row(ymd(2000, 1, 1), 0), row(d, 1), row(d, 2)];
    let err = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap_err();
    assert_eq!(
        err,
        DataError::DuplicateDate {
            gauge: "g".into(),
            row: 3,
            date: d
        }
    );
    assert!(err.to_string().contains("2000-01-02"));
}

#[test]
fn non_monotone_dates_report_the_row() {
    let rows = vec![
        row(ymd(2000, 1, 1), 0),
        row(ymd(2000, 1, 3), 1),
        row(ymd(2000, 1, 2), 2),
    ];
    let err = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap_err();
    assert!(matches!(err, DataError::NonMonotoneDate { row: 3, .. }));
}

#[test]
fn negative_precipitation_and_streamflow_are_rejected() {
    let mut r = row(ymd(2000, 1, 2), 1);
    r.precip = Some(-0.5);
    let rows = vec![row(ymd(2000, 1, 1), 0), r];
    let err = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap_err();
    assert!(matches!(
        err,
        DataError::NegativeValue {
            row: 2,
            column: "precip_mm",
            ..
        }
    ));
    let mut r = row(ymd(2000, 1, 1), 0);
    r.streamflow = Some(-1.0);
    let err = GaugeRecord::new("g", -22.0, -50.0, attrs(), vec![r]).unwrap_err();
    assert!(matches!(
        err,
        DataError::NegativeValue {
            row: 1,
            column: "streamflow_mm",
            ..
        }
    ));
}

#[test]
fn missing_days_become_explicit_gaps() {
    let rows = vec![row(ymd(2000, 1, 1), 0), row(ymd(2000, 1, 4), 3)];
    let r = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap();
    assert_eq!(r.len(), 4);
    assert_eq!(r.rows()[1], DailyRow::gap(ymd(2000, 1, 2)));
    assert!(!r.rows()[2].inputs_complete());
    assert_eq!(r.index_of(ymd(2000, 1, 4)), Some(3));
    assert_eq!(r.index_of(ymd(1999, 12, 31)), None);
}

#[test]
fn attribute_count_is_checked() {
    let err = GaugeRecord::new(
        "g",
        -22.0,
        -50.0,
        vec![1.0; 3],
        vec![row(ymd(2000, 1, 1), 0)],
    )
    .unwrap_err();
    assert!(matches!(
        err,
        DataError::AttributeCount {
            expected: 17,
            found: 3,
            ..
        }
    ));
}

fn gauge_at(id: &str, lon: f64, lat: f64, years: usize) -> GaugeRecord {
    let start = ymd(1990, 1, 1);
    let rows = (0..years * 365)
        .map(|k| row(start + Days::new(k as u64), k))
        .collect();
    GaugeRecord::new(id, lat, lon, attrs(), rows).unwrap()
}

#[test]
fn gauge_selection_by_box_and_record_length() {
    let bbox = BoundingBox::from_corners((-54.0, -19.5), (-43.5, -27.0));
    assert_eq!(bbox, BoundingBox::southeast_brazil());
    let records = vec![
        gauge_at("inside", -50.0, -22.0, 12),
        gauge_at("outside", -60.0, -22.0, 12),
        gauge_at("short", -50.0, -22.0, 9),
        gauge_at("edge", -54.0, -27.0, 10),
    ];
    assert_eq!(select_gauges(&records, &bbox, 10.0), vec!["inside", "edge"]);
    assert!(select_gauges(&records, &bbox, 50.0).is_empty());
}

#[test]
fn quality_failures_do_not_count_toward_record_length() {
    let mut r = gauge_at("g", -50.0, -22.0, 12);
    let rows: Vec<DailyRow> = r
        .rows()
        .iter()
        .enumerate()
        .map(|(k, row)| DailyRow {
            quality: Some(k % 2 == 0),
            ..*row
        })
        .collect();
    r = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap();
    assert_eq!(
        select_gauges(&[r], &BoundingBox::southeast_brazil(), 10.0),
        Vec::<String>::new()
    );
}

#[test]
fn default_split_boundaries() {
    let s = SplitSpec::default();
    s.validate().unwrap();
    assert_eq!(s.split_of(ymd(1999, 10, 1)), Some(Split::Train));
    assert_eq!(s.split_of(ymd(1999, 9, 30)), Some(Split::Test));
    assert_eq!(s.split_of(ymd(1994, 9, 30)), Some(Split::Validation));
    assert_eq!(s.split_of(ymd(1994, 10, 1)), Some(Split::Test));
    assert_eq!(s.split_of(ymd(2008, 9, 30)), Some(Split::Train));
    assert_eq!(s.split_of(ymd(2008, 10, 1)), None);
}

#[test]
fn overlapping_splits_are_rejected() {
    let a = DateRange::new(ymd(2000, 1, 1), ymd(2000, 12, 31)).unwrap();
    let b = DateRange::new(ymd(2000, 12, 31), ymd(2001, 12, 31)).unwrap();
    let c = DateRange::new(ymd(2002, 1, 1), ymd(2002, 12, 31)).unwrap();
    assert!(matches!(
        SplitSpec::new(a, b, c),
        Err(DataError::OverlappingSplits { .. })
    ));
    assert!(DateRange::new(ymd(2001, 1, 1), ymd(2000, 1, 1)).is_err());
}

#[test]
fn target_dates_on_period_boundaries() {
    let r = continuous("g", ymd(1998, 1, 1), 3 * 365);
    let splits = SplitSpec::default();
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    assert!(g.samples.train.iter().any(|s| s.date == ymd(1999, 10, 1)));
    assert!(g.samples.test.iter().any(|s| s.date == ymd(1999, 9, 30)));
    assert!(g.samples.train.iter().all(|s| s.date >= ymd(1999, 10, 1)));
    // The first training window reaches back into the test period.
    assert_eq!(g.samples.train[0].date, ymd(1999, 10, 1));
    assert!(g.skips.lacks_validation());
}

#[test]
fn four_hundred_days_give_thirty_six_samples() {
    let start = ymd(2000, 1, 1);
    let r = continuous("g", start, 400);
    let splits = one_split(start, 400);
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    assert_eq!(g.samples.train.len(), 36);
    assert_eq!(g.skips.train.short_history, 364);
    assert_eq!(g.samples.train[0].day, 364);
}

#[test]
fn window_with_a_gap_is_dropped() {
    let start = ymd(2000, 1, 1);
    let mut rows: Vec<DailyRow> = (0..400)
        .map(|k| row(start + Days::new(k as u64), k))
        .collect();
    rows[100].tmax = None;
    let r = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap();
    let splits = one_split(start, 400);
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    // Windows ending on days 364..=464 contain day 100; only those past it
    // survive.
    assert!(g.samples.train.is_empty());
    assert_eq!(g.skips.train.gap, 36);
    let report = g.skips.to_string();
    assert!(report.contains("gap=36"), "{report}");
}

#[test]
fn gap_inside_one_window_only_drops_that_window() {
    let start = ymd(2000, 1, 1);
    let mut rows: Vec<DailyRow> = (0..500)
        .map(|k| row(start + Days::new(k as u64), k))
        .collect();
    rows[100].precip = None;
    let r = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap();
    let splits = one_split(start, 500);
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    // Windows ending on days 364..=464 contain day 100.
    assert_eq!(g.skips.train.gap, 101);
    assert_eq!(g.samples.train.len(), 35);
    assert_eq!(g.samples.train[0].day, 465);
}

#[test]
fn missing_target_is_counted() {
    let start = ymd(2000, 1, 1);
    let mut rows: Vec<DailyRow> = (0..400)
        .map(|k| row(start + Days::new(k as u64), k))
        .collect();
    rows[399].streamflow = None;
    let r = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap();
    let splits = one_split(start, 400);
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    assert_eq!(g.samples.train.len(), 35);
    assert_eq!(g.skips.train.missing_target, 1);
}

#[test]
fn constant_feature_scales_to_zero() {
    let start = ymd(2000, 1, 1);
    let rows: Vec<DailyRow> = (0..400)
        .map(|k| DailyRow {
            tmean: Some(0.1),
            ..row(start + Days::new(k as u64), k)
        })
        .collect();
    let r = GaugeRecord::new("g", -22.0, -50.0, attrs(), rows).unwrap();
    let splits = one_split(start, 400);
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    assert_eq!(stats.dynamic[3].std, STD_FLOOR);
    assert_eq!(stats.dynamic[3].scale(0.1), 0.0);
    // A single gauge makes every static constant too.
    assert!(stats.statics.iter().all(|s| s.std == STD_FLOOR));
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    let mut w = WindowInputs::new();
    w.fill(&g, ModelKind::FsLstm, 399, WINDOW);
    for step in w.step_inputs() {
        assert_eq!(step.aux[1], 0.0);
        assert!(step.aux[3..].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn statistics_use_training_rows_only() {
    let r = continuous("a", ymd(1996, 1, 1), 6000);
    let other = continuous("b", ymd(1997, 6, 1), 5000);
    let splits = SplitSpec::default();
    let stats = NormalizationStats::fit(&[r.clone(), other.clone()], &splits).unwrap();
    let train_only: Vec<GaugeRecord> = [r, other]
        .iter()
        .map(|g| g.filtered(|d| splits.train.contains(d)).unwrap())
        .collect();
    let refit = NormalizationStats::fit(&train_only, &splits).unwrap();
    assert_eq!(stats, refit);
    for (a, b) in stats.dynamic.iter().zip(&refit.dynamic) {
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std.to_bits(), b.std.to_bits());
    }
}

#[test]
fn no_training_rows_is_an_error() {
    let r = continuous("g", ymd(1980, 1, 1), 400);
    assert!(matches!(
        NormalizationStats::fit(&[r], &SplitSpec::default()),
        Err(DataError::NoTrainingData { .. })
    ));
}

#[test]
fn window_inputs_by_model_kind() {
    let start = ymd(2000, 1, 1);
    let r = continuous("g", start, 400);
    let splits = one_split(start, 400);
    let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
    let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
    let last = &r.rows()[399];
    let mut w = WindowInputs::new();
    for kind in [ModelKind::FsLstm, ModelKind::McLstm] {
        w.fill(&g, kind, 399, WINDOW);
        let steps = w.step_inputs();
        assert_eq!(steps.len(), WINDOW);
        let s = steps.last().unwrap();
        assert_eq!(s.mass, [last.soil_moisture.unwrap(), last.precip.unwrap()]);
        assert_eq!(s.aux.len(), AUX_WIDTH);
        assert_eq!(s.aux[0], stats.dynamic[2].scale(last.tmin.unwrap()));
    }
    w.fill(&g, ModelKind::Lstm, 399, WINDOW);
    let steps = w.step_inputs();
    let s = steps.last().unwrap();
    assert_eq!(
        s.mass,
        [
            stats.soil_moisture().scale(last.soil_moisture.unwrap()),
            stats.precip().scale(last.precip.unwrap())
        ]
    );
}

#[test]
fn synthetic_constant_flow() {
    let r = generate_synthetic(&SyntheticSpec::new(0.0, 0.0, 2.0, 0.0, 400, 1)).unwrap();
    assert_eq!(r.len(), 400);
    assert!(r.rows().iter().all(|row| row.streamflow == Some(2.0)));
}

#[test]
fn synthetic_slow_flow_only_equals_soil_moisture() {
    let r = generate_synthetic(&SyntheticSpec::new(0.0, 1.0, 0.0, 0.0, 1000, 2)).unwrap();
    for row in r.rows() {
        let w = row.soil_moisture.unwrap();
        assert!((0.0..=1.0).contains(&w));
        assert_eq!(row.streamflow, Some(w));
        assert!(row.tmin.unwrap() < row.tmean.unwrap());
        assert!(row.tmean.unwrap() < row.tmax.unwrap());
    }
    assert!(r.rows().iter().any(|row| row.precip == Some(0.0)));
    assert!(r.rows().iter().any(|row| row.precip.unwrap() > 0.0));
}

#[test]
fn synthetic_is_bit_reproducible() {
    let spec = SyntheticSpec::new(0.3, 1.5, 0.2, 0.05, 800, 42);
    let a = generate_synthetic(&spec).unwrap();
    let b = generate_synthetic(&spec).unwrap();
    assert_eq!(a, b);
    for (x, y) in a.rows().iter().zip(b.rows()) {
        assert_eq!(
            x.streamflow.unwrap().to_bits(),
            y.streamflow.unwrap().to_bits()
        );
    }
    let c = generate_synthetic(&SyntheticSpec { seed: 43, ..spec }).unwrap();
    assert_ne!(a.rows(), c.rows());
}

#[test]
fn synthetic_rejects_degenerate_and_invalid_parameters() {
    assert!(matches!(
        generate_synthetic(&SyntheticSpec::new(0.0, 0.0, -1.0, 0.0, 400, 1)),
        Err(DataError::DegenerateSynthetic {
            clamped: 400,
            days: 400,
            ..
        })
    ));
    assert!(matches!(
        generate_synthetic(&SyntheticSpec::new(0.0, 0.0, 0.0, 1.0, 400, 1)),
        Err(DataError::DegenerateSynthetic { .. })
    ));
    assert!(generate_synthetic(&SyntheticSpec::new(0.0, 0.0, 1.0, 0.0, 365, 1)).is_err());
    assert!(generate_synthetic(&SyntheticSpec::new(0.0, 0.0, 1.0, -0.1, 400, 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn continuous_record_inside_one_split_gives_l_minus_364(len in 365usize..900) {
        let start = ymd(2001, 3, 1);
        let r = continuous("g", start, len);
        let splits = one_split(start, len);
        let stats = NormalizationStats::fit(std::slice::from_ref(&r), &splits).unwrap();
        let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
        prop_assert_eq!(g.samples.train.len(), len - 364);
    }

    #[test]
    fn no_target_date_in_two_splits(offset in 0u64..3000, len in 400usize..3000) {
        let r = continuous("g", ymd(1992, 1, 1) + Days::new(offset), len);
        let splits = SplitSpec::default();
        let Ok(stats) = NormalizationStats::fit(std::slice::from_ref(&r), &splits) else {
            return Ok(());
        };
        let g = build_samples(&r, &splits, &stats, WINDOW).unwrap();
        for split in Split::ALL {
            for s in g.samples.get(split) {
                prop_assert_eq!(splits.split_of(s.date), Some(split));
                for other in Split::ALL.into_iter().filter(|&o| o != split) {
                    prop_assert!(!splits.range(other).contains(s.date));
                }
            }
        }
    }

    #[test]
    fn synthetic_soil_moisture_stays_in_unit_interval(seed in any::<u64>()) {
        let r = generate_synthetic(&SyntheticSpec::new(0.5, 1.0, 0.1, 0.0, 400, seed)).unwrap();
        for row in r.rows() {
            let w = row.soil_moisture.unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
            prop_assert!(row.precip.unwrap() >= 0.0);
        }
    }
}
