use std::path::Path;

use chrono::NaiveDate;
use fslstm::io::{
    parse_attributes, parse_daily_rows, write_attributes, write_gauge_csv, GAUGE_HEADER,
};
use fslstm::CliError;
use fslstm_core::data::{generate_synthetic, DailyRow, GaugeRecord, SyntheticSpec};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn header() -> String {
    GAUGE_HEADER.join(",")
}

fn rows(body: &str) -> Result<Vec<DailyRow>, CliError> {
    parse_daily_rows(
        Path::new("g.csv"),
        format!("{}\n{body}", header()).as_bytes(),
    )
}

fn record(rows: Vec<DailyRow>) -> GaugeRecord {
    GaugeRecord::new("g", -22.0, -50.0, vec![1.0; 17], rows).unwrap()
}

#[test]
fn three_row_file_loads_three_rows() {
    let r = rows(
        "2000-01-01,1.5,30,10,15,20,0.7,1\n\
         2000-01-02,0,31,11,16,21,0.6,1\n\
         2000-01-03,2,29.5,9,14,19,0.65,0",
    )
    .unwrap();
    let rec = record(r);
    assert_eq!(rec.len(), 3);
    assert_eq!(rec.rows()[0].precip, Some(1.5));
    assert_eq!(rec.rows()[2].quality, Some(false));
    assert_eq!(rec.quality_days(), 2);
}

#[test]
fn empty_fields_are_gaps() {
    let r = rows("2000-01-01,,30,10,15,20,,\n2000-01-02,1,31,11,16,21,0.6,1").unwrap();
    assert_eq!(r[0].precip, None);
    assert_eq!(r[0].streamflow, None);
    assert_eq!(r[0].quality, None);
    assert!(!r[0].inputs_complete());
}

#[test]
fn columns_may_come_in_any_order() {
    let text = "quality,streamflow_mm,tmax_c,tmean_c,tmin_c,soil_moisture_kgm2,precip_mm,date\n\
                1,0.5,20,15,10,30,2,2000-01-01\n";
    let r = parse_daily_rows(Path::new("g.csv"), text.as_bytes()).unwrap();
    assert_eq!(r[0].date, date(2000, 1, 1));
    assert_eq!(r[0].precip, Some(2.0));
    assert_eq!(r[0].streamflow, Some(0.5));
}

#[test]
fn missing_column_is_named() {
    let text = "date,precip_mm,tmin_c,tmean_c,tmax_c,streamflow_mm,quality\n";
    let err = parse_daily_rows(Path::new("g.csv"), text.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("soil_moisture_kgm2"), "{err}");
    assert_eq!(err.exit_code(), CliError::DATA);
}

#[test]
fn bad_number_names_row_and_column() {
    let err = rows("2000-01-01,1,30,10,15,20,0.5,1\n2000-01-02,x,30,10,15,20,0.5,1").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("row 2") && msg.contains("precip_mm"), "{msg}");
}

#[test]
fn duplicated_date_is_rejected_with_the_date() {
    let r = rows("2000-01-01,1,30,10,15,20,0.5,1\n2000-01-01,1,30,10,15,20,0.5,1").unwrap();
    let err = GaugeRecord::new("g", -22.0, -50.0, vec![1.0; 17], r).unwrap_err();
    assert!(err.to_string().contains("2000-01-01"), "{err}");
}

#[test]
fn non_monotone_and_negative_rows_are_rejected_with_row_numbers() {
    let r = rows("2000-01-02,1,30,10,15,20,0.5,1\n2000-01-01,1,30,10,15,20,0.5,1").unwrap();
    let err = GaugeRecord::new("g", -22.0, -50.0, vec![1.0; 17], r).unwrap_err();
    assert!(err.to_string().contains("row 2"), "{err}");
    let r = rows("2000-01-01,1,30,10,15,20,0.5,1\n2000-01-02,1,30,10,15,20,-0.5,1").unwrap();
    let err = GaugeRecord::new("g", -22.0, -50.0, vec![1.0; 17], r).unwrap_err();
    assert!(err.to_string().contains("row 2"), "{err}");
}

#[test]
fn bad_quality_flag_is_rejected() {
    let err = rows("2000-01-01,1,30,10,15,20,0.5,yes").unwrap_err();
    assert!(err.to_string().contains("quality"), "{err}");
}

#[test]
fn gauge_csv_round_trips_exactly() {
    let rec = generate_synthetic(&SyntheticSpec::new(0.5, 0.3, 0.1, 0.05, 800, 11)).unwrap();
    let mut buf = Vec::new();
    write_gauge_csv(Path::new("g.csv"), &mut buf, &rec).unwrap();
    let back = parse_daily_rows(Path::new("g.csv"), buf.as_slice()).unwrap();
    let again = GaugeRecord::new(
        rec.gauge_id(),
        rec.latitude(),
        rec.longitude(),
        rec.attributes().to_vec(),
        back,
    )
    .unwrap();
    assert_eq!(again, rec);
}

#[test]
fn records_with_gaps_round_trip() {
    let mut r = rows("2000-01-01,1,30,10,15,20,0.5,1\n2000-01-05,0.25,30,,15,20,,0").unwrap();
    r[0].precip = Some(0.1 + 0.2);
    let rec = record(r);
    let mut buf = Vec::new();
    write_gauge_csv(Path::new("g.csv"), &mut buf, &rec).unwrap();
    let again = record(parse_daily_rows(Path::new("g.csv"), buf.as_slice()).unwrap());
    assert_eq!(again, rec);
    assert_eq!(again.len(), 5);
}

#[test]
fn attributes_round_trip_and_reject_missing_columns() {
    let recs: Vec<_> = [1, 2]
        .map(|s| generate_synthetic(&SyntheticSpec::new(0.5, 0.3, 0.1, 0.05, 400, s)).unwrap())
        .into();
    let mut buf = Vec::new();
    write_attributes(Path::new("a.csv"), &mut buf, &recs).unwrap();
    let attrs = parse_attributes(Path::new("a.csv"), buf.as_slice()).unwrap();
    assert_eq!(attrs.len(), 2);
    for (a, r) in attrs.iter().zip(&recs) {
        assert_eq!(a.gauge_id, r.gauge_id());
        assert_eq!(a.latitude, r.latitude());
        assert_eq!(a.longitude, r.longitude());
        assert_eq!(a.values, r.attributes());
    }
    let text = String::from_utf8(buf)
        .unwrap()
        .replace("aridity", "ariditx");
    let err = parse_attributes(Path::new("a.csv"), text.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("`aridity`"), "{err}");
}
