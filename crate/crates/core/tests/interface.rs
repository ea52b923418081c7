mod common;

use std::fmt::Write as _;

use poolscreen::designs::validate_design;
use poolscreen::interface::{
    analysis_report, emit_profile, format_float, load_design, load_plate, load_profile, read_plate, save_design,
    WellRole,
};
use poolscreen::screening::{analyze, AnalysisConfig, EffectSign, PathAnalysis};
use poolscreen::simulation::generate_scenario;
use proptest::prelude::*;

#[test]
fn profile_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = common::transversal_design(20, 4);
    let s = generate_scenario::<f64>(&d, 3.0, 1.0, 5).unwrap();
    let a = PathAnalysis::new(&d, &s.y, EffectSign::Positive, false).unwrap();
    let out = dir.path().join("profile.csv");
    let export = emit_profile(a.path(), d.compound_ids(), 10, &out).unwrap();
    let back = load_profile(&out).unwrap();
    assert_eq!(back.len(), a.path().len() * d.k());
    for (r, w) in back.iter().zip(&export.rows) {
        assert_eq!(r.compound_id, w.compound_id);
        assert!((r.lambda - w.lambda).abs() <= 1e-12 * w.lambda.abs().max(1.0));
        assert!((r.coefficient - w.coefficient).abs() <= 1e-12);
    }
    let ann = std::fs::read_to_string(dir.path().join("profile.annotations.csv")).unwrap();
    assert_eq!(ann.lines().count(), 11);
    let last = a.path().at_smallest_lambda();
    let top = last.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert_eq!(export.annotations[0].coefficient.abs(), top);
}

#[test]
fn saved_design_revalidates() {
    let dir = tempfile::tempdir().unwrap();
    let d = common::transversal_design(80, 8);
    let path = dir.path().join("t.csv");
    save_design(&d, &path).unwrap();
    let back = load_design(&path).unwrap();
    assert_eq!(back, d);
    let r = validate_design(&back, None);
    assert_eq!((r.c_min, r.c_max, r.a_min, r.a_max), (8, 8, 4, 4));
    assert!((r.sqrt_ue_s2 - 304.201).abs() < 1e-3);
}

fn plate_csv(d: &poolscreen::Design, y: &[f64]) -> String {
    let mut s = String::from("well_id,value,role,assay\n");
    for (i, (id, v)) in d.well_ids().iter().zip(y).enumerate() {
        writeln!(s, "{id},{},pool,WT", format_float(*v)).unwrap();
        if i < 32 {
            writeln!(s, "P{i:02},{},positive_control,WT", -8.0 + i as f64 / 64.0).unwrap();
            writeln!(s, "N{i:02},{},negative_control,WT", i as f64 / 64.0).unwrap();
        }
    }
    s
}

#[test]
fn full_plate_with_controls_analyses_like_raw_readings() {
    let dir = tempfile::tempdir().unwrap();
    let d = common::transversal_design(80, 8);
    let s = generate_scenario::<f64>(&d, -4.0, 1.0, 3).unwrap();
    let path = dir.path().join("plate.csv");
    std::fs::write(&path, plate_csv(&d, &s.y)).unwrap();
    let plate = load_plate(&path, &d).unwrap();
    assert_eq!(plate.pool_values.len(), 320);
    assert_eq!(plate.control_values(WellRole::PositiveControl).len(), 32);
    assert_eq!(plate.control_values(WellRole::NegativeControl).len(), 32);
    assert_eq!(plate.pool_values, s.y);

    let cfg = AnalysisConfig::lambda_gl(1.0).with_sign(EffectSign::Negative);
    let from_plate = analyze(&d, &plate.pool_values, &cfg).unwrap();
    let direct = analyze(&d, &s.y, &cfg).unwrap();
    assert_eq!(from_plate, direct);
    let report = analysis_report(&d, &plate.pool_values, &from_plate, None, None).unwrap();
    assert_eq!(report.final_hits(), &from_plate.hits[..]);

    let centered = plate.median_centered();
    let mut sorted = centered.pool_values.clone();
    sorted.sort_by(f64::total_cmp);
    assert!(((sorted[159] + sorted[160]) / 2.0).abs() < 1e-12);
}

#[test]
fn plate_rejects_unknown_and_duplicate_wells() {
    let d = common::transversal_design(5, 2);
    let y = vec![0.5; d.n()];
    let good = plate_csv(&d, &y);
    let dup = format!("{good}{},1.0,pool,WT\n", d.well_ids()[0]);
    assert!(read_plate(dup.as_bytes(), "p", &d).is_err());
    let stray = format!("{good}ZZ99,1.0,pool,WT\n");
    assert!(read_plate(stray.as_bytes(), "p", &d).is_err());
    assert!(read_plate(good.as_bytes(), "p", &d).is_ok());
}

proptest! {
    #[test]
    fn floats_round_trip_through_text(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = format_float(v);
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}
