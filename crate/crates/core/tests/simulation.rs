mod common;

use poolscreen::designs::{DesignMethod, DesignSpec};
use poolscreen::simulation::{
    active_count, classification_metrics, generate_scenario, run_study, StudyConfig, StudyDesign, StudyMethod,
};
use poolscreen::AnalysisConfig;
use proptest::prelude::*;

#[test]
fn active_set_sizes() {
    for (k, m) in [(640, 7), (500, 5), (1000, 10), (960, 10), (1280, 13), (1, 1), (100, 1), (101, 2)] {
        assert_eq!(active_count(k), m, "k = {k}");
    }
    let d = common::circulant_design(320, 4);
    let s = generate_scenario::<f64>(&d, 2.0, 1.0, 1).unwrap();
    assert_eq!(s.active_set.len(), 13);
    let d = common::transversal_design(80, 8);
    let s = generate_scenario::<f64>(&d, 2.0, 1.0, 1).unwrap();
    assert_eq!(s.active_set.len(), 7);
    assert!(s.active_set.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn readings_have_planted_mean_and_noise_variance() {
    let d = common::transversal_design(80, 8);
    let x = d.to_pm1::<f64>();
    let (mut sum, mut sumsq, mut count) = (0.0, 0.0, 0usize);
    for seed in 0..50 {
        let s = generate_scenario::<f64>(&d, 3.0, 1.5, seed).unwrap();
        assert_eq!(s.coefficient, 1.5);
        for i in 0..d.n() {
            let signal: f64 = s.active_set.iter().map(|&j| 1.5 * x.get(i, j)).sum();
            let e = s.y[i] - signal;
            sum += e;
            sumsq += e * e;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    let var = sumsq / count as f64 - mean * mean;
    // 16000 draws: the mean's SE is about 0.012, the variance's about 0.025
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((var - 2.25).abs() < 0.1, "{var}");
}

#[test]
fn scenarios_are_seeded() {
    let d = common::transversal_design(20, 4);
    let a = generate_scenario::<f64>(&d, 2.0, 1.0, 9).unwrap();
    let b = generate_scenario::<f64>(&d, 2.0, 1.0, 9).unwrap();
    let c = generate_scenario::<f64>(&d, 2.0, 1.0, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.y, c.y);
    let f = generate_scenario::<f32>(&d, 2.0, 1.0, 9).unwrap();
    assert_eq!(f.active_set, a.active_set);
    for (u, v) in f.y.iter().zip(&a.y) {
        assert!((*u as f64 - v).abs() < 1e-5);
    }
}

#[test]
fn study_summaries_agree_with_replicates() {
    let spec = DesignSpec::new(40, 80, 4, DesignMethod::Random).with_seed(3);
    let cfg = StudyConfig {
        designs: vec![StudyDesign {
            label: "r".into(),
            spec: Some(spec),
            path: None,
        }],
        betas: vec![3.0],
        methods: vec![StudyMethod::new(AnalysisConfig::lambda_gl(1.0))],
        replicates: 6,
        seed: 2,
        sigma: 1.0,
    };
    let res = run_study(&cfg).unwrap();
    let name = cfg.methods[0].name();
    let cond = res.condition("r", 3.0, &name).unwrap();
    let reps: Vec<_> = res.records.iter().filter(|r| r.method == name).collect();
    assert_eq!(reps.len(), 6);
    let tpr = reps.iter().map(|r| r.tpr).sum::<f64>() / 6.0;
    let fpr = reps.iter().map(|r| r.fpr).sum::<f64>() / 6.0;
    assert!((cond.mean_tpr - tpr).abs() < 1e-12);
    assert!((cond.mean_fpr - fpr).abs() < 1e-12);
}

proptest! {
    #[test]
    fn metrics_stay_in_range(
        k in 2usize..200,
        active in prop::collection::btree_set(0usize..200, 1..10),
        detected in prop::collection::vec(0usize..200, 0..40),
    ) {
        let active: Vec<usize> = active.into_iter().filter(|&j| j < k).collect();
        prop_assume!(!active.is_empty() && active.len() < k);
        let detected: Vec<usize> = detected.into_iter().filter(|&j| j < k).collect();
        let m = classification_metrics(&detected, &active, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.tpr));
        prop_assert!((0.0..=1.0).contains(&m.fpr));
        let tp = active.iter().filter(|j| detected.contains(j)).count();
        prop_assert_eq!(m.true_positives, tp);
        prop_assert!((m.tpr - tp as f64 / active.len() as f64).abs() < 1e-15);
        if let Some(l) = m.log_ratio {
            prop_assert!((l - (m.tpr / m.fpr).ln()).abs() < 1e-12);
        }
    }
}
