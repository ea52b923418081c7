//! One line per acceptance criterion. Exits non-zero when any criterion fails.

mod common;

use std::time::Instant;

use poolscreen::designs::{
    construct, derive_seed, evaluate_ue_s2, validate_design, Budget, DesignMethod, DesignSpec,
};
use poolscreen::interface::{load_design, load_profile, profile_export, save_design, write_design};
use poolscreen::regression::{center_and_scale, lasso_path, LambdaGrid};
use poolscreen::screening::{analyze, AnalysisConfig, EffectSign, PathAnalysis};
use poolscreen::simulation::{
    active_count, classification_metrics, generate_scenario, log_ratio, run_study_with, StudyConfig, StudyDesign,
    StudyMethod, StudyResult, StudySigma,
};
use poolscreen::Design;

const GOLDEN_TOL: f64 = 0.005;
const CROWS_TARGET: f64 = 304.30;
const KKT_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-4;
const STUDY_REPS: usize = 100;
const SECONDARY_REPS: usize = 500;
const SUPPLEMENT_REPS: usize = 200;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: String) -> Outcome {
    println!("criterion {id:<5} {}  {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass, detail }
}

fn crows_640() -> Design {
    construct(
        &DesignSpec::new(320, 640, 8, DesignMethod::Crows)
            .with_seed(1)
            .with_budget(Budget::Iterations(400_000)),
    )
    .unwrap()
}

fn goldens() -> Vec<Outcome> {
    let mut out = Vec::new();
    for (label, d, golden) in [
        ("1a", common::transversal_design(80, 8), 304.201),
        ("1b", common::circulant_design(320, 4), 312.050),
    ] {
        let t = Instant::now();
        let v = evaluate_ue_s2(&d).sqrt();
        let secs = t.elapsed().as_secs_f64();
        let closed = common::closed_form_ue_s2(&d).sqrt();
        let brute = common::brute_ue_s2(&d).sqrt();
        let pass = (v - golden).abs() <= GOLDEN_TOL && (v - closed).abs() < 1e-9 && (v - brute).abs() < 1e-9 && secs < 1.0;
        out.push(line(
            label,
            pass,
            format!(
                "({}, {}) sqrt UE(s2) = {v:.4} vs {golden} ± {GOLDEN_TOL}; closed form {closed:.4}; brute {brute:.4}; {secs:.3}s",
                d.n(),
                d.k()
            ),
        ));
    }
    out
}

fn crows_construction() -> Outcome {
    let t = Instant::now();
    let d = crows_640();
    let secs = t.elapsed().as_secs_f64();
    let r = validate_design(&d, None);
    let pass = r.sqrt_ue_s2 <= CROWS_TARGET && (r.c_min, r.c_max, r.a_min, r.a_max) == (8, 8, 4, 4) && secs <= 600.0;
    line(
        "2",
        pass,
        format!(
            "sqrt UE(s2) = {:.4} (target ≤ {CROWS_TARGET}); c = {}/{}; a = {}/{}; {secs:.1}s",
            r.sqrt_ue_s2, r.c_min, r.c_max, r.a_min, r.a_max
        ),
    )
}

fn solver() -> Outcome {
    let (mut worst_kkt, mut worst_oracle, mut negatives) = (0.0f64, 0.0f64, 0usize);
    for seed in 0..100u64 {
        let n = 4 + (seed as usize % 9);
        let k = 2 + (seed as usize * 7 % 14);
        let (x, y) = common::gaussian_instance(1000 + seed, n, k);
        let data = center_and_scale(&x, &y).unwrap();
        let grid = LambdaGrid::for_data(&data);
        for nonneg in [false, true] {
            let path = lasso_path(&data, &grid, nonneg).unwrap();
            for (g, lambda) in grid.lambdas().into_iter().enumerate() {
                let b = &path.standardized[g];
                worst_kkt = worst_kkt.max(common::kkt_violation(&data, b, lambda, nonneg));
                let oracle = common::fista(&data, lambda, nonneg, 1e-13);
                for (p, q) in b.iter().zip(&oracle) {
                    worst_oracle = worst_oracle.max((p - q).abs());
                }
                if nonneg {
                    negatives += path.coefficients[g].iter().chain(b).filter(|&&v| v < 0.0).count();
                }
            }
        }
    }
    line(
        "3",
        worst_kkt <= KKT_TOL && worst_oracle <= ORACLE_TOL && negatives == 0,
        format!(
            "100 instances: max KKT residual {worst_kkt:.2e} (≤ {KKT_TOL:e}); max oracle gap {worst_oracle:.2e} (≤ {ORACLE_TOL:e}); negative nonneg coefficients {negatives}"
        ),
    )
}

fn lasso_family() -> Vec<StudyMethod> {
    let mut m = vec![
        StudyMethod::new(AnalysisConfig::gauss_lasso_sigma(0.125, 1.0)),
        StudyMethod::new(AnalysisConfig::gauss_lasso_sigma(0.25, 1.0)),
        StudyMethod::new(AnalysisConfig::gauss_lasso_max_beta0(0.1)),
        StudyMethod::new(AnalysisConfig::gauss_lasso_max_beta0(0.5)),
    ];
    for r in [0.5, 0.7, 0.9, 1.0] {
        m.push(StudyMethod::new(AnalysisConfig::lambda_gl(r)));
    }
    m.push(StudyMethod::new(AnalysisConfig::gauss_lasso_sigma(0.125, 1.0).nonneg()));
    m.push(StudyMethod::new(AnalysisConfig::gauss_lasso_sigma(0.25, 1.0).nonneg()));
    m.push(StudyMethod::new(AnalysisConfig::gauss_lasso_max_beta0(0.1).nonneg()));
    m.push(StudyMethod::new(AnalysisConfig::gauss_lasso_max_beta0(0.5).nonneg()));
    m.push(StudyMethod::new(AnalysisConfig::elastic_net(0)));
    m
}

fn crows_study(d: &Design, betas: Vec<f64>, methods: Vec<StudyMethod>, reps: usize, seed: u64) -> StudyResult {
    let cfg = StudyConfig {
        designs: vec![StudyDesign {
            label: "crows".into(),
            spec: d.spec().cloned(),
            path: None,
        }],
        betas,
        methods,
        replicates: reps,
        seed,
        sigma: 1.0,
    };
    run_study_with(&cfg, std::slice::from_ref(d), None).unwrap()
}

fn method_table(d: &Design) -> Vec<Outcome> {
    let methods = lasso_family();
    let names: Vec<String> = methods.iter().map(StudyMethod::name).collect();
    let t = Instant::now();
    let res = crows_study(d, vec![1.0, 2.0, 3.0, 4.0], methods, STUDY_REPS, 7);
    println!("    method table: {STUDY_REPS} replicates in {:.0}s", t.elapsed().as_secs_f64());
    for n in &names {
        let m = res.method(n).unwrap();
        println!(
            "    {n:<40} log-ratio {:>7}  TPR {:.4}  FPR {:.6}",
            m.mean_log_ratio.map_or("-".into(), |v| format!("{v:.3}")),
            m.mean_tpr,
            m.mean_fpr
        );
    }
    let lr = |i: usize| res.method(&names[i]).unwrap().mean_log_ratio.unwrap_or(f64::NEG_INFINITY);
    let fpr = |i: usize| res.method(&names[i]).unwrap().mean_fpr;

    let family: Vec<f64> = (4..8).map(lr).collect();
    let a = family.windows(2).all(|w| w[1] > w[0]);
    let best_fixed = (0..4).map(lr).fold(f64::NEG_INFINITY, f64::max);
    let b = lr(7) > best_fixed;
    let six = [1, 3, 7, 9, 11, 12];
    let c_fpr = six[..5].iter().all(|&i| fpr(12) > fpr(i));
    let c_lr = six[..5].iter().all(|&i| lr(12) < lr(i));
    vec![
        line(
            "4a",
            a,
            format!(
                "λ-specific r2 = 0.5/0.7/0.9/1.0 log-ratios {}",
                family.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" < ")
            ),
        ),
        line(
            "4b",
            b,
            format!("λ-specific r2 = 1 log-ratio {:.3} vs best fixed-τ Gauss-Lasso {best_fixed:.3}", lr(7)),
        ),
        line(
            "4c",
            c_fpr && c_lr,
            format!(
                "elastic net FPR {:.5} (next highest {:.5}); log-ratio {:.3} (next lowest {:.3})",
                fpr(12),
                six[..5].iter().map(|&i| fpr(i)).fold(0.0, f64::max),
                lr(12),
                six[..5].iter().map(|&i| lr(i)).fold(f64::INFINITY, f64::min)
            ),
        ),
    ]
}

fn secondary_study(d: &Design) -> Vec<Outcome> {
    let primary = StudyMethod::new(AnalysisConfig::lambda_gl(1.0));
    let rules = [(0.75, 2.0), (1.0, 2.0), (0.75, 3.0), (1.0, 3.0)];
    let mut methods = vec![primary.clone()];
    for (p, r) in rules {
        methods.push(primary.clone().with_secondary(p, r, StudySigma::Truth));
    }
    let names: Vec<String> = methods.iter().map(StudyMethod::name).collect();
    let res = crows_study(d, vec![4.0], methods, SECONDARY_REPS, 11);
    let cond = |i: usize| res.condition("crows", 4.0, &names[i]).unwrap();
    for (i, n) in names.iter().enumerate() {
        println!("    {n:<40} TPR {:.4}  FPR {:.6}", cond(i).mean_tpr, cond(i).mean_fpr);
    }
    let base = cond(0).mean_fpr;
    let three_of_four_3sd = cond(3);
    let low_power: Vec<usize> = (1..5).filter(|&i| cond(i).mean_tpr < 0.5).collect();
    vec![
        line(
            "5a",
            (5e-4..=3e-3).contains(&base),
            format!("no secondary FPR {base:.5} in [5e-4, 3e-3]"),
        ),
        line(
            "5b",
            three_of_four_3sd.mean_fpr <= 3e-4,
            format!("3 of 4 > 3 SD FPR {:.2e} (≤ 3e-4)", three_of_four_3sd.mean_fpr),
        ),
        line(
            "5c",
            three_of_four_3sd.mean_tpr >= 0.5 && low_power == vec![4],
            format!(
                "3 of 4 > 3 SD TPR {:.3} (≥ 0.5); 4 of 4 > 3 SD TPR {:.3}; criteria below 0.5: {:?}",
                three_of_four_3sd.mean_tpr,
                cond(4).mean_tpr,
                low_power.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>()
            ),
        ),
    ]
}

fn supplement(crows: &Design) -> Outcome {
    let two_rep = construct(&DesignSpec::new(320, 640, 4, DesignMethod::Random).with_seed(5)).unwrap();
    let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
    let gl = AnalysisConfig::lambda_gl(1.0);
    let orth = AnalysisConfig::orthogonal(0.95);
    for rep in 0..SUPPLEMENT_REPS as u64 {
        let seed = derive_seed(13, rep);
        let s1 = generate_scenario::<f64>(crows, 4.0, 1.0, seed).unwrap();
        let s2 = generate_scenario::<f64>(&two_rep, 4.0, 1.0, seed).unwrap();
        assert_eq!(s1.active_set, s2.active_set);
        let m1 = classification_metrics(&analyze(crows, &s1.y, &gl).unwrap().indices(), &s1.active_set, 640).unwrap();
        let m2 = classification_metrics(&analyze(&two_rep, &s2.y, &orth).unwrap().indices(), &s2.active_set, 640).unwrap();
        a[0] += m1.tpr;
        a[1] += m1.fpr;
        b[0] += m2.tpr;
        b[1] += m2.fpr;
    }
    let r = SUPPLEMENT_REPS as f64;
    let la = log_ratio(a[0] / r, a[1] / r);
    let lb = log_ratio(b[0] / r, b[1] / r);
    let pass = match (la, lb) {
        (Some(x), Some(y)) => x > y,
        (None, Some(_)) => a[0] > 0.0,
        _ => false,
    };
    line(
        "6",
        pass,
        format!(
            "β = 4, {SUPPLEMENT_REPS} matched replicates: CRowS + λ-specific TPR {:.3} FPR {:.5} log-ratio {:?}; orthogonal 95th pct TPR {:.3} FPR {:.5} log-ratio {:?}",
            a[0] / r,
            a[1] / r,
            la,
            b[0] / r,
            b[1] / r,
            lb
        ),
    )
}

fn determinism(crows: &Design) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();
    let again = crows_640();
    if &again != crows {
        problems.push("design construction differs between runs");
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_design(crows, &mut x).unwrap();
    write_design(&again, &mut y).unwrap();
    if x != y {
        problems.push("design bytes differ");
    }
    let path = dir.path().join("d.csv");
    save_design(crows, &path).unwrap();
    let back = load_design(&path).unwrap();
    if back.rows() != crows.rows() || back.well_ids() != crows.well_ids() || back.compound_ids() != crows.compound_ids() {
        problems.push("design round trip");
    }
    let s = generate_scenario::<f64>(crows, 3.0, 1.0, 4).unwrap();
    let pa = PathAnalysis::new(crows, &s.y, EffectSign::Positive, false).unwrap();
    let export = profile_export(pa.path(), crows.compound_ids(), 10).unwrap();
    let prof = dir.path().join("p.csv");
    std::fs::write(&prof, export.to_csv()).unwrap();
    if load_profile(&prof).unwrap() != export.rows {
        problems.push("profile round trip");
    }
    let methods = || {
        vec![
            StudyMethod::new(AnalysisConfig::lambda_gl(1.0)),
            StudyMethod::new(AnalysisConfig::lambda_gl(1.0)).with_secondary(0.75, 2.0, StudySigma::Robust),
        ]
    };
    let r1 = crows_study(crows, vec![2.0], methods(), 4, 3);
    let r2 = crows_study(crows, vec![2.0], methods(), 4, 3);
    if r1.summary_csv() != r2.summary_csv() || r1.long_csv() != r2.long_csv() {
        problems.push("study output differs");
    }
    line(
        "7",
        problems.is_empty(),
        if problems.is_empty() {
            "construction, design CSV, profile CSV and study output byte-identical; round trips lossless".into()
        } else {
            problems.join("; ")
        },
    )
}

fn scenario_counts(crows: &Design) -> Outcome {
    let counts: Vec<usize> = [640, 500, 960, 1280].iter().map(|&k| active_count(k)).collect();
    let s = generate_scenario::<f64>(crows, 3.0, 1.0, 2).unwrap();
    let circ = generate_scenario::<f64>(&common::circulant_design(320, 4), 3.0, 1.0, 2).unwrap();
    let pass = counts == [7, 5, 10, 13] && s.active_set.len() == 7 && circ.active_set.len() == 13 && s.coefficient == 1.5;
    line(
        "8",
        pass,
        format!(
            "active counts {counts:?} for k = 640/500/960/1280; drawn {} and {}; coefficient {} for β = 3",
            s.active_set.len(),
            circ.active_set.len(),
            s.coefficient
        ),
    )
}

fn main() {
    let t = Instant::now();
    let mut all = goldens();
    all.push(crows_construction());
    all.push(solver());
    let crows = crows_640();
    all.extend(method_table(&crows));
    all.extend(secondary_study(&crows));
    all.push(supplement(&crows));
    all.push(determinism(&crows));
    all.push(scenario_counts(&crows));
    let failed: Vec<&Outcome> = all.iter().filter(|o| !o.pass).collect();
    println!(
        "acceptance: {} of {} criteria pass ({:.0}s)",
        all.len() - failed.len(),
        all.len(),
        t.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        for o in &failed {
            eprintln!("failed {}: {}", o.id, o.detail);
        }
        std::process::exit(1);
    }
}
