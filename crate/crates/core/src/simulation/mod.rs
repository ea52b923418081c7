//! Synthetic readouts from the additive pooling model and the factorial study
//! runner that compares designs and analysis methods on them.

mod study;

pub use study::{
    run_study, run_study_with, ConditionSummary, DesignAverage, MethodAverage, ReplicateRecord, StudyConfig,
    StudyDesign, StudyMethod, StudyResult, StudySecondary, StudySigma, THREADS_ENV, design_meta, resolve_designs,
    threads_from_env,
};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `⌈0.01 k⌉`.
pub fn active_count(k: usize) -> usize {
    k.div_ceil(100)
}

/// One simulated screen: `y = Xβ + ε` with `X` the ±1 coding of the design.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario<F> {
    pub beta: f64,
    pub sigma: f64,
    /// Sorted active compound indices.
    pub active_set: Vec<usize>,
    /// Planted coefficient of every active compound (`beta / 2`).
    pub coefficient: f64,
    pub y: Vec<F>,
    pub seed: u64,
}

impl<F: Scalar> SimScenario<F> {
    /// Mean of a well that holds no active compound.
    pub fn null_well_mean(&self) -> f64 {
        -(self.active_set.len() as f64) * self.coefficient
    }
}

/// Draws a uniformly random active set of size `⌈0.01 k⌉`, plants `beta / 2`
/// on it and adds i.i.d. `N(0, σ²)` noise.
pub fn generate_scenario<F: Scalar>(design: &Design, beta: f64, sigma: f64, seed: u64) -> Result<SimScenario<F>> {
    if !beta.is_finite() {
        return Err(Error::InvalidInput(format!("effect size {beta} is not finite")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("noise SD must be non-negative, got {sigma}")));
    }
    let (n, k) = (design.n(), design.k());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = active_count(k);
    let mut active_set = sample(&mut rng, k, m).into_vec();
    active_set.sort_unstable();
    let coefficient = beta / 2.0;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let y = (0..n)
        .map(|i| {
            let row = design.row(i);
            let signal: f64 = active_set
                .iter()
                .map(|&j| if row[j] == 1 { coefficient } else { -coefficient })
                .sum();
            F::of(signal + normal.sample(&mut rng))
        })
        .collect();
    Ok(SimScenario {
        beta,
        sigma,
        active_set,
        coefficient,
        y,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: f64,
    pub fpr: f64,
    /// `ln(tpr / fpr)` when both are positive.
    pub log_ratio: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
}

/// `ln(tpr / fpr)`, undefined unless both rates are positive.
pub fn log_ratio(tpr: f64, fpr: f64) -> Option<f64> {
    (tpr > 0.0 && fpr > 0.0).then(|| (tpr / fpr).ln())
}

/// TPR = TP / |active|, FPR = FP / (k − |active|).
pub fn classification_metrics(detected: &[usize], active: &[usize], k: usize) -> Result<Metrics> {
    if active.is_empty() {
        return Err(Error::InvalidInput("empty active set".into()));
    }
    let mut is_active = vec![false; k];
    for &j in active {
        if j >= k {
            return Err(Error::InvalidInput(format!("active index {j} outside 0..{k}")));
        }
        is_active[j] = true;
    }
    let m = is_active.iter().filter(|&&a| a).count();
    let mut seen = vec![false; k];
    let (mut tp, mut fp) = (0, 0);
    for &j in detected {
        if j >= k {
            return Err(Error::InvalidInput(format!("detected index {j} outside 0..{k}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            continue;
        }
        if is_active[j] {
            tp += 1;
        } else {
            fp += 1;
        }
    }
    let tpr = tp as f64 / m as f64;
    let fpr = if k > m { fp as f64 / (k - m) as f64 } else { 0.0 };
    Ok(Metrics {
        tpr,
        fpr,
        log_ratio: log_ratio(tpr, fpr),
        true_positives: tp,
        false_positives: fp,
    })
}

/// False positives expected when screening `compounds` compounds at `fpr`.
pub fn expected_false_positives(fpr: f64, compounds: usize) -> f64 {
    fpr * compounds as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{construct, DesignMethod, DesignSpec};

    #[test]
    fn active_counts() {
        assert_eq!(active_count(640), 7);
        assert_eq!(active_count(500), 5);
        assert_eq!(active_count(960), 10);
        assert_eq!(active_count(1280), 13);
        assert_eq!(active_count(1), 1);
    }

    #[test]
    fn metrics_counting() {
        let active: Vec<usize> = (0..7).collect();
        let detected = [0, 1, 2, 3, 4, 100, 200];
        let m = classification_metrics(&detected, &active, 640).unwrap();
        assert_eq!(m.tpr, 5.0 / 7.0);
        assert_eq!(m.fpr, 2.0 / 633.0);
        let perfect = classification_metrics(&active, &active, 640).unwrap();
        assert_eq!((perfect.tpr, perfect.fpr, perfect.log_ratio), (1.0, 0.0, None));
        assert!(classification_metrics(&[], &[], 10).is_err());
        assert!(classification_metrics(&[10], &[0], 10).is_err());
    }

    #[test]
    fn extrapolation() {
        assert!((expected_false_positives(0.0015, 10_000) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_wells_differ_by_beta() {
        let d = construct(&DesignSpec::new(40, 200, 5, DesignMethod::Random).with_seed(1)).unwrap();
        let s = generate_scenario::<f64>(&d, 3.0, 0.0, 9).unwrap();
        assert_eq!(s.active_set.len(), 2);
        let null = s.null_well_mean();
        for i in 0..d.n() {
            let hits = s.active_set.iter().filter(|&&j| d.get(i, j) == 1).count();
            assert!((s.y[i] - null - 3.0 * hits as f64).abs() < 1e-12);
        }
    }
}
