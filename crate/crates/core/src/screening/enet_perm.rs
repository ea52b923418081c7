use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{AnalysisConfig, CompoundDiagnostics, HitList, Method};
use crate::designs::{derive_seed, Design};
use crate::error::{Error, Result};
use crate::regression::{elastic_net_cv_with, ElasticNetFit, ElasticNetOptions, EnetProblem};
use crate::scalar::Scalar;

/// The cross-validated fit and its permutation p-values (effect orientation).
#[derive(Debug, Clone)]
pub struct PermutationOutcome<F> {
    pub fit: ElasticNetFit<F>,
    pub p_values: Vec<f64>,
    pub hits: Vec<usize>,
}

pub fn elastic_net_permutation<F: Scalar>(design: &Design, y: &[F], config: &AnalysisConfig) -> Result<HitList> {
    elastic_net_permutation_with(design, y, config).map(|(list, _)| list)
}

/// Cross-validated elastic net whose coefficients are calibrated against refits
/// on shuffled readouts: `p_k` is the share of shuffles whose coefficient for
/// `k` is larger in magnitude than the real one. Hits are the nonzero
/// coefficients with `p_k` at or below the cutoff, of either sign.
pub fn elastic_net_permutation_with<F: Scalar>(
    design: &Design,
    y: &[F],
    config: &AnalysisConfig,
) -> Result<(HitList, PermutationOutcome<F>)> {
    if config.method != Method::ElasticNetPerm {
        return Err(Error::InvalidConfig(format!(
            "expected method elastic_net_perm, got {}",
            config.method
        )));
    }
    config.validate()?;
    if y.len() != design.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} readings for a design with {} wells",
            y.len(),
            design.n()
        )));
    }
    let sign = config.effect_sign;
    let x = design.to_pm1::<F>();
    let y: Vec<F> = y.iter().map(|&v| sign.orient(v)).collect();
    let alphas: Vec<F> = config.alphas.iter().map(|&a| F::of(a)).collect();
    let opts = ElasticNetOptions::default();
    let fit = elastic_net_cv_with(&x, &y, &alphas, config.cv_folds, derive_seed(config.seed, 0), &opts)?;

    let problem = EnetProblem::new(fit.data.clone());
    let real: Vec<F> = fit.standardized.iter().map(|b| b.abs()).collect();
    let k = real.len();
    let exceed = (0..config.n_permutations)
        .into_par_iter()
        .map(|i| -> Result<Vec<u32>> {
            let mut yp = problem.data.y.clone();
            yp.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1 + i as u64)));
            let b = problem.fit_centered(&yp, fit.alpha, fit.lambda, &opts)?;
            Ok(b.iter().zip(&real).map(|(p, r)| u32::from(p.abs() > *r)).collect())
        })
        .try_reduce(
            || vec![0u32; k],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;

    let total = config.n_permutations as f64;
    let p_values: Vec<f64> = exceed.iter().map(|&c| c as f64 / total).collect();
    let factor = F::of(sign.factor());
    let mut entries = Vec::new();
    let mut hits = Vec::new();
    for (j, &b) in fit.coefficients.iter().enumerate() {
        if b == F::zero() {
            continue;
        }
        if p_values[j] <= config.p_cutoff {
            hits.push(j);
        }
        entries.push(CompoundDiagnostics {
            index: j,
            estimate: (b * factor).as_f64(),
            lambda: Some(fit.lambda.as_f64()),
            p_value: Some(p_values[j]),
            ..Default::default()
        });
    }
    let tag = format!("{} alpha={} lambda={}", config.tag(), fit.alpha, fit.lambda);
    let mut list = HitList::from_indices(design, tag, sign, entries, &hits);
    list.lambda = Some(fit.lambda.as_f64());
    if config.n_permutations < 100 {
        list.diagnostics.push(format!(
            "warning: only {} permutations; p-values are coarse",
            config.n_permutations
        ));
    }
    Ok((list, PermutationOutcome { fit, p_values, hits }))
}
