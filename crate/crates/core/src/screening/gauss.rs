use std::collections::HashMap;

use super::{AnalysisConfig, CompoundDiagnostics, EffectSign, HitList, Method, ThresholdKind};
use crate::designs::Design;
use crate::error::{Error, Result};
use crate::matrix::ColMatrix;
use crate::regression::{center_and_scale, lasso_path, ols_refit_bic, LambdaGrid, LassoPath, RefitModel};
use crate::scalar::Scalar;

/// Per-λ size screen applied after the sign screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Keep right-sign estimates with magnitude at least τ.
    Fixed(f64),
    /// Keep right-sign estimates at least `r` times the largest wrong-sign
    /// magnitude at the same λ.
    Relative(f64),
}

/// Indices that survive the screen. `coefs` are oriented so that a true
/// effect is positive; zero and negative estimates never survive.
pub fn screen_support<F: Scalar>(coefs: &[F], rule: ThresholdRule) -> Vec<usize> {
    let tau = match rule {
        ThresholdRule::Fixed(t) => F::of(t),
        ThresholdRule::Relative(r) => {
            let noise = coefs.iter().fold(F::zero(), |m, &c| m.max(-c));
            F::of(r) * noise
        }
    };
    coefs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > F::zero() && c >= tau)
        .map(|(j, _)| j)
        .collect()
}

/// The BIC-best model across the path.
#[derive(Debug, Clone)]
pub struct Selection<F> {
    pub support: Vec<usize>,
    pub lambda_index: usize,
    pub lambda: F,
    pub model: RefitModel<F>,
}

/// A fitted lasso path on one readout, reusable across threshold rules.
///
/// Everything is stored in the effect orientation: for a negative effect sign
/// the readout is negated before fitting, so true effects are positive.
#[derive(Debug, Clone)]
pub struct PathAnalysis<F> {
    x: ColMatrix<F>,
    y: Vec<F>,
    sign: EffectSign,
    path: LassoPath<F>,
    cache: HashMap<Vec<usize>, Option<RefitModel<F>>>,
}

impl<F: Scalar> PathAnalysis<F> {
    pub fn new(design: &Design, y: &[F], sign: EffectSign, nonneg: bool) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} readings for a design with {} wells",
                y.len(),
                design.n()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("reading {i} is not finite")));
        }
        let x = design.to_pm1::<F>();
        let y: Vec<F> = y.iter().map(|&v| sign.orient(v)).collect();
        let data = center_and_scale(&x, &y).map_err(|e| match e {
            Error::ConstantColumn(j) => {
                let id = j
                    .parse::<usize>()
                    .ok()
                    .and_then(|j| design.compound_ids().get(j).cloned())
                    .unwrap_or(j);
                Error::ConstantColumn(id)
            }
            other => other,
        })?;
        let grid = LambdaGrid::for_data(&data);
        let path = lasso_path(&data, &grid, nonneg)?;
        Ok(Self {
            x,
            y,
            sign,
            path,
            cache: HashMap::new(),
        })
    }

    /// Path in the effect orientation.
    pub fn path(&self) -> &LassoPath<F> {
        &self.path
    }

    pub fn sign(&self) -> EffectSign {
        self.sign
    }

    /// Path in the orientation of the original readout.
    pub fn signed_path(&self) -> LassoPath<F> {
        let mut p = self.path.clone();
        if self.sign == EffectSign::Negative {
            for row in p.coefficients.iter_mut().chain(p.standardized.iter_mut()) {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            for v in p.intercepts.iter_mut() {
                *v = -*v;
            }
        }
        p
    }

    /// Resolves a configured threshold against this fit.
    pub fn rule_for(&self, config: &AnalysisConfig) -> Result<ThresholdRule> {
        match config.threshold_kind {
            ThresholdKind::SigmaFraction => {
                let sigma = config
                    .sigma
                    .ok_or_else(|| Error::InvalidConfig("sigma-fraction threshold needs sigma".into()))?;
                Ok(ThresholdRule::Fixed(sigma * config.threshold_value))
            }
            ThresholdKind::MaxBeta0Fraction => {
                let max = self
                    .path
                    .at_smallest_lambda()
                    .iter()
                    .fold(F::zero(), |m, v| m.max(v.abs()));
                Ok(ThresholdRule::Fixed(config.threshold_value * max.as_f64()))
            }
            ThresholdKind::LambdaRelative => Ok(ThresholdRule::Relative(config.threshold_value)),
        }
    }

    /// Post-threshold support at every grid λ.
    pub fn supports(&self, rule: ThresholdRule) -> Vec<Vec<usize>> {
        self.path
            .coefficients
            .iter()
            .map(|c| screen_support(c, rule))
            .collect()
    }

    fn refit(&mut self, support: &[usize]) -> Result<Option<RefitModel<F>>> {
        if let Some(m) = self.cache.get(support) {
            return Ok(m.clone());
        }
        let model = match ols_refit_bic(&self.x, &self.y, support) {
            Ok(m) => Some(m),
            Err(Error::RankDeficient(_)) | Err(Error::SupportTooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        self.cache.insert(support.to_vec(), model.clone());
        Ok(model)
    }

    /// Minimum-BIC refit over the screened supports; ties go to the smaller
    /// support, then the larger λ.
    pub fn select(&mut self, rule: ThresholdRule) -> Result<Selection<F>> {
        let lambdas = self.path.lambdas();
        let mut best: Option<Selection<F>> = None;
        let mut largest = 0;
        for (g, support) in self.supports(rule).into_iter().enumerate() {
            largest = largest.max(support.len());
            let Some(model) = self.refit(&support)? else {
                continue;
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    model.bic < b.model.bic || (model.bic == b.model.bic && support.len() < b.support.len())
                }
            };
            if better {
                best = Some(Selection {
                    support,
                    lambda_index: g,
                    lambda: lambdas[g],
                    model,
                });
            }
        }
        best.ok_or(Error::SupportTooLarge {
            size: largest,
            limit: self.y.len().saturating_sub(2),
        })
    }

    /// Selected compounds whose refit coefficient has the effect sign.
    pub fn hit_list(&mut self, design: &Design, rule: ThresholdRule, tag: &str) -> Result<HitList> {
        let sel = self.select(rule)?;
        let factor = F::of(self.sign.factor());
        let lasso = &self.path.coefficients[sel.lambda_index];
        let mut entries = Vec::new();
        let mut hits = Vec::new();
        for (&j, &b) in sel.model.support.iter().zip(&sel.model.coefficients) {
            if b > F::zero() {
                hits.push(j);
                entries.push(CompoundDiagnostics {
                    index: j,
                    estimate: (b * factor).as_f64(),
                    lambda: Some(sel.lambda.as_f64()),
                    lasso_estimate: Some((lasso[j] * factor).as_f64()),
                    ..Default::default()
                });
            }
        }
        let mut list = HitList::from_indices(design, tag, self.sign, entries, &hits);
        list.lambda = Some(sel.lambda.as_f64());
        Ok(list)
    }

    /// Hit column indices only; the fast path used by simulations.
    pub fn hit_indices(&mut self, rule: ThresholdRule) -> Result<Vec<usize>> {
        let sel = self.select(rule)?;
        Ok(sel
            .model
            .support
            .iter()
            .zip(&sel.model.coefficients)
            .filter(|(_, &b)| b > F::zero())
            .map(|(&j, _)| j)
            .collect())
    }
}

fn run<F: Scalar>(design: &Design, y: &[F], config: &AnalysisConfig, expect: Method, nonneg: bool) -> Result<HitList> {
    if config.method != expect {
        return Err(Error::InvalidConfig(format!(
            "expected method {expect}, got {}",
            config.method
        )));
    }
    config.validate()?;
    let mut analysis = PathAnalysis::new(design, y, config.effect_sign, nonneg)?;
    let rule = analysis.rule_for(config)?;
    analysis.hit_list(design, rule, &config.tag())
}

/// Lasso path, sign screen plus fixed threshold τ, OLS refit, BIC choice.
pub fn gauss_lasso<F: Scalar>(design: &Design, y: &[F], config: &AnalysisConfig) -> Result<HitList> {
    run(design, y, config, Method::GaussLasso, false)
}

/// Gauss-Lasso whose per-λ threshold scales with the largest wrong-sign
/// estimate at that λ.
pub fn lambda_specific_gauss_lasso<F: Scalar>(design: &Design, y: &[F], config: &AnalysisConfig) -> Result<HitList> {
    run(design, y, config, Method::LambdaGl, false)
}

/// Gauss-Lasso on the sign-constrained path.
pub fn nonneg_gauss_lasso<F: Scalar>(design: &Design, y: &[F], config: &AnalysisConfig) -> Result<HitList> {
    run(design, y, config, Method::NonnegGaussLasso, true)
}
