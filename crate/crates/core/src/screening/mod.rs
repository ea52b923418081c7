//! Hit calling from pooled readouts.
//!
//! Lasso-based procedures share one pipeline ([`PathAnalysis`]): fit the path,
//! screen each λ's estimates by sign and size, refit every surviving support by
//! OLS and keep the BIC-best model. The permutation-calibrated elastic net and
//! the orthogonal-pooling percentile rule live beside it, and
//! [`dual_assay_hits`] reconciles wild-type and mutant hit lists.

mod dual;
mod enet_perm;
mod gauss;
mod orthogonal;

pub use dual::{dual_assay_hits, DualAssayHits};
pub use enet_perm::{elastic_net_permutation, elastic_net_permutation_with, PermutationOutcome};
pub use gauss::{
    gauss_lasso, lambda_specific_gauss_lasso, nonneg_gauss_lasso, screen_support, PathAnalysis, Selection,
    ThresholdRule,
};
pub use orthogonal::{orthogonal_pooling_detect, quantile_type7};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::regression::DEFAULT_ALPHAS;
use crate::secondary::SecondaryStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GaussLasso,
    LambdaGl,
    NonnegGaussLasso,
    ElasticNetPerm,
    OrthogonalPooling,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::GaussLasso => "gauss_lasso",
            Method::LambdaGl => "lambda_gl",
            Method::NonnegGaussLasso => "nonneg_gauss_lasso",
            Method::ElasticNetPerm => "elastic_net_perm",
            Method::OrthogonalPooling => "orthogonal_pooling",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gauss_lasso" | "gl" => Ok(Method::GaussLasso),
            "lambda_gl" | "lambda_specific" | "lambda_specific_gauss_lasso" => Ok(Method::LambdaGl),
            "nonneg_gauss_lasso" | "nonneg_gl" | "nngl" => Ok(Method::NonnegGaussLasso),
            "elastic_net_perm" | "elastic_net" | "enet" => Ok(Method::ElasticNetPerm),
            "orthogonal_pooling" | "orthogonal" => Ok(Method::OrthogonalPooling),
            _ => Err(Error::InvalidConfig(format!("unknown analysis method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// τ = value · σ.
    SigmaFraction,
    /// τ = value · max|β̂| at the smallest grid λ.
    MaxBeta0Fraction,
    /// τ_λ = value · (largest wrong-sign magnitude at λ).
    LambdaRelative,
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sigma_fraction" | "sigma" => Ok(ThresholdKind::SigmaFraction),
            "max_beta0_fraction" | "max_beta0" => Ok(ThresholdKind::MaxBeta0Fraction),
            "lambda_relative" | "lambda" => Ok(ThresholdKind::LambdaRelative),
            _ => Err(Error::InvalidConfig(format!("unknown threshold kind {s:?}"))),
        }
    }
}

/// Direction of a true effect in the readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectSign {
    #[default]
    Positive,
    Negative,
}

impl EffectSign {
    pub fn factor(self) -> f64 {
        match self {
            EffectSign::Positive => 1.0,
            EffectSign::Negative => -1.0,
        }
    }

    /// Value oriented so that a true effect is positive.
    pub fn orient<F: crate::Scalar>(self, v: F) -> F {
        match self {
            EffectSign::Positive => v,
            EffectSign::Negative => -v,
        }
    }
}

impl FromStr for EffectSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pos" | "positive" | "+" => Ok(EffectSign::Positive),
            "neg" | "negative" | "-" => Ok(EffectSign::Negative),
            _ => Err(Error::InvalidConfig(format!("unknown effect sign {s:?}"))),
        }
    }
}

fn default_permutations() -> usize {
    1000
}

fn default_p_cutoff() -> f64 {
    0.05
}

fn default_percentile() -> f64 {
    0.95
}

fn default_folds() -> usize {
    3
}

fn default_alphas() -> Vec<f64> {
    DEFAULT_ALPHAS.to_vec()
}

fn default_threshold_kind() -> ThresholdKind {
    ThresholdKind::LambdaRelative
}

fn default_threshold_value() -> f64 {
    1.0
}

/// Tuning for one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub method: Method,
    #[serde(default = "default_threshold_kind")]
    pub threshold_kind: ThresholdKind,
    #[serde(default = "default_threshold_value")]
    pub threshold_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub effect_sign: EffectSign,
    #[serde(default = "default_permutations")]
    pub n_permutations: usize,
    #[serde(default = "default_p_cutoff")]
    pub p_cutoff: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_percentile")]
    pub percentile: f64,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
}

impl AnalysisConfig {
    pub fn new(method: Method, threshold_kind: ThresholdKind, threshold_value: f64) -> Self {
        Self {
            method,
            threshold_kind,
            threshold_value,
            sigma: None,
            effect_sign: EffectSign::Positive,
            n_permutations: default_permutations(),
            p_cutoff: default_p_cutoff(),
            seed: 0,
            percentile: default_percentile(),
            cv_folds: default_folds(),
            alphas: default_alphas(),
        }
    }

    pub fn gauss_lasso_sigma(fraction: f64, sigma: f64) -> Self {
        Self::new(Method::GaussLasso, ThresholdKind::SigmaFraction, fraction).with_sigma(sigma)
    }

    pub fn gauss_lasso_max_beta0(fraction: f64) -> Self {
        Self::new(Method::GaussLasso, ThresholdKind::MaxBeta0Fraction, fraction)
    }

    pub fn lambda_gl(r2: f64) -> Self {
        Self::new(Method::LambdaGl, ThresholdKind::LambdaRelative, r2)
    }

    pub fn elastic_net(seed: u64) -> Self {
        Self::new(Method::ElasticNetPerm, ThresholdKind::LambdaRelative, 1.0).with_seed(seed)
    }

    pub fn orthogonal(percentile: f64) -> Self {
        let mut c = Self::new(Method::OrthogonalPooling, ThresholdKind::LambdaRelative, 1.0);
        c.percentile = percentile;
        c
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_sign(mut self, sign: EffectSign) -> Self {
        self.effect_sign = sign;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_permutations(mut self, n: usize) -> Self {
        self.n_permutations = n;
        self
    }

    pub fn nonneg(mut self) -> Self {
        self.method = Method::NonnegGaussLasso;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.threshold_value > 0.0) || !self.threshold_value.is_finite() {
            return bad(format!("threshold value must be positive, got {}", self.threshold_value));
        }
        let needs_sigma = self.threshold_kind == ThresholdKind::SigmaFraction;
        match self.method {
            Method::GaussLasso | Method::NonnegGaussLasso => {
                if self.threshold_kind == ThresholdKind::LambdaRelative {
                    return bad(format!("{} takes a sigma or max-beta0 threshold", self.method));
                }
                if needs_sigma != self.sigma.is_some() {
                    return bad("sigma is required exactly for sigma-fraction thresholds".into());
                }
            }
            Method::LambdaGl => {
                if self.threshold_kind != ThresholdKind::LambdaRelative {
                    return bad("lambda_gl uses a lambda-relative threshold".into());
                }
                if self.threshold_value > 1.0 {
                    return bad(format!("r2 must lie in (0, 1], got {}", self.threshold_value));
                }
            }
            Method::ElasticNetPerm => {
                if self.n_permutations == 0 {
                    return bad("at least one permutation is required".into());
                }
                if !(self.p_cutoff > 0.0 && self.p_cutoff <= 1.0) {
                    return bad(format!("p cutoff must lie in (0, 1], got {}", self.p_cutoff));
                }
                if self.cv_folds < 2 {
                    return bad("cross-validation needs at least 2 folds".into());
                }
                if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                    return bad("alphas must lie in (0, 1]".into());
                }
            }
            Method::OrthogonalPooling => {
                if !(self.percentile > 0.0 && self.percentile < 1.0) {
                    return bad(format!("percentile must lie in (0, 1), got {}", self.percentile));
                }
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return bad(format!("sigma must be positive, got {s}"));
            }
        }
        Ok(())
    }

    /// Short label such as `lambda_gl(r=0.9)`.
    pub fn tag(&self) -> String {
        match self.method {
            Method::GaussLasso | Method::NonnegGaussLasso => match self.threshold_kind {
                ThresholdKind::SigmaFraction => format!("{}(tau={}*sigma)", self.method, self.threshold_value),
                _ => format!("{}(tau={}*max|b0|)", self.method, self.threshold_value),
            },
            Method::LambdaGl => format!("lambda_gl(r={})", self.threshold_value),
            Method::ElasticNetPerm => format!("elastic_net_perm(p<={})", self.p_cutoff),
            Method::OrthogonalPooling => format!("orthogonal_pooling(q={})", self.percentile),
        }
    }
}

/// Per-compound evidence attached to a hit list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompoundDiagnostics {
    pub index: usize,
    /// Refit (or elastic-net) coefficient on the original readout scale.
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lasso_estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<SecondaryStats>,
}

/// Selected compounds plus the evidence behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitList {
    /// Hit ids in design column order.
    pub hits: Vec<String>,
    pub per_compound: BTreeMap<String, CompoundDiagnostics>,
    pub method_tag: String,
    /// λ of the selected model, when the method has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub effect_sign: EffectSign,
    /// Number of compounds in the design the list was drawn from.
    pub universe: usize,
    /// Fingerprint of the design's compound ids.
    pub universe_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl HitList {
    pub fn empty(design: &Design, method_tag: impl Into<String>, effect_sign: EffectSign) -> Self {
        Self {
            hits: Vec::new(),
            per_compound: BTreeMap::new(),
            method_tag: method_tag.into(),
            lambda: None,
            effect_sign,
            universe: design.k(),
            universe_digest: universe_digest(design.compound_ids()),
            diagnostics: Vec::new(),
        }
    }

    /// Builds a list from column indices; `hits` is reordered by index.
    pub fn from_indices(
        design: &Design,
        method_tag: impl Into<String>,
        effect_sign: EffectSign,
        mut entries: Vec<CompoundDiagnostics>,
        hit_indices: &[usize],
    ) -> Self {
        let mut list = Self::empty(design, method_tag, effect_sign);
        let ids = design.compound_ids();
        entries.sort_by_key(|e| e.index);
        for e in entries {
            list.per_compound.insert(ids[e.index].clone(), e);
        }
        let mut idx = hit_indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        list.hits = idx.into_iter().map(|j| ids[j].clone()).collect();
        list
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.hits.iter().any(|h| h == id)
    }

    /// Column indices of the hits.
    pub fn indices(&self) -> Vec<usize> {
        self.hits.iter().map(|h| self.per_compound[h].index).collect()
    }

    /// Errors unless `design` is the design this list was drawn from.
    pub fn check_design(&self, design: &Design) -> Result<()> {
        if self.universe != design.k() || self.universe_digest != universe_digest(design.compound_ids()) {
            return Err(Error::InvalidInput(format!(
                "hit list {} was drawn from a different compound set",
                self.method_tag
            )));
        }
        Ok(())
    }
}

/// FNV-1a over the ids, each terminated by a zero byte.
pub(crate) fn universe_digest(ids: &[String]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for id in ids {
        for &b in id.as_bytes().iter().chain(std::iter::once(&0u8)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Runs the analysis named by `config.method`.
pub fn analyze<F: crate::Scalar>(design: &Design, y: &[F], config: &AnalysisConfig) -> Result<HitList> {
    config.validate()?;
    match config.method {
        Method::GaussLasso => gauss_lasso(design, y, config),
        Method::LambdaGl => lambda_specific_gauss_lasso(design, y, config),
        Method::NonnegGaussLasso => nonneg_gauss_lasso(design, y, config),
        Method::ElasticNetPerm => elastic_net_permutation(design, y, config),
        Method::OrthogonalPooling => orthogonal_pooling_detect(design, y, config.percentile, config.effect_sign),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("lambda-gl".parse::<Method>().unwrap(), Method::LambdaGl);
        assert_eq!("neg".parse::<EffectSign>().unwrap(), EffectSign::Negative);
        assert!("bogus".parse::<Method>().is_err());
        assert_eq!("max-beta0".parse::<ThresholdKind>().unwrap(), ThresholdKind::MaxBeta0Fraction);
    }

    #[test]
    fn config_validation() {
        assert!(AnalysisConfig::lambda_gl(0.9).validate().is_ok());
        assert!(AnalysisConfig::lambda_gl(1.5).validate().is_err());
        assert!(AnalysisConfig::lambda_gl(0.0).validate().is_err());
        assert!(AnalysisConfig::gauss_lasso_sigma(0.25, 1.0).validate().is_ok());
        let mut c = AnalysisConfig::gauss_lasso_sigma(0.25, 1.0);
        c.sigma = None;
        assert!(c.validate().is_err());
        assert!(AnalysisConfig::gauss_lasso_max_beta0(0.5).with_sigma(1.0).validate().is_err());
        assert!(AnalysisConfig::orthogonal(1.0).validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: AnalysisConfig = serde_json::from_str(r#"{"method":"elastic_net_perm"}"#).unwrap();
        assert_eq!(c.n_permutations, 1000);
        assert_eq!(c.p_cutoff, 0.05);
        assert_eq!(c.alphas, DEFAULT_ALPHAS.to_vec());
    }

    #[test]
    fn digest_depends_on_ids() {
        let a = vec!["A".to_string(), "B".to_string()];
        let b = vec!["AB".to_string()];
        assert_ne!(universe_digest(&a), universe_digest(&b));
        assert_eq!(universe_digest(&a), universe_digest(&a.clone()));
    }
}
