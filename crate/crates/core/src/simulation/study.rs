use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classification_metrics, expected_false_positives, generate_scenario, log_ratio, SimScenario};
use crate::designs::{construct, derive_seed, evaluate_ue_s2, Design, DesignSpec};
use crate::error::{Error, Result};
use crate::interface::{format_float, load_design};
use crate::screening::{
    elastic_net_permutation_with, orthogonal_pooling_detect, AnalysisConfig, Method, PathAnalysis, ThresholdKind,
};
use crate::secondary::{passing_indices, reference_stats, SecondaryCriterion, SigmaMode};

/// Environment variable capping the worker count (0 or unset = all cores).
pub const THREADS_ENV: &str = "POOLSCREEN_THREADS";

/// A design given inline or as a CSV path (relative to the config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<DesignSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Where the secondary rule takes `(μ, σ)` from in a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudySigma {
    /// The simulated truth: null-well mean and noise SD.
    #[default]
    Truth,
    /// Median and 1.48·MAD of the wells without the compound.
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudySecondary {
    pub p_s: f64,
    pub r: f64,
    #[serde(default)]
    pub sigma: StudySigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMethod {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<StudySecondary>,
}

impl StudyMethod {
    pub fn new(analysis: AnalysisConfig) -> Self {
        Self {
            label: None,
            analysis,
            secondary: None,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_secondary(mut self, p_s: f64, r: f64, sigma: StudySigma) -> Self {
        self.secondary = Some(StudySecondary { p_s, r, sigma });
        self
    }

    pub fn name(&self) -> String {
        let base = self.label.clone().unwrap_or_else(|| self.analysis.tag());
        match (&self.label, &self.secondary) {
            (None, Some(s)) => format!("{base} + {}@{}sd", s.p_s, s.r),
            _ => base,
        }
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_replicates() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub designs: Vec<StudyDesign>,
    pub betas: Vec<f64>,
    pub methods: Vec<StudyMethod>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

impl StudyConfig {
    /// Reads a JSON config; relative design paths resolve against its folder.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: StudyConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.designs {
            if let Some(p) = &d.path {
                if p.is_relative() {
                    d.path = Some(base.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.designs.is_empty() || self.betas.is_empty() || self.methods.is_empty() {
            return bad("a study needs at least one design, beta and method".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if let Some(b) = self.betas.iter().find(|b| !b.is_finite()) {
            return bad(format!("beta {b} is not finite"));
        }
        let mut labels = std::collections::HashSet::new();
        for d in &self.designs {
            if d.spec.is_some() == d.path.is_some() {
                return bad(format!("design {:?} needs exactly one of spec or path", d.label));
            }
            if !labels.insert(&d.label) {
                return bad(format!("duplicate design label {:?}", d.label));
            }
        }
        let mut names = std::collections::HashSet::new();
        for m in &self.methods {
            self.resolved(m).validate()?;
            if let Some(s) = &m.secondary {
                SecondaryCriterion::new(s.p_s, s.r, SigmaMode::Robust, m.analysis.effect_sign).validate()?;
            }
            if !names.insert(m.name()) {
                return bad(format!("duplicate method label {:?}", m.name()));
            }
        }
        Ok(())
    }

    /// Analysis config with the study σ filled in for σ-fraction thresholds.
    fn resolved(&self, m: &StudyMethod) -> AnalysisConfig {
        let mut a = m.analysis.clone();
        if a.threshold_kind == ThresholdKind::SigmaFraction && a.sigma.is_none() {
            a.sigma = Some(self.sigma);
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub design: String,
    pub k: usize,
    pub beta: f64,
    pub method: String,
    pub replicate: usize,
    pub seed: u64,
    pub active: usize,
    pub detected: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub tpr: f64,
    pub fpr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub design: String,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub method: String,
    /// Replicates that completed.
    pub replicates: usize,
    pub failures: usize,
    pub mean_tpr: f64,
    pub mean_fpr: f64,
    /// `ln(mean_tpr / mean_fpr)`; `None` when either mean is zero.
    pub log_ratio: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAverage {
    pub method: String,
    /// Mean of the uncensored condition log-ratios.
    pub mean_log_ratio: Option<f64>,
    pub mean_tpr: f64,
    pub mean_fpr: f64,
    pub conditions: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignAverage {
    pub design: String,
    pub mean_log_ratio: Option<f64>,
    pub conditions: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub seed: u64,
    pub replicates: usize,
    pub conditions: Vec<ConditionSummary>,
    pub methods: Vec<MethodAverage>,
    pub designs: Vec<DesignAverage>,
    pub records: Vec<ReplicateRecord>,
}

impl StudyResult {
    pub fn condition(&self, design: &str, beta: f64, method: &str) -> Option<&ConditionSummary> {
        self.conditions
            .iter()
            .find(|c| c.design == design && c.beta == beta && c.method == method)
    }

    pub fn method(&self, method: &str) -> Option<&MethodAverage> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// Per-method averages (Table-2 layout).
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,mean_log_ratio,mean_tpr,mean_fpr,conditions,censored\n");
        for m in &self.methods {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&m.method),
                opt_float(m.mean_log_ratio),
                format_float(m.mean_tpr),
                format_float(m.mean_fpr),
                m.conditions,
                m.censored
            ));
        }
        s
    }

    pub fn conditions_csv(&self) -> String {
        let mut s = String::from(
            "design,n,k,beta,method,replicates,failures,mean_tpr,mean_fpr,log_ratio,expected_fp_per_10000,seed\n",
        );
        for c in &self.conditions {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&c.design),
                c.n,
                c.k,
                format_float(c.beta),
                csv_field(&c.method),
                c.replicates,
                c.failures,
                format_float(c.mean_tpr),
                format_float(c.mean_fpr),
                opt_float(c.log_ratio),
                format_float(expected_false_positives(c.mean_fpr, 10_000)),
                c.seed
            ));
        }
        s
    }

    /// One row per condition and replicate.
    pub fn long_csv(&self) -> String {
        let mut s = String::from(
            "design,k,beta,method,replicate,seed,active,detected,true_positives,false_positives,tpr,fpr,error\n",
        );
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&r.design),
                r.k,
                format_float(r.beta),
                csv_field(&r.method),
                r.replicate,
                r.seed,
                r.active,
                r.detected,
                r.true_positives,
                r.false_positives,
                format_float(r.tpr),
                format_float(r.fpr),
                csv_field(r.error.as_deref().unwrap_or(""))
            ));
        }
        s
    }

    /// Writes summary.csv, conditions.csv, long.csv and meta.json.
    pub fn write_dir(&self, dir: &Path, config: &StudyConfig, design_meta: &[serde_json::Value]) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_file(&dir.join("summary.csv"), self.summary_csv().as_bytes())?;
        write_file(&dir.join("conditions.csv"), self.conditions_csv().as_bytes())?;
        write_file(&dir.join("long.csv"), self.long_csv().as_bytes())?;
        let failures: usize = self.conditions.iter().map(|c| c.failures).sum();
        let meta = serde_json::json!({
            "tool": "poolscreen",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "replicates": self.replicates,
            "sigma": config.sigma,
            "betas": config.betas,
            "designs": design_meta,
            "methods": config.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "conditions": self.conditions.len(),
            "failed_replicates": failures,
            "method_averages": self.methods,
            "design_averages": self.designs,
        });
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        write_file(&dir.join("meta.json"), text.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_else(|| "NA".into())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Loads or constructs every design of the study, in order.
pub fn resolve_designs(config: &StudyConfig) -> Result<Vec<Design>> {
    config
        .designs
        .iter()
        .map(|d| match (&d.spec, &d.path) {
            (Some(spec), None) => construct(spec),
            (None, Some(path)) => load_design(path),
            _ => Err(Error::InvalidConfig(format!(
                "design {:?} needs exactly one of spec or path",
                d.label
            ))),
        })
        .collect()
}

/// Worker count from [`THREADS_ENV`]; `None` means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::InvalidConfig(format!("{THREADS_ENV}={v:?} is not a count"))),
        },
    }
}

/// Constructs the designs and runs the study with the worker count from the
/// environment.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let designs = resolve_designs(config)?;
    run_study_with(config, &designs, threads_from_env()?)
}

type Outcome = std::result::Result<Vec<usize>, String>;

/// Runs the study on already-resolved designs (same order as the config).
///
/// Scenario data depend on (seed, design, beta, replicate) only, so every
/// method sees the same simulated screens.
pub fn run_study_with(config: &StudyConfig, designs: &[Design], threads: Option<usize>) -> Result<StudyResult> {
    config.validate()?;
    if designs.len() != config.designs.len() {
        return Err(Error::InvalidConfig(format!(
            "{} designs supplied for {} configured",
            designs.len(),
            config.designs.len()
        )));
    }
    let methods: Vec<(AnalysisConfig, Option<StudySecondary>)> = config
        .methods
        .iter()
        .map(|m| (config.resolved(m), m.secondary))
        .collect();
    let tasks: Vec<(usize, usize, usize)> = (0..designs.len())
        .flat_map(|d| (0..config.betas.len()).flat_map(move |b| (0..config.replicates).map(move |r| (d, b, r))))
        .collect();

    let work = || -> Vec<(u64, usize, Vec<Outcome>)> {
        tasks
            .par_iter()
            .map(|&(d, b, r)| {
                let seed = scenario_seed(config.seed, d, b, r);
                let design = &designs[d];
                match generate_scenario::<f64>(design, config.betas[b], config.sigma, seed) {
                    Ok(s) => {
                        let outcomes = evaluate_methods(design, &s, &methods);
                        (seed, s.active_set.len(), outcomes_with_active(outcomes, s.active_set))
                    }
                    Err(e) => (seed, 0, vec![Err(e.to_string()); methods.len()]),
                }
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work),
        None => work(),
    };

    let names: Vec<String> = config.methods.iter().map(|m| m.name()).collect();
    let mut records = Vec::with_capacity(tasks.len() * methods.len());
    let mut conditions = Vec::new();
    // tasks are ordered design → beta → replicate; aggregate per (design, beta, method)
    for (d, design) in designs.iter().enumerate() {
        for (b, &beta) in config.betas.iter().enumerate() {
            let start = (d * config.betas.len() + b) * config.replicates;
            let block = &results[start..start + config.replicates];
            for (mi, name) in names.iter().enumerate() {
                let (mut tpr, mut fpr, mut ok, mut failed) = (0.0, 0.0, 0usize, 0usize);
                for (r, (seed, active, outcomes)) in block.iter().enumerate() {
                    let mut rec = ReplicateRecord {
                        design: config.designs[d].label.clone(),
                        k: design.k(),
                        beta,
                        method: name.clone(),
                        replicate: r,
                        seed: *seed,
                        active: *active,
                        detected: 0,
                        true_positives: 0,
                        false_positives: 0,
                        tpr: 0.0,
                        fpr: 0.0,
                        error: None,
                    };
                    match &outcomes[mi] {
                        Ok(packed) => {
                            let (active_set, detected) = packed.split_at(*active);
                            match classification_metrics(detected, active_set, design.k()) {
                                Ok(m) => {
                                    rec.detected = detected.len();
                                    rec.true_positives = m.true_positives;
                                    rec.false_positives = m.false_positives;
                                    rec.tpr = m.tpr;
                                    rec.fpr = m.fpr;
                                    tpr += m.tpr;
                                    fpr += m.fpr;
                                    ok += 1;
                                }
                                Err(e) => {
                                    rec.error = Some(e.to_string());
                                    failed += 1;
                                }
                            }
                        }
                        Err(e) => {
                            rec.error = Some(e.clone());
                            failed += 1;
                        }
                    }
                    records.push(rec);
                }
                let (mean_tpr, mean_fpr) = if ok > 0 {
                    (tpr / ok as f64, fpr / ok as f64)
                } else {
                    (0.0, 0.0)
                };
                conditions.push(ConditionSummary {
                    design: config.designs[d].label.clone(),
                    n: design.n(),
                    k: design.k(),
                    beta,
                    method: name.clone(),
                    replicates: ok,
                    failures: failed,
                    mean_tpr,
                    mean_fpr,
                    log_ratio: if ok > 0 { log_ratio(mean_tpr, mean_fpr) } else { None },
                    seed: scenario_seed(config.seed, d, b, 0),
                });
            }
        }
    }

    let methods_avg = names
        .iter()
        .map(|name| {
            let rows: Vec<&ConditionSummary> = conditions.iter().filter(|c| &c.method == name).collect();
            let logs: Vec<f64> = rows.iter().filter_map(|c| c.log_ratio).collect();
            let count = rows.len().max(1) as f64;
            MethodAverage {
                method: name.clone(),
                mean_log_ratio: mean(&logs),
                mean_tpr: rows.iter().map(|c| c.mean_tpr).sum::<f64>() / count,
                mean_fpr: rows.iter().map(|c| c.mean_fpr).sum::<f64>() / count,
                conditions: rows.len(),
                censored: rows.len() - logs.len(),
            }
        })
        .collect();
    let designs_avg = config
        .designs
        .iter()
        .map(|d| {
            let rows: Vec<&ConditionSummary> = conditions.iter().filter(|c| c.design == d.label).collect();
            let logs: Vec<f64> = rows.iter().filter_map(|c| c.log_ratio).collect();
            DesignAverage {
                design: d.label.clone(),
                mean_log_ratio: mean(&logs),
                conditions: rows.len(),
                censored: rows.len() - logs.len(),
            }
        })
        .collect();

    Ok(StudyResult {
        seed: config.seed,
        replicates: config.replicates,
        conditions,
        methods: methods_avg,
        designs: designs_avg,
        records,
    })
}

/// Design summaries for meta.json.
pub fn design_meta(config: &StudyConfig, designs: &[Design]) -> Vec<serde_json::Value> {
    config
        .designs
        .iter()
        .zip(designs)
        .map(|(c, d)| {
            serde_json::json!({
                "label": c.label,
                "n": d.n(),
                "k": d.k(),
                "sqrt_ue_s2": evaluate_ue_s2(d).sqrt(),
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub(crate) fn scenario_seed(master: u64, design: usize, beta: usize, replicate: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(master, design as u64), beta as u64), replicate as u64)
}

/// Prefixes each successful detection list with the active set so the
/// aggregation step can score it without keeping the scenario around.
fn outcomes_with_active(outcomes: Vec<Outcome>, active: Vec<usize>) -> Vec<Outcome> {
    outcomes
        .into_iter()
        .map(|o| {
            o.map(|hits| {
                let mut packed = active.clone();
                packed.extend(hits);
                packed
            })
        })
        .collect()
}

/// Detected column indices for every method on one scenario. Lasso paths and
/// primary hit lists are shared between methods that need the same ones.
fn evaluate_methods(
    design: &Design,
    scenario: &SimScenario<f64>,
    methods: &[(AnalysisConfig, Option<StudySecondary>)],
) -> Vec<Outcome> {
    let mut plain: Option<std::result::Result<PathAnalysis<f64>, String>> = None;
    let mut nonneg: Option<std::result::Result<PathAnalysis<f64>, String>> = None;
    let mut primary: HashMap<String, Outcome> = HashMap::new();
    let y = &scenario.y;
    methods
        .iter()
        .enumerate()
        .map(|(mi, (analysis, secondary))| {
            let mut analysis = analysis.clone();
            analysis.seed = derive_seed(scenario.seed, 1 + mi as u64);
            let key = serde_json::to_string(&(&analysis.method, &analysis.threshold_kind, analysis.threshold_value, analysis.sigma, analysis.effect_sign, analysis.n_permutations, analysis.p_cutoff, analysis.percentile, analysis.cv_folds, &analysis.alphas))
                .unwrap_or_default();
            let hits = match primary.get(&key) {
                Some(h) => h.clone(),
                None => {
                    let h = primary_hits(design, y, &analysis, &mut plain, &mut nonneg);
                    primary.insert(key, h.clone());
                    h
                }
            }?;
            Ok(match secondary {
                None => hits,
                Some(s) => apply_secondary(design, scenario, &hits, s, analysis.effect_sign),
            })
        })
        .collect()
}

fn primary_hits(
    design: &Design,
    y: &[f64],
    analysis: &AnalysisConfig,
    plain: &mut Option<std::result::Result<PathAnalysis<f64>, String>>,
    nonneg: &mut Option<std::result::Result<PathAnalysis<f64>, String>>,
) -> Outcome {
    match analysis.method {
        Method::GaussLasso | Method::LambdaGl | Method::NonnegGaussLasso => {
            let is_nonneg = analysis.method == Method::NonnegGaussLasso;
            let slot = if is_nonneg { nonneg } else { plain };
            let fit = slot.get_or_insert_with(|| {
                PathAnalysis::new(design, y, analysis.effect_sign, is_nonneg).map_err(|e| e.to_string())
            });
            let fit = fit.as_mut().map_err(|e| e.clone())?;
            if fit.sign() != analysis.effect_sign {
                let mut own = PathAnalysis::new(design, y, analysis.effect_sign, is_nonneg).map_err(|e| e.to_string())?;
                let rule = own.rule_for(analysis).map_err(|e| e.to_string())?;
                return own.hit_indices(rule).map_err(|e| e.to_string());
            }
            let rule = fit.rule_for(analysis).map_err(|e| e.to_string())?;
            fit.hit_indices(rule).map_err(|e| e.to_string())
        }
        Method::ElasticNetPerm => elastic_net_permutation_with(design, y, analysis)
            .map(|(_, out)| out.hits)
            .map_err(|e| e.to_string()),
        Method::OrthogonalPooling => orthogonal_pooling_detect(design, y, analysis.percentile, analysis.effect_sign)
            .map(|h| h.indices())
            .map_err(|e| e.to_string()),
    }
}

fn apply_secondary(
    design: &Design,
    scenario: &SimScenario<f64>,
    hits: &[usize],
    s: &StudySecondary,
    sign: crate::screening::EffectSign,
) -> Vec<usize> {
    let y = &scenario.y;
    match s.sigma {
        StudySigma::Truth => {
            let crit = SecondaryCriterion::new(
                s.p_s,
                s.r,
                SigmaMode::Known {
                    mu: scenario.null_well_mean(),
                    sigma: scenario.sigma,
                },
                sign,
            );
            passing_indices(design, y, hits, scenario.null_well_mean(), scenario.sigma, &crit)
        }
        StudySigma::Robust => {
            let crit = SecondaryCriterion::new(s.p_s, s.r, SigmaMode::Robust, sign);
            hits.iter()
                .copied()
                .filter(|&j| match reference_stats(design, y, j) {
                    Ok((mu, sigma)) if sigma > 0.0 => !passing_indices(design, y, &[j], mu, sigma, &crit).is_empty(),
                    _ => false,
                })
                .collect()
        }
    }
}
