use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use poolscreen::designs::{
    construct_crows_with, construct_maps, construct_random_balanced, validate_design, Budget, CrowsOptions,
};
use poolscreen::interface::{
    analysis_report, emit_profile, load_design, load_plate, report_campaign, write_design, write_output,
    AnalysisReport, PlateAnalysis, PlateReadings, WellRole,
};
use poolscreen::screening::{analyze, PathAnalysis};
use poolscreen::simulation::{design_meta, resolve_designs, run_study_with, threads_from_env, StudyConfig};
use poolscreen::{
    AnalysisConfig, Design, DesignMethod, DesignSpec, EffectSign, Error, HitList, Method, Result, SecondaryCriterion,
    SigmaMode, ThresholdKind,
};

#[derive(Parser)]
#[command(name = "poolscreen", version, about = "Pooled screening designs, hit detection and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a pooling design and write it as CSV.
    Design(DesignArgs),
    /// Recompute criteria and bounds of a design CSV.
    Evaluate(EvaluateArgs),
    /// Run a simulation study from a JSON config.
    Simulate(SimulateArgs),
    /// Detect hits on one plate (optionally with a second assay).
    Analyze(AnalyzeArgs),
    /// Aggregate a screening campaign described by a JSON manifest.
    Report(ReportArgs),
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, visible_alias = "wells")]
    n: usize,
    #[arg(long, visible_alias = "compounds")]
    k: usize,
    /// Pool size cap.
    #[arg(long, visible_alias = "pool-size")]
    c: usize,
    #[arg(long, default_value = "crows")]
    method: DesignMethod,
    /// Minimum replication (MAPS).
    #[arg(long)]
    a_min: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exchange proposals (CRowS) or generations (MAPS).
    #[arg(long, visible_alias = "budget", conflicts_with = "seconds")]
    iterations: Option<u64>,
    /// Wall-clock budget; results then depend on machine speed.
    #[arg(long)]
    seconds: Option<f64>,
    /// CRowS restarts.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    /// Output CSV, or - for standard output.
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
    /// Also write the criterion report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, required_unless_present = "path", conflicts_with = "path")]
    design: Option<PathBuf>,
    /// Design CSV, as an alternative to --design.
    path: Option<PathBuf>,
    /// Check pools against this size cap.
    #[arg(long)]
    c_max: Option<usize>,
    /// Check replication against this minimum.
    #[arg(long)]
    a_min: Option<usize>,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct MethodArgs {
    #[arg(long, default_value = "lambda_gl")]
    method: Method,
    /// Relative threshold r for the λ-specific method.
    #[arg(long)]
    r: Option<f64>,
    /// Fixed threshold as a fraction of sigma.
    #[arg(long, conflicts_with_all = ["r", "tau_max"])]
    tau_sigma: Option<f64>,
    /// Fixed threshold as a fraction of the largest unpenalized estimate.
    #[arg(long, conflicts_with = "r")]
    tau_max: Option<f64>,
    /// Noise SD for sigma-fraction thresholds.
    #[arg(long)]
    sigma: Option<f64>,
    /// Direction of true effects: pos or neg.
    #[arg(long, default_value = "pos")]
    sign: EffectSign,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    p_cutoff: Option<f64>,
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MethodArgs {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut cfg = match (self.tau_sigma, self.tau_max, self.r) {
            (Some(f), _, _) => AnalysisConfig::new(self.method, ThresholdKind::SigmaFraction, f),
            (_, Some(f), _) => AnalysisConfig::new(self.method, ThresholdKind::MaxBeta0Fraction, f),
            (_, _, r) => AnalysisConfig::new(self.method, ThresholdKind::LambdaRelative, r.unwrap_or(1.0)),
        };
        if matches!(self.method, Method::GaussLasso | Method::NonnegGaussLasso)
            && cfg.threshold_kind == ThresholdKind::LambdaRelative
        {
            return Err(Error::InvalidConfig(format!(
                "{} needs --tau-sigma or --tau-max",
                self.method
            )));
        }
        if self.method == Method::LambdaGl && cfg.threshold_kind != ThresholdKind::LambdaRelative {
            return Err(Error::InvalidConfig("lambda_gl takes --r, not a fixed threshold".into()));
        }
        cfg.sigma = self.sigma;
        cfg.effect_sign = self.sign;
        cfg.seed = self.seed;
        if let Some(n) = self.permutations {
            cfg.n_permutations = n;
        }
        if let Some(p) = self.p_cutoff {
            cfg.p_cutoff = p;
        }
        if let Some(p) = self.percentile {
            cfg.percentile = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    design: PathBuf,
    /// Plate CSV (`well_id,value,role,assay`) of the primary assay.
    #[arg(long)]
    readings: PathBuf,
    /// Plate CSV of the counter-screen assay.
    #[arg(long)]
    readings2: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
    /// Secondary rule P_S@R, e.g. 0.75@3sd.
    #[arg(long)]
    secondary: Option<String>,
    /// robust or known:MU,SIGMA.
    #[arg(long, default_value = "robust")]
    sigma_mode: SigmaMode,
    /// Subtract each assay's pool median before analysis.
    #[arg(long)]
    median_center: bool,
    /// Write the lasso coefficient profile of the primary assay here.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Compounds to annotate in the profile.
    #[arg(long, default_value_t = 10)]
    annotate: usize,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct ControlSummary {
    positive: usize,
    negative: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    positive_median: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    negative_median: Option<f64>,
}

impl ControlSummary {
    fn of(p: &PlateReadings) -> Self {
        let pos = p.control_values(WellRole::PositiveControl);
        let neg = p.control_values(WellRole::NegativeControl);
        Self {
            positive: pos.len(),
            negative: neg.len(),
            positive_median: median(&pos),
            negative_median: median(&neg),
        }
    }
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { (s[m - 1] + s[m]) / 2.0 })
}

#[derive(Serialize)]
struct AnalyzeOutput {
    plate_id: String,
    pool_wells: usize,
    compounds: usize,
    median_centered: bool,
    controls: ControlSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    mutant_controls: Option<ControlSummary>,
    #[serde(flatten)]
    report: AnalysisReport,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    plates: Vec<ManifestPlate>,
    analysis: AnalysisConfig,
    #[serde(default)]
    secondary: Option<ManifestSecondary>,
    #[serde(default)]
    median_center: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestPlate {
    #[serde(default)]
    plate_id: Option<String>,
    design: PathBuf,
    #[serde(default)]
    wt: Option<PathBuf>,
    #[serde(default, alias = "mutant")]
    r#mut: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestSecondary {
    rule: String,
    #[serde(default = "robust_mode")]
    sigma_mode: String,
}

fn robust_mode() -> String {
    "robust".into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let message: Vec<&str> = rendered
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            emit_error("usage", message.join(" ").trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(e.kind(), &e.to_string());
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn emit_error(kind: &str, message: &str) {
    let record = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{record}");
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Design(a) => design(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze_plate(a),
        Command::Report(a) => report(a),
    }
}

fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn design(a: DesignArgs) -> Result<()> {
    let mut spec = DesignSpec::new(a.n, a.k, a.c, a.method);
    spec.a_min = a.a_min;
    spec.seed = a.seed;
    spec.budget = match (a.iterations, a.seconds) {
        (_, Some(s)) => Budget::Seconds(s),
        (Some(i), None) => Budget::Iterations(i),
        (None, None) => Budget::default(),
    };
    spec.validate()?;
    let design = match a.method {
        DesignMethod::Crows => {
            let opts = CrowsOptions {
                restarts: a.restarts,
                record_trace: false,
            };
            construct_crows_with(&spec, &opts)?.design
        }
        DesignMethod::Maps => construct_maps(&spec)?,
        DesignMethod::Random => construct_random_balanced(&spec)?,
    };
    let mut buf = Vec::new();
    write_design(&design, &mut buf)?;
    write_output(&a.output, &String::from_utf8(buf).expect("csv output is utf-8"))?;
    if let Some(path) = a.report {
        std::fs::write(path, json_text(&validate_design(&design, Some(&spec)))?)?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let path = a.design.as_ref().or(a.path.as_ref()).expect("clap requires one");
    let design = load_design(path)?;
    let spec = match (a.c_max, a.a_min) {
        (None, None) => None,
        (c, a_min) => {
            let method = if a_min.is_some() { DesignMethod::Maps } else { DesignMethod::Crows };
            let mut s = DesignSpec::new(design.n(), design.k(), c.unwrap_or(design.k()), method);
            s.a_min = a_min;
            Some(s)
        }
    };
    let mut report = validate_design(&design, spec.as_ref());
    if let (Some(c), Some(_)) = (a.c_max, a.a_min) {
        let over: Vec<&String> = design
            .pool_sizes()
            .iter()
            .zip(design.well_ids())
            .filter(|(&s, _)| s > c)
            .map(|(_, id)| id)
            .collect();
        for id in over {
            report.violations.push(format!("pool {id} exceeds c_max {c}"));
        }
    }
    write_output(&a.output, &json_text(&report)?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = StudyConfig::from_file(&a.config)?;
    config.validate()?;
    let threads = threads_from_env()?;
    let start = Instant::now();
    let designs = resolve_designs(&config)?;
    let built = start.elapsed();
    let result = run_study_with(&config, &designs, threads)?;
    let total = start.elapsed();
    result.write_dir(&a.output, &config, &design_meta(&config, &designs))?;
    let timing = serde_json::json!({
        "design_seconds": built.as_secs_f64(),
        "total_seconds": total.as_secs_f64(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
    });
    std::fs::write(a.output.join("timing.json"), json_text(&timing)?)?;
    Ok(())
}

fn plate_values(p: &PlateReadings, center: bool) -> PlateReadings {
    if center {
        p.median_centered()
    } else {
        p.clone()
    }
}

fn secondary_criterion(rule: &str, mode: SigmaMode, sign: EffectSign) -> Result<SecondaryCriterion> {
    SecondaryCriterion::parse_rule(rule, mode, sign)
}

fn analyze_plate(a: AnalyzeArgs) -> Result<()> {
    let config = a.method.config()?;
    let design = load_design(&a.design)?;
    let wt = plate_values(&load_plate(&a.readings, &design)?, a.median_center);
    let mutant = match &a.readings2 {
        Some(p) => Some(plate_values(&load_plate(p, &design)?, a.median_center)),
        None => None,
    };
    let secondary = match &a.secondary {
        Some(rule) => Some(secondary_criterion(rule, a.sigma_mode, config.effect_sign)?),
        None => None,
    };
    let wt_hits = analyze(&design, &wt.pool_values, &config)?;
    let mutant_hits = match &mutant {
        Some(m) => Some(analyze(&design, &m.pool_values, &config)?),
        None => None,
    };
    if let Some(path) = &a.profile {
        if !matches!(
            config.method,
            Method::GaussLasso | Method::LambdaGl | Method::NonnegGaussLasso
        ) {
            return Err(Error::InvalidConfig(format!(
                "profiles are available for lasso-based methods, not {}",
                config.method
            )));
        }
        let nonneg = config.method == Method::NonnegGaussLasso;
        let pa = PathAnalysis::new(&design, &wt.pool_values, config.effect_sign, nonneg)?;
        emit_profile(&pa.signed_path(), design.compound_ids(), a.annotate, path)?;
    }
    let report = analysis_report(
        &design,
        &wt.pool_values,
        &wt_hits,
        mutant_hits.as_ref(),
        secondary.as_ref(),
    )?;
    let out = AnalyzeOutput {
        plate_id: wt.plate_id.clone(),
        pool_wells: design.n(),
        compounds: design.k(),
        median_centered: a.median_center,
        controls: ControlSummary::of(&wt),
        mutant_controls: mutant.as_ref().map(ControlSummary::of),
        report,
    };
    write_output(&a.output, &json_text(&out)?)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

fn plate_analysis(
    base: &Path,
    plate: &ManifestPlate,
    config: &AnalysisConfig,
    center: bool,
) -> Result<PlateAnalysis> {
    let design: Design = load_design(&resolve(base, &plate.design))?;
    let read = |p: &Option<PathBuf>| -> Result<Option<PlateReadings>> {
        p.as_ref()
            .map(|p| load_plate(&resolve(base, p), &design).map(|r| plate_values(&r, center)))
            .transpose()
    };
    let wt = read(&plate.wt)?;
    let mutant = read(&plate.r#mut)?;
    let plate_id = plate
        .plate_id
        .clone()
        .or_else(|| wt.as_ref().map(|w| w.plate_id.clone()))
        .or_else(|| mutant.as_ref().map(|m| m.plate_id.clone()))
        .unwrap_or_else(|| "plate".into());
    let wt = match wt {
        Some(w) => {
            let hits: HitList = analyze(&design, &w.pool_values, config)?;
            Some((w.pool_values, hits))
        }
        None => None,
    };
    let mutant = match mutant {
        Some(m) => Some(analyze(&design, &m.pool_values, config)?),
        None => None,
    };
    Ok(PlateAnalysis {
        plate_id,
        design,
        wt,
        mutant,
    })
}

fn report(a: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.manifest)?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    manifest.analysis.validate()?;
    let base = a.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let secondary = match &manifest.secondary {
        Some(s) => Some(secondary_criterion(
            &s.rule,
            s.sigma_mode.parse()?,
            manifest.analysis.effect_sign,
        )?),
        None => None,
    };
    let run = || -> Result<Vec<PlateAnalysis>> {
        manifest
            .plates
            .par_iter()
            .map(|p| plate_analysis(&base, p, &manifest.analysis, manifest.median_center))
            .collect()
    };
    let plates = match threads_from_env()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let report = report_campaign(&plates, secondary.as_ref())?;
    write_output(&a.output, &json_text(&report)?)
}
