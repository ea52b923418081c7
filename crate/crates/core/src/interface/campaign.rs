use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::Result;
use crate::screening::{dual_assay_hits, CompoundDiagnostics, EffectSign, HitList};
use crate::secondary::{secondary_filter, SecondaryCriterion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondarySummary {
    pub criterion: String,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

/// Result of analyzing one plate (one or two assays).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub method: String,
    pub effect_sign: EffectSign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Primary hits in the first (wild-type) assay.
    pub hits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutant_hits: Option<Vec<String>>,
    /// First-assay hits not flagged in the second assay.
    pub candidates: Vec<String>,
    pub pseudo_hits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<SecondarySummary>,
    pub per_compound: BTreeMap<String, CompoundDiagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl AnalysisReport {
    /// Final list: secondary survivors when a criterion was applied.
    pub fn final_hits(&self) -> &[String] {
        self.secondary.as_ref().map_or(&self.candidates, |s| &s.after)
    }
}

/// Combines the assays of one plate and applies the optional secondary rule
/// to the candidates, using the first assay's readings.
pub fn analysis_report(
    design: &Design,
    wt_values: &[f64],
    wt: &HitList,
    mutant: Option<&HitList>,
    secondary: Option<&SecondaryCriterion>,
) -> Result<AnalysisReport> {
    wt.check_design(design)?;
    let (candidates, pseudo_hits, mutant_hits) = match mutant {
        Some(m) => {
            m.check_design(design)?;
            let d = dual_assay_hits(wt, m)?;
            (d.candidates, d.pseudo_hits, Some(m.hits.clone()))
        }
        None => (wt.clone(), Vec::new(), None),
    };
    let mut per_compound = wt.per_compound.clone();
    let mut diagnostics = wt.diagnostics.clone();
    if let Some(m) = mutant {
        diagnostics.extend(m.diagnostics.iter().map(|d| format!("mutant: {d}")));
    }
    let secondary = match secondary {
        Some(c) => {
            let filtered = secondary_filter(design, wt_values, &candidates, c)?;
            for (id, diag) in &filtered.per_compound {
                per_compound.insert(id.clone(), diag.clone());
            }
            diagnostics.extend(filtered.diagnostics.iter().filter(|d| d.contains("skipped")).cloned());
            Some(SecondarySummary {
                criterion: c.to_string(),
                before: candidates.hits.clone(),
                after: filtered.hits,
            })
        }
        None => None,
    };
    Ok(AnalysisReport {
        method: wt.method_tag.clone(),
        effect_sign: wt.effect_sign,
        lambda: wt.lambda,
        hits: wt.hits.clone(),
        mutant_hits,
        candidates: candidates.hits,
        pseudo_hits,
        secondary,
        per_compound,
        diagnostics,
    })
}

/// One plate's inputs to a campaign report.
#[derive(Debug, Clone)]
pub struct PlateAnalysis {
    pub plate_id: String,
    pub design: Design,
    pub wt: Option<(Vec<f64>, HitList)>,
    pub mutant: Option<HitList>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateReport {
    pub plate_id: String,
    pub compounds: usize,
    pub wt_hits: Vec<String>,
    pub mut_hits: Vec<String>,
    pub candidates: Vec<String>,
    pub pseudo_hits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_hits: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignTotals {
    pub plates: usize,
    pub plates_skipped: usize,
    pub compounds_studied: usize,
    pub wt_hits: usize,
    pub candidates: usize,
    pub pseudo_hits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_hits: Option<usize>,
    /// Candidates per compound studied.
    pub hit_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_hit_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub plates: Vec<PlateReport>,
    pub totals: CampaignTotals,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Aggregates per-plate analyses; plates missing an assay are skipped with a
/// diagnostic.
pub fn report_campaign(plates: &[PlateAnalysis], secondary: Option<&SecondaryCriterion>) -> Result<CampaignReport> {
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    let mut skipped = 0;
    for p in plates {
        let (Some((values, wt)), Some(mutant)) = (&p.wt, &p.mutant) else {
            let missing = if p.wt.is_none() { "WT" } else { "MUT" };
            diagnostics.push(format!("plate {}: {missing} assay missing; skipped", p.plate_id));
            skipped += 1;
            continue;
        };
        let r = analysis_report(&p.design, values, wt, Some(mutant), secondary)?;
        diagnostics.extend(r.diagnostics.iter().map(|d| format!("plate {}: {d}", p.plate_id)));
        reports.push(PlateReport {
            plate_id: p.plate_id.clone(),
            compounds: p.design.k(),
            wt_hits: r.hits.clone(),
            mut_hits: mutant.hits.clone(),
            candidates: r.candidates.clone(),
            pseudo_hits: r.pseudo_hits.clone(),
            secondary_hits: r.secondary.map(|s| s.after),
        });
    }
    let studied: usize = reports.iter().map(|r| r.compounds).sum();
    let candidates: usize = reports.iter().map(|r| r.candidates.len()).sum();
    let secondary_hits = secondary.map(|_| {
        reports
            .iter()
            .map(|r| r.secondary_hits.as_ref().map_or(0, Vec::len))
            .sum::<usize>()
    });
    let rate = |count: usize| if studied == 0 { 0.0 } else { count as f64 / studied as f64 };
    let totals = CampaignTotals {
        plates: reports.len(),
        plates_skipped: skipped,
        compounds_studied: studied,
        wt_hits: reports.iter().map(|r| r.wt_hits.len()).sum(),
        candidates,
        pseudo_hits: reports.iter().map(|r| r.pseudo_hits.len()).sum(),
        secondary_hits,
        hit_rate: rate(candidates),
        secondary_hit_rate: secondary_hits.map(rate),
    };
    Ok(CampaignReport {
        plates: reports,
        totals,
        diagnostics,
    })
}
