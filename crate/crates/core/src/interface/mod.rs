//! File formats and report assembly: design and plate CSVs, lasso profile
//! exports and per-campaign hit summaries.

mod campaign;
mod design_io;
mod plate;
mod profile;

pub use campaign::{
    analysis_report, report_campaign, AnalysisReport, CampaignReport, CampaignTotals, PlateAnalysis, PlateReport,
    SecondarySummary,
};
pub use design_io::{load_design, read_design, save_design, write_design};
pub use plate::{load_plate, read_plate, Assay, PlateReadings, PlateWell, WellRole};
pub use profile::{emit_profile, load_profile, profile_export, read_profile, Annotation, ProfileExport, ProfileRow};

/// Shortest text that parses back to the same `f64`; exponent form for very
/// small or large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && v.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Writes `text` to `path`, or to standard output when `path` is `-`.
pub fn write_output(path: &std::path::Path, text: &str) -> crate::Result<()> {
    if path.as_os_str() == "-" {
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}
