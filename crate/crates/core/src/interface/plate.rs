use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assay {
    #[serde(rename = "WT")]
    Wt,
    #[serde(rename = "MUT")]
    Mut,
}

impl FromStr for Assay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WT" | "WILD_TYPE" | "WILDTYPE" => Ok(Assay::Wt),
            "MUT" | "MUTANT" => Ok(Assay::Mut),
            _ => Err(Error::Parse(format!("unknown assay {s:?}; expected WT or MUT"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellRole {
    Pool,
    PositiveControl,
    NegativeControl,
}

impl FromStr for WellRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pool" => Ok(WellRole::Pool),
            "positive_control" | "pos" => Ok(WellRole::PositiveControl),
            "negative_control" | "neg" => Ok(WellRole::NegativeControl),
            _ => Err(Error::Parse(format!("unknown well role {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateWell {
    pub well_id: String,
    pub value: f64,
    pub role: WellRole,
}

/// One assay of one plate. Pool values are aligned to the design rows;
/// controls are kept for reporting only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateReadings {
    pub plate_id: String,
    pub assay: Assay,
    pub pool_values: Vec<f64>,
    pub controls: Vec<PlateWell>,
}

impl PlateReadings {
    fn median(values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            (v[m - 1] + v[m]) / 2.0
        }
    }

    /// Pool and control values shifted so the pool median is zero.
    pub fn median_centered(&self) -> Self {
        let med = Self::median(&self.pool_values);
        let mut out = self.clone();
        for v in &mut out.pool_values {
            *v -= med;
        }
        for c in &mut out.controls {
            c.value -= med;
        }
        out
    }

    pub fn control_values(&self, role: WellRole) -> Vec<f64> {
        self.controls.iter().filter(|c| c.role == role).map(|c| c.value).collect()
    }
}

/// Parses `well_id,value,role,assay` rows for a single assay.
pub fn read_plate<R: Read>(reader: R, plate_id: &str, design: &Design) -> Result<PlateReadings> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse(format!("plate file lacks a {name:?} column")))
    };
    let (c_id, c_val, c_role, c_assay) = (col("well_id")?, col("value")?, col("role")?, col("assay")?);
    let row_of: HashMap<&str, usize> = design
        .well_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut pool_values: Vec<Option<f64>> = vec![None; design.n()];
    let mut controls = Vec::new();
    let mut seen = HashSet::new();
    let mut assay: Option<Assay> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(c_id).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::Parse(format!("line {line}: empty well_id")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Parse(format!("line {line}: duplicate well_id {id}")));
        }
        let raw = rec.get(c_val).unwrap_or("");
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: value {raw:?} is not numeric")))?;
        if !value.is_finite() {
            return Err(Error::Parse(format!("line {line}: value {raw:?} is not finite")));
        }
        let role: WellRole = rec
            .get(c_role)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::Parse(format!("line {line}: {e}")))?;
        let a: Assay = rec
            .get(c_assay)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::Parse(format!("line {line}: {e}")))?;
        match assay {
            None => assay = Some(a),
            Some(prev) if prev != a => {
                return Err(Error::Parse(format!(
                    "line {line}: assay {a:?} differs from {prev:?}; use one file per assay"
                )))
            }
            _ => {}
        }
        match role {
            WellRole::Pool => {
                let i = *row_of
                    .get(id.as_str())
                    .ok_or_else(|| Error::InvalidInput(format!("line {line}: pool well {id} is not in the design")))?;
                pool_values[i] = Some(value);
            }
            _ => controls.push(PlateWell {
                well_id: id,
                value,
                role,
            }),
        }
    }
    let missing: Vec<&str> = pool_values
        .iter()
        .zip(design.well_ids())
        .filter(|(v, _)| v.is_none())
        .map(|(_, id)| id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "plate {plate_id} lacks readings for design wells: {}",
            missing.join(", ")
        )));
    }
    Ok(PlateReadings {
        plate_id: plate_id.to_string(),
        assay: assay.ok_or_else(|| Error::Parse("plate file has no rows".into()))?,
        pool_values: pool_values.into_iter().map(|v| v.expect("checked")).collect(),
        controls,
    })
}

/// Reads a plate file; the plate id is the file stem.
pub fn load_plate(path: &Path, design: &Design) -> Result<PlateReadings> {
    let plate_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plate".into());
    read_plate(File::open(path)?, &plate_id, design)
}
