use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format_float;
use crate::error::{Error, Result};
use crate::regression::LassoPath;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub lambda: f64,
    pub compound_id: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub rank: usize,
    pub compound_id: String,
    /// Coefficient at the smallest λ.
    pub coefficient: f64,
}

/// Long-format coefficient profile plus the top-`m` compounds by magnitude at
/// the smallest λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileExport {
    pub rows: Vec<ProfileRow>,
    pub annotations: Vec<Annotation>,
}

impl ProfileExport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,compound_id,coefficient\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{}\n",
                format_float(r.lambda),
                r.compound_id,
                format_float(r.coefficient)
            ));
        }
        s
    }

    pub fn annotations_csv(&self) -> String {
        let mut s = String::from("rank,compound_id,coefficient\n");
        for a in &self.annotations {
            s.push_str(&format!("{},{},{}\n", a.rank, a.compound_id, format_float(a.coefficient)));
        }
        s
    }
}

pub fn profile_export<F: Scalar>(path: &LassoPath<F>, compound_ids: &[String], m: usize) -> Result<ProfileExport> {
    let k = compound_ids.len();
    if path.coefficients.iter().any(|c| c.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "path coefficients do not match {k} compound ids"
        )));
    }
    if m > k {
        return Err(Error::InvalidInput(format!("cannot annotate {m} of {k} compounds")));
    }
    if path.is_empty() {
        return Err(Error::InvalidInput("empty path".into()));
    }
    let lambdas = path.lambdas();
    let mut rows = Vec::with_capacity(lambdas.len() * k);
    for (lambda, coefs) in lambdas.iter().zip(&path.coefficients) {
        for (id, c) in compound_ids.iter().zip(coefs) {
            rows.push(ProfileRow {
                lambda: lambda.as_f64(),
                compound_id: id.clone(),
                coefficient: c.as_f64(),
            });
        }
    }
    let last = path.at_smallest_lambda();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| last[b].abs().partial_cmp(&last[a].abs()).expect("finite").then(a.cmp(&b)));
    let annotations = order
        .into_iter()
        .take(m)
        .enumerate()
        .map(|(r, j)| Annotation {
            rank: r + 1,
            compound_id: compound_ids[j].clone(),
            coefficient: last[j].as_f64(),
        })
        .collect();
    Ok(ProfileExport { rows, annotations })
}

/// Writes the profile CSV and, next to it, `<stem>.annotations.csv`.
pub fn emit_profile<F: Scalar>(
    path: &LassoPath<F>,
    compound_ids: &[String],
    m: usize,
    out: &Path,
) -> Result<ProfileExport> {
    let export = profile_export(path, compound_ids, m)?;
    std::fs::write(out, export.to_csv())?;
    std::fs::write(annotations_path(out), export.annotations_csv())?;
    Ok(export)
}

pub(crate) fn annotations_path(out: &Path) -> std::path::PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.annotations.csv"))
}

/// Reads a profile CSV written by [`emit_profile`].
pub fn read_profile<R: Read>(reader: R) -> Result<Vec<ProfileRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {line}: bad number in column {}", i + 1)))
        };
        rows.push(ProfileRow {
            lambda: num(0)?,
            compound_id: rec.get(1).unwrap_or("").to_string(),
            coefficient: num(2)?,
        });
    }
    Ok(rows)
}

pub fn load_profile(path: &Path) -> Result<Vec<ProfileRow>> {
    read_profile(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{center_and_scale, lasso_path, LambdaGrid};
    use crate::ColMatrix;

    fn path() -> LassoPath<f64> {
        let x = ColMatrix::from_rows(&[
            vec![1.0, -1.0, 1.0],
            vec![-1.0, 1.0, 1.0],
            vec![1.0, 1.0, -1.0],
            vec![-1.0, -1.0, -1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let y = [2.0, -1.0, 0.7, -2.2, 1.9];
        let data = center_and_scale(&x, &y).unwrap();
        lasso_path(&data, &LambdaGrid::for_data(&data), false).unwrap()
    }

    #[test]
    fn export_round_trips() {
        let p = path();
        let ids = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        let e = profile_export(&p, &ids, 2).unwrap();
        assert_eq!(e.rows.len(), p.len() * 3);
        let back = read_profile(e.to_csv().as_bytes()).unwrap();
        assert_eq!(back, e.rows);
        let last = p.at_smallest_lambda();
        assert!(last[0].abs() >= last[1].abs() || e.annotations[0].compound_id != "B");
        assert!(e.annotations[0].coefficient.abs() >= e.annotations[1].coefficient.abs());
    }

    #[test]
    fn zero_and_too_many_annotations() {
        let p = path();
        let ids = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        let e = profile_export(&p, &ids, 0).unwrap();
        assert!(e.annotations.is_empty());
        assert_eq!(e.rows.len(), p.len() * 3);
        assert!(profile_export(&p, &ids, 4).is_err());
    }
}
