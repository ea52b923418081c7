use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::designs::Design;
use crate::error::{Error, Result};

/// Reads `well_id,<compound ids...>` followed by one 0/1 row per well.
pub fn read_design<R: Read>(reader: R) -> Result<Design> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("design file is empty".into()))??;
    if header.len() < 2 {
        return Err(Error::Parse("design header needs well_id and at least one compound".into()));
    }
    let compound_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let k = compound_ids.len();
    let mut well_ids = Vec::new();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != k + 1 {
            return Err(Error::Parse(format!(
                "line {line}: {} fields, expected {} (ragged row)",
                rec.len(),
                k + 1
            )));
        }
        let well = rec[0].to_string();
        let mut row = Vec::with_capacity(k);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            match cell {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(Error::NonBinary {
                        row: well,
                        column: compound_ids[j].clone(),
                        value: other.to_string(),
                    })
                }
            }
        }
        well_ids.push(well);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("design file has no wells".into()));
    }
    Design::with_ids(&rows, well_ids, compound_ids, None)
}

pub fn write_design<W: Write>(design: &Design, mut w: W) -> Result<()> {
    let mut text = String::with_capacity(design.n() * (2 * design.k() + 8));
    text.push_str("well_id");
    for id in design.compound_ids() {
        text.push(',');
        text.push_str(id);
    }
    text.push('\n');
    for (i, id) in design.well_ids().iter().enumerate() {
        text.push_str(id);
        for &v in design.row(i) {
            text.push(',');
            text.push(if v == 1 { '1' } else { '0' });
        }
        text.push('\n');
    }
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub fn load_design(path: &Path) -> Result<Design> {
    read_design(File::open(path)?)
}

pub fn save_design(design: &Design, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    write_design(design, &mut f)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{construct, DesignMethod, DesignSpec};

    #[test]
    fn round_trip() {
        let d = construct(&DesignSpec::new(6, 9, 3, DesignMethod::Random).with_seed(4)).unwrap();
        let mut buf = Vec::new();
        write_design(&d, &mut buf).unwrap();
        let back = read_design(&buf[..]).unwrap();
        assert_eq!(back.rows(), d.rows());
        assert_eq!(back.well_ids(), d.well_ids());
        assert_eq!(back.compound_ids(), d.compound_ids());
        let mut again = Vec::new();
        write_design(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_bad_files() {
        let e = read_design("well_id,A,B\nW1,1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(&e, Error::NonBinary { row, column, .. } if row == "W1" && column == "B"));
        let e = read_design("well_id,A,B\nW1,1\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("ragged"), "{e}");
        assert!(read_design("well_id,A,A\nW1,1,0\n".as_bytes()).is_err());
        assert!(read_design("well_id,A\nW1,1\nW1,0\n".as_bytes()).is_err());
        assert!(read_design("".as_bytes()).is_err());
    }
}
