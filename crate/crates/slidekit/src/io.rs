//! Design, matrix, and response file formats.
//!
//! A design is stored as two sibling files: `<name>.csv` holds the planning
//! matrix (header row of factor names, body of symbolic level labels) and
//! `<name>.json` holds the factor specs and sliding tables. Numbers are
//! serialized as shortest decimal text that parses back to the identical
//! float, so a save/load round trip reproduces the design exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coding::ModelMatrix;
use crate::design::{FactorSpec, PlanningMatrix, SlidingDesign, SlidingSpec};
use crate::error::{Error, Result};
use crate::region::Region;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DesignMeta {
    runs: usize,
    factors: Vec<FactorSpec>,
    #[serde(default)]
    sliding: Vec<SlidingSpec>,
}

/// Strip a trailing `.csv`/`.json` so either sibling (or the bare stem) can be
/// passed on the command line.
fn design_stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

/// Write `<stem>.csv` and `<stem>.json`.
pub fn save_design(design: &SlidingDesign, path: &Path) -> Result<()> {
    let stem = design_stem(path);
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");

    let mut writer = csv::Writer::from_path(&csv_path)?;
    let names: Vec<&str> = design.factors.iter().map(|f| f.name.as_str()).collect();
    writer.write_record(&names)?;
    for run in 0..design.runs() {
        let row: Vec<&str> = design
            .factors
            .iter()
            .map(|f| design.planning.columns[&f.name][run].as_str())
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;

    let meta = DesignMeta {
        runs: design.runs(),
        factors: design.factors.clone(),
        sliding: design.sliding.clone(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Load a design from `<stem>.csv` + `<stem>.json`.
pub fn load_design(path: &Path) -> Result<SlidingDesign> {
    let stem = design_stem(path);
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");

    let meta: DesignMeta = serde_json::from_str(&fs::read_to_string(&json_path)?)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&csv_path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate factor column name {h:?}"),
            });
        }
    }

    let mut columns: std::collections::BTreeMap<String, Vec<String>> =
        headers.iter().map(|h| (h.clone(), Vec::new())).collect();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line: i + 2,
                message: format!(
                    "row has {} fields but the header declares {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        for (h, field) in headers.iter().zip(record.iter()) {
            columns.get_mut(h).unwrap().push(field.trim().to_string());
        }
        rows += 1;
    }
    if rows != meta.runs {
        return Err(Error::Validation(format!(
            "CSV has {rows} data rows but metadata declares {}",
            meta.runs
        )));
    }

    SlidingDesign::resolve(
        PlanningMatrix::new(rows, columns),
        meta.factors,
        meta.sliding,
    )
}

/// Write a model matrix as CSV with term labels in the header, full precision.
pub fn write_matrix_csv<W: std::io::Write>(matrix: &ModelMatrix, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(&matrix.terms)?;
    let values = matrix.values();
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{}", values[(i, j)]))
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a single-column response CSV (header row, one value per line).
pub fn read_response_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        let field = record.get(0).ok_or_else(|| Error::Parse {
            line: i + 2,
            message: "empty row".into(),
        })?;
        let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
            line: i + 2,
            message: format!("{field:?} is not a number"),
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Validation("response file has no data rows".into()));
    }
    Ok(values)
}

/// Write the region polygon vertices as plot-ready CSV.
pub fn write_polygon_csv<W: std::io::Write>(region: &Region, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        format!("x_{}", region.x_axis),
        format!("x_{}", region.y_axis),
    ])?;
    for v in region.vertices() {
        writer.write_record([format!("{}", v[0]), format!("{}", v[1])])?;
    }
    writer.flush()?;
    Ok(())
}
