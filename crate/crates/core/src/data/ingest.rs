use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DataError, Dataset, DatasetStats, FeatureSchema, RawDataset, RawRow, TARGET_COLUMN};

/// The four processed site files of the UCI heart-disease collection, in
/// concatenation order (Cleveland, Hungary, Switzerland, VA Long Beach).
pub const UCI_SITE_FILES: [&str; 4] = [
    "processed.cleveland.data",
    "processed.hungarian.data",
    "processed.switzerland.data",
    "processed.va.data",
];

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

fn looks_like_header(fields: &[&str]) -> bool {
    fields.iter().any(|f| !is_missing(f) && f.parse::<f64>().is_err())
}

fn check_header(fields: &[&str], schema: &FeatureSchema) -> Result<(), DataError> {
    let expected: Vec<&str> = schema.names().chain(std::iter::once(TARGET_COLUMN)).collect();
    let matches = fields.len() == expected.len()
        && fields.iter().zip(&expected).all(|(got, want)| got.eq_ignore_ascii_case(want));
    if matches {
        Ok(())
    } else {
        Err(DataError::Parse {
            line: 1,
            message: format!("header {fields:?} does not match expected columns {expected:?}"),
        })
    }
}

fn parse_rows(text: &str, schema: &FeatureSchema, rows: &mut Vec<RawRow>) -> Result<(), DataError> {
    let arity = schema.len() + 1;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && looks_like_header(&fields) {
            check_header(&fields, schema)?;
            continue;
        }
        if fields.len() != arity {
            return Err(DataError::Parse {
                line: line_no,
                message: format!("expected {arity} fields, found {}", fields.len()),
            });
        }
        let mut cells = Vec::with_capacity(schema.len());
        for (col, field) in fields[..schema.len()].iter().enumerate() {
            if is_missing(field) {
                cells.push(None);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| DataError::Parse {
                line: line_no,
                message: format!("column `{}`: `{field}` is not numeric", schema.features[col].name),
            })?;
            if !value.is_finite() {
                return Err(DataError::Parse {
                    line: line_no,
                    message: format!("column `{}`: non-finite value", schema.features[col].name),
                });
            }
            cells.push(Some(value));
        }
        let raw_target = fields[schema.len()];
        let target = raw_target
            .parse::<f64>()
            .ok()
            .filter(|t| t.fract() == 0.0 && (0.0..=255.0).contains(t))
            .ok_or_else(|| DataError::Parse {
                line: line_no,
                message: format!("target `{raw_target}` is not a non-negative integer"),
            })? as u8;
        rows.push(RawRow { cells, target });
    }
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

/// Reads a comma-separated file with the schema's columns followed by the
/// target. A header row is optional; `?` and empty cells are missing.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawDataset, DataError> {
    let text = read_to_string(path.as_ref())?;
    let mut rows = Vec::new();
    parse_rows(&text, schema, &mut rows)?;
    Ok(RawDataset { schema: schema.clone(), rows })
}

/// Concatenates the four UCI processed site files found in `dir`.
pub fn load_uci_dir(dir: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawDataset, DataError> {
    let mut rows = Vec::new();
    for file in UCI_SITE_FILES {
        let path = dir.as_ref().join(file);
        let text = read_to_string(&path)?;
        parse_rows(&text, schema, &mut rows).map_err(|e| match e {
            DataError::Parse { line, message } => DataError::Parse { line, message: format!("{file}: {message}") },
            other => other,
        })?;
    }
    Ok(RawDataset { schema: schema.clone(), rows })
}

/// Loads a directory of UCI site files or a single combined CSV.
pub fn load_path(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawDataset, DataError> {
    if path.as_ref().is_dir() {
        load_uci_dir(path, schema)
    } else {
        load_csv(path, schema)
    }
}

/// Collapses the 0-4 diagnosis code to 0 (no narrowing over 50%) or 1.
pub fn binarize_target(raw: RawDataset) -> Result<RawDataset, DataError> {
    if let Some((i, row)) = raw.rows.iter().enumerate().find(|(_, r)| r.target > 4) {
        return Err(DataError::Validation(format!("row {i}: target {} outside 0-4", row.target)));
    }
    let rows = raw
        .rows
        .into_iter()
        .map(|r| RawRow { target: u8::from(r.target > 0), ..r })
        .collect();
    Ok(RawDataset { schema: raw.schema, rows })
}

/// Writes a complete dataset as CSV (schema columns plus `num`).
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io { path: path.display().to_string(), source };
    let mut out = String::new();
    let header: Vec<&str> = ds.schema.names().chain(std::iter::once(TARGET_COLUMN)).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (row, label) in ds.matrix.iter().zip(&ds.labels) {
        for v in row {
            out.push_str(&format_value(*v));
            out.push(',');
        }
        out.push_str(&label.to_string());
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)
}

fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        v.to_string()
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Missingness and sex-stratified prevalence. Any target above 0 counts as
/// disease; rows without a sex value are left out of the sex ratios.
pub fn stats(raw: &RawDataset) -> DatasetStats {
    let sex_col = raw.schema.index_of("sex");
    let mut male = 0;
    let mut female = 0;
    let mut male_pos = 0;
    let mut female_pos = 0;
    for row in &raw.rows {
        let positive = row.target > 0;
        match sex_col.and_then(|c| row.cells[c]) {
            Some(s) if s == 1.0 => {
                male += 1;
                male_pos += usize::from(positive);
            }
            Some(s) if s == 0.0 => {
                female += 1;
                female_pos += usize::from(positive);
            }
            _ => {}
        }
    }
    DatasetStats {
        n_total: raw.n_rows(),
        n_with_missing: raw.rows.iter().filter(|r| r.has_missing()).count(),
        male_fraction: ratio(male, raw.n_rows()),
        female_fraction: ratio(female, raw.n_rows()),
        prevalence_male: ratio(male_pos, male),
        prevalence_female: ratio(female_pos, female),
    }
}
