use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{write_atomic, Dataset};
use crate::error::{Error, Result};
use crate::features::{CarcinomaClass, MultifractalSample, PARAMETER_NAMES, RAW_DIM};

pub const CSV_HEADER: &str = "d_max,q,alpha_min,f_alpha_min,alpha_max,f_alpha_max,label";

#[derive(Clone, Copy, PartialEq)]
enum LabelColumn {
    Required,
    Optional,
}

fn header_matches(record: &csv::StringRecord, with_label: bool) -> bool {
    let expected = PARAMETER_NAMES
        .iter()
        .copied()
        .chain(with_label.then_some("label"));
    record.len() == RAW_DIM + usize::from(with_label)
        && record
            .iter()
            .zip(expected)
            .all(|(got, want)| got.eq_ignore_ascii_case(want))
}

fn parse_rows<R: Read>(reader: R, labels: LabelColumn) -> Result<Vec<MultifractalSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let missing = || Error::MissingHeader {
        expected: CSV_HEADER.to_string(),
    };
    let header = records.next().ok_or_else(missing)?.map_err(|_| missing())?;
    let with_label = if header_matches(&header, true) {
        true
    } else if labels == LabelColumn::Optional && header_matches(&header, false) {
        false
    } else {
        return Err(missing());
    };
    let width = RAW_DIM + usize::from(with_label);

    let mut samples = Vec::new();
    for record in records {
        let record = record.map_err(|e| Error::BadRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(Error::BadRow {
                line,
                reason: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let mut params = [0.0; RAW_DIM];
        for (i, slot) in params.iter_mut().enumerate() {
            let field = &record[i];
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadRow {
                    line,
                    reason: format!("{} = `{field}` is not a finite number", PARAMETER_NAMES[i]),
                })?;
        }
        let label = if with_label {
            let field = &record[RAW_DIM];
            let n: i64 = field.parse().map_err(|_| Error::BadRow {
                line,
                reason: format!("label `{field}` is not an integer"),
            })?;
            let class = u8::try_from(n)
                .ok()
                .and_then(CarcinomaClass::from_label)
                .ok_or(Error::UnknownLabel { line })?;
            Some(class)
        } else {
            None
        };
        samples.push(MultifractalSample::from_params(params, label));
    }
    Ok(samples)
}

/// Reads a labelled dataset; the header must be [`CSV_HEADER`]
/// (case-insensitive).
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let samples = parse_rows(file, LabelColumn::Required)?;
    Dataset::new(samples, path.display().to_string())
}

pub fn load_csv_from_reader<R: Read>(reader: R, provenance: &str) -> Result<Dataset> {
    Dataset::new(parse_rows(reader, LabelColumn::Required)?, provenance)
}

/// Like [`load_csv`], but the label column may be absent.
pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<MultifractalSample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_rows(file, LabelColumn::Optional)
}

pub fn read_samples_from_reader<R: Read>(reader: R) -> Result<Vec<MultifractalSample>> {
    parse_rows(reader, LabelColumn::Optional)
}

/// Renders the dataset with shortest round-trip float formatting.
pub fn write_csv_to(dataset: &Dataset) -> String {
    let mut out = String::with_capacity(64 * (dataset.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in dataset.samples() {
        for v in s.params() {
            out.push_str(&v.to_string());
            out.push(',');
        }
        let label = s.label.expect("dataset samples are labelled").label();
        out.push_str(&label.to_string());
        out.push('\n');
    }
    out
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), write_csv_to(dataset).as_bytes())
}
