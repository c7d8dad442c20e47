//! Long-format CSV: one row per observation, `subject_id,time,value,response`.

use std::collections::HashMap;
use std::path::Path;

use fsir_core::{LongitudinalDataset, Subject};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 4] = ["subject_id", "time", "value", "response"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongRecord {
    pub subject_id: String,
    pub time: f64,
    pub value: f64,
    pub response: f64,
}

/// Reads and validates a long-format file.
///
/// Subjects keep the order of their first row; rows of a subject are sorted
/// by time (stably, so tied times keep file order).
pub fn ingest_csv(path: &Path, interval: (f64, f64)) -> Result<LongitudinalDataset> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    read_long_format(file, interval)
}

pub fn read_long_format(reader: impl std::io::Read, interval: (f64, f64)) -> Result<LongitudinalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_error(1, e))?.clone();
    if header.iter().ne(HEADER) {
        return Err(CliError::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let (a, b) = interval;
    let mut order: HashMap<String, usize> = HashMap::new();
    let mut subjects: Vec<(Subject, Vec<(f64, f64)>)> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| parse_error(e.position().map_or(0, |p| p.line()), e))?;
        let line = row.position().map_or(0, |p| p.line());
        let rec: LongRecord = row.deserialize(Some(&header)).map_err(|e| parse_error(line, e))?;
        if !(rec.time.is_finite() && rec.value.is_finite() && rec.response.is_finite()) {
            return Err(CliError::Parse {
                line,
                message: "time, value and response must be finite".into(),
            });
        }
        if rec.time < a || rec.time > b {
            return Err(CliError::OutOfInterval {
                subject: rec.subject_id,
                time: rec.time,
                line,
                interval,
            });
        }
        let slot = *order.entry(rec.subject_id.clone()).or_insert_with(|| {
            subjects.push((
                Subject {
                    id: rec.subject_id.clone(),
                    times: Vec::new(),
                    values: Vec::new(),
                    response: rec.response,
                },
                Vec::new(),
            ));
            subjects.len() - 1
        });
        let (subject, obs) = &mut subjects[slot];
        if subject.response.to_bits() != rec.response.to_bits() {
            return Err(CliError::InconsistentResponse {
                subject: rec.subject_id,
                first: subject.response,
                second: rec.response,
                line,
            });
        }
        obs.push((rec.time, rec.value));
    }

    let subjects = subjects
        .into_iter()
        .map(|(mut s, mut obs)| {
            obs.sort_by(|x, y| x.0.total_cmp(&y.0));
            (s.times, s.values) = obs.into_iter().unzip();
            s
        })
        .collect();
    Ok(LongitudinalDataset::new(subjects, interval)?)
}

fn parse_error(line: u64, e: impl std::fmt::Display) -> CliError {
    CliError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes a dataset in long format. Values use the shortest representation
/// that parses back to the same binary64, so ingesting the file reproduces
/// the dataset exactly.
pub fn write_csv(path: &Path, data: &LongitudinalDataset) -> Result<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(HEADER).map_err(csv_err)?;
    for s in data.subjects() {
        for (t, x) in s.times.iter().zip(&s.values) {
            w.serialize(LongRecord {
                subject_id: s.id.clone(),
                time: *t,
                value: *x,
                response: s.response,
            })
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(CliError::io(path))
}
