//! The UCI Nursery data set: 12960 applications, eight categorical
//! attributes and a five-valued recommendation.
//!
//! Five attributes are kept, in the order (form, children, finance,
//! housing, health), and the three majority classes become actions:
//! not_recom → 0, priority → 1, spec_prior → 2. Rows labeled recommend or
//! very_recom are dropped.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::environment::{rng_stream, LabeledRow};
use crate::error::{Error, Result};
use crate::feature_space::{FeatureSpace, StateVector};

/// Column names and their values, in the order of the UCI documentation.
pub const COLUMNS: [(&str, &[&str]); 9] = [
    ("parents", &["usual", "pretentious", "great_pret"]),
    ("has_nurs", &["proper", "less_proper", "improper", "critical", "very_crit"]),
    ("form", &["complete", "completed", "incomplete", "foster"]),
    ("children", &["1", "2", "3", "more"]),
    ("housing", &["convenient", "less_conv", "critical"]),
    ("finance", &["convenient", "inconv"]),
    ("social", &["nonprob", "slightly_prob", "problematic"]),
    ("health", &["recommended", "priority", "not_recom"]),
    ("class", &["not_recom", "recommend", "very_recom", "priority", "spec_prior"]),
];

/// Columns kept as features, in feature order.
pub const KEPT_COLUMNS: [usize; 5] = [2, 3, 5, 4, 7];

/// Kept classes in action order.
pub const CLASSES: [&str; 3] = ["not_recom", "priority", "spec_prior"];

/// Classes that are read but not used.
pub const DROPPED_CLASSES: [&str; 2] = ["recommend", "very_recom"];

pub const TOTAL_ROWS: usize = 12_960;
pub const RETAINED_ROWS: usize = 12_630;
pub const TRAIN_ROWS: usize = 10_000;
pub const VALIDATION_ROWS: usize = 2_630;

/// Random stream of the train/validation split.
pub const SPLIT_STREAM: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NurseryRecord {
    /// Value indices of (form, children, finance, housing, health).
    pub states: [usize; 5],
    pub label: usize,
}

impl NurseryRecord {
    pub fn to_labeled(&self) -> LabeledRow {
        LabeledRow {
            state: StateVector::new(self.states.to_vec()),
            label: self.label,
        }
    }
}

/// Feature space of the kept attributes.
pub fn nursery_space() -> FeatureSpace {
    FeatureSpace::new(KEPT_COLUMNS.iter().map(|&c| COLUMNS[c].1.len()).collect()).expect("non-empty alphabets")
}

/// Parsed file with bookkeeping about what was dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NurseryData {
    pub records: Vec<NurseryRecord>,
    /// Non-blank lines read.
    pub total_rows: usize,
    /// Dropped rows per class name.
    pub dropped: BTreeMap<String, usize>,
}

/// Parses `nursery.data`, keeping the retained rows only.
pub fn parse_nursery(reader: impl BufRead) -> Result<Vec<NurseryRecord>> {
    Ok(parse_nursery_counted(reader)?.records)
}

pub fn parse_nursery_counted(reader: impl BufRead) -> Result<NurseryData> {
    let mut data = NurseryData {
        records: Vec::new(),
        total_rows: 0,
        dropped: BTreeMap::new(),
    };
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        data.total_rows += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != COLUMNS.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", COLUMNS.len(), fields.len()),
            });
        }
        let mut values = [0usize; 9];
        for (c, (&field, (name, allowed))) in fields.iter().zip(COLUMNS.iter()).enumerate() {
            values[c] = allowed.iter().position(|&v| v == field).ok_or_else(|| Error::UnknownCategory {
                line: line_no,
                column: name,
                value: field.to_string(),
            })?;
        }
        let class = fields[8];
        match CLASSES.iter().position(|&c| c == class) {
            Some(label) => data.records.push(NurseryRecord {
                states: KEPT_COLUMNS.map(|c| values[c]),
                label,
            }),
            None => *data.dropped.entry(class.to_string()).or_insert(0) += 1,
        }
    }
    Ok(data)
}

/// Writes records as UCI lines. Columns that are not kept carry their
/// first documented value.
pub fn serialize_nursery(records: &[NurseryRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        let mut fields: Vec<&str> = COLUMNS.iter().map(|(_, values)| values[0]).collect();
        for (f, &c) in KEPT_COLUMNS.iter().enumerate() {
            fields[c] = COLUMNS[c].1[r.states[f]];
        }
        fields[8] = CLASSES[r.label];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes the reduced integer encoding, one row per record with a header.
pub fn write_reduced_csv(records: &[NurseryRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = KEPT_COLUMNS.iter().map(|&c| COLUMNS[c].0).collect();
    header.push("label");
    let wrap = |e: csv::Error| Error::Invalid(format!("writing reduced csv: {e}"));
    w.write_record(&header).map_err(wrap)?;
    for r in records {
        let mut row: Vec<String> = r.states.iter().map(usize::to_string).collect();
        row.push(r.label.to_string());
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing reduced csv: {e}")))?;
    Ok(())
}

/// Seeded shuffle, then the first 10000 rows train and the next 2630
/// validate.
pub fn split_train_validation(records: &[NurseryRecord], seed: u64) -> Result<(Vec<NurseryRecord>, Vec<NurseryRecord>)> {
    let needed = TRAIN_ROWS + VALIDATION_ROWS;
    if records.len() < needed {
        return Err(Error::InsufficientRows {
            needed,
            available: records.len(),
        });
    }
    let mut shuffled = records.to_vec();
    shuffled.shuffle(&mut rng_stream(seed, 0, SPLIT_STREAM));
    let validation = shuffled[TRAIN_ROWS..needed].to_vec();
    shuffled.truncate(TRAIN_ROWS);
    Ok((shuffled, validation))
}

pub fn to_labeled_rows(records: &[NurseryRecord]) -> Arc<Vec<LabeledRow>> {
    Arc::new(records.iter().map(NurseryRecord::to_labeled).collect())
}
