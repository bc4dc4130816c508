//! Numeric encoding of enriched records into a dense feature matrix.
//!
//! Column layout: dense scalar columns, then the embedding block, then one
//! ordinal code column per categorical. Categorical dictionaries are built
//! from sorted distinct values (stable across runs) with code 0 reserved for
//! unseen or missing values, and are persisted so prediction-time encoding
//! reuses them.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EnrichedRecord;
use crate::hashing::fnv1a;
use crate::schema::Gender;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    CategoricalCode,
    EmbeddingDim,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Encoding knobs that shape the column layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodePolicy {
    pub embedding_dim: usize,
    /// Encode parliament_number as a categorical code instead of a numeric.
    pub parliament_number_categorical: bool,
}

impl Default for EncodePolicy {
    fn default() -> Self {
        EncodePolicy {
            embedding_dim: 64,
            parliament_number_categorical: false,
        }
    }
}

pub type Dictionaries = BTreeMap<String, BTreeMap<String, u32>>;

/// Dense numeric design matrix with labels, row identities, and the
/// encoding metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// Row-major n_rows x n_cols.
    pub x: Vec<f64>,
    /// Vote-result codes.
    pub y: Vec<u8>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub columns: Vec<ColumnSpec>,
    pub dictionaries: Dictionaries,
    /// (vote_id, member_id) per row.
    pub row_keys: Vec<(String, String)>,
    pub row_dates: Vec<NaiveDate>,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column_spec_hash(&self) -> u64 {
        column_spec_hash(&self.columns)
    }

    /// Matrix restricted to the given row indices.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        let mut x = Vec::with_capacity(indices.len() * self.n_cols);
        let mut y = Vec::with_capacity(indices.len());
        let mut row_keys = Vec::with_capacity(indices.len());
        let mut row_dates = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
            row_keys.push(self.row_keys[i].clone());
            row_dates.push(self.row_dates[i]);
        }
        FeatureMatrix {
            x,
            y,
            n_rows: indices.len(),
            n_cols: self.n_cols,
            columns: self.columns.clone(),
            dictionaries: self.dictionaries.clone(),
            row_keys,
            row_dates,
        }
    }

    /// Decode a categorical code back to its string value.
    pub fn decode(&self, column: &str, code: u32) -> Option<&str> {
        let dict = self.dictionaries.get(column)?;
        dict.iter()
            .find(|(_, &c)| c == code)
            .map(|(v, _)| v.as_str())
    }
}

/// Stable fingerprint of a column layout; models embed it and refuse
/// matrices encoded differently.
pub fn column_spec_hash(columns: &[ColumnSpec]) -> u64 {
    let mut text = String::new();
    for c in columns {
        text.push_str(&c.name);
        text.push('\0');
        text.push_str(match c.kind {
            ColumnKind::Numeric => "numeric",
            ColumnKind::CategoricalCode => "categorical_code",
            ColumnKind::EmbeddingDim => "embedding_dim",
        });
        text.push('\n');
    }
    fnv1a(text.as_bytes())
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("cannot encode an empty record set")]
    EmptyInput,
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: bad feature-matrix artifact: {message}")]
    BadArtifact { path: String, message: String },
}

const DENSE_COLUMNS: [&str; 13] = [
    "total_for",
    "total_for_missing",
    "total_against",
    "total_against_missing",
    "importance_rank",
    "is_in_alliance",
    "is_in_alliance_missing",
    "is_current",
    "reference_count",
    "reference_count_missing",
    "attendee_count",
    "attendee_count_missing",
    "embedding_missing",
];

const CATEGORICAL_COLUMNS: [&str; 6] = [
    "country",
    "party_name",
    "member_name",
    "gender",
    "title",
    "committee_id",
];

fn categorical_value(record: &EnrichedRecord, column: &str) -> String {
    match column {
        "country" => record.country.clone(),
        "party_name" => record.party_name.clone(),
        "member_name" => record.member_name.clone(),
        "gender" => match record.gender {
            Gender::Unknown => String::new(),
            g => g.label().to_string(),
        },
        "title" => record.title.clone().unwrap_or_default(),
        "committee_id" => record.committee_id.clone().unwrap_or_default(),
        "parliament_number" => record.parliament_number.to_string(),
        _ => String::new(),
    }
}

fn build_columns(policy: &EncodePolicy) -> Vec<ColumnSpec> {
    let mut columns = Vec::new();
    if !policy.parliament_number_categorical {
        columns.push(ColumnSpec {
            name: "parliament_number".into(),
            kind: ColumnKind::Numeric,
        });
    }
    for name in DENSE_COLUMNS {
        columns.push(ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numeric,
        });
    }
    for d in 0..policy.embedding_dim {
        columns.push(ColumnSpec {
            name: format!("embed_{d}"),
            kind: ColumnKind::EmbeddingDim,
        });
    }
    for name in CATEGORICAL_COLUMNS {
        columns.push(ColumnSpec {
            name: name.into(),
            kind: ColumnKind::CategoricalCode,
        });
    }
    if policy.parliament_number_categorical {
        columns.push(ColumnSpec {
            name: "parliament_number".into(),
            kind: ColumnKind::CategoricalCode,
        });
    }
    columns
}

fn build_dictionaries(records: &[&EnrichedRecord], columns: &[ColumnSpec]) -> Dictionaries {
    let mut dictionaries = Dictionaries::new();
    for column in columns {
        if column.kind != ColumnKind::CategoricalCode {
            continue;
        }
        let mut values: Vec<String> = records
            .iter()
            .map(|r| categorical_value(r, &column.name))
            .filter(|v| !v.is_empty())
            .collect();
        values.sort();
        values.dedup();
        let dict: BTreeMap<String, u32> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i as u32 + 1))
            .collect();
        dictionaries.insert(column.name.clone(), dict);
    }
    dictionaries
}

/// Encode enriched records into a feature matrix, building fresh
/// dictionaries from the data.
///
/// Rows without a vote date cannot be placed on the time axis and are
/// skipped; the count of skipped rows is returned alongside the matrix.
pub fn encode_features(
    records: &[EnrichedRecord],
    policy: &EncodePolicy,
) -> Result<(FeatureMatrix, usize), EncodeError> {
    encode_features_with(records, policy, None)
}

/// Encode with existing dictionaries (prediction time); unseen categorical
/// values take the reserved code 0.
pub fn encode_features_with(
    records: &[EnrichedRecord],
    policy: &EncodePolicy,
    dictionaries: Option<&Dictionaries>,
) -> Result<(FeatureMatrix, usize), EncodeError> {
    if records.is_empty() {
        return Err(EncodeError::EmptyInput);
    }
    let columns = build_columns(policy);
    let dated: Vec<&EnrichedRecord> = records.iter().filter(|r| r.vote_date.is_some()).collect();
    let skipped = records.len() - dated.len();
    if dated.is_empty() {
        return Err(EncodeError::EmptyInput);
    }
    let dictionaries = match dictionaries {
        Some(d) => d.clone(),
        None => build_dictionaries(&dated, &columns),
    };

    let n_cols = columns.len();
    let mut x = Vec::with_capacity(dated.len() * n_cols);
    let mut y = Vec::with_capacity(dated.len());
    let mut row_keys = Vec::with_capacity(dated.len());
    let mut row_dates = Vec::with_capacity(dated.len());

    let opt_u32 = |v: Option<u32>| -> (f64, f64) {
        match v {
            Some(n) => (n as f64, 0.0),
            None => (0.0, 1.0),
        }
    };

    for record in dated {
        if !policy.parliament_number_categorical {
            x.push(record.parliament_number as f64);
        }
        let (value, missing) = opt_u32(record.total_for);
        x.push(value);
        x.push(missing);
        let (value, missing) = opt_u32(record.total_against);
        x.push(value);
        x.push(missing);
        x.push(record.importance_rank as f64);
        match record.is_in_alliance {
            Some(b) => {
                x.push(if b { 1.0 } else { 0.0 });
                x.push(0.0);
            }
            None => {
                x.push(0.0);
                x.push(1.0);
            }
        }
        x.push(if record.is_current { 1.0 } else { 0.0 });
        let (value, missing) = opt_u32(record.reference_count);
        x.push(value);
        x.push(missing);
        let (value, missing) = opt_u32(record.attendee_count);
        x.push(value);
        x.push(missing);
        match &record.bill_embedding {
            Some(v) => {
                x.push(0.0);
                for d in 0..policy.embedding_dim {
                    x.push(v.get(d).copied().unwrap_or(0.0));
                }
            }
            None => {
                x.push(1.0);
                x.extend(std::iter::repeat_n(0.0, policy.embedding_dim));
            }
        }
        for column in CATEGORICAL_COLUMNS {
            let value = categorical_value(record, column);
            let code = if value.is_empty() {
                0
            } else {
                dictionaries
                    .get(column)
                    .and_then(|d| d.get(&value))
                    .copied()
                    .unwrap_or(0)
            };
            x.push(code as f64);
        }
        if policy.parliament_number_categorical {
            let value = record.parliament_number.to_string();
            let code = dictionaries
                .get("parliament_number")
                .and_then(|d| d.get(&value))
                .copied()
                .unwrap_or(0);
            x.push(code as f64);
        }

        y.push(record.vote_result.code());
        row_keys.push(record.row_key());
        row_dates.push(record.vote_date.expect("filtered above"));
    }

    Ok((
        FeatureMatrix {
            x,
            y,
            n_rows: row_keys.len(),
            n_cols,
            columns,
            dictionaries,
            row_keys,
            row_dates,
        },
        skipped,
    ))
}

const MATRIX_MAGIC: &[u8; 4] = b"VPFM";
const MATRIX_VERSION: u32 = 1;

fn io_error(path: &Path, message: impl ToString) -> EncodeError {
    EncodeError::Io {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn bad_artifact(path: &Path, message: impl Into<String>) -> EncodeError {
    EncodeError::BadArtifact {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Persist a matrix as `feature_matrix.bin` + `column_spec.json` +
/// `dictionaries.json` in `dir`.
pub fn save_feature_matrix(dir: &Path, matrix: &FeatureMatrix) -> Result<(), EncodeError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;

    let spec_path = dir.join("column_spec.json");
    let json = serde_json::to_string_pretty(&matrix.columns).map_err(|e| io_error(&spec_path, e))?;
    fs::write(&spec_path, json + "\n").map_err(|e| io_error(&spec_path, e))?;

    let dict_path = dir.join("dictionaries.json");
    let json =
        serde_json::to_string_pretty(&matrix.dictionaries).map_err(|e| io_error(&dict_path, e))?;
    fs::write(&dict_path, json + "\n").map_err(|e| io_error(&dict_path, e))?;

    let bin_path = dir.join("feature_matrix.bin");
    let mut buf: Vec<u8> = Vec::with_capacity(16 + matrix.x.len() * 8);
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(matrix.n_rows as u64).to_le_bytes());
    buf.extend_from_slice(&(matrix.n_cols as u64).to_le_bytes());
    buf.extend_from_slice(&matrix.column_spec_hash().to_le_bytes());
    for v in &matrix.x {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&matrix.y);
    for d in &matrix.row_dates {
        buf.extend_from_slice(&d.num_days_from_ce().to_le_bytes());
    }
    for (vote_id, member_id) in &matrix.row_keys {
        for part in [vote_id, member_id] {
            buf.extend_from_slice(&(part.len() as u32).to_le_bytes());
            buf.extend_from_slice(part.as_bytes());
        }
    }
    let mut f = fs::File::create(&bin_path).map_err(|e| io_error(&bin_path, e))?;
    f.write_all(&buf).map_err(|e| io_error(&bin_path, e))?;
    Ok(())
}

/// Load a matrix persisted by [`save_feature_matrix`], verifying the
/// embedded column-spec hash.
pub fn load_feature_matrix(dir: &Path) -> Result<FeatureMatrix, EncodeError> {
    let spec_path = dir.join("column_spec.json");
    let text = fs::read_to_string(&spec_path).map_err(|e| io_error(&spec_path, e))?;
    let columns: Vec<ColumnSpec> =
        serde_json::from_str(&text).map_err(|e| bad_artifact(&spec_path, e.to_string()))?;

    let dict_path = dir.join("dictionaries.json");
    let text = fs::read_to_string(&dict_path).map_err(|e| io_error(&dict_path, e))?;
    let dictionaries: Dictionaries =
        serde_json::from_str(&text).map_err(|e| bad_artifact(&dict_path, e.to_string()))?;

    let bin_path = dir.join("feature_matrix.bin");
    let mut bytes = Vec::new();
    fs::File::open(&bin_path)
        .map_err(|e| io_error(&bin_path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_error(&bin_path, e))?;

    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8], EncodeError> {
        if *at + n > bytes.len() {
            return Err(bad_artifact(&bin_path, "truncated file"));
        }
        let slice = &bytes[*at..*at + n];
        *at += n;
        Ok(slice)
    };

    if take(&mut at, 4)? != MATRIX_MAGIC {
        return Err(bad_artifact(&bin_path, "bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(bad_artifact(&bin_path, format!("unsupported version {version}")));
    }
    let n_rows = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let n_cols = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let stored_hash = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    if stored_hash != column_spec_hash(&columns) {
        return Err(bad_artifact(
            &bin_path,
            "column_spec.json does not match the matrix fingerprint",
        ));
    }
    if n_cols != columns.len() {
        return Err(bad_artifact(&bin_path, "column count mismatch"));
    }

    let mut x = Vec::with_capacity(n_rows * n_cols);
    for _ in 0..n_rows * n_cols {
        x.push(f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()));
    }
    let y = take(&mut at, n_rows)?.to_vec();
    let mut row_dates = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let days = i32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
        let date = NaiveDate::from_num_days_from_ce_opt(days)
            .ok_or_else(|| bad_artifact(&bin_path, format!("bad date value {days}")))?;
        row_dates.push(date);
    }
    let mut row_keys = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut parts = [String::new(), String::new()];
        for part in &mut parts {
            let len = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
            let raw = take(&mut at, len)?;
            *part = String::from_utf8(raw.to_vec())
                .map_err(|_| bad_artifact(&bin_path, "bad utf-8 in row key"))?;
        }
        let [vote_id, member_id] = parts;
        row_keys.push((vote_id, member_id));
    }

    Ok(FeatureMatrix {
        x,
        y,
        n_rows,
        n_cols,
        columns,
        dictionaries,
        row_keys,
        row_dates,
    })
}
