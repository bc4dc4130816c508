//! Parse per-country fixture exports into a [`RawBundle`], then repair
//! missing values.
//!
//! Rows that cannot be turned into schema rows are emitted to a reject list
//! with a reason instead of aborting the run: the source corpora are known
//! to be imperfect, and a handful of bad rows must not cost the rest of the
//! file.

mod format;
mod repair;

pub use format::{read_raw_rows, RawRow};
pub use repair::{load_overrides, repair_missing, ManualOverride};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::Datelike;
use regex::Regex;
use thiserror::Error;

use crate::canon::RejectRow;
use crate::config::{CountryConfig, FieldRule, SourceFormat};
use crate::schema::{
    canonicalize_vote_result, BillRecord, DatasetKind, Gender, MemberProfile, ProtocolRecord,
    RawBundle, RawVoteRecord,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: unsupported or malformed input: {message}")]
    UnsupportedFormat { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{dataset}: required schema field {field:?} is not mapped to any source column")]
    SchemaFieldUnmapped { dataset: DatasetKind, field: String },
    #[error("override file {path} is malformed: {message}")]
    OverrideFileMalformed { path: String, message: String },
}

/// Schema fields that must be mapped (to a column or a repair rule) for each
/// dataset. Optional schema fields are omitted.
fn required_fields(kind: DatasetKind) -> &'static [&'static str] {
    match kind {
        DatasetKind::Members => &[
            "person_id",
            "parliament_number",
            "first_name",
            "last_name",
            "party",
            "position",
        ],
        DatasetKind::Bills => &["bill_id", "parliament_number", "title", "date", "speaker_name"],
        DatasetKind::Votes => &[
            "vote_id",
            "parliament_number",
            "session_id",
            "vote_date",
            "total_for",
            "total_against",
            "member_id",
            "member_name",
            "party_id",
            "party_name",
            "vote_result",
        ],
        DatasetKind::Protocols => &[
            "meeting_id",
            "parliament_number",
            "committee_id",
            "meeting_title",
            "date",
            "attendees",
            "attendee_count",
            "speaker_name",
        ],
    }
}

/// The typed output of [`parse_dataset`].
#[derive(Debug, Clone)]
pub enum ParsedRows {
    Members(Vec<MemberProfile>),
    Bills(Vec<BillRecord>),
    Votes(Vec<RawVoteRecord>),
    Protocols(Vec<ProtocolRecord>),
}

#[derive(Debug, Clone)]
pub struct ParsedDataset {
    pub rows: ParsedRows,
    pub rejects: Vec<RejectRow>,
}

/// Extracts schema fields from raw rows per the config's field rules.
struct FieldExtractor<'c> {
    config: &'c CountryConfig,
    kind: DatasetKind,
    patterns: BTreeMap<String, Regex>,
}

impl<'c> FieldExtractor<'c> {
    fn new(config: &'c CountryConfig, kind: DatasetKind) -> Self {
        let mut patterns = BTreeMap::new();
        if let Some(rules) = config.field_map.get(&kind) {
            for (field, rule) in rules {
                if let Some(pattern) = &rule.pattern {
                    // Validated at config load.
                    if let Ok(re) = Regex::new(pattern) {
                        patterns.insert(field.clone(), re);
                    }
                }
            }
        }
        FieldExtractor {
            config,
            kind,
            patterns,
        }
    }

    fn rule(&self, field: &str) -> FieldRule {
        self.config.field_rule(self.kind, field)
    }

    /// Raw cell for a schema field; empty and absent both mean missing.
    fn cell(&self, row: &RawRow, field: &str) -> Option<String> {
        let rule = self.rule(field);
        let column = rule.column?;
        let raw = row.get(&column)?.trim();
        if raw.is_empty() {
            return None;
        }
        match self.patterns.get(field) {
            Some(re) => re.captures(raw).map(|caps| {
                caps.get(1)
                    .or_else(|| caps.get(0))
                    .map(|m| m.as_str().trim().to_string())
                    .unwrap_or_default()
            }),
            None => Some(raw.to_string()),
        }
    }

    fn text(&self, row: &RawRow, field: &str) -> String {
        self.cell(row, field).unwrap_or_default()
    }

    fn optional_text(&self, row: &RawRow, field: &str) -> Option<String> {
        self.cell(row, field)
    }

    /// Required non-empty value; Err(reason) when missing.
    fn required(&self, row: &RawRow, field: &str) -> Result<String, String> {
        self.cell(row, field)
            .ok_or_else(|| format!("missing required field {field:?}"))
    }

    fn required_u32(&self, row: &RawRow, field: &str) -> Result<u32, String> {
        let raw = self.required(row, field)?;
        raw.parse::<u32>()
            .map_err(|_| format!("bad integer for {field:?}: {raw:?}"))
    }

    fn optional_u32(&self, row: &RawRow, field: &str) -> Result<Option<u32>, String> {
        match self.cell(row, field) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<u32>()
                .map(Some)
                .map_err(|_| format!("bad integer for {field:?}: {raw:?}")),
        }
    }

    /// Date cell parsed with the configured formats. Absent cells are
    /// missing (repairable); present-but-unparseable cells are errors.
    fn optional_date(&self, row: &RawRow, field: &str) -> Result<Option<chrono::NaiveDate>, String> {
        match self.cell(row, field) {
            None => Ok(None),
            Some(raw) => self
                .config
                .parse_date(&raw)
                .map(Some)
                .ok_or_else(|| format!("unparseable date for {field:?}: {raw:?}")),
        }
    }

    fn bool_with_default(&self, row: &RawRow, field: &str, default: bool) -> Result<bool, String> {
        match self.cell(row, field) {
            None => Ok(default),
            Some(raw) => match raw.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "y" | "t" => Ok(true),
                "false" | "0" | "no" | "n" | "f" => Ok(false),
                other => Err(format!("bad boolean for {field:?}: {other:?}")),
            },
        }
    }

    fn gender(&self, row: &RawRow, field: &str) -> Gender {
        self.cell(row, field)
            .map(|raw| Gender::parse(&raw))
            .unwrap_or(Gender::Unknown)
    }

    fn id_list(&self, row: &RawRow, field: &str) -> Vec<String> {
        match self.cell(row, field) {
            None => Vec::new(),
            Some(raw) => raw
                .split(';')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }
}

/// Verify that every required schema field is reachable: mapped to a column
/// present in the source, or covered by a repair rule. `has_column` answers
/// whether the source carries a column at all (header for delimited files,
/// key union for JSON).
fn check_field_coverage(
    config: &CountryConfig,
    kind: DatasetKind,
    has_column: impl Fn(&str) -> bool,
    empty_source: bool,
) -> Result<(), IngestError> {
    for field in required_fields(kind) {
        let rule = config.field_rule(kind, field);
        if rule.repair.is_some() {
            continue;
        }
        let column = match rule.column {
            Some(c) => c,
            None => {
                return Err(IngestError::SchemaFieldUnmapped {
                    dataset: kind,
                    field: field.to_string(),
                })
            }
        };
        if !empty_source && !has_column(&column) {
            return Err(IngestError::SchemaFieldUnmapped {
                dataset: kind,
                field: field.to_string(),
            });
        }
    }
    Ok(())
}

fn convert_member(
    extractor: &FieldExtractor,
    row: &RawRow,
) -> Result<MemberProfile, (String, String)> {
    let key = extractor.text(row, "person_id");
    let person_id = extractor.required(row, "person_id").map_err(|e| (key, e))?;
    let parliament_number = extractor
        .required_u32(row, "parliament_number")
        .map_err(|e| (person_id.clone(), e))?;
    Ok(MemberProfile {
        person_id,
        parliament_number,
        first_name: extractor.text(row, "first_name"),
        last_name: extractor.text(row, "last_name"),
        gender: extractor.gender(row, "gender"),
        email: extractor.optional_text(row, "email"),
        party: extractor.text(row, "party"),
        position: extractor.text(row, "position"),
    })
}

fn convert_bill(
    extractor: &FieldExtractor,
    config: &CountryConfig,
    row: &RawRow,
) -> Result<BillRecord, (String, String)> {
    let key = extractor.text(row, "bill_id");
    let bill_id = extractor.required(row, "bill_id").map_err(|e| (key, e))?;
    let fail = |e: String| (bill_id.clone(), e);
    let parliament_number = extractor
        .required_u32(row, "parliament_number")
        .map_err(fail)?;
    let date = extractor.optional_date(row, "date").map_err(fail)?;
    if let Some(d) = date {
        let (start, end) = config.year_range;
        if d.year() < start || d.year() > end {
            return Err((
                bill_id.clone(),
                format!("date {d} outside configured year range {start}..={end}"),
            ));
        }
    }
    Ok(BillRecord {
        bill_id,
        parliament_number,
        title: extractor.text(row, "title"),
        committee_id: extractor.optional_text(row, "committee_id"),
        date,
        description: extractor.optional_text(row, "description"),
        speaker_name: extractor.text(row, "speaker_name"),
    })
}

fn convert_vote(
    extractor: &FieldExtractor,
    config: &CountryConfig,
    row: &RawRow,
) -> Result<RawVoteRecord, (String, String)> {
    let key = extractor.text(row, "vote_id");
    let vote_id = extractor.required(row, "vote_id").map_err(|e| (key, e))?;
    let member_id = extractor
        .required(row, "member_id")
        .map_err(|e| (vote_id.clone(), e))?;
    let row_key = format!("{vote_id}|{member_id}");
    let fail = |e: String| (row_key.clone(), e);
    let parliament_number = extractor
        .required_u32(row, "parliament_number")
        .map_err(fail)?;
    let token = extractor.required(row, "vote_result").map_err(fail)?;
    let vote_result = canonicalize_vote_result(&token, &config.vote_token_map)
        .map_err(|e| fail(e.to_string()))?;
    if !config.is_admissible(vote_result) {
        return Err(fail(format!(
            "vote result {vote_result} not admissible for country"
        )));
    }
    let vote_date = extractor.optional_date(row, "vote_date").map_err(fail)?;
    let total_for = extractor.optional_u32(row, "total_for").map_err(fail)?;
    let total_against = extractor.optional_u32(row, "total_against").map_err(fail)?;
    let is_current = extractor
        .bool_with_default(row, "is_current", false)
        .map_err(fail)?;
    Ok(RawVoteRecord {
        country: config.country.clone(),
        vote_id,
        parliament_number,
        session_id: extractor.text(row, "session_id"),
        vote_date,
        total_for,
        total_against,
        member_id,
        member_name: extractor.text(row, "member_name"),
        party_id: extractor.text(row, "party_id"),
        party_name: extractor.text(row, "party_name"),
        member_gender: extractor.gender(row, "member_gender"),
        is_current,
        vote_result,
    })
}

fn convert_protocol(
    extractor: &FieldExtractor,
    row: &RawRow,
) -> Result<ProtocolRecord, (String, String)> {
    let key = extractor.text(row, "meeting_id");
    let meeting_id = extractor.required(row, "meeting_id").map_err(|e| (key, e))?;
    let fail = |e: String| (meeting_id.clone(), e);
    let parliament_number = extractor
        .required_u32(row, "parliament_number")
        .map_err(fail)?;
    let date = extractor.optional_date(row, "date").map_err(fail)?;
    let attendee_count = extractor.optional_u32(row, "attendee_count").map_err(fail)?;
    Ok(ProtocolRecord {
        meeting_id,
        parliament_number,
        committee_id: extractor.text(row, "committee_id"),
        meeting_title: extractor.text(row, "meeting_title"),
        date,
        description: extractor.optional_text(row, "description"),
        attendees: extractor.id_list(row, "attendees"),
        attendee_count,
        speaker_name: extractor.text(row, "speaker_name"),
    })
}

/// Parse one dataset file into typed rows plus a reject list. Delimited
/// sources are streamed; the other formats are document-sized and parsed
/// whole.
pub fn parse_dataset(
    path: &Path,
    config: &CountryConfig,
    kind: DatasetKind,
) -> Result<ParsedDataset, IngestError> {
    let format = config
        .source_format
        .get(&kind)
        .copied()
        .unwrap_or(SourceFormat::Delimited);

    // Required-field coverage: header columns for delimited sources, key
    // union for the document formats.
    match format {
        SourceFormat::Delimited => {
            let headers = format::delimited_headers(path, config.delimiter)?;
            check_field_coverage(config, kind, |c| headers.iter().any(|h| h == c), false)?;
        }
        _ => {
            let rows = read_raw_rows(path, format, config.delimiter)?;
            check_field_coverage(
                config,
                kind,
                |c| rows.iter().any(|r| r.contains_key(c)),
                rows.is_empty(),
            )?;
        }
    }

    let extractor = FieldExtractor::new(config, kind);
    let mut rejects = Vec::new();
    let mut row_number = 0usize;

    macro_rules! collect {
        ($variant:ident, $convert:expr) => {{
            let mut out = Vec::new();
            format::each_raw_row(path, format, config.delimiter, &mut |row| {
                row_number += 1;
                match $convert(&row) {
                    Ok(typed) => out.push(typed),
                    Err((row_key, reason)) => rejects.push(RejectRow {
                        dataset: kind,
                        row_number,
                        row_key,
                        reason,
                    }),
                }
            })?;
            ParsedRows::$variant(out)
        }};
    }

    let rows = match kind {
        DatasetKind::Members => collect!(Members, |row| convert_member(&extractor, row)),
        DatasetKind::Bills => collect!(Bills, |row| convert_bill(&extractor, config, row)),
        DatasetKind::Votes => collect!(Votes, |row| convert_vote(&extractor, config, row)),
        DatasetKind::Protocols => collect!(Protocols, |row| convert_protocol(&extractor, row)),
    };

    Ok(ParsedDataset { rows, rejects })
}

/// Candidate file names for a dataset, by configured format.
fn dataset_file(dir: &Path, kind: DatasetKind, format: SourceFormat) -> Option<PathBuf> {
    let extensions: &[&str] = match format {
        SourceFormat::Delimited => &["csv", "tsv", "txt"],
        SourceFormat::JsonRecords | SourceFormat::OdataJson => &["json"],
        SourceFormat::HtmlTableExport => &["html", "htm"],
    };
    extensions
        .iter()
        .map(|ext| dir.join(format!("{}.{ext}", kind.name())))
        .find(|p| p.exists())
}

/// Parse all four datasets from a country directory.
///
/// Members and votes are mandatory; bills and protocols are optional (not
/// every parliament publishes them) and simply parse to empty lists when
/// their file is absent.
pub fn parse_bundle(
    dir: &Path,
    config: &CountryConfig,
) -> Result<(RawBundle, Vec<RejectRow>), IngestError> {
    let mut bundle = RawBundle::default();
    let mut rejects = Vec::new();
    for kind in DatasetKind::ALL {
        let format = config.source_format[&kind];
        let path = match dataset_file(dir, kind, format) {
            Some(p) => p,
            None => match kind {
                DatasetKind::Members | DatasetKind::Votes => {
                    return Err(IngestError::FileUnreadable {
                        path: dir.join(kind.name()).display().to_string(),
                        source: std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "dataset file not found",
                        ),
                    })
                }
                _ => continue,
            },
        };
        let parsed = parse_dataset(&path, config, kind)?;
        rejects.extend(parsed.rejects);
        match parsed.rows {
            ParsedRows::Members(rows) => bundle.members = rows,
            ParsedRows::Bills(rows) => bundle.bills = rows,
            ParsedRows::Votes(rows) => bundle.votes = rows,
            ParsedRows::Protocols(rows) => bundle.protocols = rows,
        }
    }
    Ok((bundle, rejects))
}
