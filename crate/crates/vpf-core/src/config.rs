//! Per-country pipeline configuration.
//!
//! A country config is a JSON file next to the country's fixture exports. It
//! declares the export format of each dataset, how source columns map onto
//! the unified schemas, the vote-token vocabulary, the coalition table, the
//! position-rank dictionary, and feature-encoding knobs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{DatasetKind, VoteResult};

/// Export format of one source dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    /// Character-delimited text with a header row.
    Delimited,
    /// A JSON array of flat objects, or one JSON object per line.
    JsonRecords,
    /// An ODATA-style envelope: `{"value": [ ... ]}`.
    OdataJson,
    /// A saved HTML page whose first `<table>` holds the export.
    HtmlTableExport,
}

/// Where one schema field comes from in the source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FieldRule {
    /// Source column (or JSON key) holding the value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// Optional regex applied to the cell; capture group 1 (or the whole
    /// match) becomes the value. Used to pull values out of free text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    /// Name of the repair method expected to fill this field later
    /// (`cross_join`, `neighbor`, `manual`, `recount`). A field with only a
    /// repair rule is allowed to be absent at parse time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum FieldRuleSpec {
    Column(String),
    Detailed(FieldRule),
}

impl From<FieldRuleSpec> for FieldRule {
    fn from(spec: FieldRuleSpec) -> FieldRule {
        match spec {
            FieldRuleSpec::Column(column) => FieldRule {
                column: Some(column),
                ..FieldRule::default()
            },
            FieldRuleSpec::Detailed(rule) => rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum VoteResultSpec {
    Code(u8),
    Label(String),
}

/// One row of the coalition table: is this party in the governing coalition
/// during this parliament?
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionEntry {
    pub parliament_number: u32,
    pub party_name: String,
    pub in_coalition: bool,
}

/// How a vote row finds its bill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BillLink {
    /// `votes.session_id == bills.bill_id` (a voting session deliberates one bill).
    #[default]
    SessionId,
    /// `votes.vote_id == bills.bill_id`.
    VoteId,
}

/// Text-embedding settings for the bill-content feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Output dimension D of the embedding block.
    pub dim: usize,
    /// Seed for the hashed-frequency embedder.
    pub seed: u64,
    /// Optional CSV of precomputed embeddings keyed by bill_id
    /// (columns: bill_id, v0..v{D-1}); bypasses hashing when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 64,
            seed: 0,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryConfig {
    pub country: String,
    /// Inclusive [start, end] years bills must fall into.
    pub year_range: (i32, i32),
    pub source_format: BTreeMap<DatasetKind, SourceFormat>,
    /// Cell delimiter for `Delimited` sources.
    pub delimiter: char,
    /// Date formats tried in order when parsing source dates.
    pub date_formats: Vec<String>,
    /// Per dataset: schema field -> where it comes from. Unlisted fields
    /// default to a source column with the schema field's own name.
    pub field_map: BTreeMap<DatasetKind, BTreeMap<String, FieldRule>>,
    /// Normalized vote token -> canonical result.
    pub vote_token_map: BTreeMap<String, VoteResult>,
    pub coalition_table: Vec<CoalitionEntry>,
    /// Affiliation for (parliament, party) pairs missing from the table.
    pub coalition_default: Option<bool>,
    /// Lowercased position phrase -> importance rank.
    pub position_rank_dict: BTreeMap<String, u32>,
    pub admissible_vote_results: BTreeSet<VoteResult>,
    /// Top of the importance-rank scale (rank of the most senior position).
    pub rank_max: u32,
    pub bill_link: BillLink,
    /// Lowercased stopwords excluded from bill-subject terms.
    pub stopwords: BTreeSet<String>,
    pub embedding: EmbeddingConfig,
    /// Encode parliament_number as a categorical code instead of a numeric.
    pub parliament_number_categorical: bool,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Malformed {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountryConfigFile {
    country: String,
    year_range: (i32, i32),
    #[serde(default)]
    source_format: BTreeMap<String, SourceFormat>,
    #[serde(default)]
    delimiter: Option<char>,
    #[serde(default)]
    date_formats: Vec<String>,
    #[serde(default)]
    field_map: BTreeMap<String, BTreeMap<String, FieldRuleSpec>>,
    #[serde(default)]
    vote_token_map: BTreeMap<String, VoteResultSpec>,
    #[serde(default)]
    coalition_table: Vec<CoalitionEntry>,
    #[serde(default)]
    coalition_default: Option<bool>,
    #[serde(default)]
    position_rank_dict: BTreeMap<String, u32>,
    #[serde(default)]
    admissible_vote_results: Vec<VoteResultSpec>,
    #[serde(default)]
    rank_max: Option<u32>,
    #[serde(default)]
    bill_link: BillLink,
    #[serde(default)]
    stopwords: Vec<String>,
    #[serde(default)]
    stopwords_file: Option<String>,
    #[serde(default)]
    embedding: EmbeddingConfig,
    #[serde(default)]
    parliament_number_categorical: bool,
}

fn resolve_vote_result(spec: &VoteResultSpec) -> Result<VoteResult, ConfigError> {
    match spec {
        VoteResultSpec::Code(code) => VoteResult::from_code(*code)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown vote code {code}"))),
        VoteResultSpec::Label(label) => VoteResult::from_label(label)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown vote label {label:?}"))),
    }
}

/// Load and validate `config.json` for a country directory.
pub fn load_country_config(path: &Path) -> Result<CountryConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: CountryConfigFile =
        serde_json::from_str(&text).map_err(|e| ConfigError::Malformed {
            path: path.display().to_string(),
            source: e,
        })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    build_config(file, &base_dir)
}

fn build_config(file: CountryConfigFile, base_dir: &Path) -> Result<CountryConfig, ConfigError> {
    let mut source_format = BTreeMap::new();
    for (name, format) in &file.source_format {
        let kind = DatasetKind::parse(name)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown dataset {name:?}")))?;
        source_format.insert(kind, *format);
    }
    for kind in DatasetKind::ALL {
        source_format.entry(kind).or_insert(SourceFormat::Delimited);
    }

    let mut field_map = BTreeMap::new();
    for (name, rules) in file.field_map {
        let kind = DatasetKind::parse(&name)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown dataset {name:?}")))?;
        let rules: BTreeMap<String, FieldRule> = rules
            .into_iter()
            .map(|(field, spec)| (field, FieldRule::from(spec)))
            .collect();
        for (field, rule) in &rules {
            if rule.column.is_none() && rule.repair.is_none() {
                return Err(ConfigError::Invalid(format!(
                    "field {field:?} of {name} names neither a column nor a repair rule"
                )));
            }
            if let Some(pattern) = &rule.pattern {
                regex::Regex::new(pattern).map_err(|e| {
                    ConfigError::Invalid(format!("bad pattern for {name}.{field}: {e}"))
                })?;
            }
        }
        field_map.insert(kind, rules);
    }

    let mut vote_token_map = BTreeMap::new();
    for (token, spec) in &file.vote_token_map {
        vote_token_map.insert(crate::schema::normalize_token(token), resolve_vote_result(spec)?);
    }

    let mut admissible = BTreeSet::new();
    for spec in &file.admissible_vote_results {
        admissible.insert(resolve_vote_result(spec)?);
    }
    if admissible.is_empty() {
        admissible.insert(VoteResult::For);
        admissible.insert(VoteResult::Against);
    }
    for result in &admissible {
        if !vote_token_map.values().any(|v| v == result) {
            return Err(ConfigError::Invalid(format!(
                "vote_token_map has no token for admissible result {result}"
            )));
        }
    }

    let rank_max = file
        .rank_max
        .unwrap_or_else(|| file.position_rank_dict.values().copied().max().unwrap_or(0));
    let position_rank_dict: BTreeMap<String, u32> = file
        .position_rank_dict
        .into_iter()
        .map(|(phrase, rank)| (phrase.to_lowercase(), rank))
        .collect();
    for (phrase, rank) in &position_rank_dict {
        if *rank > rank_max {
            return Err(ConfigError::Invalid(format!(
                "rank {rank} for {phrase:?} exceeds rank_max {rank_max}"
            )));
        }
    }

    if file.year_range.0 > file.year_range.1 {
        return Err(ConfigError::Invalid(format!(
            "year_range start {} after end {}",
            file.year_range.0, file.year_range.1
        )));
    }

    let mut stopwords: BTreeSet<String> =
        file.stopwords.iter().map(|w| w.to_lowercase()).collect();
    if let Some(rel) = &file.stopwords_file {
        let stopword_path = resolve_relative(base_dir, rel);
        let text = fs::read_to_string(&stopword_path).map_err(|e| ConfigError::Unreadable {
            path: stopword_path.display().to_string(),
            source: e,
        })?;
        stopwords.extend(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty()),
        );
    }

    let mut embedding = file.embedding;
    if embedding.dim == 0 {
        return Err(ConfigError::Invalid("embedding.dim must be >= 1".into()));
    }
    if let Some(rel) = &embedding.file {
        embedding.file = Some(resolve_relative(base_dir, rel).display().to_string());
    }

    let date_formats = if file.date_formats.is_empty() {
        vec!["%Y-%m-%d".to_string()]
    } else {
        file.date_formats
    };

    Ok(CountryConfig {
        country: file.country,
        year_range: file.year_range,
        source_format,
        delimiter: file.delimiter.unwrap_or(','),
        date_formats,
        field_map,
        vote_token_map,
        coalition_table: file.coalition_table,
        coalition_default: file.coalition_default,
        position_rank_dict,
        admissible_vote_results: admissible,
        rank_max,
        bill_link: file.bill_link,
        stopwords,
        embedding,
        parliament_number_categorical: file.parliament_number_categorical,
    })
}

fn resolve_relative(base_dir: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

impl CountryConfig {
    /// Field rule for one schema field, defaulting to a same-named column.
    pub fn field_rule(&self, kind: DatasetKind, field: &str) -> FieldRule {
        self.field_map
            .get(&kind)
            .and_then(|m| m.get(field))
            .cloned()
            .unwrap_or_else(|| FieldRule {
                column: Some(field.to_string()),
                ..FieldRule::default()
            })
    }

    pub fn is_admissible(&self, result: VoteResult) -> bool {
        self.admissible_vote_results.contains(&result)
    }

    /// Parse a source date cell with the configured formats.
    pub fn parse_date(&self, cell: &str) -> Option<chrono::NaiveDate> {
        let cell = cell.trim();
        if cell.is_empty() {
            return None;
        }
        self.date_formats
            .iter()
            .find_map(|f| chrono::NaiveDate::parse_from_str(cell, f).ok())
    }
}
