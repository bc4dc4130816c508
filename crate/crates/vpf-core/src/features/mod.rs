//! The enriched dataset: votes joined with members, bills, and protocols,
//! plus the four computed prediction features.

pub mod embed;
pub mod encode;
pub mod text;

pub use embed::{embed_text, EmbedError, Embedder, HashedEmbedder, PrecomputedEmbedder};
pub use encode::{
    column_spec_hash, encode_features, encode_features_with, load_feature_matrix,
    save_feature_matrix, ColumnKind, ColumnSpec, EncodeError, EncodePolicy, FeatureMatrix,
};
pub use text::{compute_opinion_count, subject_terms, tokenize};

use std::collections::BTreeMap;
use std::fs;
use std::sync::Arc;
use std::io::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CoalitionEntry, CountryConfig};
use crate::schema::{Gender, RawBundle, VoteResult};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no coalition entry for party {party:?} in parliament {parliament} and no default")]
    MissingCoalitionEntry { party: String, parliament: u32 },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}

/// One vote joined with member, bill, and protocol context plus the four
/// computed features. One record per (vote_id, member_id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedRecord {
    pub country: String,
    pub vote_id: String,
    pub parliament_number: u32,
    pub session_id: String,
    pub vote_date: Option<NaiveDate>,
    pub total_for: Option<u32>,
    pub total_against: Option<u32>,
    pub member_id: String,
    pub member_name: String,
    pub party_name: String,
    pub gender: Gender,
    pub email: Option<String>,
    pub party_id: String,
    pub importance_rank: u32,
    /// None when the coalition table has no entry and no default is configured.
    pub is_in_alliance: Option<bool>,
    pub is_current: bool,
    pub bill_id: Option<String>,
    pub title: Option<String>,
    pub bill_embedding: Option<Arc<Vec<f64>>>,
    pub committee_id: Option<String>,
    pub attendees: Arc<Vec<String>>,
    pub attendee_count: Option<u32>,
    /// Initiator of the joined committee meeting.
    pub speaker_name: Option<String>,
    /// References to the bill's subject in protocols the member attended
    /// before the vote; None when there is no bill or no vote date.
    pub reference_count: Option<u32>,
    pub vote_result: VoteResult,
}

impl EnrichedRecord {
    pub fn row_key(&self) -> (String, String) {
        (self.vote_id.clone(), self.member_id.clone())
    }
}

/// Join-coverage statistics emitted by [`build_enriched`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinCoverage {
    pub n_votes: usize,
    /// Fraction of votes that found a member profile.
    pub member_join: f64,
    /// Fraction of votes that found their bill.
    pub bill_join: f64,
    /// Fraction of votes whose bill found a committee protocol.
    pub protocol_join: f64,
    /// Votes whose affiliation fell back to the configured default.
    pub affiliation_defaulted: usize,
    /// Votes with no coalition entry and no default.
    pub affiliation_missing: usize,
}

/// Is the member's party in the governing coalition for this parliament?
pub fn compute_affiliation(
    party_name: &str,
    parliament_number: u32,
    coalition_table: &[CoalitionEntry],
) -> Result<bool, FeatureError> {
    coalition_table
        .iter()
        .find(|e| e.parliament_number == parliament_number && e.party_name == party_name)
        .map(|e| e.in_coalition)
        .ok_or_else(|| FeatureError::MissingCoalitionEntry {
            party: party_name.to_string(),
            parliament: parliament_number,
        })
}

/// Importance rank of a position: the maximum rank over every dictionary
/// phrase that occurs in the position text (case-insensitive). Members can
/// hold several roles at once; the most senior one counts. Unmatched
/// positions rank 0, the standard member.
pub fn compute_importance_rank(
    position: &str,
    position_rank_dict: &BTreeMap<String, u32>,
    rank_max: u32,
) -> u32 {
    let haystack = position.to_lowercase();
    position_rank_dict
        .iter()
        .filter(|(phrase, _)| !phrase.is_empty() && haystack.contains(phrase.as_str()))
        .map(|(_, &rank)| rank)
        .max()
        .unwrap_or(0)
        .min(rank_max)
}

/// Left-join votes with members, bills, and protocols and compute the four
/// features. The output has exactly one record per vote row; join failures
/// leave the affected fields empty and show up in the coverage stats.
pub fn build_enriched(
    bundle: &RawBundle,
    config: &CountryConfig,
    embedder: &dyn Embedder,
) -> Result<(Vec<EnrichedRecord>, JoinCoverage), FeatureError> {
    let members: BTreeMap<(&str, u32), usize> = bundle
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| ((m.person_id.as_str(), m.parliament_number), i))
        .collect();
    let bills: BTreeMap<&str, usize> = bundle
        .bills
        .iter()
        .enumerate()
        .map(|(i, b)| ((b.bill_id.as_str()), i))
        .collect();

    // Bill embeddings are computed once per bill, not once per vote.
    let mut embeddings: BTreeMap<&str, Arc<Vec<f64>>> = BTreeMap::new();
    for bill in &bundle.bills {
        let text = bill
            .description
            .as_deref()
            .filter(|d| !d.is_empty())
            .unwrap_or(&bill.title);
        embeddings.insert(
            bill.bill_id.as_str(),
            Arc::new(embedder.embed(&bill.bill_id, text)?),
        );
    }

    // Attendee lists are shared, not copied, across the joined records.
    let protocol_attendees: Vec<Arc<Vec<String>>> = bundle
        .protocols
        .iter()
        .map(|p| Arc::new(p.attendees.clone()))
        .collect();
    // Per committee: dated protocols sorted ascending, for the
    // latest-meeting-before-the-vote join.
    let mut protocols_by_committee: BTreeMap<&str, Vec<(NaiveDate, &str, usize)>> = BTreeMap::new();
    for (i, p) in bundle.protocols.iter().enumerate() {
        if let Some(date) = p.date {
            protocols_by_committee
                .entry(p.committee_id.as_str())
                .or_default()
                .push((date, p.meeting_id.as_str(), i));
        }
    }
    for list in protocols_by_committee.values_mut() {
        list.sort();
    }

    // Opinion counts reduce to cached per-(protocol, bill) term hits so a
    // million votes do not re-tokenize the protocol corpus. Per vote only
    // the date and attendance filters remain.
    struct ProtocolIndex {
        date: Option<NaiveDate>,
        attendees: std::collections::BTreeSet<String>,
        token_counts: BTreeMap<String, u32>,
    }
    let protocol_index: Vec<ProtocolIndex> = bundle
        .protocols
        .iter()
        .map(|p| {
            let mut token_counts: BTreeMap<String, u32> = BTreeMap::new();
            if let Some(text) = &p.description {
                for token in text::tokenize(text) {
                    *token_counts.entry(token).or_default() += 1;
                }
            }
            ProtocolIndex {
                date: p.date,
                attendees: p.attendees.iter().cloned().collect(),
                token_counts,
            }
        })
        .collect();
    // Per bill: protocols that mention its subject terms at all.
    let bill_term_hits: BTreeMap<&str, Vec<(usize, u32)>> = bundle
        .bills
        .iter()
        .map(|b| {
            let terms = text::subject_terms(&b.title, &config.stopwords);
            let hits: Vec<(usize, u32)> = protocol_index
                .iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    let h: u32 = terms
                        .iter()
                        .map(|t| p.token_counts.get(t).copied().unwrap_or(0))
                        .sum();
                    (h > 0).then_some((i, h))
                })
                .collect();
            (b.bill_id.as_str(), hits)
        })
        .collect();

    let mut coverage = JoinCoverage {
        n_votes: bundle.votes.len(),
        ..JoinCoverage::default()
    };
    let mut member_hits = 0usize;
    let mut bill_hits = 0usize;
    let mut protocol_hits = 0usize;

    let mut records = Vec::with_capacity(bundle.votes.len());
    for vote in &bundle.votes {
        let member = members
            .get(&(vote.member_id.as_str(), vote.parliament_number))
            .map(|&i| &bundle.members[i]);
        if member.is_some() {
            member_hits += 1;
        }

        let bill_key = match config.bill_link {
            crate::config::BillLink::SessionId => vote.session_id.as_str(),
            crate::config::BillLink::VoteId => vote.vote_id.as_str(),
        };
        let bill = bills.get(bill_key).map(|&i| &bundle.bills[i]);
        if bill.is_some() {
            bill_hits += 1;
        }

        // Latest committee protocol on or before the vote date (ties on a
        // date break to the later meeting id).
        let protocol = match (bill.and_then(|b| b.committee_id.as_deref()), vote.vote_date) {
            (Some(committee_id), Some(vote_date)) => {
                protocols_by_committee.get(committee_id).and_then(|list| {
                    let end = list.partition_point(|(d, _, _)| *d <= vote_date);
                    (end > 0).then(|| {
                        let (_, _, i) = list[end - 1];
                        (&bundle.protocols[i], &protocol_attendees[i])
                    })
                })
            }
            _ => None,
        };
        if protocol.is_some() {
            protocol_hits += 1;
        }

        let party_name = if !vote.party_name.is_empty() {
            vote.party_name.clone()
        } else {
            member.map(|m| m.party.clone()).unwrap_or_default()
        };

        let is_in_alliance =
            match compute_affiliation(&party_name, vote.parliament_number, &config.coalition_table)
            {
                Ok(v) => Some(v),
                Err(_) => match config.coalition_default {
                    Some(default) => {
                        coverage.affiliation_defaulted += 1;
                        Some(default)
                    }
                    None => {
                        coverage.affiliation_missing += 1;
                        None
                    }
                },
            };

        let importance_rank = member
            .map(|m| compute_importance_rank(&m.position, &config.position_rank_dict, config.rank_max))
            .unwrap_or(0);

        let reference_count = match (bill, vote.vote_date) {
            (Some(bill), Some(vote_date)) => Some(
                bill_term_hits[bill.bill_id.as_str()]
                    .iter()
                    .filter(|(i, _)| {
                        let p = &protocol_index[*i];
                        p.date.map(|d| d < vote_date).unwrap_or(false)
                            && p.attendees.contains(&vote.member_id)
                    })
                    .map(|(_, h)| h)
                    .sum(),
            ),
            _ => None,
        };

        let gender = match member {
            Some(m) if m.gender != Gender::Unknown => m.gender,
            _ => vote.member_gender,
        };

        records.push(EnrichedRecord {
            country: vote.country.clone(),
            vote_id: vote.vote_id.clone(),
            parliament_number: vote.parliament_number,
            session_id: vote.session_id.clone(),
            vote_date: vote.vote_date,
            total_for: vote.total_for,
            total_against: vote.total_against,
            member_id: vote.member_id.clone(),
            member_name: if !vote.member_name.is_empty() {
                vote.member_name.clone()
            } else {
                member.map(|m| m.full_name()).unwrap_or_default()
            },
            party_name,
            gender,
            email: member.and_then(|m| m.email.clone()),
            party_id: vote.party_id.clone(),
            importance_rank,
            is_in_alliance,
            is_current: vote.is_current,
            bill_id: bill.map(|b| b.bill_id.clone()),
            title: bill.map(|b| b.title.clone()),
            bill_embedding: bill.map(|b| Arc::clone(&embeddings[b.bill_id.as_str()])),
            committee_id: bill.and_then(|b| b.committee_id.clone()),
            attendees: protocol
                .map(|(_, attendees)| Arc::clone(attendees))
                .unwrap_or_default(),
            attendee_count: protocol.and_then(|(p, _)| p.attendee_count),
            speaker_name: protocol.map(|(p, _)| p.speaker_name.clone()),
            reference_count,
            vote_result: vote.vote_result,
        });
    }

    if coverage.n_votes > 0 {
        let n = coverage.n_votes as f64;
        coverage.member_join = member_hits as f64 / n;
        coverage.bill_join = bill_hits as f64 / n;
        coverage.protocol_join = protocol_hits as f64 / n;
    }

    Ok((records, coverage))
}

pub const ENRICHED_HEADER: [&str; 26] = [
    "index",
    "country",
    "vote_id",
    "parliament_number",
    "session_id",
    "vote_date",
    "total_for",
    "total_against",
    "member_id",
    "member_name",
    "party_name",
    "gender",
    "email",
    "party_id",
    "importance_rank",
    "is_in_alliance",
    "is_current",
    "bill_id",
    "title",
    "bill_embedding",
    "committee_id",
    "attendees",
    "attendee_count",
    "speaker_name",
    "reference_count",
    "vote_result",
];

fn io_error(path: &Path, message: impl ToString) -> FeatureError {
    FeatureError::Io {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

pub fn write_enriched(path: &Path, records: &[EnrichedRecord]) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(ENRICHED_HEADER).map_err(|e| io_error(path, e))?;
    let date_cell =
        |d: Option<NaiveDate>| d.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
    let u32_cell = |v: Option<u32>| v.map(|n| n.to_string()).unwrap_or_default();
    for (i, r) in records.iter().enumerate() {
        let embedding_cell = r
            .bill_embedding
            .as_ref()
            .map(|v| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        w.write_record([
            i.to_string().as_str(),
            &r.country,
            &r.vote_id,
            &r.parliament_number.to_string(),
            &r.session_id,
            &date_cell(r.vote_date),
            &u32_cell(r.total_for),
            &u32_cell(r.total_against),
            &r.member_id,
            &r.member_name,
            &r.party_name,
            match r.gender {
                Gender::Unknown => "",
                g => g.label(),
            },
            r.email.as_deref().unwrap_or(""),
            &r.party_id,
            &r.importance_rank.to_string(),
            r.is_in_alliance
                .map(|b| if b { "true" } else { "false" })
                .unwrap_or(""),
            if r.is_current { "true" } else { "false" },
            r.bill_id.as_deref().unwrap_or(""),
            r.title.as_deref().unwrap_or(""),
            &embedding_cell,
            r.committee_id.as_deref().unwrap_or(""),
            &r.attendees.join(";"),
            &u32_cell(r.attendee_count),
            r.speaker_name.as_deref().unwrap_or(""),
            &u32_cell(r.reference_count),
            &r.vote_result.code().to_string(),
        ])
        .map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

pub fn read_enriched(path: &Path) -> Result<Vec<EnrichedRecord>, FeatureError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let rec = record.map_err(|e| io_error(path, e))?;
        let get = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        let opt = |idx: usize| {
            let v = get(idx);
            if v.is_empty() {
                None
            } else {
                Some(v)
            }
        };
        let parse_u32 = |idx: usize| -> Result<Option<u32>, FeatureError> {
            match opt(idx) {
                None => Ok(None),
                Some(v) => v
                    .parse::<u32>()
                    .map(Some)
                    .map_err(|_| io_error(path, format!("row {}: bad integer {v:?}", i + 2))),
            }
        };
        let vote_date = match opt(5) {
            None => None,
            Some(v) => Some(
                NaiveDate::parse_from_str(&v, "%Y-%m-%d")
                    .map_err(|_| io_error(path, format!("row {}: bad date {v:?}", i + 2)))?,
            ),
        };
        let bill_embedding = match opt(19) {
            None => None,
            Some(cell) => {
                let mut v = Vec::new();
                for part in cell.split(';') {
                    v.push(part.parse::<f64>().map_err(|_| {
                        io_error(path, format!("row {}: bad embedding value {part:?}", i + 2))
                    })?);
                }
                Some(Arc::new(v))
            }
        };
        let code_cell = get(25);
        let vote_result = code_cell
            .parse::<u8>()
            .ok()
            .and_then(VoteResult::from_code)
            .ok_or_else(|| io_error(path, format!("row {}: bad vote code {code_cell:?}", i + 2)))?;
        records.push(EnrichedRecord {
            country: get(1),
            vote_id: get(2),
            parliament_number: get(3).parse().unwrap_or(0),
            session_id: get(4),
            vote_date,
            total_for: parse_u32(6)?,
            total_against: parse_u32(7)?,
            member_id: get(8),
            member_name: get(9),
            party_name: get(10),
            gender: Gender::parse(&get(11)),
            email: opt(12),
            party_id: get(13),
            importance_rank: get(14).parse().unwrap_or(0),
            is_in_alliance: match get(15).as_str() {
                "true" => Some(true),
                "false" => Some(false),
                _ => None,
            },
            is_current: get(16) == "true",
            bill_id: opt(17),
            title: opt(18),
            bill_embedding,
            committee_id: opt(20),
            attendees: Arc::new(match opt(21) {
                None => Vec::new(),
                Some(cell) => cell.split(';').map(str::to_string).collect(),
            }),
            attendee_count: parse_u32(22)?,
            speaker_name: opt(23),
            reference_count: parse_u32(24)?,
            vote_result,
        });
    }
    Ok(records)
}

/// Write the join-coverage stats next to the enriched dataset.
pub fn write_coverage(path: &Path, coverage: &JoinCoverage) -> Result<(), FeatureError> {
    let json = serde_json::to_string_pretty(coverage).map_err(|e| io_error(path, e))?;
    let mut f = fs::File::create(path).map_err(|e| io_error(path, e))?;
    f.write_all(json.as_bytes()).map_err(|e| io_error(path, e))?;
    f.write_all(b"\n").map_err(|e| io_error(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{BillRecord, MemberProfile, ProtocolRecord, RawVoteRecord};

    fn coalition_table() -> Vec<CoalitionEntry> {
        vec![
            CoalitionEntry {
                parliament_number: 24,
                party_name: "Unity".into(),
                in_coalition: true,
            },
            CoalitionEntry {
                parliament_number: 24,
                party_name: "Horizon".into(),
                in_coalition: false,
            },
        ]
    }

    #[test]
    fn affiliation_true_for_listed_coalition_party() {
        assert!(compute_affiliation("Unity", 24, &coalition_table()).unwrap());
    }

    #[test]
    fn affiliation_false_for_listed_opposition_party() {
        assert!(!compute_affiliation("Horizon", 24, &coalition_table()).unwrap());
    }

    #[test]
    fn affiliation_missing_entry_errors() {
        // Listed for parliament 24 only; a record from 23 has no entry.
        let err = compute_affiliation("Unity", 23, &coalition_table()).unwrap_err();
        assert!(matches!(err, FeatureError::MissingCoalitionEntry { .. }));
    }

    #[test]
    fn affiliation_falls_back_to_configured_default_with_warning() {
        let mut config = test_config();
        config.coalition_default = Some(false);
        let mut bundle = small_bundle();
        // Push one vote into a parliament the coalition table does not cover.
        bundle.votes[1].parliament_number = 23;
        let embedder = HashedEmbedder::new(4, 1);
        let (records, coverage) = build_enriched(&bundle, &config, &embedder).unwrap();
        assert_eq!(records[1].is_in_alliance, Some(false));
        assert_eq!(coverage.affiliation_defaulted, 1);
        assert_eq!(coverage.affiliation_missing, 0);
    }

    fn rank_dict() -> BTreeMap<String, u32> {
        let mut d = BTreeMap::new();
        d.insert("prime minister".to_string(), 10);
        d.insert("deputy speaker".to_string(), 5);
        d.insert("committee chair".to_string(), 3);
        d
    }

    #[test]
    fn prime_minister_gets_rank_max() {
        assert_eq!(compute_importance_rank("Prime Minister", &rank_dict(), 10), 10);
    }

    #[test]
    fn unmatched_position_gets_zero() {
        assert_eq!(
            compute_importance_rank("Member of Parliament", &rank_dict(), 10),
            0
        );
    }

    #[test]
    fn multi_role_position_takes_max_rank() {
        assert_eq!(
            compute_importance_rank("Deputy Speaker; Committee Chair", &rank_dict(), 10),
            5
        );
    }

    fn test_config() -> CountryConfig {
        let dir = tempfile::tempdir().unwrap();
        let json = serde_json::json!({
            "country": "arcadia",
            "year_range": [2015, 2025],
            "vote_token_map": {"1": 1, "2": 2},
            "admissible_vote_results": [1, 2],
            "coalition_table": [
                {"parliament_number": 24, "party_name": "Unity", "in_coalition": true},
                {"parliament_number": 24, "party_name": "Horizon", "in_coalition": false}
            ],
            "position_rank_dict": {"prime minister": 10},
            "rank_max": 10,
            "embedding": {"dim": 4, "seed": 1}
        });
        let path = dir.path().join("config.json");
        fs::write(&path, serde_json::to_string(&json).unwrap()).unwrap();
        crate::config::load_country_config(&path).unwrap()
    }

    fn small_bundle() -> RawBundle {
        let date = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok();
        RawBundle {
            members: vec![MemberProfile {
                person_id: "m1".into(),
                parliament_number: 24,
                first_name: "Dana".into(),
                last_name: "Levy".into(),
                gender: Gender::Female,
                email: Some("d@example.org".into()),
                party: "Unity".into(),
                position: "Prime Minister".into(),
            }],
            bills: vec![BillRecord {
                bill_id: "b1".into(),
                parliament_number: 24,
                title: "Carbon Tax Exemption".into(),
                committee_id: Some("c1".into()),
                date: date("2020-02-01"),
                description: None,
                speaker_name: "m1".into(),
            }],
            votes: vec![
                RawVoteRecord {
                    country: "arcadia".into(),
                    vote_id: "v1".into(),
                    parliament_number: 24,
                    session_id: "b1".into(),
                    vote_date: date("2020-03-01"),
                    total_for: Some(1),
                    total_against: Some(1),
                    member_id: "m1".into(),
                    member_name: "Dana Levy".into(),
                    party_id: "p1".into(),
                    party_name: "Unity".into(),
                    member_gender: Gender::Female,
                    is_current: true,
                    vote_result: VoteResult::For,
                },
                RawVoteRecord {
                    country: "arcadia".into(),
                    vote_id: "v1".into(),
                    parliament_number: 24,
                    session_id: "orphan".into(),
                    vote_date: date("2020-03-01"),
                    total_for: Some(1),
                    total_against: Some(1),
                    member_id: "m2".into(),
                    member_name: "Eli Ron".into(),
                    party_id: "p2".into(),
                    party_name: "Horizon".into(),
                    member_gender: Gender::Male,
                    is_current: true,
                    vote_result: VoteResult::Against,
                },
            ],
            protocols: vec![ProtocolRecord {
                meeting_id: "mt1".into(),
                parliament_number: 24,
                committee_id: "c1".into(),
                meeting_title: "tax session".into(),
                date: date("2020-02-15"),
                description: Some("carbon carbon tax debate".into()),
                attendees: vec!["m1".into()],
                attendee_count: Some(1),
                speaker_name: "m1".into(),
            }],
            repair_log: Vec::new(),
        }
    }

    #[test]
    fn build_enriched_joins_and_computes_features() {
        let config = test_config();
        let embedder = HashedEmbedder::new(config.embedding.dim, config.embedding.seed);
        let (records, coverage) = build_enriched(&small_bundle(), &config, &embedder).unwrap();
        assert_eq!(records.len(), 2);

        let r = &records[0];
        assert_eq!(r.importance_rank, 10);
        assert_eq!(r.is_in_alliance, Some(true));
        assert_eq!(r.bill_id.as_deref(), Some("b1"));
        // "carbon" twice + "tax" once in the attended pre-vote protocol.
        assert_eq!(r.reference_count, Some(3));
        assert_eq!(r.attendee_count, Some(1));
        assert_eq!(r.bill_embedding.as_ref().map(|v| v.len()), Some(4));

        // Second row misses member and bill joins but is still emitted.
        let r2 = &records[1];
        assert_eq!(r2.bill_id, None);
        assert_eq!(r2.bill_embedding, None);
        assert_eq!(r2.reference_count, None);
        assert_eq!(r2.is_in_alliance, Some(false));
        assert_eq!(r2.importance_rank, 0);

        assert_eq!(coverage.n_votes, 2);
        assert!((coverage.bill_join - 0.5).abs() < 1e-12);
        assert!((coverage.member_join - 0.5).abs() < 1e-12);
    }

    #[test]
    fn build_enriched_keeps_one_row_per_vote() {
        let config = test_config();
        let embedder = HashedEmbedder::new(4, 1);
        let bundle = small_bundle();
        let (records, _) = build_enriched(&bundle, &config, &embedder).unwrap();
        assert_eq!(records.len(), bundle.votes.len());
    }

    #[test]
    fn cached_reference_counts_match_the_direct_computation() {
        let cfg = crate::synth::SynthConfig {
            n_parties: 3,
            n_coalition: 2,
            members_per_party: 4,
            n_ballots: 12,
            ..crate::synth::SynthConfig::default()
        };
        let out = crate::synth::generate_bundle(&cfg);
        let embedder = HashedEmbedder::new(4, 1);
        let (records, _) = build_enriched(&out.bundle, &out.config, &embedder).unwrap();
        let bills: BTreeMap<&str, &crate::schema::BillRecord> = out
            .bundle
            .bills
            .iter()
            .map(|b| (b.bill_id.as_str(), b))
            .collect();
        for r in &records {
            let (Some(bill_id), Some(vote_date)) = (&r.bill_id, r.vote_date) else {
                continue;
            };
            let direct = compute_opinion_count(
                &r.member_id,
                &bills[bill_id.as_str()].title,
                vote_date,
                &out.bundle.protocols,
                &out.config.stopwords,
            );
            assert_eq!(r.reference_count, Some(direct), "row {:?}", r.row_key());
        }
    }

    #[test]
    fn enriched_csv_round_trips() {
        let config = test_config();
        let embedder = HashedEmbedder::new(4, 1);
        let (records, _) = build_enriched(&small_bundle(), &config, &embedder).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enriched.csv");
        write_enriched(&path, &records).unwrap();
        let back = read_enriched(&path).unwrap();
        assert_eq!(back, records);
    }
}
