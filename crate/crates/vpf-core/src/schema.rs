//! Canonical domain types, vote-result encoding, and structural validation.
//!
//! Every other stage of the pipeline works on these types. They are immutable
//! value data after construction and safe to share read-only across workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single roll-call decision. Codes 1-4 follow the unified votes schema;
/// obstruction is carried as code 5 (declined to choose, does not count
/// toward quorum, unlike abstention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VoteResult {
    For,
    Against,
    Abstain,
    DidNotVote,
    Obstruction,
}

impl VoteResult {
    pub const ALL: [VoteResult; 5] = [
        VoteResult::For,
        VoteResult::Against,
        VoteResult::Abstain,
        VoteResult::DidNotVote,
        VoteResult::Obstruction,
    ];

    pub fn code(self) -> u8 {
        match self {
            VoteResult::For => 1,
            VoteResult::Against => 2,
            VoteResult::Abstain => 3,
            VoteResult::DidNotVote => 4,
            VoteResult::Obstruction => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<VoteResult> {
        match code {
            1 => Some(VoteResult::For),
            2 => Some(VoteResult::Against),
            3 => Some(VoteResult::Abstain),
            4 => Some(VoteResult::DidNotVote),
            5 => Some(VoteResult::Obstruction),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VoteResult::For => "For",
            VoteResult::Against => "Against",
            VoteResult::Abstain => "Abstain",
            VoteResult::DidNotVote => "DidNotVote",
            VoteResult::Obstruction => "Obstruction",
        }
    }

    /// Parse a canonical label, case-insensitively.
    pub fn from_label(label: &str) -> Option<VoteResult> {
        match label.trim().to_ascii_lowercase().as_str() {
            "for" => Some(VoteResult::For),
            "against" => Some(VoteResult::Against),
            "abstain" => Some(VoteResult::Abstain),
            "didnotvote" => Some(VoteResult::DidNotVote),
            "obstruction" => Some(VoteResult::Obstruction),
            _ => None,
        }
    }
}

impl fmt::Display for VoteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Gender {
    Male,
    Female,
    #[default]
    Unknown,
}

impl Gender {
    pub fn parse(token: &str) -> Gender {
        match token.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Gender::Male,
            "female" | "f" => Gender::Female,
            _ => Gender::Unknown,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
            Gender::Unknown => "Unknown",
        }
    }
}

/// Personal information about one parliament member in one parliament term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberProfile {
    pub person_id: String,
    pub parliament_number: u32,
    pub first_name: String,
    pub last_name: String,
    pub gender: Gender,
    pub email: Option<String>,
    pub party: String,
    pub position: String,
}

impl MemberProfile {
    pub fn full_name(&self) -> String {
        match (self.first_name.is_empty(), self.last_name.is_empty()) {
            (true, true) => String::new(),
            (true, false) => self.last_name.clone(),
            (false, true) => self.first_name.clone(),
            (false, false) => format!("{} {}", self.first_name, self.last_name),
        }
    }
}

/// A legislative bill proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BillRecord {
    pub bill_id: String,
    pub parliament_number: u32,
    pub title: String,
    pub committee_id: Option<String>,
    /// May be missing before repair; required by the schema afterwards.
    pub date: Option<NaiveDate>,
    pub description: Option<String>,
    /// Id of the member who proposed the bill.
    pub speaker_name: String,
}

/// A parsed committee meeting protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolRecord {
    pub meeting_id: String,
    pub parliament_number: u32,
    pub committee_id: String,
    pub meeting_title: String,
    pub date: Option<NaiveDate>,
    /// Full parsed meeting content.
    pub description: Option<String>,
    pub attendees: Vec<String>,
    pub attendee_count: Option<u32>,
    /// Id of the member who initiated the meeting.
    pub speaker_name: String,
}

/// One member's decision on one vote, in the unified votes schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawVoteRecord {
    pub country: String,
    pub vote_id: String,
    pub parliament_number: u32,
    pub session_id: String,
    pub vote_date: Option<NaiveDate>,
    pub total_for: Option<u32>,
    pub total_against: Option<u32>,
    pub member_id: String,
    pub member_name: String,
    pub party_id: String,
    pub party_name: String,
    pub member_gender: Gender,
    pub is_current: bool,
    pub vote_result: VoteResult,
}

/// Which of the four per-country source datasets a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Members,
    Bills,
    Votes,
    Protocols,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::Members,
        DatasetKind::Bills,
        DatasetKind::Votes,
        DatasetKind::Protocols,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Members => "members",
            DatasetKind::Bills => "bills",
            DatasetKind::Votes => "votes",
            DatasetKind::Protocols => "protocols",
        }
    }

    pub fn parse(name: &str) -> Option<DatasetKind> {
        match name {
            "members" => Some(DatasetKind::Members),
            "bills" => Some(DatasetKind::Bills),
            "votes" => Some(DatasetKind::Votes),
            "protocols" => Some(DatasetKind::Protocols),
            _ => None,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One recorded fill applied by the repair pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairEntry {
    pub dataset: DatasetKind,
    pub row_key: String,
    pub field: String,
    pub method: String,
    pub old: String,
    pub new: String,
}

/// The four per-country datasets after parsing, before or after repair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawBundle {
    pub members: Vec<MemberProfile>,
    pub bills: Vec<BillRecord>,
    pub votes: Vec<RawVoteRecord>,
    pub protocols: Vec<ProtocolRecord>,
    pub repair_log: Vec<RepairEntry>,
}

impl RawBundle {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
            && self.bills.is_empty()
            && self.votes.is_empty()
            && self.protocols.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("unknown vote token: {0:?}")]
    UnknownVoteToken(String),
    #[error("unknown vote code: {0}")]
    UnknownVoteCode(u8),
}

/// Map a raw country-specific vote token to the canonical result.
///
/// Matching is case-insensitive and whitespace-trimmed; the mapping's keys
/// are expected in normalized (trimmed, lowercase) form, as produced by
/// [`normalize_token`].
pub fn canonicalize_vote_result(
    raw_token: &str,
    mapping: &BTreeMap<String, VoteResult>,
) -> Result<VoteResult, SchemaError> {
    let token = normalize_token(raw_token);
    mapping
        .get(&token)
        .copied()
        .ok_or_else(|| SchemaError::UnknownVoteToken(raw_token.trim().to_string()))
}

/// Trim and case-fold a vote token for lookup.
pub fn normalize_token(token: &str) -> String {
    token.trim().to_lowercase()
}

/// Per-dataset violation counts produced by [`validate_bundle`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetViolations {
    /// Rows whose unique key duplicates an earlier row's.
    pub duplicate_keys: usize,
    /// Rows with an absent (unparseable) date where the schema requires one.
    pub missing_dates: usize,
    /// Rows referencing a member id absent from the members dataset.
    pub dangling_member_refs: usize,
    /// Rows with an empty required text field.
    pub empty_required_fields: usize,
    /// Protocol rows where attendee_count disagrees with the attendee list.
    pub attendee_count_mismatches: usize,
}

impl DatasetViolations {
    pub fn total(&self) -> usize {
        self.duplicate_keys
            + self.missing_dates
            + self.dangling_member_refs
            + self.empty_required_fields
            + self.attendee_count_mismatches
    }
}

/// Structural validation report over a whole bundle. Reporting only; the
/// bundle is never mutated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub members: DatasetViolations,
    pub bills: DatasetViolations,
    pub votes: DatasetViolations,
    pub protocols: DatasetViolations,
    /// Vote ids whose For/Against row counts disagree with the recorded
    /// totals. Warnings, not errors: source corpora are known-imperfect.
    pub tally_mismatch_vote_ids: Vec<String>,
}

impl ValidationReport {
    pub fn total_violations(&self) -> usize {
        self.members.total()
            + self.bills.total()
            + self.votes.total()
            + self.protocols.total()
            + self.tally_mismatch_vote_ids.len()
    }

    pub fn is_clean(&self) -> bool {
        self.total_violations() == 0
    }
}

/// Check every structural invariant and count violations per dataset.
pub fn validate_bundle(bundle: &RawBundle) -> ValidationReport {
    let mut report = ValidationReport::default();

    let member_ids: BTreeSet<&str> = bundle
        .members
        .iter()
        .map(|m| m.person_id.as_str())
        .collect();

    // Members: (person_id, parliament_number) unique, person_id nonempty.
    let mut seen = BTreeSet::new();
    for m in &bundle.members {
        if m.person_id.is_empty() {
            report.members.empty_required_fields += 1;
        }
        if !seen.insert((m.person_id.as_str(), m.parliament_number)) {
            report.members.duplicate_keys += 1;
        }
    }

    // Bills: bill_id unique, title nonempty, date present.
    let mut seen = BTreeSet::new();
    for b in &bundle.bills {
        if !seen.insert(b.bill_id.as_str()) {
            report.bills.duplicate_keys += 1;
        }
        if b.title.is_empty() {
            report.bills.empty_required_fields += 1;
        }
        if b.date.is_none() {
            report.bills.missing_dates += 1;
        }
    }

    // Votes: (vote_id, member_id) unique, date present, member resolvable,
    // per-vote tallies consistent with row counts.
    let mut seen = BTreeSet::new();
    let mut per_vote: BTreeMap<&str, (u32, u32, Option<u32>, Option<u32>, bool)> = BTreeMap::new();
    for v in &bundle.votes {
        if !seen.insert((v.vote_id.as_str(), v.member_id.as_str())) {
            report.votes.duplicate_keys += 1;
        }
        if v.vote_date.is_none() {
            report.votes.missing_dates += 1;
        }
        if !v.member_id.is_empty() && !member_ids.contains(v.member_id.as_str()) {
            report.votes.dangling_member_refs += 1;
        }
        let entry = per_vote
            .entry(v.vote_id.as_str())
            .or_insert((0, 0, v.total_for, v.total_against, false));
        match v.vote_result {
            VoteResult::For => entry.0 += 1,
            VoteResult::Against => entry.1 += 1,
            _ => {}
        }
        // Rows of one vote disagreeing about the totals is itself a mismatch.
        if entry.2 != v.total_for || entry.3 != v.total_against {
            entry.4 = true;
        }
    }
    for (vote_id, (n_for, n_against, total_for, total_against, inconsistent)) in per_vote {
        let bad_for = total_for.map(|t| t != n_for).unwrap_or(false);
        let bad_against = total_against.map(|t| t != n_against).unwrap_or(false);
        if bad_for || bad_against || inconsistent {
            report.tally_mismatch_vote_ids.push(vote_id.to_string());
        }
    }

    // Protocols: meeting_id unique, attendee_count consistent, attendees
    // resolvable, date present.
    let mut seen = BTreeSet::new();
    for p in &bundle.protocols {
        if !seen.insert(p.meeting_id.as_str()) {
            report.protocols.duplicate_keys += 1;
        }
        if p.date.is_none() {
            report.protocols.missing_dates += 1;
        }
        if p.attendee_count != Some(p.attendees.len() as u32) {
            report.protocols.attendee_count_mismatches += 1;
        }
        report.protocols.dangling_member_refs += p
            .attendees
            .iter()
            .filter(|a| !a.is_empty() && !member_ids.contains(a.as_str()))
            .count();
    }

    report
}
