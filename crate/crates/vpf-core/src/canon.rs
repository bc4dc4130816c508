//! Canonical CSV serialization of the unified schemas.
//!
//! One UTF-8 CSV per dataset, header row in the unified-schema column order,
//! empty string for missing values. These files are the hand-off format
//! between the ingest stage and everything downstream, so writing them is
//! deterministic and reading them back is lossless.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use crate::schema::{
    BillRecord, DatasetKind, Gender, MemberProfile, ProtocolRecord, RawBundle, RawVoteRecord,
    RepairEntry, VoteResult,
};

pub const MEMBERS_HEADER: [&str; 8] = [
    "person_id",
    "parliament_number",
    "first_name",
    "last_name",
    "gender",
    "email",
    "party",
    "position",
];

pub const BILLS_HEADER: [&str; 7] = [
    "bill_id",
    "parliament_number",
    "title",
    "committee_id",
    "date",
    "description",
    "speaker_name",
];

pub const PROTOCOLS_HEADER: [&str; 9] = [
    "meeting_id",
    "parliament_number",
    "committee_id",
    "meeting_title",
    "date",
    "description",
    "attendees",
    "attendee_count",
    "speaker_name",
];

pub const VOTES_HEADER: [&str; 14] = [
    "country",
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
    "member_gender",
    "is_current",
    "vote_result",
];

/// Separator for list-valued cells (attendee ids).
pub const LIST_SEPARATOR: char = ';';

#[derive(Debug, Error)]
pub enum CanonError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path} row {row}: {message}")]
    BadRow {
        path: String,
        row: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> CanonError {
    CanonError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> CanonError {
    CanonError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn date_cell(date: Option<NaiveDate>) -> String {
    date.map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_default()
}

fn opt_u32_cell(v: Option<u32>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

fn gender_cell(g: Gender) -> &'static str {
    match g {
        Gender::Unknown => "",
        other => other.label(),
    }
}

/// Write all canonical dataset CSVs plus the repair log into `dir`.
pub fn write_bundle(dir: &Path, bundle: &RawBundle) -> Result<(), CanonError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_members(&dir.join("members.csv"), &bundle.members)?;
    write_bills(&dir.join("bills.csv"), &bundle.bills)?;
    write_votes(&dir.join("votes.csv"), &bundle.votes)?;
    write_protocols(&dir.join("protocols.csv"), &bundle.protocols)?;
    write_repair_log(&dir.join("repair_log.csv"), &bundle.repair_log)?;
    Ok(())
}

pub fn write_members(path: &Path, rows: &[MemberProfile]) -> Result<(), CanonError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(MEMBERS_HEADER).map_err(|e| csv_err(path, e))?;
    for m in rows {
        w.write_record([
            m.person_id.as_str(),
            &m.parliament_number.to_string(),
            &m.first_name,
            &m.last_name,
            gender_cell(m.gender),
            m.email.as_deref().unwrap_or(""),
            &m.party,
            &m.position,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn write_bills(path: &Path, rows: &[BillRecord]) -> Result<(), CanonError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(BILLS_HEADER).map_err(|e| csv_err(path, e))?;
    for b in rows {
        w.write_record([
            b.bill_id.as_str(),
            &b.parliament_number.to_string(),
            &b.title,
            b.committee_id.as_deref().unwrap_or(""),
            &date_cell(b.date),
            b.description.as_deref().unwrap_or(""),
            &b.speaker_name,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn write_protocols(path: &Path, rows: &[ProtocolRecord]) -> Result<(), CanonError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(PROTOCOLS_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for p in rows {
        w.write_record([
            p.meeting_id.as_str(),
            &p.parliament_number.to_string(),
            &p.committee_id,
            &p.meeting_title,
            &date_cell(p.date),
            p.description.as_deref().unwrap_or(""),
            &p.attendees.join(&LIST_SEPARATOR.to_string()),
            &opt_u32_cell(p.attendee_count),
            &p.speaker_name,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn write_votes(path: &Path, rows: &[RawVoteRecord]) -> Result<(), CanonError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(VOTES_HEADER).map_err(|e| csv_err(path, e))?;
    for v in rows {
        w.write_record([
            v.country.as_str(),
            &v.vote_id,
            &v.parliament_number.to_string(),
            &v.session_id,
            &date_cell(v.vote_date),
            &opt_u32_cell(v.total_for),
            &opt_u32_cell(v.total_against),
            &v.member_id,
            &v.member_name,
            &v.party_id,
            &v.party_name,
            gender_cell(v.member_gender),
            if v.is_current { "true" } else { "false" },
            &v.vote_result.code().to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn write_repair_log(path: &Path, entries: &[RepairEntry]) -> Result<(), CanonError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["dataset", "row_key", "field", "method", "old", "new"])
        .map_err(|e| csv_err(path, e))?;
    for e in entries {
        w.write_record([
            e.dataset.name(),
            &e.row_key,
            &e.field,
            &e.method,
            &e.old,
            &e.new,
        ])
        .map_err(|err| csv_err(path, err))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// A source row the parser could not turn into a schema row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectRow {
    pub dataset: DatasetKind,
    /// 1-based position within the source file's records.
    pub row_number: usize,
    /// Best-effort key of the failing row, empty when unavailable.
    pub row_key: String,
    pub reason: String,
}

pub fn write_rejects(path: &Path, rows: &[RejectRow]) -> Result<(), CanonError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["dataset", "row_number", "row_key", "reason"])
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.dataset.name(),
            &r.row_number.to_string(),
            &r.row_key,
            &r.reason,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn parse_date_cell(cell: &str, path: &Path, row: usize) -> Result<Option<NaiveDate>, CanonError> {
    if cell.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(cell, "%Y-%m-%d")
        .map(Some)
        .map_err(|_| CanonError::BadRow {
            path: path.display().to_string(),
            row,
            message: format!("bad date {cell:?}"),
        })
}

fn parse_u32_cell(cell: &str, path: &Path, row: usize) -> Result<Option<u32>, CanonError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<u32>().map(Some).map_err(|_| CanonError::BadRow {
        path: path.display().to_string(),
        row,
        message: format!("bad integer {cell:?}"),
    })
}

fn bad_row(path: &Path, row: usize, message: impl Into<String>) -> CanonError {
    CanonError::BadRow {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

/// Read the four canonical dataset CSVs from `dir` back into a bundle.
/// The repair log is read when present.
pub fn read_bundle(dir: &Path) -> Result<RawBundle, CanonError> {
    let mut bundle = RawBundle {
        members: read_members(&dir.join("members.csv"))?,
        bills: read_bills(&dir.join("bills.csv"))?,
        votes: read_votes(&dir.join("votes.csv"))?,
        protocols: read_protocols(&dir.join("protocols.csv"))?,
        repair_log: Vec::new(),
    };
    let log_path = dir.join("repair_log.csv");
    if log_path.exists() {
        bundle.repair_log = read_repair_log(&log_path)?;
    }
    Ok(bundle)
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CanonError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

pub fn read_members(path: &Path) -> Result<Vec<MemberProfile>, CanonError> {
    let mut rows = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let rec = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let get = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        rows.push(MemberProfile {
            person_id: get(0),
            parliament_number: parse_u32_cell(&get(1), path, row)?.unwrap_or(0),
            first_name: get(2),
            last_name: get(3),
            gender: Gender::parse(&get(4)),
            email: non_empty(get(5)),
            party: get(6),
            position: get(7),
        });
    }
    Ok(rows)
}

pub fn read_bills(path: &Path) -> Result<Vec<BillRecord>, CanonError> {
    let mut rows = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let rec = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let get = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        rows.push(BillRecord {
            bill_id: get(0),
            parliament_number: parse_u32_cell(&get(1), path, row)?.unwrap_or(0),
            title: get(2),
            committee_id: non_empty(get(3)),
            date: parse_date_cell(&get(4), path, row)?,
            description: non_empty(get(5)),
            speaker_name: get(6),
        });
    }
    Ok(rows)
}

pub fn read_protocols(path: &Path) -> Result<Vec<ProtocolRecord>, CanonError> {
    let mut rows = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let rec = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let get = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        let attendees_cell = get(6);
        let attendees = if attendees_cell.is_empty() {
            Vec::new()
        } else {
            attendees_cell
                .split(LIST_SEPARATOR)
                .map(str::to_string)
                .collect()
        };
        rows.push(ProtocolRecord {
            meeting_id: get(0),
            parliament_number: parse_u32_cell(&get(1), path, row)?.unwrap_or(0),
            committee_id: get(2),
            meeting_title: get(3),
            date: parse_date_cell(&get(4), path, row)?,
            description: non_empty(get(5)),
            attendees,
            attendee_count: parse_u32_cell(&get(7), path, row)?,
            speaker_name: get(8),
        });
    }
    Ok(rows)
}

pub fn read_votes(path: &Path) -> Result<Vec<RawVoteRecord>, CanonError> {
    let mut rows = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let rec = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let get = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        let code_cell = get(13);
        let code = code_cell
            .parse::<u8>()
            .map_err(|_| bad_row(path, row, format!("bad vote code {code_cell:?}")))?;
        let vote_result = VoteResult::from_code(code)
            .ok_or_else(|| bad_row(path, row, format!("unknown vote code {code}")))?;
        rows.push(RawVoteRecord {
            country: get(0),
            vote_id: get(1),
            parliament_number: parse_u32_cell(&get(2), path, row)?.unwrap_or(0),
            session_id: get(3),
            vote_date: parse_date_cell(&get(4), path, row)?,
            total_for: parse_u32_cell(&get(5), path, row)?,
            total_against: parse_u32_cell(&get(6), path, row)?,
            member_id: get(7),
            member_name: get(8),
            party_id: get(9),
            party_name: get(10),
            member_gender: Gender::parse(&get(11)),
            is_current: get(12) == "true",
            vote_result,
        });
    }
    Ok(rows)
}

pub fn read_repair_log(path: &Path) -> Result<Vec<RepairEntry>, CanonError> {
    let mut rows = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let rec = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let get = |idx: usize| rec.get(idx).unwrap_or("").to_string();
        let name = get(0);
        let dataset = DatasetKind::parse(&name)
            .ok_or_else(|| bad_row(path, row, format!("unknown dataset {name:?}")))?;
        rows.push(RepairEntry {
            dataset,
            row_key: get(1),
            field: get(2),
            method: get(3),
            old: get(4),
            new: get(5),
        });
    }
    Ok(rows)
}

fn non_empty(s: String) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Gender;

    #[test]
    fn bundle_round_trips_through_csv() {
        let bundle = RawBundle {
            members: vec![MemberProfile {
                person_id: "m1".into(),
                parliament_number: 24,
                first_name: "Dana".into(),
                last_name: "Levy".into(),
                gender: Gender::Female,
                email: Some("dana@example.org".into()),
                party: "Unity".into(),
                position: "Committee Chair".into(),
            }],
            bills: vec![BillRecord {
                bill_id: "b1".into(),
                parliament_number: 24,
                title: "Carbon Tax Exemption".into(),
                committee_id: Some("c7".into()),
                date: NaiveDate::from_ymd_opt(2020, 3, 2),
                description: None,
                speaker_name: "m1".into(),
            }],
            votes: vec![RawVoteRecord {
                country: "arcadia".into(),
                vote_id: "v1".into(),
                parliament_number: 24,
                session_id: "b1".into(),
                vote_date: NaiveDate::from_ymd_opt(2020, 3, 4),
                total_for: Some(1),
                total_against: Some(0),
                member_id: "m1".into(),
                member_name: "Dana Levy".into(),
                party_id: "p1".into(),
                party_name: "Unity".into(),
                member_gender: Gender::Female,
                is_current: true,
                vote_result: VoteResult::For,
            }],
            protocols: vec![ProtocolRecord {
                meeting_id: "mt1".into(),
                parliament_number: 24,
                committee_id: "c7".into(),
                meeting_title: "budget session".into(),
                date: NaiveDate::from_ymd_opt(2020, 2, 1),
                description: Some("discussed the carbon tax".into()),
                attendees: vec!["m1".into()],
                attendee_count: Some(1),
                speaker_name: "m1".into(),
            }],
            repair_log: vec![RepairEntry {
                dataset: DatasetKind::Votes,
                row_key: "v1:m1".into(),
                field: "member_name".into(),
                method: "cross_join".into(),
                old: String::new(),
                new: "Dana Levy".into(),
            }],
        };

        let dir = tempfile::tempdir().unwrap();
        write_bundle(dir.path(), &bundle).unwrap();
        let read_back = read_bundle(dir.path()).unwrap();
        assert_eq!(read_back, bundle);
    }

    #[test]
    fn missing_values_serialize_as_empty_cells() {
        let dir = tempfile::tempdir().unwrap();
        let votes = vec![RawVoteRecord {
            country: "arcadia".into(),
            vote_id: "v1".into(),
            parliament_number: 1,
            session_id: "s1".into(),
            vote_date: None,
            total_for: None,
            total_against: None,
            member_id: "m1".into(),
            member_name: String::new(),
            party_id: String::new(),
            party_name: String::new(),
            member_gender: Gender::Unknown,
            is_current: false,
            vote_result: VoteResult::Abstain,
        }];
        let path = dir.path().join("votes.csv");
        write_votes(&path, &votes).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "arcadia,v1,1,s1,,,,m1,,,,,false,3");
        assert_eq!(read_votes(&path).unwrap(), votes);
    }
}
