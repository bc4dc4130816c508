//! Missing-value repair: cross-dataset join fill, neighbor fill, manual
//! overrides, and derived-count fixing, in that fixed order.
//!
//! Join fill runs first because it uses the highest-confidence data; manual
//! overrides run last so a human correction always wins. Every fill is
//! appended to the bundle's repair log; fields that stay missing simply
//! remain empty.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use super::IngestError;
use crate::schema::{DatasetKind, Gender, RawBundle, RepairEntry};

/// One row of `overrides.csv`: dataset, row key, field, replacement value.
/// Composite row keys join their parts with `|` (votes: `vote_id|member_id`,
/// members: `person_id|parliament_number`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManualOverride {
    pub dataset: DatasetKind,
    pub row_key: String,
    pub field: String,
    pub value: String,
}

pub fn load_overrides(path: &Path) -> Result<Vec<ManualOverride>, IngestError> {
    let malformed = |message: String| IngestError::OverrideFileMalformed {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(format!("row {}: {e}", i + 2)))?;
        if record.len() < 4 {
            return Err(malformed(format!(
                "row {}: expected dataset,row_key,field,value",
                i + 2
            )));
        }
        let dataset = DatasetKind::parse(&record[0])
            .ok_or_else(|| malformed(format!("row {}: unknown dataset {:?}", i + 2, &record[0])))?;
        rows.push(ManualOverride {
            dataset,
            row_key: record[1].to_string(),
            field: record[2].to_string(),
            value: record[3].to_string(),
        });
    }
    Ok(rows)
}

/// Apply the three repair rules in order, logging every fill.
pub fn repair_missing(
    mut bundle: RawBundle,
    overrides: &[ManualOverride],
) -> Result<RawBundle, IngestError> {
    cross_join_fill(&mut bundle);
    neighbor_fill(&mut bundle);
    apply_overrides(&mut bundle, overrides)?;
    recount_attendees(&mut bundle);
    Ok(bundle)
}

fn log(bundle: &mut RawBundle, dataset: DatasetKind, row_key: String, field: &str, method: &str, old: String, new: String) {
    bundle.repair_log.push(RepairEntry {
        dataset,
        row_key,
        field: field.to_string(),
        method: method.to_string(),
        old,
        new,
    });
}

/// Rule (a): fill vote fields from the member profile joined on
/// (member_id, parliament_number).
fn cross_join_fill(bundle: &mut RawBundle) {
    let members: BTreeMap<(&str, u32), usize> = bundle
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| ((m.person_id.as_str(), m.parliament_number), i))
        .collect();

    let mut fills: Vec<(usize, &'static str, String)> = Vec::new();
    for (vi, vote) in bundle.votes.iter().enumerate() {
        let Some(&mi) = members.get(&(vote.member_id.as_str(), vote.parliament_number)) else {
            continue;
        };
        let member = &bundle.members[mi];
        if vote.member_name.is_empty() {
            let name = member.full_name();
            if !name.is_empty() {
                fills.push((vi, "member_name", name));
            }
        }
        if vote.party_name.is_empty() && !member.party.is_empty() {
            fills.push((vi, "party_name", member.party.clone()));
        }
        if vote.member_gender == Gender::Unknown && member.gender != Gender::Unknown {
            fills.push((vi, "member_gender", member.gender.label().to_string()));
        }
    }
    for (vi, field, new) in fills {
        let row_key = format!("{}|{}", bundle.votes[vi].vote_id, bundle.votes[vi].member_id);
        match field {
            "member_name" => bundle.votes[vi].member_name = new.clone(),
            "party_name" => bundle.votes[vi].party_name = new.clone(),
            "member_gender" => bundle.votes[vi].member_gender = Gender::parse(&new),
            _ => unreachable!(),
        }
        log(bundle, DatasetKind::Votes, row_key, field, "cross_join", String::new(), new);
    }
}

/// Rule (b): fill a missing date when the nearest dated neighbors on both
/// sides (in ascending key order, within the same scope) agree. Disagreeing
/// neighbors are left alone; no dates are invented.
fn neighbor_fill(bundle: &mut RawBundle) {
    // Votes: ordered by (session_id, vote_id, member_id), scoped to session.
    let mut order: Vec<usize> = (0..bundle.votes.len()).collect();
    order.sort_by(|&a, &b| {
        let va = &bundle.votes[a];
        let vb = &bundle.votes[b];
        (&va.session_id, &va.vote_id, &va.member_id).cmp(&(
            &vb.session_id,
            &vb.vote_id,
            &vb.member_id,
        ))
    });
    let fills = neighbor_dates(
        &order,
        |i| bundle.votes[i].vote_date,
        |i| bundle.votes[i].session_id.clone(),
    );
    for (idx, date) in fills {
        bundle.votes[idx].vote_date = Some(date);
        let row_key = format!("{}|{}", bundle.votes[idx].vote_id, bundle.votes[idx].member_id);
        log(
            bundle,
            DatasetKind::Votes,
            row_key,
            "vote_date",
            "neighbor",
            String::new(),
            date.format("%Y-%m-%d").to_string(),
        );
    }

    // Bills: ordered by bill_id, scoped to parliament.
    let mut order: Vec<usize> = (0..bundle.bills.len()).collect();
    order.sort_by(|&a, &b| bundle.bills[a].bill_id.cmp(&bundle.bills[b].bill_id));
    let fills = neighbor_dates(
        &order,
        |i| bundle.bills[i].date,
        |i| bundle.bills[i].parliament_number.to_string(),
    );
    for (idx, date) in fills {
        bundle.bills[idx].date = Some(date);
        let row_key = bundle.bills[idx].bill_id.clone();
        log(
            bundle,
            DatasetKind::Bills,
            row_key,
            "date",
            "neighbor",
            String::new(),
            date.format("%Y-%m-%d").to_string(),
        );
    }

    // Protocols: ordered by meeting_id, scoped to committee.
    let mut order: Vec<usize> = (0..bundle.protocols.len()).collect();
    order.sort_by(|&a, &b| {
        bundle.protocols[a]
            .meeting_id
            .cmp(&bundle.protocols[b].meeting_id)
    });
    let fills = neighbor_dates(
        &order,
        |i| bundle.protocols[i].date,
        |i| bundle.protocols[i].committee_id.clone(),
    );
    for (idx, date) in fills {
        bundle.protocols[idx].date = Some(date);
        let row_key = bundle.protocols[idx].meeting_id.clone();
        log(
            bundle,
            DatasetKind::Protocols,
            row_key,
            "date",
            "neighbor",
            String::new(),
            date.format("%Y-%m-%d").to_string(),
        );
    }
}

/// Shared neighbor scan: for every row with a missing date, look for the
/// nearest preceding and following rows (in the given order) that carry a
/// date and share the row's scope key; fill only when both agree.
fn neighbor_dates(
    order: &[usize],
    date_of: impl Fn(usize) -> Option<NaiveDate>,
    scope_of: impl Fn(usize) -> String,
) -> Vec<(usize, NaiveDate)> {
    let mut fills = Vec::new();
    for (pos, &idx) in order.iter().enumerate() {
        if date_of(idx).is_some() {
            continue;
        }
        let scope = scope_of(idx);
        let prev = order[..pos]
            .iter()
            .rev()
            .filter(|&&j| scope_of(j) == scope)
            .find_map(|&j| date_of(j));
        let next = order[pos + 1..]
            .iter()
            .filter(|&&j| scope_of(j) == scope)
            .find_map(|&j| date_of(j));
        if let (Some(p), Some(n)) = (prev, next) {
            if p == n {
                fills.push((idx, p));
            }
        }
    }
    fills
}

/// Rule (c): manual overrides, applied unconditionally so humans can also
/// correct automated fills.
fn apply_overrides(bundle: &mut RawBundle, overrides: &[ManualOverride]) -> Result<(), IngestError> {
    for o in overrides {
        let (old, applied) = apply_one_override(bundle, o)?;
        if applied {
            log(
                bundle,
                o.dataset,
                o.row_key.clone(),
                &o.field,
                "manual",
                old,
                o.value.clone(),
            );
        }
    }
    Ok(())
}

fn override_error(o: &ManualOverride, message: impl Into<String>) -> IngestError {
    IngestError::OverrideFileMalformed {
        path: String::from("overrides.csv"),
        message: format!(
            "{} {:?} field {:?}: {}",
            o.dataset,
            o.row_key,
            o.field,
            message.into()
        ),
    }
}

fn parse_date_strict(o: &ManualOverride) -> Result<NaiveDate, IngestError> {
    NaiveDate::parse_from_str(&o.value, "%Y-%m-%d")
        .map_err(|_| override_error(o, format!("bad date {:?}", o.value)))
}

fn parse_u32_strict(o: &ManualOverride) -> Result<u32, IngestError> {
    o.value
        .parse::<u32>()
        .map_err(|_| override_error(o, format!("bad integer {:?}", o.value)))
}

/// Returns (old value as canonical cell text, applied).
fn apply_one_override(
    bundle: &mut RawBundle,
    o: &ManualOverride,
) -> Result<(String, bool), IngestError> {
    let date_text = |d: Option<NaiveDate>| {
        d.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default()
    };
    match o.dataset {
        DatasetKind::Members => {
            let row = bundle
                .members
                .iter_mut()
                .find(|m| format!("{}|{}", m.person_id, m.parliament_number) == o.row_key)
                .ok_or_else(|| override_error(o, "no such row"))?;
            let old = match o.field.as_str() {
                "first_name" => std::mem::replace(&mut row.first_name, o.value.clone()),
                "last_name" => std::mem::replace(&mut row.last_name, o.value.clone()),
                "party" => std::mem::replace(&mut row.party, o.value.clone()),
                "position" => std::mem::replace(&mut row.position, o.value.clone()),
                "email" => {
                    let old = row.email.clone().unwrap_or_default();
                    row.email = Some(o.value.clone());
                    old
                }
                "gender" => {
                    let old = row.gender;
                    row.gender = Gender::parse(&o.value);
                    (if old == Gender::Unknown { "" } else { old.label() }).to_string()
                }
                _ => return Err(override_error(o, "field not overridable")),
            };
            Ok((old, true))
        }
        DatasetKind::Bills => {
            let row = bundle
                .bills
                .iter_mut()
                .find(|b| b.bill_id == o.row_key)
                .ok_or_else(|| override_error(o, "no such row"))?;
            let old = match o.field.as_str() {
                "title" => std::mem::replace(&mut row.title, o.value.clone()),
                "speaker_name" => std::mem::replace(&mut row.speaker_name, o.value.clone()),
                "committee_id" => {
                    let old = row.committee_id.clone().unwrap_or_default();
                    row.committee_id = Some(o.value.clone());
                    old
                }
                "description" => {
                    let old = row.description.clone().unwrap_or_default();
                    row.description = Some(o.value.clone());
                    old
                }
                "date" => {
                    let old = date_text(row.date);
                    row.date = Some(parse_date_strict(o)?);
                    old
                }
                _ => return Err(override_error(o, "field not overridable")),
            };
            Ok((old, true))
        }
        DatasetKind::Votes => {
            let row = bundle
                .votes
                .iter_mut()
                .find(|v| format!("{}|{}", v.vote_id, v.member_id) == o.row_key)
                .ok_or_else(|| override_error(o, "no such row"))?;
            let old = match o.field.as_str() {
                "member_name" => std::mem::replace(&mut row.member_name, o.value.clone()),
                "party_id" => std::mem::replace(&mut row.party_id, o.value.clone()),
                "party_name" => std::mem::replace(&mut row.party_name, o.value.clone()),
                "session_id" => std::mem::replace(&mut row.session_id, o.value.clone()),
                "vote_date" => {
                    let old = date_text(row.vote_date);
                    row.vote_date = Some(parse_date_strict(o)?);
                    old
                }
                "total_for" => {
                    let old = row.total_for.map(|v| v.to_string()).unwrap_or_default();
                    row.total_for = Some(parse_u32_strict(o)?);
                    old
                }
                "total_against" => {
                    let old = row.total_against.map(|v| v.to_string()).unwrap_or_default();
                    row.total_against = Some(parse_u32_strict(o)?);
                    old
                }
                "member_gender" => {
                    let old = row.member_gender;
                    row.member_gender = Gender::parse(&o.value);
                    (if old == Gender::Unknown { "" } else { old.label() }).to_string()
                }
                "is_current" => {
                    let old = if row.is_current { "true" } else { "false" };
                    row.is_current = matches!(o.value.as_str(), "true" | "1" | "yes");
                    old.to_string()
                }
                _ => return Err(override_error(o, "field not overridable")),
            };
            Ok((old, true))
        }
        DatasetKind::Protocols => {
            let row = bundle
                .protocols
                .iter_mut()
                .find(|p| p.meeting_id == o.row_key)
                .ok_or_else(|| override_error(o, "no such row"))?;
            let old = match o.field.as_str() {
                "committee_id" => std::mem::replace(&mut row.committee_id, o.value.clone()),
                "meeting_title" => std::mem::replace(&mut row.meeting_title, o.value.clone()),
                "speaker_name" => std::mem::replace(&mut row.speaker_name, o.value.clone()),
                "description" => {
                    let old = row.description.clone().unwrap_or_default();
                    row.description = Some(o.value.clone());
                    old
                }
                "date" => {
                    let old = date_text(row.date);
                    row.date = Some(parse_date_strict(o)?);
                    old
                }
                "attendees" => {
                    let old = row.attendees.join(";");
                    row.attendees = o
                        .value
                        .split(';')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                    old
                }
                "attendee_count" => {
                    let old = row.attendee_count.map(|v| v.to_string()).unwrap_or_default();
                    row.attendee_count = Some(parse_u32_strict(o)?);
                    old
                }
                _ => return Err(override_error(o, "field not overridable")),
            };
            Ok((old, true))
        }
    }
}

/// Final pass: attendee_count must equal the attendee list length.
fn recount_attendees(bundle: &mut RawBundle) {
    let mut fills = Vec::new();
    for (i, p) in bundle.protocols.iter().enumerate() {
        let actual = p.attendees.len() as u32;
        if p.attendee_count != Some(actual) {
            fills.push((i, p.attendee_count, actual));
        }
    }
    for (i, old, actual) in fills {
        bundle.protocols[i].attendee_count = Some(actual);
        let row_key = bundle.protocols[i].meeting_id.clone();
        log(
            bundle,
            DatasetKind::Protocols,
            row_key,
            "attendee_count",
            "recount",
            old.map(|v| v.to_string()).unwrap_or_default(),
            actual.to_string(),
        );
    }
}
