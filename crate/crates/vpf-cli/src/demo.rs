//! The bundled demo country: a small synthetic parliament exported in three
//! different source formats, with a sprinkling of missing values, one
//! unparseable vote row, and a manual override, so a full pipeline run
//! exercises every repair path.

use std::fs;
use std::path::Path;

use vpf_core::schema::{DatasetKind, Gender};
use vpf_core::synth::{generate_bundle, SynthConfig};

use crate::logging;
use crate::CliError;

pub fn demo_config(seed: u64) -> SynthConfig {
    SynthConfig {
        country: "demoland".to_string(),
        n_parties: 5,
        n_coalition: 3,
        members_per_party: 2,
        n_ballots: 20,
        defection_rate: 0.08,
        abstain_rate: 0.05,
        planted_defections: 3,
        seed,
        start_date: chrono::NaiveDate::from_ymd_opt(2019, 1, 8).unwrap(),
        end_date: chrono::NaiveDate::from_ymd_opt(2021, 12, 14).unwrap(),
        embedding_dim: 16,
    }
}

/// Write the demo country: members.csv (delimited), bills.json
/// (json_records), votes.csv (delimited), protocols.json (odata_json),
/// config.json, and overrides.csv.
pub fn write_demo_country(out: &Path, seed: u64) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Input(e.to_string());
    fs::create_dir_all(out).map_err(|e| err(&e))?;
    let cfg = demo_config(seed);
    let output = generate_bundle(&cfg);
    let bundle = output.bundle;

    // Members: delimited.
    let mut w = csv::Writer::from_path(out.join("members.csv")).map_err(|e| err(&e))?;
    w.write_record(vpf_core::canon::MEMBERS_HEADER).map_err(|e| err(&e))?;
    for m in &bundle.members {
        w.write_record([
            m.person_id.as_str(),
            &m.parliament_number.to_string(),
            &m.first_name,
            &m.last_name,
            match m.gender {
                Gender::Unknown => "",
                g => g.label(),
            },
            m.email.as_deref().unwrap_or(""),
            &m.party,
            &m.position,
        ])
        .map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))?;

    // Bills: a JSON array of records, with one title blanked so the
    // override file has something to fix.
    let bills: Vec<serde_json::Value> = bundle
        .bills
        .iter()
        .map(|b| {
            let title = if b.bill_id == "b000002" { "" } else { b.title.as_str() };
            serde_json::json!({
                "bill_id": b.bill_id,
                "parliament_number": b.parliament_number,
                "title": title,
                "committee_id": b.committee_id,
                "date": b.date.map(|d| d.format("%Y-%m-%d").to_string()),
                "description": b.description,
                "speaker_name": b.speaker_name,
            })
        })
        .collect();
    fs::write(
        out.join("bills.json"),
        serde_json::to_string_pretty(&bills).map_err(|e| err(&e))? + "\n",
    )
    .map_err(|e| err(&e))?;

    // Votes: delimited, with injected gaps. Every 23rd row loses its member
    // name (cross-join fill), one mid-ballot row loses its date (neighbor
    // fill), and one row carries an unmapped token (reject).
    let mut w = csv::Writer::from_path(out.join("votes.csv")).map_err(|e| err(&e))?;
    w.write_record(vpf_core::canon::VOTES_HEADER).map_err(|e| err(&e))?;
    for (i, v) in bundle.votes.iter().enumerate() {
        let member_name = if i % 23 == 7 { "" } else { v.member_name.as_str() };
        let vote_date = if i == 15 {
            String::new()
        } else {
            v.vote_date.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default()
        };
        let token = if i == 41 {
            "9".to_string()
        } else {
            v.vote_result.code().to_string()
        };
        w.write_record([
            v.country.as_str(),
            &v.vote_id,
            &v.parliament_number.to_string(),
            &v.session_id,
            &vote_date,
            &v.total_for.map(|t| t.to_string()).unwrap_or_default(),
            &v.total_against.map(|t| t.to_string()).unwrap_or_default(),
            &v.member_id,
            member_name,
            &v.party_id,
            &v.party_name,
            match v.member_gender {
                Gender::Unknown => "",
                g => g.label(),
            },
            if v.is_current { "true" } else { "false" },
            &token,
        ])
        .map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))?;

    // Protocols: ODATA-style envelope.
    let protocols: Vec<serde_json::Value> = bundle
        .protocols
        .iter()
        .map(|p| {
            serde_json::json!({
                "meeting_id": p.meeting_id,
                "parliament_number": p.parliament_number,
                "committee_id": p.committee_id,
                "meeting_title": p.meeting_title,
                "date": p.date.map(|d| d.format("%Y-%m-%d").to_string()),
                "description": p.description,
                "attendees": p.attendees,
                "attendee_count": p.attendee_count,
                "speaker_name": p.speaker_name,
            })
        })
        .collect();
    let envelope = serde_json::json!({
        "@odata.context": "demoland/$metadata#protocols",
        "value": protocols,
    });
    fs::write(
        out.join("protocols.json"),
        serde_json::to_string_pretty(&envelope).map_err(|e| err(&e))? + "\n",
    )
    .map_err(|e| err(&e))?;

    // Config: same shape the generator declares, but with the demo's
    // mixed source formats.
    let mut config: serde_json::Value =
        serde_json::from_str(&vpf_core::synth::config_json_text(&cfg)).map_err(|e| err(&e))?;
    config["source_format"] = serde_json::json!({
        "members": "delimited",
        "bills": "json_records",
        "votes": "delimited",
        "protocols": "odata_json"
    });
    fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(&config).map_err(|e| err(&e))? + "\n",
    )
    .map_err(|e| err(&e))?;

    // Manual override restoring the blanked bill title.
    let title = bundle
        .bills
        .iter()
        .find(|b| b.bill_id == "b000002")
        .map(|b| b.title.clone())
        .unwrap_or_default();
    fs::write(
        out.join("overrides.csv"),
        format!("dataset,row_key,field,value\n{},b000002,title,{title}\n", DatasetKind::Bills.name()),
    )
    .map_err(|e| err(&e))?;

    logging::info(format!(
        "demo: wrote {} with {} vote rows",
        out.display(),
        bundle.votes.len()
    ));
    Ok(())
}
