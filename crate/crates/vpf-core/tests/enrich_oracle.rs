//! Hand-join oracle: a 10-vote / 3-member / 2-bill fixture whose enriched
//! output was worked out by hand, compared field by field through the CSV.
//!
//! Precomputed embeddings keep the embedding cells hand-derivable.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;

use vpf_core::config::load_country_config;
use vpf_core::features::{build_enriched, write_enriched, Embedder, PrecomputedEmbedder};
use vpf_core::schema::{
    BillRecord, Gender, MemberProfile, ProtocolRecord, RawBundle, RawVoteRecord, VoteResult,
};

fn date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

fn member(
    id: &str,
    first: &str,
    last: &str,
    gender: Gender,
    email: Option<&str>,
    party: &str,
    position: &str,
) -> MemberProfile {
    MemberProfile {
        person_id: id.into(),
        parliament_number: 7,
        first_name: first.into(),
        last_name: last.into(),
        gender,
        email: email.map(String::from),
        party: party.into(),
        position: position.into(),
    }
}

#[allow(clippy::too_many_arguments)]
fn vote(
    vote_id: &str,
    session: &str,
    day: &str,
    totals: (u32, u32),
    member_id: &str,
    name: &str,
    party: (&str, &str),
    gender: Gender,
    result: VoteResult,
) -> RawVoteRecord {
    RawVoteRecord {
        country: "handland".into(),
        vote_id: vote_id.into(),
        parliament_number: 7,
        session_id: session.into(),
        vote_date: date(day),
        total_for: Some(totals.0),
        total_against: Some(totals.1),
        member_id: member_id.into(),
        member_name: name.into(),
        party_id: party.0.into(),
        party_name: party.1.into(),
        member_gender: gender,
        is_current: true,
        vote_result: result,
    }
}

fn fixture() -> RawBundle {
    let members = vec![
        member("p1", "Ida", "Reyes", Gender::Female, Some("ida@x.example"), "Sun", "Prime Minister"),
        member("p2", "Jon", "Park", Gender::Male, None, "Sun", ""),
        member("p3", "Kay", "Wren", Gender::Female, Some("kay@x.example"), "Moon", "Committee Chair"),
    ];
    let bills = vec![
        BillRecord {
            bill_id: "B1".into(),
            parliament_number: 7,
            title: "river cleanup act".into(),
            committee_id: Some("C1".into()),
            date: date("2021-02-01"),
            description: Some("cleanup of the river basin".into()),
            speaker_name: "p1".into(),
        },
        BillRecord {
            bill_id: "B2".into(),
            parliament_number: 7,
            title: "transit fare act".into(),
            committee_id: Some("C2".into()),
            date: date("2021-06-01"),
            description: None,
            speaker_name: "p3".into(),
        },
    ];
    let protocols = vec![
        ProtocolRecord {
            meeting_id: "M1".into(),
            parliament_number: 7,
            committee_id: "C1".into(),
            meeting_title: "river session".into(),
            date: date("2021-01-15"),
            description: Some("river cleanup debate river".into()),
            attendees: vec!["p1".into(), "p3".into()],
            attendee_count: Some(2),
            speaker_name: "p3".into(),
        },
        ProtocolRecord {
            meeting_id: "M2".into(),
            parliament_number: 7,
            committee_id: "C2".into(),
            meeting_title: "transit session".into(),
            date: date("2021-05-20"),
            description: Some("fare schedules and transit matters".into()),
            attendees: vec!["p2".into()],
            attendee_count: Some(1),
            speaker_name: "p2".into(),
        },
        // After both B1 ballots: joins nothing, counts nothing.
        ProtocolRecord {
            meeting_id: "M3".into(),
            parliament_number: 7,
            committee_id: "C1".into(),
            meeting_title: "river followup".into(),
            date: date("2021-03-01"),
            description: Some("river followup".into()),
            attendees: vec!["p1".into()],
            attendee_count: Some(1),
            speaker_name: "p1".into(),
        },
    ];
    let votes = vec![
        vote("v1", "B1", "2021-02-10", (2, 1), "p1", "Ida Reyes", ("s", "Sun"), Gender::Female, VoteResult::For),
        vote("v1", "B1", "2021-02-10", (2, 1), "p2", "Jon Park", ("s", "Sun"), Gender::Male, VoteResult::For),
        vote("v1", "B1", "2021-02-10", (2, 1), "p3", "Kay Wren", ("m", "Moon"), Gender::Female, VoteResult::Against),
        vote("v2", "B1", "2021-02-20", (3, 0), "p1", "Ida Reyes", ("s", "Sun"), Gender::Female, VoteResult::For),
        vote("v2", "B1", "2021-02-20", (3, 0), "p2", "Jon Park", ("s", "Sun"), Gender::Male, VoteResult::For),
        vote("v2", "B1", "2021-02-20", (3, 0), "p3", "Kay Wren", ("m", "Moon"), Gender::Female, VoteResult::For),
        vote("v3", "B2", "2021-06-10", (2, 0), "p1", "Ida Reyes", ("s", "Sun"), Gender::Female, VoteResult::For),
        vote("v3", "B2", "2021-06-10", (2, 0), "p2", "Jon Park", ("s", "Sun"), Gender::Male, VoteResult::Abstain),
        vote("v3", "B2", "2021-06-10", (2, 0), "p3", "Kay Wren", ("m", "Moon"), Gender::Female, VoteResult::For),
        // Dangling member: bill joins, profile does not.
        vote("v4", "B2", "2021-06-15", (1, 0), "p9", "Zed Omri", ("c", "Comet"), Gender::Unknown, VoteResult::For),
    ];
    RawBundle {
        members,
        bills,
        votes,
        protocols,
        repair_log: Vec::new(),
    }
}

/// Every cell below was derived by hand from the fixture:
/// - joins: v1/v2 -> B1 -> committee C1 -> latest meeting on or before the
///   vote date is M1 (M3 is later); v3/v4 -> B2 -> C2 -> M2.
/// - subject terms: B1 {river, cleanup}, B2 {transit, fare} ("act", "of",
///   "the", "and" are stopwords).
/// - reference counts before the vote, attended only: p1/p3 get 3 from M1
///   (river x2 + cleanup) on B1 ballots; p2 gets 2 from M2 (fare + transit)
///   on v3; everything else 0.
/// - ranks: prime minister 10, committee chair 3, unlisted 0.
/// - alliance: Sun in coalition, Moon not, Comet unlisted -> default false.
const EXPECTED: &str = "\
index,country,vote_id,parliament_number,session_id,vote_date,total_for,total_against,member_id,member_name,party_name,gender,email,party_id,importance_rank,is_in_alliance,is_current,bill_id,title,bill_embedding,committee_id,attendees,attendee_count,speaker_name,reference_count,vote_result
0,handland,v1,7,B1,2021-02-10,2,1,p1,Ida Reyes,Sun,Female,ida@x.example,s,10,true,true,B1,river cleanup act,0.25;-0.5,C1,p1;p3,2,p3,3,1
1,handland,v1,7,B1,2021-02-10,2,1,p2,Jon Park,Sun,Male,,s,0,true,true,B1,river cleanup act,0.25;-0.5,C1,p1;p3,2,p3,0,1
2,handland,v1,7,B1,2021-02-10,2,1,p3,Kay Wren,Moon,Female,kay@x.example,m,3,false,true,B1,river cleanup act,0.25;-0.5,C1,p1;p3,2,p3,3,2
3,handland,v2,7,B1,2021-02-20,3,0,p1,Ida Reyes,Sun,Female,ida@x.example,s,10,true,true,B1,river cleanup act,0.25;-0.5,C1,p1;p3,2,p3,3,1
4,handland,v2,7,B1,2021-02-20,3,0,p2,Jon Park,Sun,Male,,s,0,true,true,B1,river cleanup act,0.25;-0.5,C1,p1;p3,2,p3,0,1
5,handland,v2,7,B1,2021-02-20,3,0,p3,Kay Wren,Moon,Female,kay@x.example,m,3,false,true,B1,river cleanup act,0.25;-0.5,C1,p1;p3,2,p3,3,1
6,handland,v3,7,B2,2021-06-10,2,0,p1,Ida Reyes,Sun,Female,ida@x.example,s,10,true,true,B2,transit fare act,1;0,C2,p2,1,p2,0,1
7,handland,v3,7,B2,2021-06-10,2,0,p2,Jon Park,Sun,Male,,s,0,true,true,B2,transit fare act,1;0,C2,p2,1,p2,2,3
8,handland,v3,7,B2,2021-06-10,2,0,p3,Kay Wren,Moon,Female,kay@x.example,m,3,false,true,B2,transit fare act,1;0,C2,p2,1,p2,0,1
9,handland,v4,7,B2,2021-06-15,1,0,p9,Zed Omri,Comet,,,c,0,false,true,B2,transit fare act,1;0,C2,p2,1,p2,0,1
";

#[test]
fn hand_join_oracle_matches_field_by_field() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    fs::write(
        dir.path().join("embeddings.csv"),
        "bill_id,v0,v1\nB1,0.25,-0.5\nB2,1,0\n",
    )
    .unwrap();

    let config = load_country_config(&dir.path().join("config.json")).unwrap();
    let embedder = PrecomputedEmbedder::from_csv(&dir.path().join("embeddings.csv")).unwrap();
    assert_eq!(embedder.dim(), 2);

    let (records, coverage) = build_enriched(&fixture(), &config, &embedder).unwrap();
    assert_eq!(records.len(), 10);
    assert!((coverage.member_join - 0.9).abs() < 1e-12);
    assert!((coverage.bill_join - 1.0).abs() < 1e-12);
    assert_eq!(coverage.affiliation_defaulted, 1);

    let out = dir.path().join("enriched.csv");
    write_enriched(&out, &records).unwrap();
    let produced = fs::read_to_string(&out).unwrap();
    assert_eq!(produced, EXPECTED);
}

fn write_config(dir: &Path) {
    let json = serde_json::json!({
        "country": "handland",
        "year_range": [2020, 2022],
        "vote_token_map": {"1": 1, "2": 2, "3": 3},
        "admissible_vote_results": [1, 2, 3],
        "coalition_table": [
            {"parliament_number": 7, "party_name": "Sun", "in_coalition": true},
            {"parliament_number": 7, "party_name": "Moon", "in_coalition": false}
        ],
        "coalition_default": false,
        "position_rank_dict": {"prime minister": 10, "committee chair": 3},
        "rank_max": 10,
        "bill_link": "session_id",
        "stopwords": ["act", "the", "and", "of"],
        "embedding": {"dim": 2, "seed": 0}
    });
    fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&json).unwrap(),
    )
    .unwrap();
}
