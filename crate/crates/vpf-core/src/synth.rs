//! Synthetic parliament generator.
//!
//! Produces a country whose members vote on party lines with a configurable
//! defection rate: the coalition supports some bill topics and opposes the
//! rest, the opposition mirrors it, and individual (member, ballot) pairs
//! flip away from their line at the defection rate. Extra defections can be
//! planted at known positions in the chronologically last quarter of the
//! ballots, which gives anomaly detection a ground truth to find.
//!
//! Everything is keyed by hashes of (seed, member, ballot), so generation
//! is deterministic and streamable row by row.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::config::{BillLink, CoalitionEntry, CountryConfig, EmbeddingConfig, SourceFormat};
use crate::hashing::{fnv1a_seeded, hash_unit};
use crate::schema::{
    BillRecord, DatasetKind, Gender, MemberProfile, ProtocolRecord, RawBundle, RawVoteRecord,
    VoteResult,
};

const TOPICS: [&str; 5] = ["budget", "health", "defense", "transport", "education"];
/// Which topics the coalition supports; the opposition takes the other side.
const COALITION_SUPPORTS: [bool; 5] = [true, false, true, true, false];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub country: String,
    pub n_parties: usize,
    /// Parties 0..n_coalition vote the government line.
    pub n_coalition: usize,
    pub members_per_party: usize,
    pub n_ballots: usize,
    /// Probability that a (member, ballot) pair flips away from its line.
    pub defection_rate: f64,
    /// Probability that a vote becomes an abstention instead.
    pub abstain_rate: f64,
    /// Defections planted at known (member, ballot) pairs in the last
    /// quarter of the ballots.
    pub planted_defections: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub embedding_dim: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            country: "synthland".to_string(),
            n_parties: 6,
            n_coalition: 4,
            members_per_party: 20,
            n_ballots: 100,
            defection_rate: 0.10,
            abstain_rate: 0.0,
            planted_defections: 0,
            seed: 7,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 6).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2022, 12, 20).unwrap(),
            embedding_dim: 16,
        }
    }
}

impl SynthConfig {
    pub fn n_members(&self) -> usize {
        self.n_parties * self.members_per_party
    }

    pub fn n_votes(&self) -> usize {
        self.n_members() * self.n_ballots
    }

    fn party_name(&self, party: usize) -> String {
        format!("Party {}", (b'A' + (party % 26) as u8) as char)
    }

    fn member_id(&self, party: usize, idx: usize) -> String {
        format!("m{party}_{idx:03}")
    }

    fn member_name(&self, party: usize, idx: usize) -> String {
        format!("Member {}{idx:03}", (b'A' + (party % 26) as u8) as char)
    }

    fn ballot_date(&self, ballot: usize) -> NaiveDate {
        let span = (self.end_date - self.start_date).num_days().max(1);
        let offset = span * ballot as i64 / self.n_ballots.max(1) as i64;
        self.start_date + chrono::Days::new(offset as u64)
    }

    fn topic(&self, ballot: usize) -> usize {
        // Deterministic but not strictly periodic.
        (fnv1a_seeded(self.seed, format!("topic:{ballot}").as_bytes()) % TOPICS.len() as u64)
            as usize
    }

    /// The party-line vote for a party on a ballot.
    pub fn party_line(&self, party: usize, ballot: usize) -> VoteResult {
        let in_coalition = party < self.n_coalition;
        let supports = COALITION_SUPPORTS[self.topic(ballot)];
        if in_coalition == supports {
            VoteResult::For
        } else {
            VoteResult::Against
        }
    }

    fn chance(&self, tag: &str, party: usize, idx: usize, ballot: usize) -> f64 {
        hash_unit(fnv1a_seeded(
            self.seed,
            format!("{tag}:{party}:{idx}:{ballot}").as_bytes(),
        ))
    }

    /// Ballot index of the i-th planted defection (last quarter of ballots).
    fn planted_ballot(&self, i: usize) -> usize {
        let start = self.n_ballots * 3 / 4;
        let window = (self.n_ballots - start).max(1);
        start + (i * 7 + 3) % window
    }

    /// The planted (vote_id, member_id) pairs, in generation order.
    pub fn planted_pairs(&self) -> Vec<(String, String)> {
        (0..self.planted_defections)
            .map(|i| {
                let ballot = self.planted_ballot(i);
                let party = i % self.n_parties;
                let idx = (i / self.n_parties) % self.members_per_party;
                (format!("v{ballot:06}"), self.member_id(party, idx))
            })
            .collect()
    }

    /// Is this (member, ballot) one of the planted defections?
    fn is_planted(&self, party: usize, idx: usize, ballot: usize) -> bool {
        (0..self.planted_defections).any(|i| {
            self.planted_ballot(i) == ballot
                && i % self.n_parties == party
                && (i / self.n_parties) % self.members_per_party == idx
        })
    }

    /// The actual vote cast by one member on one ballot.
    pub fn cast_vote(&self, party: usize, idx: usize, ballot: usize) -> VoteResult {
        let line = self.party_line(party, ballot);
        let planted = self.is_planted(party, idx, ballot);
        let flip = |r: VoteResult| match r {
            VoteResult::For => VoteResult::Against,
            _ => VoteResult::For,
        };
        if planted {
            return flip(line);
        }
        if self.abstain_rate > 0.0 && self.chance("abstain", party, idx, ballot) < self.abstain_rate
        {
            return VoteResult::Abstain;
        }
        if self.chance("defect", party, idx, ballot) < self.defection_rate {
            flip(line)
        } else {
            line
        }
    }
}

pub struct SynthOutput {
    pub bundle: RawBundle,
    pub config: CountryConfig,
    /// Planted defections as (vote_id, member_id).
    pub planted: Vec<(String, String)>,
}

fn member_position(party: usize, idx: usize) -> String {
    match (party, idx) {
        (0, 0) => "Prime Minister".to_string(),
        (_, 0) => "Committee Chair".to_string(),
        (1, 1) => "Deputy Speaker".to_string(),
        _ => "Member of Parliament".to_string(),
    }
}

fn members(cfg: &SynthConfig) -> Vec<MemberProfile> {
    let mut out = Vec::with_capacity(cfg.n_members());
    for party in 0..cfg.n_parties {
        for idx in 0..cfg.members_per_party {
            let name = cfg.member_name(party, idx);
            out.push(MemberProfile {
                person_id: cfg.member_id(party, idx),
                parliament_number: 1,
                first_name: "Member".to_string(),
                last_name: name[7..].to_string(),
                gender: if (party + idx) % 2 == 0 {
                    Gender::Female
                } else {
                    Gender::Male
                },
                email: if idx % 3 == 0 {
                    Some(format!("{}@parliament.example", cfg.member_id(party, idx)))
                } else {
                    None
                },
                party: cfg.party_name(party),
                position: member_position(party, idx),
            });
        }
    }
    out
}

fn bill(cfg: &SynthConfig, ballot: usize) -> BillRecord {
    let topic = TOPICS[cfg.topic(ballot)];
    BillRecord {
        bill_id: format!("b{ballot:06}"),
        parliament_number: 1,
        title: format!("{topic} reform act {ballot}"),
        committee_id: Some(format!("c-{topic}")),
        date: Some(cfg.ballot_date(ballot)),
        description: Some(format!(
            "a proposal concerning {topic} policy and the national {topic} program"
        )),
        speaker_name: cfg.member_id(ballot % cfg.n_parties, 0),
    }
}

fn protocols(cfg: &SynthConfig) -> Vec<ProtocolRecord> {
    // One committee meeting per topic per year.
    let mut out = Vec::new();
    let years = cfg.start_date.year()..=cfg.end_date.year();
    let mut meeting = 0usize;
    for year in years {
        for (t, topic) in TOPICS.iter().enumerate() {
            let date = NaiveDate::from_ymd_opt(year, (t as u32 % 12) + 1, 10).unwrap();
            if date < cfg.start_date || date > cfg.end_date {
                continue;
            }
            let attendees: Vec<String> = (0..cfg.n_parties)
                .flat_map(|party| {
                    (0..cfg.members_per_party)
                        .filter(move |idx| (party + idx + t) % 3 == 0)
                        .map(move |idx| (party, idx))
                })
                .map(|(party, idx)| cfg.member_id(party, idx))
                .collect();
            out.push(ProtocolRecord {
                meeting_id: format!("mt{meeting:05}"),
                parliament_number: 1,
                committee_id: format!("c-{topic}"),
                meeting_title: format!("{topic} committee session {year}"),
                date: Some(date),
                description: Some(format!(
                    "minutes of the {topic} committee: {topic} allocations, {topic} oversight"
                )),
                attendee_count: Some(attendees.len() as u32),
                attendees,
                speaker_name: cfg.member_id(t % cfg.n_parties, 0),
            });
            meeting += 1;
        }
    }
    out
}

fn vote_row(cfg: &SynthConfig, party: usize, idx: usize, ballot: usize) -> RawVoteRecord {
    let result = cfg.cast_vote(party, idx, ballot);
    RawVoteRecord {
        country: cfg.country.clone(),
        vote_id: format!("v{ballot:06}"),
        parliament_number: 1,
        session_id: format!("b{ballot:06}"),
        vote_date: Some(cfg.ballot_date(ballot)),
        total_for: None, // filled after tallying
        total_against: None,
        member_id: cfg.member_id(party, idx),
        member_name: cfg.member_name(party, idx),
        party_id: format!("p{party}"),
        party_name: cfg.party_name(party),
        member_gender: if (party + idx).is_multiple_of(2) {
            Gender::Female
        } else {
            Gender::Male
        },
        is_current: true,
        vote_result: result,
    }
}

/// Country config matching the generated data.
pub fn country_config(cfg: &SynthConfig) -> CountryConfig {
    let mut vote_token_map = BTreeMap::new();
    vote_token_map.insert("1".to_string(), VoteResult::For);
    vote_token_map.insert("2".to_string(), VoteResult::Against);
    vote_token_map.insert("3".to_string(), VoteResult::Abstain);
    let mut position_rank_dict = BTreeMap::new();
    position_rank_dict.insert("prime minister".to_string(), 10);
    position_rank_dict.insert("deputy speaker".to_string(), 5);
    position_rank_dict.insert("committee chair".to_string(), 3);
    let coalition_table = (0..cfg.n_parties)
        .map(|p| CoalitionEntry {
            parliament_number: 1,
            party_name: cfg.party_name(p),
            in_coalition: p < cfg.n_coalition,
        })
        .collect();
    CountryConfig {
        country: cfg.country.clone(),
        year_range: (cfg.start_date.year(), cfg.end_date.year()),
        source_format: DatasetKind::ALL
            .iter()
            .map(|&k| (k, SourceFormat::Delimited))
            .collect(),
        delimiter: ',',
        date_formats: vec!["%Y-%m-%d".to_string()],
        field_map: BTreeMap::new(),
        vote_token_map,
        coalition_table,
        coalition_default: Some(false),
        position_rank_dict,
        admissible_vote_results: [VoteResult::For, VoteResult::Against, VoteResult::Abstain]
            .into_iter()
            .collect(),
        rank_max: 10,
        bill_link: BillLink::SessionId,
        stopwords: ["act", "reform", "the", "and"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        embedding: EmbeddingConfig {
            dim: cfg.embedding_dim,
            seed: cfg.seed,
            file: None,
        },
        parliament_number_categorical: false,
    }
}

/// Generate the full bundle in memory (repaired totals included).
pub fn generate_bundle(cfg: &SynthConfig) -> SynthOutput {
    let mut votes = Vec::with_capacity(cfg.n_votes());
    for ballot in 0..cfg.n_ballots {
        let mut total_for = 0u32;
        let mut total_against = 0u32;
        let start = votes.len();
        for party in 0..cfg.n_parties {
            for idx in 0..cfg.members_per_party {
                let row = vote_row(cfg, party, idx, ballot);
                match row.vote_result {
                    VoteResult::For => total_for += 1,
                    VoteResult::Against => total_against += 1,
                    _ => {}
                }
                votes.push(row);
            }
        }
        for row in &mut votes[start..] {
            row.total_for = Some(total_for);
            row.total_against = Some(total_against);
        }
    }
    let bundle = RawBundle {
        members: members(cfg),
        bills: (0..cfg.n_ballots).map(|b| bill(cfg, b)).collect(),
        votes,
        protocols: protocols(cfg),
        repair_log: Vec::new(),
    };
    SynthOutput {
        bundle,
        config: country_config(cfg),
        planted: cfg.planted_pairs(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> String {
    format!("{}: {e}", path.display())
}

/// Write a country fixture directory in source-export shape: delimited
/// members/votes/bills/protocols plus config.json. Votes are streamed row
/// by row so multi-million-row fixtures stay cheap to produce.
pub fn write_country_fixture(dir: &Path, cfg: &SynthConfig) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let members_path = dir.join("members.csv");
    crate::canon::write_members(&members_path, &members(cfg)).map_err(|e| e.to_string())?;

    let bills: Vec<BillRecord> = (0..cfg.n_ballots).map(|b| bill(cfg, b)).collect();
    crate::canon::write_bills(&dir.join("bills.csv"), &bills).map_err(|e| e.to_string())?;
    crate::canon::write_protocols(&dir.join("protocols.csv"), &protocols(cfg))
        .map_err(|e| e.to_string())?;

    let votes_path = dir.join("votes.csv");
    let file = fs::File::create(&votes_path).map_err(|e| io_err(&votes_path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(crate::canon::VOTES_HEADER)
        .map_err(|e| e.to_string())?;
    for ballot in 0..cfg.n_ballots {
        // Tally the ballot first so totals can be emitted inline.
        let mut total_for = 0u32;
        let mut total_against = 0u32;
        for party in 0..cfg.n_parties {
            for idx in 0..cfg.members_per_party {
                match cfg.cast_vote(party, idx, ballot) {
                    VoteResult::For => total_for += 1,
                    VoteResult::Against => total_against += 1,
                    _ => {}
                }
            }
        }
        let date = cfg.ballot_date(ballot).format("%Y-%m-%d").to_string();
        for party in 0..cfg.n_parties {
            for idx in 0..cfg.members_per_party {
                let result = cfg.cast_vote(party, idx, ballot);
                // A sliver of missing names keeps the repair pass honest.
                let member_name = if (party + idx + ballot) % 997 == 0 {
                    String::new()
                } else {
                    cfg.member_name(party, idx)
                };
                w.write_record([
                    cfg.country.as_str(),
                    &format!("v{ballot:06}"),
                    "1",
                    &format!("b{ballot:06}"),
                    &date,
                    &total_for.to_string(),
                    &total_against.to_string(),
                    &cfg.member_id(party, idx),
                    &member_name,
                    &format!("p{party}"),
                    &cfg.party_name(party),
                    if (party + idx) % 2 == 0 { "Female" } else { "Male" },
                    "true",
                    &result.code().to_string(),
                ])
                .map_err(|e| e.to_string())?;
            }
        }
    }
    w.flush().map_err(|e| e.to_string())?;

    let config_path = dir.join("config.json");
    let config_json = config_json_text(cfg);
    let mut f = fs::File::create(&config_path).map_err(|e| io_err(&config_path, e))?;
    f.write_all(config_json.as_bytes())
        .map_err(|e| io_err(&config_path, e))?;
    Ok(())
}

/// The config.json text for a generated country.
pub fn config_json_text(cfg: &SynthConfig) -> String {
    let coalition: Vec<serde_json::Value> = (0..cfg.n_parties)
        .map(|p| {
            serde_json::json!({
                "parliament_number": 1,
                "party_name": cfg.party_name(p),
                "in_coalition": p < cfg.n_coalition,
            })
        })
        .collect();
    let json = serde_json::json!({
        "country": cfg.country,
        "year_range": [cfg.start_date.year(), cfg.end_date.year()],
        "source_format": {
            "members": "delimited",
            "bills": "delimited",
            "votes": "delimited",
            "protocols": "delimited"
        },
        "vote_token_map": {"1": 1, "2": 2, "3": 3},
        "admissible_vote_results": [1, 2, 3],
        "coalition_table": coalition,
        "coalition_default": false,
        "position_rank_dict": {
            "prime minister": 10,
            "deputy speaker": 5,
            "committee chair": 3
        },
        "rank_max": 10,
        "bill_link": "session_id",
        "stopwords": ["act", "reform", "the", "and"],
        "embedding": {"dim": cfg.embedding_dim, "seed": cfg.seed}
    });
    serde_json::to_string_pretty(&json).unwrap() + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::validate_bundle;

    fn small() -> SynthConfig {
        SynthConfig {
            n_parties: 4,
            n_coalition: 3,
            members_per_party: 5,
            n_ballots: 40,
            defection_rate: 0.1,
            planted_defections: 8,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn generated_bundle_is_structurally_valid() {
        let out = generate_bundle(&small());
        let report = validate_bundle(&out.bundle);
        assert!(report.is_clean(), "violations: {report:?}");
        assert_eq!(out.bundle.votes.len(), 4 * 5 * 40);
    }

    #[test]
    fn planted_defections_are_in_the_last_quarter_and_off_line() {
        let cfg = small();
        let out = generate_bundle(&cfg);
        assert_eq!(out.planted.len(), 8);
        let by_key: BTreeMap<(String, String), VoteResult> = out
            .bundle
            .votes
            .iter()
            .map(|v| ((v.vote_id.clone(), v.member_id.clone()), v.vote_result))
            .collect();
        for (vote_id, member_id) in &out.planted {
            let ballot: usize = vote_id[1..].parse().unwrap();
            assert!(ballot >= cfg.n_ballots * 3 / 4);
            let party = (0..cfg.n_parties)
                .find(|&p| member_id.starts_with(&format!("m{p}_")))
                .unwrap();
            let line = cfg.party_line(party, ballot);
            let cast = by_key[&(vote_id.clone(), member_id.clone())];
            assert_ne!(cast, line, "planted defection should flip the line");
        }
    }

    #[test]
    fn defection_rate_is_roughly_honored() {
        let cfg = SynthConfig {
            n_ballots: 100,
            planted_defections: 0,
            ..small()
        };
        let out = generate_bundle(&cfg);
        let off_line = out
            .bundle
            .votes
            .iter()
            .filter(|v| {
                let ballot: usize = v.vote_id[1..].parse().unwrap();
                let party: usize = v.party_id[1..].parse().unwrap();
                v.vote_result != cfg.party_line(party, ballot)
            })
            .count();
        let rate = off_line as f64 / out.bundle.votes.len() as f64;
        assert!((rate - 0.1).abs() < 0.02, "rate = {rate}");
    }

    #[test]
    fn fixture_files_parse_back_through_ingest() {
        let cfg = SynthConfig {
            n_ballots: 10,
            ..small()
        };
        let dir = tempfile::tempdir().unwrap();
        write_country_fixture(dir.path(), &cfg).unwrap();
        let config = crate::config::load_country_config(&dir.path().join("config.json")).unwrap();
        let (bundle, rejects) = crate::ingest::parse_bundle(dir.path(), &config).unwrap();
        assert!(rejects.is_empty());
        assert_eq!(bundle.votes.len(), cfg.n_votes());
        assert_eq!(bundle.members.len(), cfg.n_members());
        assert_eq!(bundle.bills.len(), 10);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_bundle(&small());
        let b = generate_bundle(&small());
        assert_eq!(a.bundle, b.bundle);
        assert_eq!(a.planted, b.planted);
    }
}
