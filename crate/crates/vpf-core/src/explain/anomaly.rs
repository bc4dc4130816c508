//! False-negative anomaly reporting: which mispredicted votes look like
//! genuine defections from the member's party line?

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::CoalitionEntry;
use crate::eval::PredictedVote;
use crate::features::EnrichedRecord;
use crate::schema::VoteResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyRow {
    pub vote_id: String,
    pub member_id: String,
    pub member_name: String,
    pub party_name: String,
    pub bill_id: String,
    pub title: String,
    pub actual: VoteResult,
    pub predicted: VoteResult,
    /// Actual vote differs from the member's party's modal actual vote on
    /// this bill.
    pub is_defection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCount {
    pub key: String,
    pub count: usize,
    /// Party groups only: the party's coalition status, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_coalition: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub rows: Vec<AnomalyRow>,
    pub by_party: Vec<GroupCount>,
    pub by_member: Vec<GroupCount>,
    pub by_bill: Vec<GroupCount>,
}

/// Collect every misprediction, flag defections against the party's modal
/// actual vote per bill, and group the counts by party, member, and bill,
/// sorted by descending count.
pub fn false_negative_report(
    predictions: &[PredictedVote],
    enriched: &[EnrichedRecord],
    coalition_table: &[CoalitionEntry],
) -> AnomalyReport {
    let by_key: BTreeMap<(&str, &str), &EnrichedRecord> = enriched
        .iter()
        .map(|r| ((r.vote_id.as_str(), r.member_id.as_str()), r))
        .collect();

    // Modal actual vote per (bill-or-vote scope, party), over all scored
    // rows, not just the mispredicted ones.
    let mut mode_counts: BTreeMap<(String, String), BTreeMap<VoteResult, usize>> = BTreeMap::new();
    for p in predictions {
        let Some(record) = by_key.get(&(p.vote_id.as_str(), p.member_id.as_str())) else {
            continue;
        };
        if record.party_name.is_empty() {
            continue;
        }
        let scope = record
            .bill_id
            .clone()
            .unwrap_or_else(|| format!("vote:{}", p.vote_id));
        *mode_counts
            .entry((scope, record.party_name.clone()))
            .or_default()
            .entry(p.actual)
            .or_default() += 1;
    }
    // Ties break toward the lower vote code.
    let modes: BTreeMap<&(String, String), VoteResult> = mode_counts
        .iter()
        .map(|(key, counts)| {
            let mode = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.code().cmp(&a.0.code())))
                .map(|(&r, _)| r)
                .expect("nonempty counts");
            (key, mode)
        })
        .collect();

    let mut rows = Vec::new();
    for p in predictions {
        if p.actual == p.predicted {
            continue;
        }
        let record = by_key.get(&(p.vote_id.as_str(), p.member_id.as_str()));
        let (member_name, party_name, bill_id, title) = match record {
            Some(r) => (
                r.member_name.clone(),
                r.party_name.clone(),
                r.bill_id.clone().unwrap_or_default(),
                r.title.clone().unwrap_or_default(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let is_defection = match record {
            Some(r) if !r.party_name.is_empty() => {
                let scope = r
                    .bill_id
                    .clone()
                    .unwrap_or_else(|| format!("vote:{}", p.vote_id));
                modes
                    .get(&(scope, r.party_name.clone()))
                    .map(|&mode| p.actual != mode)
                    .unwrap_or(false)
            }
            _ => false,
        };
        rows.push(AnomalyRow {
            vote_id: p.vote_id.clone(),
            member_id: p.member_id.clone(),
            member_name,
            party_name,
            bill_id,
            title,
            actual: p.actual,
            predicted: p.predicted,
            is_defection,
        });
    }

    let coalition_of = |party: &str| {
        coalition_table
            .iter()
            .find(|e| e.party_name == party)
            .map(|e| e.in_coalition)
    };

    let group = |key_of: &dyn Fn(&AnomalyRow) -> String, with_coalition: bool| {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for row in &rows {
            let key = key_of(row);
            if key.is_empty() {
                continue;
            }
            *counts.entry(key).or_default() += 1;
        }
        let mut groups: Vec<GroupCount> = counts
            .into_iter()
            .map(|(key, count)| GroupCount {
                in_coalition: if with_coalition { coalition_of(&key) } else { None },
                key,
                count,
            })
            .collect();
        groups.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
        groups
    };

    let by_party = group(&|r: &AnomalyRow| r.party_name.clone(), true);
    let by_member = group(
        &|r: &AnomalyRow| {
            if r.member_name.is_empty() {
                r.member_id.clone()
            } else {
                r.member_name.clone()
            }
        },
        false,
    );
    let by_bill = group(
        &|r: &AnomalyRow| {
            if r.title.is_empty() {
                r.bill_id.clone()
            } else {
                r.title.clone()
            }
        },
        false,
    );

    AnomalyReport {
        rows,
        by_party,
        by_member,
        by_bill,
    }
}

pub fn anomalies_csv(report: &AnomalyReport) -> String {
    let mut out = String::from(
        "vote_id,member_id,member_name,party_name,bill_id,title,actual,predicted,is_defection\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.vote_id,
            r.member_id,
            r.member_name,
            r.party_name,
            r.bill_id,
            r.title,
            r.actual.code(),
            r.predicted.code(),
            r.is_defection
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Gender;

    fn enriched(
        vote_id: &str,
        member_id: &str,
        member_name: &str,
        party: &str,
        bill_id: &str,
        actual: VoteResult,
    ) -> EnrichedRecord {
        EnrichedRecord {
            country: "t".into(),
            vote_id: vote_id.into(),
            parliament_number: 1,
            session_id: "s".into(),
            vote_date: None,
            total_for: None,
            total_against: None,
            member_id: member_id.into(),
            member_name: member_name.into(),
            party_name: party.into(),
            gender: Gender::Unknown,
            email: None,
            party_id: String::new(),
            importance_rank: 0,
            is_in_alliance: None,
            is_current: true,
            bill_id: Some(bill_id.to_string()),
            title: Some(format!("bill {bill_id}")),
            bill_embedding: None,
            committee_id: None,
            attendees: std::sync::Arc::new(vec![]),
            attendee_count: None,
            speaker_name: None,
            reference_count: None,
            vote_result: actual,
        }
    }

    fn predicted(
        vote_id: &str,
        member_id: &str,
        actual: VoteResult,
        pred: VoteResult,
    ) -> PredictedVote {
        PredictedVote {
            vote_id: vote_id.into(),
            member_id: member_id.into(),
            actual,
            predicted: pred,
        }
    }

    /// Three party members vote Against; one votes For and the model
    /// predicted the party line.
    #[test]
    fn defector_against_party_mode_is_flagged() {
        let mut records = Vec::new();
        let mut predictions = Vec::new();
        for (i, actual) in [
            VoteResult::Against,
            VoteResult::Against,
            VoteResult::Against,
            VoteResult::For,
        ]
        .iter()
        .enumerate()
        {
            let member = format!("m{i}");
            records.push(enriched("v1", &member, &format!("Member {i}"), "Meretz", "b1", *actual));
            predictions.push(predicted("v1", &member, *actual, VoteResult::Against));
        }
        let report = false_negative_report(&predictions, &records, &[]);
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.member_id, "m3");
        assert!(row.is_defection);
        assert_eq!(row.actual, VoteResult::For);
        assert_eq!(row.predicted, VoteResult::Against);
    }

    #[test]
    fn all_correct_predictions_give_empty_report() {
        let records = vec![enriched("v1", "m1", "A", "P", "b1", VoteResult::For)];
        let predictions = vec![predicted("v1", "m1", VoteResult::For, VoteResult::For)];
        let report = false_negative_report(&predictions, &records, &[]);
        assert!(report.rows.is_empty());
        assert!(report.by_party.is_empty());
    }

    #[test]
    fn six_row_fixture_group_summaries_match_hand_tally() {
        // Two Unity mispredictions (one defection), one Horizon
        // misprediction, three correct rows.
        let records = vec![
            enriched("v1", "m1", "Ana", "Unity", "b1", VoteResult::For),
            enriched("v1", "m2", "Ben", "Unity", "b1", VoteResult::For),
            enriched("v1", "m3", "Cal", "Unity", "b1", VoteResult::Against),
            enriched("v1", "m4", "Dov", "Horizon", "b1", VoteResult::Against),
            enriched("v2", "m1", "Ana", "Unity", "b2", VoteResult::For),
            enriched("v2", "m4", "Dov", "Horizon", "b2", VoteResult::Against),
        ];
        let predictions = vec![
            predicted("v1", "m1", VoteResult::For, VoteResult::For),
            predicted("v1", "m2", VoteResult::For, VoteResult::Against),
            predicted("v1", "m3", VoteResult::Against, VoteResult::For),
            predicted("v1", "m4", VoteResult::Against, VoteResult::For),
            predicted("v2", "m1", VoteResult::For, VoteResult::For),
            predicted("v2", "m4", VoteResult::Against, VoteResult::Against),
        ];
        let coalition = vec![CoalitionEntry {
            parliament_number: 1,
            party_name: "Unity".into(),
            in_coalition: true,
        }];
        let report = false_negative_report(&predictions, &records, &coalition);
        assert_eq!(report.rows.len(), 3);
        // m3 voted Against while Unity's mode on b1 is For.
        let m3 = report.rows.iter().find(|r| r.member_id == "m3").unwrap();
        assert!(m3.is_defection);
        let m2 = report.rows.iter().find(|r| r.member_id == "m2").unwrap();
        assert!(!m2.is_defection);

        assert_eq!(report.by_party[0].key, "Unity");
        assert_eq!(report.by_party[0].count, 2);
        assert_eq!(report.by_party[0].in_coalition, Some(true));
        assert_eq!(report.by_party[1].key, "Horizon");
        assert_eq!(report.by_party[1].count, 1);
        assert_eq!(report.by_bill[0].key, "bill b1");
        assert_eq!(report.by_bill[0].count, 3);
        assert_eq!(report.by_member.len(), 3);
    }

    #[test]
    fn every_report_row_is_a_misprediction() {
        let records = vec![
            enriched("v1", "m1", "A", "P", "b1", VoteResult::For),
            enriched("v1", "m2", "B", "P", "b1", VoteResult::Against),
        ];
        let predictions = vec![
            predicted("v1", "m1", VoteResult::For, VoteResult::Against),
            predicted("v1", "m2", VoteResult::Against, VoteResult::Against),
        ];
        let report = false_negative_report(&predictions, &records, &[]);
        assert!(report.rows.iter().all(|r| r.actual != r.predicted));
    }
}
