//! Property tests for the invariants that must hold across the whole input
//! space, not just the worked examples.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::NaiveDate;
use proptest::prelude::*;

use vpf_core::features::{embed_text, encode_features, EncodePolicy, EnrichedRecord};
use vpf_core::models::{train, LearnerKind, LearnerSpec};
use vpf_core::schema::{validate_bundle, Gender, MemberProfile, RawBundle, RawVoteRecord, VoteResult};
use vpf_core::split::{split_dates, Resolution};

fn member(id: &str) -> MemberProfile {
    MemberProfile {
        person_id: id.to_string(),
        parliament_number: 1,
        first_name: "F".into(),
        last_name: "L".into(),
        gender: Gender::Unknown,
        email: None,
        party: "P".into(),
        position: String::new(),
    }
}

fn vote(vote_id: &str, member_id: &str, result: VoteResult, totals: (u32, u32)) -> RawVoteRecord {
    RawVoteRecord {
        country: "prop".into(),
        vote_id: vote_id.to_string(),
        parliament_number: 1,
        session_id: "s".into(),
        vote_date: NaiveDate::from_ymd_opt(2020, 1, 1),
        total_for: Some(totals.0),
        total_against: Some(totals.1),
        member_id: member_id.to_string(),
        member_name: "N".into(),
        party_id: "p".into(),
        party_name: "P".into(),
        member_gender: Gender::Unknown,
        is_current: true,
        vote_result: result,
    }
}

/// Violations the generator can plant; validate_bundle must report a clean
/// bundle exactly when none were planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Planted {
    None,
    DuplicateVoteKey,
    DanglingMember,
    TallyMismatch,
    MissingVoteDate,
    AttendeeCountOff,
}

fn planted_strategy() -> impl Strategy<Value = Planted> {
    prop_oneof![
        Just(Planted::None),
        Just(Planted::DuplicateVoteKey),
        Just(Planted::DanglingMember),
        Just(Planted::TallyMismatch),
        Just(Planted::MissingVoteDate),
        Just(Planted::AttendeeCountOff),
    ]
}

fn bundle_with(planted: Planted, n_votes: usize) -> RawBundle {
    let n_votes = n_votes.max(1);
    let members: Vec<MemberProfile> = (0..n_votes).map(|i| member(&format!("m{i}"))).collect();
    let mut votes = Vec::new();
    for i in 0..n_votes {
        // Every member votes For on one ballot; totals are exact.
        votes.push(vote("v0", &format!("m{i}"), VoteResult::For, (n_votes as u32, 0)));
    }
    let mut protocols = vec![vpf_core::schema::ProtocolRecord {
        meeting_id: "mt0".into(),
        parliament_number: 1,
        committee_id: "c".into(),
        meeting_title: "t".into(),
        date: NaiveDate::from_ymd_opt(2020, 1, 1),
        description: None,
        attendees: vec!["m0".into()],
        attendee_count: Some(1),
        speaker_name: "m0".into(),
    }];
    match planted {
        Planted::None => {}
        Planted::DuplicateVoteKey => {
            let dup = votes[0].clone();
            votes.push(dup);
        }
        Planted::DanglingMember => {
            votes.push(vote("v0", "ghost", VoteResult::For, (n_votes as u32, 0)));
        }
        Planted::TallyMismatch => {
            for v in &mut votes {
                v.total_for = Some(n_votes as u32 + 5);
            }
        }
        Planted::MissingVoteDate => {
            votes[0].vote_date = None;
        }
        Planted::AttendeeCountOff => {
            protocols[0].attendee_count = Some(7);
        }
    }
    // Keep totals consistent for rows added after planting.
    if planted == Planted::DuplicateVoteKey || planted == Planted::DanglingMember {
        let n_for = votes
            .iter()
            .filter(|v| v.vote_result == VoteResult::For)
            .count() as u32;
        for v in &mut votes {
            v.total_for = Some(n_for);
        }
    }
    RawBundle {
        members,
        bills: Vec::new(),
        votes,
        protocols,
        repair_log: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Zero reported violations iff no violation was planted.
    #[test]
    fn validate_bundle_detects_exactly_the_planted_violations(
        planted in planted_strategy(),
        n_votes in 1usize..6,
    ) {
        let bundle = bundle_with(planted, n_votes);
        let report = validate_bundle(&bundle);
        prop_assert_eq!(report.is_clean(), planted == Planted::None, "report: {:?}", report);
    }

    /// Nonempty text embeds to a unit vector; empty text to the zero vector.
    #[test]
    fn embedding_norm_is_one_or_zero(
        tokens in proptest::collection::vec("[a-z]{1,8}", 0..20),
        dim in 1usize..100,
        seed in any::<u64>(),
    ) {
        let text = tokens.join(" ");
        let v = embed_text(&text, dim, seed);
        prop_assert_eq!(v.len(), dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tokens.is_empty() {
            prop_assert_eq!(norm, 0.0);
        } else {
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    /// Bag-of-words: token order never changes the embedding.
    #[test]
    fn embedding_is_order_invariant(
        mut tokens in proptest::collection::vec("[a-z]{1,8}", 1..20),
        dim in 1usize..64,
        seed in any::<u64>(),
        rot in 0usize..20,
    ) {
        let original = embed_text(&tokens.join(" "), dim, seed);
        let shift = rot % tokens.len();
        tokens.rotate_left(shift);
        let rotated = embed_text(&tokens.join(" "), dim, seed);
        prop_assert_eq!(original, rotated);
    }

    /// Split contract: partition is complete, chronological, and reported
    /// exactly.
    #[test]
    fn split_partitions_chronologically(
        day_offsets in proptest::collection::vec(0u32..2000, 2..120),
        target in 0.5f64..0.9,
    ) {
        let base = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        let dates: Vec<NaiveDate> = day_offsets
            .iter()
            .map(|&d| base + chrono::Days::new(d as u64))
            .collect();
        let distinct: BTreeSet<_> = dates.iter().collect();
        let result = split_dates(&dates, target, &Resolution::COARSE_TO_FINE);
        if distinct.len() < 2 {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let (train, test, plan) = result.unwrap();
        prop_assert_eq!(train.len() + test.len(), dates.len());
        prop_assert_eq!(plan.train_rows, train.len());
        prop_assert_eq!(plan.test_rows, test.len());
        prop_assert!(plan.train_rows > 0 && plan.test_rows > 0);
        prop_assert_eq!(plan.train_fraction, train.len() as f64 / dates.len() as f64);
        let max_train = train.iter().map(|&i| dates[i]).max().unwrap();
        let min_test = test.iter().map(|&i| dates[i]).min().unwrap();
        prop_assert!(max_train < min_test || (max_train < plan.boundary_date && min_test >= plan.boundary_date));
        // Determinism.
        let again = split_dates(&dates, target, &Resolution::COARSE_TO_FINE).unwrap();
        prop_assert_eq!(again.2, plan);
    }
}

fn tiny_matrix(
    xs: &[f64],
    ys: &[u8],
    n_cols: usize,
) -> vpf_core::features::FeatureMatrix {
    use vpf_core::features::{ColumnKind, ColumnSpec, FeatureMatrix};
    FeatureMatrix {
        x: xs.to_vec(),
        y: ys.to_vec(),
        n_rows: ys.len(),
        n_cols,
        columns: (0..n_cols)
            .map(|i| ColumnSpec {
                name: format!("f{i}"),
                kind: ColumnKind::Numeric,
            })
            .collect(),
        dictionaries: Default::default(),
        row_keys: (0..ys.len()).map(|i| (format!("v{i:04}"), "m".into())).collect(),
        row_dates: (0..ys.len())
            .map(|i| NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() + chrono::Days::new(i as u64))
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Probability rows sum to one for every learner on arbitrary data.
    #[test]
    fn all_learners_emit_normalized_probabilities(
        raw in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0u8..3), 4..40),
        seed in any::<u64>(),
    ) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (a, b, label) in &raw {
            xs.push(*a);
            xs.push(*b);
            ys.push(*label + 1);
        }
        let matrix = tiny_matrix(&xs, &ys, 2);
        for kind in LearnerKind::ALL {
            let model = train(&LearnerSpec::new(kind, seed), &matrix).unwrap();
            let proba = model.predict_proba(&matrix.x).unwrap();
            for row in proba.chunks(model.n_classes()) {
                let sum: f64 = row.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9, "{kind}: {row:?}");
                prop_assert!(row.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
            }
        }
    }

    /// Dictionary decoding recovers every categorical value seen at encode
    /// time.
    #[test]
    fn encoding_round_trips_seen_categorical_values(
        parties in proptest::collection::vec("[A-Z][a-z]{2,8}", 1..12),
    ) {
        let records: Vec<EnrichedRecord> = parties
            .iter()
            .enumerate()
            .map(|(i, party)| EnrichedRecord {
                country: "prop".into(),
                vote_id: format!("v{i}"),
                parliament_number: 1,
                session_id: "s".into(),
                vote_date: NaiveDate::from_ymd_opt(2020, 1, 1),
                total_for: Some(1),
                total_against: Some(0),
                member_id: format!("m{i}"),
                member_name: format!("member {i}"),
                party_name: party.clone(),
                gender: Gender::Female,
                email: None,
                party_id: "p".into(),
                importance_rank: 0,
                is_in_alliance: Some(true),
                is_current: true,
                bill_id: None,
                title: None,
                bill_embedding: None,
                committee_id: None,
                attendees: Arc::new(vec![]),
                attendee_count: None,
                speaker_name: None,
                reference_count: None,
                vote_result: VoteResult::For,
            })
            .collect();
        let policy = EncodePolicy { embedding_dim: 2, parliament_number_categorical: false };
        let (matrix, _) = encode_features(&records, &policy).unwrap();
        let party_col = matrix.columns.iter().position(|c| c.name == "party_name").unwrap();
        for (i, record) in records.iter().enumerate() {
            let code = matrix.row(i)[party_col] as u32;
            prop_assert!(code > 0);
            prop_assert_eq!(matrix.decode("party_name", code), Some(record.party_name.as_str()));
        }
    }
}
