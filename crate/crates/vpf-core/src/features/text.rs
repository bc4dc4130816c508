//! Tokenization and the opinion-on-subject count.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use crate::schema::ProtocolRecord;

/// Case-folded alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Subject terms of a bill title: case-folded tokens minus stopwords and
/// tokens shorter than 3 characters.
pub fn subject_terms(title: &str, stopwords: &BTreeSet<String>) -> BTreeSet<String> {
    tokenize(title)
        .into_iter()
        .filter(|t| t.chars().count() >= 3 && !stopwords.contains(t))
        .collect()
}

/// Count references to the bill's subject across the protocols the member
/// attended before the vote.
///
/// Only protocols whose attendee list contains `member_id` and whose date
/// strictly precedes `vote_date` contribute; anything at or after the vote
/// would leak the outcome. Protocols without a date or content contribute 0.
pub fn compute_opinion_count(
    member_id: &str,
    bill_title: &str,
    vote_date: NaiveDate,
    protocols: &[ProtocolRecord],
    stopwords: &BTreeSet<String>,
) -> u32 {
    let terms = subject_terms(bill_title, stopwords);
    if terms.is_empty() {
        return 0;
    }
    let mut count = 0u32;
    for protocol in protocols {
        let Some(date) = protocol.date else { continue };
        if date >= vote_date {
            continue;
        }
        if !protocol.attendees.iter().any(|a| a == member_id) {
            continue;
        }
        let Some(text) = &protocol.description else { continue };
        count += tokenize(text)
            .iter()
            .filter(|t| terms.contains(t.as_str()))
            .count() as u32;
    }
    count
}
