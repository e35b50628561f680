//! Unique-token overlap between the incoming question and generated
//! questions, and the result types of a query.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::text;

/// Set of unique normalized tokens of a question.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn from_text(question: &str, drop_stopwords: bool) -> Self {
        TokenSet(
            text::tokenize(question)
                .into_iter()
                .map(text::Token::into_string)
                .filter(|t| !drop_stopwords || !text::is_stopword(t))
                .collect(),
        )
    }

    pub fn from_tokens<I: IntoIterator<Item = S>, S: Into<String>>(tokens: I) -> Self {
        TokenSet(tokens.into_iter().map(Into::into).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn intersection_len(&self, other: &TokenSet) -> usize {
        self.0.intersection(&other.0).count()
    }
}

/// `|q ∩ c| / (|q| + |c|)`; zero when both sets are empty.
pub fn match_score(query: &TokenSet, candidate: &TokenSet) -> f64 {
    overlap_score(query.intersection_len(candidate), query.len(), candidate.len())
}

/// Score from raw counts. The maximum, 0.5, is reached only by two equal
/// non-empty sets.
pub fn overlap_score(shared: usize, query_len: usize, candidate_len: usize) -> f64 {
    let denom = query_len + candidate_len;
    if denom == 0 {
        0.0
    } else {
        shared as f64 / denom as f64
    }
}

/// Size of the intersection of two sorted, deduplicated id lists.
pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// A scored QA pair. `rank` is the position of its paragraph in the
/// retrieval result and `pair` its position within the paragraph; both
/// break score ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub score: f64,
    pub rank: usize,
    pub paragraph: usize,
    pub pair: usize,
}

/// Higher score first, then better-ranked paragraph, then corpus order.
pub fn candidate_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score.total_cmp(&a.score).then(a.rank.cmp(&b.rank)).then(a.pair.cmp(&b.pair))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedQa {
    pub question: String,
    pub answer: String,
    pub para_id: String,
    pub doc_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub question: String,
    pub answer: String,
    pub para_id: String,
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingMs {
    pub doc_rank: f64,
    pub para_rank: f64,
    #[serde(rename = "match")]
    pub matching: f64,
}

/// What a query returns. `answer` is `None` when no candidate exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub answer: Option<String>,
    pub score: f64,
    pub qa: Option<MatchedQa>,
    pub alternatives: Vec<Alternative>,
    pub timing_ms: TimingMs,
}

impl QueryResult {
    pub fn no_answer(timing_ms: TimingMs) -> Self {
        QueryResult { answer: None, score: 0.0, qa: None, alternatives: Vec::new(), timing_ms }
    }

    /// Single-line JSON, as emitted by the CLI and the HTTP service.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("QueryResult serializes")
    }
}
